#include "twinbeam/record_io.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>
#include <system_error>

#include <json.hpp>

namespace twinbeam::record_io {

using nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::uint64_t h = 0xCBF29CE484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001B3ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return std::string("fnv1a64:") + hex;
}

std::string meta_path_for(const std::string& records_path) {
    return records_path + ".meta.json";
}

namespace {

const char* phase_model_name(sampler::PhaseModel m) {
    return m == sampler::PhaseModel::IdealUniform ? "ideal" : "selfhomodyne";
}

sampler::PhaseModel phase_model_from_name(const std::string& s) {
    if (s == "ideal") return sampler::PhaseModel::IdealUniform;
    if (s == "selfhomodyne") return sampler::PhaseModel::SelfHomodyne;
    throw std::runtime_error("unknown phase model: " + s);
}

}  // namespace

std::string meta_to_json(const sampler::DatasetMeta& meta) {
    ordered_json j;
    j["format_version"] = meta.format_version;
    j["kind"] = "homodyne_records";
    j["arity"] = meta.arity;
    j["params"] = {{"tau", meta.params.tau},
                   {"nbar", meta.params.nbar()},
                   {"eta", meta.params.eta}};
    j["phase_model"] = phase_model_name(meta.phase_model);
    j["n_records"] = meta.n_records;
    j["seed"] = meta.seed;
    j["chunk_size"] = meta.chunk_size;
    j["worker_count"] = meta.worker_count;
    return j.dump(2) + "\n";
}

sampler::DatasetMeta meta_from_json(const std::string& text) {
    const auto j = ordered_json::parse(text);
    sampler::DatasetMeta meta;
    meta.format_version = j.at("format_version").get<int>();
    meta.arity = j.at("arity").get<int>();
    meta.params.tau = j.at("params").at("tau").get<double>();
    meta.params.eta = j.at("params").at("eta").get<double>();
    meta.phase_model = phase_model_from_name(j.at("phase_model").get<std::string>());
    meta.n_records = j.at("n_records").get<std::uint64_t>();
    meta.seed = j.at("seed").get<std::uint64_t>();
    meta.chunk_size = j.at("chunk_size").get<std::uint32_t>();
    meta.worker_count = j.at("worker_count").get<int>();
    return meta;
}

void write_meta(const std::string& records_path, const sampler::DatasetMeta& meta) {
    std::ofstream out(meta_path_for(records_path), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + meta_path_for(records_path));
    out << meta_to_json(meta);
}

sampler::DatasetMeta read_meta(const std::string& records_path) {
    std::ifstream in(meta_path_for(records_path), std::ios::binary);
    if (!in)
        throw std::runtime_error("missing metadata sidecar: " +
                                 meta_path_for(records_path));
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return meta_from_json(text);
}

CsvSink::CsvSink(const std::string& path, int arity, sampler::PhaseModel model)
    : out_(path, std::ios::binary),
      arity_(arity),
      with_sum_phase_(arity == 2 && model == sampler::PhaseModel::SelfHomodyne) {
    if (!out_) throw std::runtime_error("cannot write " + path);
    if (arity_ == 2)
        out_ << (with_sum_phase_ ? "x,xp,phi,psi,weight,sumphase\n"
                                 : "x,xp,phi,psi,weight\n");
    else
        out_ << "x,phi,weight\n";
    buffer_.reserve(1 << 20);
}

void CsvSink::append(std::span<const sampler::HomodyneRecord> records) {
    buffer_.clear();
    for (const auto& r : records) {
        if (arity_ == 2) {
            buffer_ += format_double(r.x);
            buffer_ += ',';
            buffer_ += format_double(r.xp);
            buffer_ += ',';
            buffer_ += format_double(r.phi);
            buffer_ += ',';
            buffer_ += format_double(r.psi);
            buffer_ += ',';
            buffer_ += format_double(r.weight);
            if (with_sum_phase_) {
                buffer_ += ',';
                buffer_ += format_double(r.sum_phase);
            }
        } else {
            buffer_ += format_double(r.x);
            buffer_ += ',';
            buffer_ += format_double(r.phi);
            buffer_ += ',';
            buffer_ += format_double(r.weight);
        }
        buffer_ += '\n';
    }
    out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    if (!out_) throw std::runtime_error("record write failed");
    rows_ += records.size();
}

void CsvSink::close() {
    out_.flush();
    out_.close();
    if (out_.fail()) throw std::runtime_error("record flush failed");
}

namespace {

double parse_field(const char*& p, const char* end) {
    double v = 0.0;
    const auto res = std::from_chars(p, end, v);
    if (res.ec != std::errc()) throw std::runtime_error("bad record field");
    p = res.ptr;
    if (p < end && (*p == ',' )) ++p;
    return v;
}

}  // namespace

CsvChunkSource::CsvChunkSource(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw std::runtime_error("cannot open " + path);
    meta_ = read_meta(path);
    std::string header;
    if (!std::getline(in_, header)) throw std::runtime_error("empty record file: " + path);
    if (meta_.arity == 2) {
        if (header == "x,xp,phi,psi,weight,sumphase")
            with_sum_phase_ = true;
        else if (header != "x,xp,phi,psi,weight")
            throw std::runtime_error("unexpected record header: " + header);
    } else if (header != "x,phi,weight") {
        throw std::runtime_error("unexpected record header: " + header);
    }
}

bool CsvChunkSource::next_chunk(std::vector<sampler::HomodyneRecord>& records,
                                std::uint64_t& chunk_index) {
    std::scoped_lock lock(mu_);
    if (exhausted_) return false;
    records.clear();
    records.reserve(meta_.chunk_size);
    while (records.size() < meta_.chunk_size && std::getline(in_, line_)) {
        if (line_.empty()) continue;
        const char* p = line_.data();
        const char* end = p + line_.size();
        sampler::HomodyneRecord r{};
        r.x = parse_field(p, end);
        if (meta_.arity == 2) {
            r.xp = parse_field(p, end);
            r.phi = parse_field(p, end);
            r.psi = parse_field(p, end);
            r.weight = parse_field(p, end);
            if (with_sum_phase_) r.sum_phase = parse_field(p, end);
        } else {
            r.phi = parse_field(p, end);
            r.weight = parse_field(p, end);
        }
        records.push_back(r);
    }
    if (records.empty()) {
        exhausted_ = true;
        if (delivered_ != meta_.n_records)
            throw std::runtime_error(
                "record file is truncated: metadata promises " +
                std::to_string(meta_.n_records) + " records, found " +
                std::to_string(delivered_));
        return false;
    }
    chunk_index = next_chunk_++;
    delivered_ += records.size();
    if (records.size() < meta_.chunk_size) {
        exhausted_ = true;
        if (delivered_ != meta_.n_records)
            throw std::runtime_error(
                "record file is truncated: metadata promises " +
                std::to_string(meta_.n_records) + " records, found " +
                std::to_string(delivered_));
    }
    return true;
}

}  // namespace twinbeam::record_io
