#ifndef TWINBEAM_RECORD_IO_HPP
#define TWINBEAM_RECORD_IO_HPP

#include <cstdint>
#include <fstream>
#include <mutex>
#include <string>

#include "twinbeam/sampler.hpp"

// Dataset files: a plain CSV record stream plus a JSON metadata sidecar
// ("<file>.meta.json"). Two-mode columns are x,xp,phi,psi,weight with an
// extra sumphase column under the self-homodyne phase model; single-mode
// datasets use x,phi,weight. Doubles are written in shortest round-trip
// decimal form, so identical generation settings give byte-identical files.

namespace twinbeam::record_io {

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

// FNV-1a (64-bit) of a file's bytes, "fnv1a64:<hex>"; empty string if the
// file cannot be read.
std::string file_hash(const std::string& path);

std::string meta_path_for(const std::string& records_path);

std::string meta_to_json(const sampler::DatasetMeta& meta);
sampler::DatasetMeta meta_from_json(const std::string& text);

void write_meta(const std::string& records_path, const sampler::DatasetMeta& meta);
sampler::DatasetMeta read_meta(const std::string& records_path);

// Streams records to CSV as they arrive; writes the header on construction.
class CsvSink final : public sampler::RecordSink {
public:
    CsvSink(const std::string& path, int arity, sampler::PhaseModel model);
    void append(std::span<const sampler::HomodyneRecord> records) override;
    void close();
    std::uint64_t rows_written() const { return rows_; }

private:
    std::ofstream out_;
    std::string buffer_;
    int arity_;
    bool with_sum_phase_;
    std::uint64_t rows_ = 0;
};

// Sequential CSV reader exposed as a chunk source (reads under a lock, so
// several estimator workers can share it).
class CsvChunkSource final : public sampler::ChunkSource {
public:
    explicit CsvChunkSource(const std::string& path);
    bool next_chunk(std::vector<sampler::HomodyneRecord>& records,
                    std::uint64_t& chunk_index) override;
    sampler::DatasetMeta meta() const override { return meta_; }

private:
    std::ifstream in_;
    std::mutex mu_;
    sampler::DatasetMeta meta_;
    std::uint64_t next_chunk_ = 0;
    std::uint64_t delivered_ = 0;
    bool with_sum_phase_ = false;
    bool exhausted_ = false;
    std::string line_;
};

}  // namespace twinbeam::record_io

#endif
