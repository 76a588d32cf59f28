#include "twinbeam/estimate_io.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace twinbeam::estimate_io {

using nlohmann::ordered_json;
using estimator::DensityMatrixEstimate;
using estimator::EstimateScope;

namespace {

const char* scope_name(EstimateScope s) {
    return s == EstimateScope::Full ? "full" : "joint-diagonal";
}

EstimateScope scope_from(const std::string& s) {
    if (s == "full") return EstimateScope::Full;
    if (s == "joint-diagonal") return EstimateScope::JointDiagonal;
    throw std::runtime_error("unknown estimate scope: " + s);
}

}  // namespace

std::string to_json(const DensityMatrixEstimate& est,
                    const std::string& provenance_json) {
    ordered_json j;
    j["format_version"] = 1;
    j["kind"] = "density_matrix_estimate";
    j["arity"] = est.arity;
    j["nmax"] = est.nmax;
    j["scope"] = scope_name(est.scope);
    j["analysis_mode"] = {{"name", est.mode.name()}, {"eta", est.mode.eta}};
    j["kernel"] = {{"eta", est.kernel_spec.eta},
                   {"nmax", est.kernel_spec.nmax},
                   {"k_cutoff", est.kernel_spec.k_cutoff},
                   {"quadrature_nodes", est.kernel_spec.quadrature_nodes},
                   {"panels", est.kernel_spec.panels}};
    j["n_records"] = est.n_records;
    j["mean_weight"] = est.mean_weight;
    j["mean_weight_stderr"] = est.mean_weight_stderr;
    j["n_effective"] = est.n_effective;
    j["weight_recompute_defect"] = est.weight_recompute_defect;
    j["provenance"] = ordered_json::parse(provenance_json);

    ordered_json re = ordered_json::array();
    ordered_json im = ordered_json::array();
    ordered_json sd = ordered_json::array();
    for (std::size_t i = 0; i < est.value.size(); ++i) {
        re.push_back(est.value[i].real());
        im.push_back(est.value[i].imag());
        sd.push_back(est.sigma[i]);
    }
    j["elements"] = {{"re", std::move(re)}, {"im", std::move(im)},
                     {"stderr", std::move(sd)}};
    return j.dump(2) + "\n";
}

DensityMatrixEstimate from_json(const std::string& text) {
    const auto j = ordered_json::parse(text);
    if (j.at("kind").get<std::string>() != "density_matrix_estimate")
        throw std::runtime_error("not a density-matrix estimate file");
    DensityMatrixEstimate est;
    est.arity = j.at("arity").get<int>();
    est.nmax = j.at("nmax").get<int>();
    est.scope = scope_from(j.at("scope").get<std::string>());
    est.mode = estimator::AnalysisMode::from_name(
        j.at("analysis_mode").at("name").get<std::string>(),
        j.at("analysis_mode").at("eta").get<double>());
    est.kernel_spec.eta = j.at("kernel").at("eta").get<double>();
    est.kernel_spec.nmax = j.at("kernel").at("nmax").get<int>();
    est.kernel_spec.k_cutoff = j.at("kernel").at("k_cutoff").get<double>();
    est.kernel_spec.quadrature_nodes = j.at("kernel").at("quadrature_nodes").get<int>();
    est.kernel_spec.panels = j.at("kernel").at("panels").get<int>();
    est.n_records = j.at("n_records").get<std::uint64_t>();
    est.mean_weight = j.at("mean_weight").get<double>();
    est.mean_weight_stderr = j.at("mean_weight_stderr").get<double>();
    est.n_effective = j.at("n_effective").get<double>();
    est.weight_recompute_defect = j.at("weight_recompute_defect").get<double>();
    const auto& re = j.at("elements").at("re");
    const auto& im = j.at("elements").at("im");
    const auto& sd = j.at("elements").at("stderr");
    est.value.resize(re.size());
    est.sigma.resize(sd.size());
    for (std::size_t i = 0; i < est.value.size(); ++i) {
        est.value[i] = {re[i].get<double>(), im[i].get<double>()};
        est.sigma[i] = sd[i].get<double>();
    }
    return est;
}

void write_file(const std::string& path, const DensityMatrixEstimate& est,
                const std::string& provenance_json) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << to_json(est, provenance_json);
}

DensityMatrixEstimate read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return from_json(text);
}

}  // namespace twinbeam::estimate_io
