// twinbeam: experiment runner for self-homodyne twin-beam tomography.
//
// Subcommands:
//   simulate     draw measurement records from the analytic joint density
//   reconstruct  average pattern kernels over a record file
//   analyze      derive number statistics from an estimate file
//   theory       emit exact reference curves
//   validate     run the built-in oracle suites
//
// Exit codes: 0 success, 1 validation failure, 2 invalid configuration,
// 3 physics-bound violation (reconstruction below eta = 1/2).

#include <cmath>
#include <cstdlib>
#include <limits>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "twinbeam/channels.hpp"
#include "twinbeam/estimate_io.hpp"
#include "twinbeam/estimator.hpp"
#include "twinbeam/fockmath.hpp"
#include "twinbeam/nopa_model.hpp"
#include "twinbeam/quadrature.hpp"
#include "twinbeam/record_io.hpp"
#include "twinbeam/sampler.hpp"
#include "twinbeam/tomokernel.hpp"
#include "twinbeam/version.hpp"

using namespace twinbeam;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPhysicsBound = 3;

struct CommonConfig {
    double nbar = std::numeric_limits<double>::quiet_NaN();  // NaN: not set
    double tau = std::numeric_limits<double>::quiet_NaN();
    double eta = 1.0;
    std::string phase_model = "ideal";
    bool single_mode = false;
    std::uint64_t samples = 1000000;
    std::uint64_t seed = 42;
    int nmax = 20;
    std::string mode = "bare";
    std::string scope = "joint-diag";
    int threads = 0;
    double k_cutoff = 0.0;
    int kernel_nodes = 4096;
    int kernel_panels = 16;
    double table_dx = 1.0 / 512.0;
    double table_half_width = 0.0;
};

nopa::TwinBeamParams params_from(const CommonConfig& cfg) {
    if (!std::isnan(cfg.tau)) return nopa::params_from_tau(cfg.tau, cfg.eta);
    if (!std::isnan(cfg.nbar)) return nopa::params_from_nbar(cfg.nbar, cfg.eta);
    return nopa::params_from_nbar(0.0, cfg.eta);
}

ordered_json config_json(const CommonConfig& cfg) {
    ordered_json j;
    if (!std::isnan(cfg.tau))
        j["tau"] = cfg.tau;
    else
        j["nbar"] = std::isnan(cfg.nbar) ? 0.0 : cfg.nbar;
    j["eta"] = cfg.eta;
    j["phase_model"] = cfg.phase_model;
    j["single"] = cfg.single_mode;
    j["samples"] = cfg.samples;
    j["seed"] = cfg.seed;
    j["nmax"] = cfg.nmax;
    j["mode"] = cfg.mode;
    j["scope"] = cfg.scope;
    j["threads"] = cfg.threads;
    return j;
}

std::string cache_path_for(const kernel::KernelSpec& spec) {
    const char* dir = std::getenv("TWINBEAM_CACHE_DIR");
    if (!dir || !*dir) return {};
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) return {};
    char name[64];
    std::snprintf(name, sizeof(name), "kernel_%016llx.tbl",
                  static_cast<unsigned long long>(spec.resolved().hash()));
    return (std::filesystem::path(dir) / name).string();
}

// Merge "--config file.json" values into the defaults before parsing flags,
// so explicit flags still win.
void apply_config_file(const std::string& path, CommonConfig& cfg,
                       std::string* out_path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file " + path);
    ordered_json j;
    in >> j;
    auto get = [&](const char* key, auto& slot) {
        if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
    };
    get("nbar", cfg.nbar);
    get("tau", cfg.tau);
    get("eta", cfg.eta);
    get("phase_model", cfg.phase_model);
    get("single", cfg.single_mode);
    get("samples", cfg.samples);
    get("seed", cfg.seed);
    get("nmax", cfg.nmax);
    get("mode", cfg.mode);
    get("scope", cfg.scope);
    get("threads", cfg.threads);
    if (out_path && j.contains("out")) *out_path = j.at("out").get<std::string>();
}

int cmd_simulate(const CommonConfig& cfg, const std::string& out_path) {
    const nopa::TwinBeamParams params = params_from(cfg);
    const sampler::PhaseModel model = cfg.phase_model == "selfhomodyne"
                                          ? sampler::PhaseModel::SelfHomodyne
                                          : sampler::PhaseModel::IdealUniform;
    const int arity = cfg.single_mode ? 1 : 2;
    record_io::CsvSink sink(out_path, arity, model);
    sampler::DatasetMeta meta;
    if (arity == 2)
        meta = sampler::generate_dataset(params, model, cfg.samples, cfg.seed, sink,
                                         cfg.threads);
    else
        meta = sampler::generate_dataset_single(params, cfg.samples, cfg.seed, sink,
                                                cfg.threads);
    sink.close();

    // Dataset sidecar plus provenance fields.
    ordered_json prov = ordered_json::parse(record_io::meta_to_json(meta));
    prov["provenance"] = {{"command", "simulate"},
                          {"config", config_json(cfg)},
                          {"code_version", kVersion}};
    std::ofstream metaout(record_io::meta_path_for(out_path), std::ios::binary);
    if (!metaout) throw std::runtime_error("cannot write metadata sidecar");
    metaout << prov.dump(2) << "\n";
    std::cout << "wrote " << sink.rows_written() << " records to " << out_path << "\n";
    return kExitOk;
}

int cmd_reconstruct(const CommonConfig& cfg, const std::string& data_path,
                    const std::string& out_path, bool eta_explicit) {
    record_io::CsvChunkSource source(data_path);
    const auto meta = source.meta();

    const double eta = eta_explicit ? cfg.eta : meta.params.eta;
    const estimator::AnalysisMode mode = estimator::AnalysisMode::from_name(cfg.mode, eta);

    estimator::ReconstructOptions opts;
    opts.nmax = cfg.nmax;
    opts.scope = cfg.scope == "full" ? estimator::EstimateScope::Full
                                     : estimator::EstimateScope::JointDiagonal;
    opts.threads = cfg.threads;
    opts.k_cutoff = cfg.k_cutoff;
    opts.quadrature_nodes = cfg.kernel_nodes;
    opts.panels = cfg.kernel_panels;
    opts.table_dx = cfg.table_dx;
    opts.table_half_width = cfg.table_half_width;
    {
        kernel::KernelSpec spec;
        spec.eta = mode.kernel_eta();
        spec.nmax = opts.nmax;
        spec.k_cutoff = opts.k_cutoff;
        spec.quadrature_nodes = opts.quadrature_nodes;
        spec.panels = opts.panels;
        opts.table_cache_path = cache_path_for(spec);
    }

    const auto est = meta.arity == 1
                         ? estimator::reconstruct_single(source, mode, opts)
                         : estimator::reconstruct_joint(source, mode, opts);

    ordered_json prov;
    prov["command"] = "reconstruct";
    prov["config"] = config_json(cfg);
    prov["code_version"] = kVersion;
    prov["dataset"] = {{"path", data_path},
                       {"hash", record_io::file_hash(data_path)},
                       {"meta", ordered_json::parse(record_io::meta_to_json(meta))}};
    estimate_io::write_file(out_path, est, prov.dump());
    std::cout << "wrote estimate (" << est.value.size() << " elements) to " << out_path
              << "\n";
    return kExitOk;
}

int cmd_analyze(const std::string& est_path, const std::string& stat, int bigN,
                const std::string& out_path) {
    const auto est = estimate_io::read_file(est_path);
    std::vector<estimator::StatPoint> pts;
    if (stat == "total")
        pts = estimator::total_number_dist(est);
    else if (stat == "correlation")
        pts = estimator::number_correlation(est, bigN);
    else
        pts = estimator::joint_diagonal(est);

    ordered_json prov;
    prov["command"] = "analyze";
    prov["stat"] = stat;
    if (stat == "correlation") prov["N"] = bigN;
    prov["code_version"] = kVersion;
    prov["estimate"] = {{"path", est_path}, {"hash", record_io::file_hash(est_path)}};

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << "# provenance: " << prov.dump() << "\n";
    out << "n,value,stderr\n";
    for (const auto& p : pts)
        out << p.n << "," << record_io::format_double(p.value) << ","
            << record_io::format_double(p.sigma) << "\n";
    std::cout << "wrote " << pts.size() << " rows to " << out_path << "\n";
    return kExitOk;
}

int cmd_theory(const CommonConfig& cfg, const std::string& dist, int bigN,
               const std::string& out_path) {
    const nopa::TwinBeamParams params = params_from(cfg);
    ordered_json prov;
    prov["command"] = "theory";
    prov["dist"] = dist;
    prov["config"] = config_json(cfg);
    prov["code_version"] = kVersion;

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << "# provenance: " << prov.dump() << "\n";
    if (dist == "joint" || dist == "diag45") {
        out << "n,m,value\n";
        for (int n = 0; n <= cfg.nmax; ++n)
            for (int m = 0; m <= cfg.nmax; ++m) {
                const double v = dist == "joint" ? nopa::joint_photon_pdf(params, n, m)
                                                 : nopa::diag45_photon_pdf(params, n, m);
                out << n << "," << m << "," << record_io::format_double(v) << "\n";
            }
    } else if (dist == "marginal" || dist == "total") {
        out << "n,value\n";
        for (int n = 0; n <= cfg.nmax; ++n) {
            const double v = dist == "marginal"
                                 ? nopa::marginal_thermal_pdf(params, n)
                                 : nopa::total_photon_pdf_theory(params, n);
            out << n << "," << record_io::format_double(v) << "\n";
        }
    } else {  // corr
        out << "n,value\n";
        for (int n = -bigN; n <= bigN; ++n)
            out << n << ","
                << record_io::format_double(nopa::correlation_theory(params, bigN, n))
                << "\n";
    }
    std::cout << "wrote theory curve to " << out_path << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// validate: built-in oracle suites.

struct CheckReporter {
    int failures = 0;
    void operator()(const std::string& name, bool ok, double value, double bound) {
        std::cout << (ok ? "[ ok ] " : "[FAIL] ") << name << "  (" << value
                  << " vs bound " << bound << ")\n";
        if (!ok) ++failures;
    }
};

int cmd_validate(bool quick) {
    CheckReporter check;

    {  // Fock-series density vs the closed form.
        const nopa::TwinBeamParams p1 = nopa::params_from_nbar(1.0);
        std::vector<double> xs;
        for (int i = 0; i <= 6; ++i) xs.push_back(-3.0 + i);
        double worst = 0.0;
        const auto grid = nopa::joint_quad_pdf_fock_series_grid(p1, xs, xs, 0.4, 0.2);
        for (std::size_t i = 0; i < xs.size(); ++i)
            for (std::size_t j = 0; j < xs.size(); ++j)
                worst = std::max(
                    worst, std::abs(grid[i * xs.size() + j] -
                                    nopa::joint_quad_pdf(p1, xs[i], xs[j], 0.4, 0.2)));
        check("fock-series density vs closed form (eta=1)", worst < 1e-8, worst, 1e-8);
        if (!quick) {
            const nopa::TwinBeamParams p08 = nopa::params_from_nbar(1.0, 0.8);
            const auto grid08 = nopa::joint_quad_pdf_fock_series_grid(p08, xs, xs, 0.4, 0.2);
            double worst08 = 0.0;
            for (std::size_t i = 0; i < xs.size(); ++i)
                for (std::size_t j = 0; j < xs.size(); ++j)
                    worst08 = std::max(
                        worst08,
                        std::abs(grid08[i * xs.size() + j] -
                                 nopa::joint_quad_pdf(p08, xs[i], xs[j], 0.4, 0.2)));
            check("fock-series density vs closed form (eta=0.8)", worst08 < 1e-8,
                  worst08, 1e-8);
        }
    }

    {  // Kernel closed forms and the quadrature tail.
        kernel::KernelSpec spec;
        spec.nmax = 6;
        spec.eta = 1.0;
        const kernel::KernelEvaluator k1(spec);
        const double v1 = k1.base(0, 0, 0.0);
        check("kernel base(0,0,0) at eta=1", std::abs(v1 - 2.0) < 1e-10,
              std::abs(v1 - 2.0), 1e-10);
        spec.eta = 0.9;
        const kernel::KernelEvaluator k09(spec);
        const double v2 = k09.base(0, 0, 0.0);
        check("kernel base(0,0,0) at eta=0.9", std::abs(v2 - 2.25) < 1e-10,
              std::abs(v2 - 2.25), 1e-10);
        spec.nmax = 20;
        for (double eta : {1.0, 0.9, 0.8}) {
            spec.eta = eta;
            const double tail = spec.resolved().tail_bound();
            check("kernel quadrature tail at eta=" + std::to_string(eta).substr(0, 4),
                  tail < 1e-12, tail, 1e-12);
        }
    }

    {  // eta bound guard.
        kernel::KernelSpec bad;
        bad.eta = 0.4;
        bool threw = false;
        try {
            bad.resolved();
        } catch (const kernel::PhysicsBoundError&) {
            threw = true;
        }
        check("kernel rejects eta <= 1/2", threw, threw ? 1.0 : 0.0, 1.0);
    }

    if (!quick) {  // Single-mode tomography identities.
        const quad::Rule rule = quad::panel_rule(-11.0, 11.0, 44, 10);
        for (double eta : {1.0, 0.8}) {
            kernel::KernelSpec spec;
            spec.nmax = 6;
            spec.eta = eta;
            const kernel::KernelEvaluator eval(spec);
            const double d2 = (1.0 - eta) / (4.0 * eta);
            const double var = (2.0 * 3.0 + 1.0) / 4.0 + d2;
            std::vector<double> pv(rule.size());
            for (std::size_t i = 0; i < rule.size(); ++i)
                pv[i] = std::exp(-0.5 * rule.x[i] * rule.x[i] / var) /
                        std::sqrt(2.0 * std::numbers::pi * var);
            const auto rho =
                estimator::quadrature_single_matrix(rule.x, rule.w, pv, eval);
            double worst = 0.0;
            for (int n = 0; n <= 6; ++n)
                for (int m = 0; m <= 6; ++m) {
                    const double expect = n == m ? std::pow(0.75, n) / 4.0 : 0.0;
                    worst = std::max(worst, std::abs(rho[n * 7 + m] - expect));
                }
            const double tol = eta == 1.0 ? 1e-5 : 1e-4;
            check("thermal tomography identity at eta=" + std::to_string(eta).substr(0, 4),
                  worst < tol, worst, tol);
        }
    }

    if (!quick) {  // Two-mode quadrature unbiasedness (no Monte Carlo).
        const nopa::TwinBeamParams params = nopa::params_from_nbar(2.0);
        estimator::ReconstructOptions kopts;
        kopts.quadrature_nodes = 2048;
        estimator::QuadratureOracleOptions qopts;
        qopts.sum_phase_nodes = 96;
        const int nmax = 4, N = nmax + 1;
        const auto tensor = estimator::quadrature_joint_tensor(
            params, estimator::AnalysisMode::bare(1.0), nmax, kopts, qopts);
        const double om = 1.0 - params.tau * params.tau;
        double worst = 0.0;
        for (int n1 = 0; n1 < N; ++n1)
            for (int m1 = 0; m1 < N; ++m1)
                for (int n2 = 0; n2 < N; ++n2)
                    for (int m2 = 0; m2 < N; ++m2) {
                        const double expect = (n1 == m1 && n2 == m2)
                                                  ? om * std::pow(params.tau, n1 + n2)
                                                  : 0.0;
                        worst = std::max(
                            worst, std::abs(tensor[((static_cast<std::size_t>(n1) * N +
                                                     m1) * N + n2) * N + m2] - expect));
                    }
        check("two-mode kernel unbiasedness (quadrature)", worst < 1e-5, worst, 1e-5);
    }

    {  // Channel identities.
        const auto one = channels::FockDensityMatrix::fock(1, 10);
        const auto lost = channels::loss_dress(one, 0.7);
        const double worst_loss = std::max(std::abs(lost.at1(1, 1).real() - 0.7),
                                           std::abs(lost.at1(0, 0).real() - 0.3));
        check("loss channel on a single photon", worst_loss < 1e-12, worst_loss, 1e-12);

        const auto thinned =
            channels::loss_dress(channels::FockDensityMatrix::thermal(3.0, 50), 0.8);
        double worst_thin = 0.0;
        for (int n = 0; n <= 30; ++n)
            worst_thin = std::max(
                worst_thin,
                std::abs(thinned.at1(n, n).real() -
                         channels::FockDensityMatrix::thermal(2.4, 50).at1(n, n).real()));
        check("loss channel thins the thermal state", worst_thin < 1e-8, worst_thin, 1e-8);

        double renorm = 0.0;
        const auto dressed = channels::gaussian_dress(
            channels::FockDensityMatrix::thermal(2.0, 40), 0.8, &renorm);
        double worst_g = 0.0;
        for (int n = 0; n <= 24; ++n)
            worst_g = std::max(
                worst_g,
                std::abs(dressed.at1(n, n).real() -
                         channels::FockDensityMatrix::thermal(2.125, 40).at1(n, n).real()));
        check("gaussian channel adds the noise photons", worst_g < 1e-6, worst_g, 1e-6);
        check("gaussian channel renormalization", std::abs(renorm - 1.0) < 1e-6,
              std::abs(renorm - 1.0), 1e-6);
    }

    {  // Gain/weight integral identities.
        const nopa::TwinBeamParams p = nopa::params_from_nbar(10.0);
        const quad::Rule ru = quad::panel_rule(0.0, 2.0 * std::numbers::pi, 512, 8);
        double mean_inv_gain = 0.0, weight_integral = 0.0;
        for (std::size_t j = 0; j < ru.size(); ++j) {
            mean_inv_gain += ru.w[j] / nopa::gain(p, ru.x[j]) / (2.0 * std::numbers::pi);
            weight_integral += ru.w[j] * nopa::weight_fn(p, ru.x[j]);
        }
        check("mean inverse gain equals one", std::abs(mean_inv_gain - 1.0) < 1e-10,
              std::abs(mean_inv_gain - 1.0), 1e-10);
        check("weighting function normalization",
              std::abs(weight_integral - 1.0) < 1e-10, std::abs(weight_integral - 1.0),
              1e-10);
    }

    if (!quick) {  // Sampler moment smoke test.
        sampler::VectorSink sink;
        sampler::generate_dataset(nopa::params_from_nbar(10.0),
                                  sampler::PhaseModel::IdealUniform, 200000, 12345, sink,
                                  0);
        double s2 = 0.0;
        for (const auto& r : sink.records()) s2 += r.x * r.x;
        const double var = s2 / static_cast<double>(sink.records().size());
        check("sampled marginal variance", std::abs(var - 5.25) < 0.08,
              std::abs(var - 5.25), 0.08);
    }

    {  // Kernel cache regeneration after corruption.
        kernel::KernelSpec spec;
        spec.nmax = 4;
        spec.eta = 0.9;
        const kernel::KernelEvaluator eval(spec);
        const auto grid = kernel::KernelTable::uniform_grid(4.0, 1.0 / 128.0);
        const auto dir = std::filesystem::temp_directory_path() / "twinbeam_validate";
        std::filesystem::create_directories(dir);
        const std::string path = (dir / "cache_check.tbl").string();
        std::filesystem::remove(path);
        const kernel::KernelTable fresh = kernel::KernelTable::cached(eval, grid, path);
        {
            std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
            f.seekp(64);
            f.write("corrupt!", 8);
        }
        const kernel::KernelTable rebuilt = kernel::KernelTable::cached(eval, grid, path);
        const double diff = std::abs(rebuilt.base(2, 1, 0.37) - fresh.base(2, 1, 0.37));
        check("kernel cache regenerates after corruption", diff == 0.0, diff, 0.0);
    }

    if (check.failures == 0) {
        std::cout << "all checks passed\n";
        return kExitOk;
    }
    std::cout << check.failures << " check(s) failed\n";
    return kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-homodyne twin-beam tomography simulator"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    CommonConfig cfg;
    std::string config_path;
    std::string out_path;
    std::string data_path;
    std::string est_path;
    std::string stat = "diag";
    std::string dist = "joint";
    int bigN = 10;
    bool quick = false;

    // Pre-scan for --config so its values become overridable defaults.
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                apply_config_file(argv[i + 1], cfg, &out_path);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitConfig;
            }
        }
    }

    auto add_state_flags = [&](CLI::App* sub) {
        sub->add_option("--nbar", cfg.nbar, "mean photons per mode");
        sub->add_option("--tau", cfg.tau, "squeeze parameter tanh r (overrides --nbar)");
        sub->add_option("--eta", cfg.eta, "photodetector quantum efficiency")
            ->check(CLI::Range(1e-6, 1.0));
    };

    CLI::App* sim = app.add_subcommand("simulate", "generate measurement records");
    add_state_flags(sim);
    sim->add_option("--samples", cfg.samples, "number of records");
    sim->add_option("--seed", cfg.seed, "RNG seed");
    sim->add_option("--phase-model", cfg.phase_model, "ideal|selfhomodyne")
        ->check(CLI::IsMember({"ideal", "selfhomodyne"}));
    sim->add_flag("--single", cfg.single_mode, "single-mode dataset");
    sim->add_option("--threads", cfg.threads, "worker threads (0 = auto)");
    sim->add_option("--out", out_path, cfg.samples ? "output record CSV" : "")
        ->required(out_path.empty());
    sim->add_option("--config", config_path, "JSON config file (defaults)");

    CLI::App* rec = app.add_subcommand("reconstruct", "estimate the density matrix");
    rec->add_option("--data", data_path, "record CSV")->required();
    rec->add_option("--mode", cfg.mode, "bare|dressed-gaussian|dressed-loss")
        ->check(CLI::IsMember({"bare", "dressed-gaussian", "dressed-loss"}));
    auto* eta_opt =
        rec->add_option("--eta", cfg.eta,
                        "efficiency for bare/dressed-loss analysis (default: dataset "
                        "value)");
    rec->add_option("--nmax", cfg.nmax, "photon-number truncation");
    rec->add_option("--scope", cfg.scope, "full|joint-diag")
        ->check(CLI::IsMember({"full", "joint-diag"}));
    rec->add_option("--threads", cfg.threads, "worker threads (0 = auto)");
    rec->add_option("--k-cutoff", cfg.k_cutoff, "kernel quadrature cutoff (0 = auto)");
    rec->add_option("--kernel-nodes", cfg.kernel_nodes, "kernel quadrature nodes");
    rec->add_option("--kernel-panels", cfg.kernel_panels, "kernel quadrature panels");
    rec->add_option("--table-dx", cfg.table_dx, "kernel table spacing (0 = direct)");
    rec->add_option("--table-half-width", cfg.table_half_width,
                    "kernel table span (0 = from data)");
    rec->add_option("--out", out_path, "output estimate JSON")->required(out_path.empty());
    rec->add_option("--config", config_path, "JSON config file (defaults)");

    CLI::App* ana = app.add_subcommand("analyze", "derive number statistics");
    ana->add_option("--estimate", est_path, "estimate JSON")->required();
    ana->add_option("--stat", stat, "total|correlation|diag")
        ->check(CLI::IsMember({"total", "correlation", "diag"}));
    ana->add_option("--N", bigN, "correlation truncation N");
    ana->add_option("--out", out_path, "output CSV")->required(out_path.empty());

    CLI::App* thr = app.add_subcommand("theory", "exact reference curves");
    add_state_flags(thr);
    thr->add_option("--dist", dist, "joint|marginal|total|corr|diag45")
        ->check(CLI::IsMember({"joint", "marginal", "total", "corr", "diag45"}));
    thr->add_option("--nmax", cfg.nmax, "photon-number range");
    thr->add_option("--N", bigN, "correlation truncation N");
    thr->add_option("--out", out_path, "output CSV")->required(out_path.empty());

    CLI::App* val = app.add_subcommand("validate", "run built-in oracle checks");
    val->add_flag("--quick", quick, "skip the slower suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (sim->parsed()) return cmd_simulate(cfg, out_path);
        if (rec->parsed())
            return cmd_reconstruct(cfg, data_path, out_path, eta_opt->count() > 0);
        if (ana->parsed()) return cmd_analyze(est_path, stat, bigN, out_path);
        if (thr->parsed()) return cmd_theory(cfg, dist, bigN, out_path);
        if (val->parsed()) return cmd_validate(quick);
    } catch (const kernel::PhysicsBoundError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPhysicsBound;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
