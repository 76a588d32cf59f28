#include "twinbeam/estimator.hpp"

#include <atomic>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "twinbeam/quadrature.hpp"

namespace twinbeam::estimator {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int resolve_threads(int n_threads) {
    if (n_threads > 0) return n_threads;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

// Per-chunk partial sums; merged pairwise in chunk-index order so the final
// estimate is reproducible for a fixed chunking regardless of scheduling.
struct ChunkAccum {
    std::uint64_t count = 0;
    double sum_w = 0.0;
    double sum_w2 = 0.0;
    double weight_defect = 0.0;
    std::vector<double> s1_re;  // sum of w * Re(value) per element
    std::vector<double> s1_im;
    std::vector<double> s2;     // sum of w * |value|^2 per element

    void init(std::size_t n_elems, bool complex_valued) {
        s1_re.assign(n_elems, 0.0);
        s1_im.assign(complex_valued ? n_elems : 0, 0.0);
        s2.assign(n_elems, 0.0);
    }
    void merge(const ChunkAccum& o) {
        count += o.count;
        sum_w += o.sum_w;
        sum_w2 += o.sum_w2;
        weight_defect = std::max(weight_defect, o.weight_defect);
        for (std::size_t i = 0; i < s1_re.size(); ++i) s1_re[i] += o.s1_re[i];
        for (std::size_t i = 0; i < s1_im.size(); ++i) s1_im[i] += o.s1_im[i];
        for (std::size_t i = 0; i < s2.size(); ++i) s2[i] += o.s2[i];
    }
};

ChunkAccum tree_reduce(std::vector<ChunkAccum>& parts) {
    if (parts.empty()) throw std::runtime_error("estimator: empty dataset");
    std::size_t n = parts.size();
    while (n > 1) {
        std::size_t out = 0;
        for (std::size_t k = 0; 2 * k < n; ++k, ++out) {
            if (2 * k + 1 < n) parts[2 * k].merge(parts[2 * k + 1]);
            if (out != 2 * k) parts[out] = std::move(parts[2 * k]);
        }
        n = out;
    }
    return std::move(parts[0]);
}

struct KernelMachine {
    kernel::KernelSpec spec;
    std::unique_ptr<kernel::KernelEvaluator> eval;
    std::unique_ptr<kernel::KernelTable> table;
};

KernelMachine make_kernel_machine(const AnalysisMode& mode,
                                  const sampler::DatasetMeta& meta,
                                  const ReconstructOptions& opts) {
    KernelMachine km;
    km.spec.eta = mode.kernel_eta();
    km.spec.nmax = opts.nmax;
    km.spec.k_cutoff = opts.k_cutoff;
    km.spec.quadrature_nodes = opts.quadrature_nodes;
    km.spec.panels = opts.panels;
    km.spec = km.spec.resolved();
    km.eval = std::make_unique<kernel::KernelEvaluator>(km.spec);

    std::vector<double> grid;
    if (opts.table_dx > 0.0) {
        if (opts.table_half_width > 0.0) {
            grid = kernel::KernelTable::uniform_grid(opts.table_half_width,
                                                     opts.table_dx);
        } else {
            const double sigma =
                std::sqrt(nopa::single_quad_variance(meta.params)) * mode.record_scale();
            grid = kernel::KernelTable::grid_for_samples(
                sigma, static_cast<double>(meta.n_records), opts.table_pad_sigmas,
                opts.table_dx);
        }
    }
    if (!opts.table_cache_path.empty())
        km.table = std::make_unique<kernel::KernelTable>(kernel::KernelTable::cached(
            *km.eval, grid, opts.table_cache_path, opts.threads));
    else
        km.table = std::make_unique<kernel::KernelTable>(*km.eval, grid, opts.threads);
    return km;
}

void check_mode_compatibility(const AnalysisMode& mode,
                              const sampler::DatasetMeta& meta) {
    if (mode.kind == AnalysisKind::Bare &&
        std::abs(mode.eta - meta.params.eta) > 1e-12)
        throw std::invalid_argument(
            "bare-mode reconstruction requires the kernel eta to match the "
            "dataset eta");
    if ((mode.kind == AnalysisKind::DressedLoss) &&
        std::abs(mode.eta - meta.params.eta) > 1e-12)
        throw std::invalid_argument(
            "loss-dressed reconstruction rescales by the dataset eta; pass the "
            "same value");
}

// Shared driver: workers pull chunks, fill per-chunk partials with
// accumulate(records, accum), then the partials are tree-merged.
template <typename Accumulate>
ChunkAccum run_accumulation(sampler::ChunkSource& source, std::size_t n_elems,
                            bool complex_valued, int threads,
                            Accumulate&& accumulate) {
    const int workers = resolve_threads(threads);
    std::vector<ChunkAccum> parts;
    std::mutex parts_mu;

    auto body = [&] {
        std::vector<sampler::HomodyneRecord> records;
        std::uint64_t idx;
        while (source.next_chunk(records, idx)) {
            ChunkAccum acc;
            acc.init(n_elems, complex_valued);
            accumulate(records, acc);
            std::scoped_lock lock(parts_mu);
            if (parts.size() <= idx) parts.resize(idx + 1);
            parts[idx] = std::move(acc);
        }
    };
    if (workers <= 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }
    return tree_reduce(parts);
}

void finalize_weights(const ChunkAccum& acc, DensityMatrixEstimate& est) {
    est.n_records = acc.count;
    if (acc.count == 0) throw std::runtime_error("estimator: empty dataset");
    const double n = static_cast<double>(acc.count);
    est.mean_weight = acc.sum_w / n;
    const double var_w = std::max(0.0, acc.sum_w2 / n - est.mean_weight * est.mean_weight);
    est.mean_weight_stderr = std::sqrt(var_w / n);
    est.n_effective = acc.sum_w * acc.sum_w / acc.sum_w2;
    est.weight_recompute_defect = acc.weight_defect;
}

void finalize_elements(const ChunkAccum& acc, DensityMatrixEstimate& est) {
    const std::size_t n_elems = acc.s1_re.size();
    est.value.resize(n_elems);
    est.sigma.resize(n_elems);
    const bool complex_valued = !acc.s1_im.empty();
    for (std::size_t i = 0; i < n_elems; ++i) {
        const double re = acc.s1_re[i] / acc.sum_w;
        const double im = complex_valued ? acc.s1_im[i] / acc.sum_w : 0.0;
        est.value[i] = Complex(re, im);
        const double var = std::max(0.0, acc.s2[i] / acc.sum_w - (re * re + im * im));
        est.sigma[i] = std::sqrt(var / est.n_effective);
    }
}

}  // namespace

std::string AnalysisMode::name() const {
    switch (kind) {
        case AnalysisKind::Bare: return "bare";
        case AnalysisKind::DressedGaussian: return "dressed-gaussian";
        case AnalysisKind::DressedLoss: return "dressed-loss";
    }
    return "?";
}

AnalysisMode AnalysisMode::from_name(const std::string& name, double eta) {
    if (name == "bare") return bare(eta);
    if (name == "dressed-gaussian") return dressed_gaussian();
    if (name == "dressed-loss") return dressed_loss(eta);
    throw std::invalid_argument("unknown analysis mode: " + name);
}

double DensityMatrixEstimate::joint_prob(int n, int m) const {
    if (arity != 2) throw std::logic_error("joint_prob: two-mode estimate required");
    return scope == EstimateScope::JointDiagonal ? value[index1(n, m)].real()
                                                 : value[index2(n, m, n, m)].real();
}

double DensityMatrixEstimate::joint_prob_sigma(int n, int m) const {
    if (arity != 2) throw std::logic_error("joint_prob: two-mode estimate required");
    return scope == EstimateScope::JointDiagonal ? sigma[index1(n, m)]
                                                 : sigma[index2(n, m, n, m)];
}

DensityMatrixEstimate reconstruct_single(sampler::ChunkSource& source,
                                         const AnalysisMode& mode,
                                         const ReconstructOptions& opts) {
    const sampler::DatasetMeta meta = source.meta();
    if (meta.arity != 1)
        throw std::invalid_argument("reconstruct_single: dataset is not single-mode");
    check_mode_compatibility(mode, meta);
    const KernelMachine km = make_kernel_machine(mode, meta, opts);

    const int nmax = opts.nmax;
    const int N = nmax + 1;
    const int npairs = km.eval->pair_count();
    const double scale = mode.record_scale();

    DensityMatrixEstimate est;
    est.arity = 1;
    est.nmax = nmax;
    est.scope = EstimateScope::Full;
    est.mode = mode;
    est.kernel_spec = km.spec;

    // Accumulate over pairs n >= m; |value| is phase-free, so s2 needs only
    // the squared base.
    ChunkAccum total = run_accumulation(
        source, static_cast<std::size_t>(npairs), true, opts.threads,
        [&](const std::vector<sampler::HomodyneRecord>& records, ChunkAccum& acc) {
            std::vector<double> base(npairs);
            std::vector<double> cos_d(N), sin_d(N);
            for (const auto& r : records) {
                const double w = r.weight;
                acc.count += 1;
                acc.sum_w += w;
                acc.sum_w2 += w * w;
                km.table->base_row(scale * r.x, base);
                cos_d[0] = 1.0;
                sin_d[0] = 0.0;
                const double c1 = std::cos(r.phi), s1 = std::sin(r.phi);
                for (int d = 1; d <= nmax; ++d) {
                    cos_d[d] = cos_d[d - 1] * c1 - sin_d[d - 1] * s1;
                    sin_d[d] = sin_d[d - 1] * c1 + cos_d[d - 1] * s1;
                }
                for (int n = 0; n <= nmax; ++n) {
                    for (int m = 0; m <= n; ++m) {
                        const int p = kernel::KernelEvaluator::pair_index(n, m);
                        const double b = base[p];
                        acc.s1_re[p] += w * b * cos_d[n - m];
                        acc.s1_im[p] += w * b * sin_d[n - m];
                        acc.s2[p] += w * b * b;
                    }
                }
            }
        });

    finalize_weights(total, est);
    // Expand pairs to the full Hermitian matrix.
    est.value.assign(static_cast<std::size_t>(N) * N, 0.0);
    est.sigma.assign(static_cast<std::size_t>(N) * N, 0.0);
    for (int n = 0; n <= nmax; ++n) {
        for (int m = 0; m <= n; ++m) {
            const int p = kernel::KernelEvaluator::pair_index(n, m);
            const double re = total.s1_re[p] / total.sum_w;
            const double im = total.s1_im[p] / total.sum_w;
            const double var =
                std::max(0.0, total.s2[p] / total.sum_w - (re * re + im * im));
            const double sd = std::sqrt(var / est.n_effective);
            est.value[est.index1(n, m)] = Complex(re, im);
            est.value[est.index1(m, n)] = Complex(re, -im);
            est.sigma[est.index1(n, m)] = sd;
            est.sigma[est.index1(m, n)] = sd;
        }
    }
    return est;
}

namespace {

void accumulate_joint_diag(const std::vector<sampler::HomodyneRecord>& records,
                           const KernelMachine& km, const sampler::DatasetMeta& meta,
                           double scale, int nmax, ChunkAccum& acc) {
    const int N = nmax + 1;
    std::vector<double> bx(N), by(N), bx2(N), by2(N);
    const bool check_weights =
        meta.phase_model == sampler::PhaseModel::SelfHomodyne;
    for (const auto& r : records) {
        const double w = r.weight;
        acc.count += 1;
        acc.sum_w += w;
        acc.sum_w2 += w * w;
        if (check_weights) {
            const double recomputed = 1.0 / nopa::gain(meta.params, r.sum_phase);
            acc.weight_defect = std::max(acc.weight_defect, std::abs(recomputed - w));
        }
        km.table->base_diagonal(scale * r.x, bx);
        km.table->base_diagonal(scale * r.xp, by);
        for (int n = 0; n < N; ++n) {
            bx2[n] = bx[n] * bx[n];
            by2[n] = by[n] * by[n];
        }
        for (int n = 0; n < N; ++n) {
            const double wbx = w * bx[n];
            const double wbx2 = w * bx2[n];
            double* s1 = &acc.s1_re[static_cast<std::size_t>(n) * N];
            double* s2 = &acc.s2[static_cast<std::size_t>(n) * N];
            for (int m = 0; m < N; ++m) {
                s1[m] += wbx * by[m];
                s2[m] += wbx2 * by2[m];
            }
        }
    }
}

void accumulate_joint_full(const std::vector<sampler::HomodyneRecord>& records,
                           const KernelMachine& km, const sampler::DatasetMeta& meta,
                           double scale, int nmax, ChunkAccum& acc) {
    const int N = nmax + 1;
    const int D = N * N;  // ordered (n1, n2) pairs per mode
    const int npairs = km.eval->pair_count();
    std::vector<double> base_x(npairs), base_y(npairs);
    std::vector<double> cos_x(N), sin_x(N), cos_y(N), sin_y(N);
    std::vector<double> ur(D), ui(D), u2(D), vr(D), vi(D), v2(D);
    const bool check_weights =
        meta.phase_model == sampler::PhaseModel::SelfHomodyne;

    auto fill_mode = [&](double x, double phi, std::vector<double>& base,
                         std::vector<double>& cd, std::vector<double>& sd,
                         std::vector<double>& re, std::vector<double>& im,
                         std::vector<double>& sq) {
        km.table->base_row(x, base);
        cd[0] = 1.0;
        sd[0] = 0.0;
        const double c1 = std::cos(phi), s1 = std::sin(phi);
        for (int d = 1; d <= nmax; ++d) {
            cd[d] = cd[d - 1] * c1 - sd[d - 1] * s1;
            sd[d] = sd[d - 1] * c1 + cd[d - 1] * s1;
        }
        for (int a = 0; a < N; ++a) {
            for (int b = 0; b <= a; ++b) {
                const double bv = base[kernel::KernelEvaluator::pair_index(a, b)];
                const int d = a - b;
                // e^{i d phi} base on (a, b); conjugate on (b, a).
                re[a * N + b] = bv * cd[d];
                im[a * N + b] = bv * sd[d];
                re[b * N + a] = bv * cd[d];
                im[b * N + a] = -bv * sd[d];
                sq[a * N + b] = bv * bv;
                sq[b * N + a] = bv * bv;
            }
        }
    };

    for (const auto& r : records) {
        const double w = r.weight;
        acc.count += 1;
        acc.sum_w += w;
        acc.sum_w2 += w * w;
        if (check_weights) {
            const double recomputed = 1.0 / nopa::gain(meta.params, r.sum_phase);
            acc.weight_defect = std::max(acc.weight_defect, std::abs(recomputed - w));
        }
        fill_mode(scale * r.x, r.phi, base_x, cos_x, sin_x, ur, ui, u2);
        fill_mode(scale * r.xp, r.psi, base_y, cos_y, sin_y, vr, vi, v2);
        // Outer-product accumulation in [(n1, n2), (m1, m2)] layout.
        for (int a = 0; a < D; ++a) {
            const double war = w * ur[a];
            const double wai = w * ui[a];
            const double wa2 = w * u2[a];
            double* s1r = &acc.s1_re[static_cast<std::size_t>(a) * D];
            double* s1i = &acc.s1_im[static_cast<std::size_t>(a) * D];
            double* s2 = &acc.s2[static_cast<std::size_t>(a) * D];
            for (int b = 0; b < D; ++b) {
                s1r[b] += war * vr[b] - wai * vi[b];
                s1i[b] += war * vi[b] + wai * vr[b];
                s2[b] += wa2 * v2[b];
            }
        }
    }
}

}  // namespace

DensityMatrixEstimate reconstruct_joint(sampler::ChunkSource& source,
                                        const AnalysisMode& mode,
                                        const ReconstructOptions& opts) {
    const sampler::DatasetMeta meta = source.meta();
    if (meta.arity != 2)
        throw std::invalid_argument("reconstruct_joint: dataset is not two-mode");
    check_mode_compatibility(mode, meta);

    const int nmax = opts.nmax;
    const int N = nmax + 1;
    if (opts.scope == EstimateScope::Full) {
        const std::uint64_t n_chunks =
            (meta.n_records + meta.chunk_size - 1) / meta.chunk_size;
        const double partial_bytes = 24.0 * std::pow(static_cast<double>(N), 4.0);
        if (partial_bytes * static_cast<double>(n_chunks) > 4.0e9)
            throw std::invalid_argument(
                "full-scope reconstruction at this nmax/record count needs too "
                "much partial-sum memory; use the joint-diagonal scope");
    }

    const KernelMachine km = make_kernel_machine(mode, meta, opts);
    const double scale = mode.record_scale();

    DensityMatrixEstimate est;
    est.arity = 2;
    est.nmax = nmax;
    est.scope = opts.scope;
    est.mode = mode;
    est.kernel_spec = km.spec;

    if (opts.scope == EstimateScope::JointDiagonal) {
        ChunkAccum total = run_accumulation(
            source, static_cast<std::size_t>(N) * N, false, opts.threads,
            [&](const std::vector<sampler::HomodyneRecord>& records, ChunkAccum& acc) {
                accumulate_joint_diag(records, km, meta, scale, nmax, acc);
            });
        finalize_weights(total, est);
        finalize_elements(total, est);
        return est;
    }

    const std::size_t D = static_cast<std::size_t>(N) * N;
    ChunkAccum total = run_accumulation(
        source, D * D, true, opts.threads,
        [&](const std::vector<sampler::HomodyneRecord>& records, ChunkAccum& acc) {
            accumulate_joint_full(records, km, meta, scale, nmax, acc);
        });
    finalize_weights(total, est);

    // Remap [(n1, n2), (m1, m2)] outer layout to <n1, m1|R|n2, m2>.
    est.value.assign(D * D, 0.0);
    est.sigma.assign(D * D, 0.0);
    for (int n1 = 0; n1 < N; ++n1)
        for (int n2 = 0; n2 < N; ++n2)
            for (int m1 = 0; m1 < N; ++m1)
                for (int m2 = 0; m2 < N; ++m2) {
                    const std::size_t src = (static_cast<std::size_t>(n1) * N + n2) * D +
                                            (static_cast<std::size_t>(m1) * N + m2);
                    const std::size_t dst = est.index2(n1, m1, n2, m2);
                    const double re = total.s1_re[src] / total.sum_w;
                    const double im = total.s1_im[src] / total.sum_w;
                    est.value[dst] = Complex(re, im);
                    const double var = std::max(
                        0.0, total.s2[src] / total.sum_w - (re * re + im * im));
                    est.sigma[dst] = std::sqrt(var / est.n_effective);
                }
    return est;
}

std::vector<StatPoint> total_number_dist(const DensityMatrixEstimate& est) {
    if (est.arity != 2)
        throw std::invalid_argument("total_number_dist: two-mode estimate required");
    std::vector<StatPoint> out;
    for (int n = 0; n <= est.nmax; ++n) {
        StatPoint pt;
        pt.n = n;
        double var = 0.0;
        for (int l = 0; l <= n; ++l) {
            pt.value += est.joint_prob(l, n - l);
            const double s = est.joint_prob_sigma(l, n - l);
            var += s * s;
        }
        pt.sigma = std::sqrt(var);
        out.push_back(pt);
    }
    return out;
}

std::vector<StatPoint> number_correlation(const DensityMatrixEstimate& est, int N) {
    if (est.arity != 2)
        throw std::invalid_argument("number_correlation: two-mode estimate required");
    if (N < 0 || 2 * N > est.nmax)
        throw std::out_of_range(
            "number_correlation: need 2N <= nmax so that every summand is inside "
            "the estimate");
    std::vector<StatPoint> out;
    for (int n = -N; n <= N; ++n) {
        StatPoint pt;
        pt.n = n;
        double var = 0.0;
        for (int l = std::max(-n, 0); l <= N; ++l) {
            pt.value += est.joint_prob(l, n + l);
            const double s = est.joint_prob_sigma(l, n + l);
            var += s * s;
        }
        pt.sigma = std::sqrt(var);
        out.push_back(pt);
    }
    return out;
}

std::vector<StatPoint> joint_diagonal(const DensityMatrixEstimate& est) {
    if (est.arity != 2)
        throw std::invalid_argument("joint_diagonal: two-mode estimate required");
    std::vector<StatPoint> out;
    for (int n = 0; n <= est.nmax; ++n)
        out.push_back({n, est.joint_prob(n, n), est.joint_prob_sigma(n, n)});
    return out;
}

std::vector<double> stderr_saturation_probe(const DensityMatrixEstimate& est) {
    if (est.arity != 1)
        throw std::invalid_argument(
            "stderr_saturation_probe: single-mode estimate required");
    std::vector<double> out(est.nmax + 1);
    for (int n = 0; n <= est.nmax; ++n)
        out[n] = std::sqrt(est.n_effective) * est.sigma[est.index1(n, n)];
    return out;
}

std::vector<Complex> quadrature_single_matrix(const std::vector<double>& x_nodes,
                                              const std::vector<double>& x_weights,
                                              const std::vector<double>& pdf_values,
                                              const kernel::KernelEvaluator& eval,
                                              int phase_nodes) {
    const int nmax = eval.nmax();
    const int N = nmax + 1;
    const int npairs = eval.pair_count();
    std::vector<double> integ(npairs, 0.0);
    std::vector<double> row(npairs);
    for (std::size_t i = 0; i < x_nodes.size(); ++i) {
        eval.base_row(x_nodes[i], row);
        const double f = x_weights[i] * pdf_values[i];
        for (int p = 0; p < npairs; ++p) integ[p] += f * row[p];
    }
    // Phase factor (1/M) sum_j e^{i d phi_j} over the uniform grid on [0, pi).
    std::vector<Complex> pf(N, 0.0);
    for (int j = 0; j < phase_nodes; ++j) {
        const double phi = std::numbers::pi * j / phase_nodes;
        for (int d = 0; d < N; ++d) pf[d] += std::polar(1.0 / phase_nodes, d * phi);
    }
    std::vector<Complex> rho(static_cast<std::size_t>(N) * N, 0.0);
    for (int n = 0; n < N; ++n)
        for (int m = 0; m <= n; ++m) {
            const Complex v = pf[n - m] * integ[kernel::KernelEvaluator::pair_index(n, m)];
            rho[static_cast<std::size_t>(n) * N + m] = v;
            rho[static_cast<std::size_t>(m) * N + n] = std::conj(v);
        }
    return rho;
}

std::vector<Complex> quadrature_joint_tensor(const nopa::TwinBeamParams& params,
                                             const AnalysisMode& mode, int nmax,
                                             const ReconstructOptions& kopts,
                                             const QuadratureOracleOptions& qopts) {
    kernel::KernelSpec spec;
    spec.eta = mode.kernel_eta();
    spec.nmax = nmax;
    spec.k_cutoff = kopts.k_cutoff;
    spec.quadrature_nodes = kopts.quadrature_nodes;
    spec.panels = kopts.panels;
    const kernel::KernelEvaluator eval(spec);
    const double scale = mode.record_scale();
    const int N = nmax + 1;
    const int npairs = eval.pair_count();

    // Tabulate the base on the span reachable from the integration box.
    const double sig_marg = std::sqrt(nopa::single_quad_variance(params));
    const double reach = scale * (8.0 * sig_marg + 2.0);
    const std::vector<double> grid =
        kernel::KernelTable::uniform_grid(reach + 1.0, 1.0 / 1024.0);
    const kernel::KernelTable table(eval, grid, qopts.threads);

    // Oscillation scale of the base functions sets the panel width.
    const double lam = 2.0 * std::numbers::pi / (2.0 * std::sqrt(2.0 * nmax + 1.0)) / scale;

    const int n_sigma = qopts.sum_phase_nodes;
    // Fourier data F[p][q][d] = (1/S) sum_s e^{i d Sigma_s} T_pq(Sigma_s).
    std::vector<Complex> fourier(static_cast<std::size_t>(npairs) * npairs * N, 0.0);
    std::mutex fourier_mu;
    std::atomic<int> next_sigma{0};

    auto sigma_worker = [&] {
    std::vector<double> m1, m2;
    int s;
    while ((s = next_sigma.fetch_add(1)) < n_sigma) {
        const double sigma_phase = kTwoPi * s / n_sigma;
        // p(x, x'; Sigma) factorizes in u = (x+x')/sqrt2, v = (x-x')/sqrt2.
        const nopa::QuadPdfCoeffs co = nopa::quad_pdf_coeffs(params, sigma_phase, 0.0);
        const double dp = co.d2_plus + 4.0 * co.delta2_eta;
        const double dm = co.d2_minus + 4.0 * co.delta2_eta;
        const double sig_u = 0.5 * std::sqrt(dp);
        const double sig_v = 0.5 * std::sqrt(dm);
        auto axis_rule = [&](double sg) {
            const double range = 7.5 * sg;
            const int panels =
                std::max(4, static_cast<int>(std::ceil(2.0 * range / std::min(lam / 2.0, sg))));
            return quad::panel_rule(-range, range, panels, 8);
        };
        const quad::Rule ru = axis_rule(sig_u);
        const quad::Rule rv = axis_rule(sig_v);
        const std::size_t nu = ru.size(), nv = rv.size();

        std::vector<double> wu(nu), wv(nv);
        const double cu = 2.0 / dp, cv = 2.0 / dm;
        const double norm = 2.0 / (std::numbers::pi * std::sqrt(dp * dm));
        for (std::size_t i = 0; i < nu; ++i)
            wu[i] = ru.w[i] * std::exp(-cu * ru.x[i] * ru.x[i]);
        for (std::size_t j = 0; j < nv; ++j)
            wv[j] = rv.w[j] * std::exp(-cv * rv.x[j] * rv.x[j]);

        const std::size_t npts = nu * nv;
        m1.assign(npts * npairs, 0.0);
        m2.assign(npts * npairs, 0.0);
        std::vector<double> row_a(npairs), row_b(npairs);
        const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
        for (std::size_t i = 0; i < nu; ++i) {
            for (std::size_t j = 0; j < nv; ++j) {
                const double x = (ru.x[i] + rv.x[j]) * inv_sqrt2;
                const double xp = (ru.x[i] - rv.x[j]) * inv_sqrt2;
                table.base_row(scale * x, row_a);
                table.base_row(scale * xp, row_b);
                const double wgt = wu[i] * wv[j];
                double* m1r = &m1[(i * nv + j) * npairs];
                double* m2r = &m2[(i * nv + j) * npairs];
                for (int p = 0; p < npairs; ++p) {
                    m1r[p] = wgt * row_a[p];
                    m2r[p] = row_b[p];
                }
            }
        }
        // T = M1^T M2 (npairs x npairs).
        std::vector<double> t(static_cast<std::size_t>(npairs) * npairs, 0.0);
        for (std::size_t r = 0; r < npts; ++r) {
            const double* a = &m1[r * npairs];
            const double* b = &m2[r * npairs];
            for (int p = 0; p < npairs; ++p) {
                const double ap = a[p];
                double* trow = &t[static_cast<std::size_t>(p) * npairs];
                for (int q = 0; q < npairs; ++q) trow[q] += ap * b[q];
            }
        }
        std::scoped_lock lock(fourier_mu);
        for (int p = 0; p < npairs; ++p)
            for (int q = 0; q < npairs; ++q) {
                const double tv = norm * t[static_cast<std::size_t>(p) * npairs + q];
                for (int d = 0; d < N; ++d)
                    fourier[(static_cast<std::size_t>(p) * npairs + q) * N + d] +=
                        std::polar(tv / n_sigma, d * sigma_phase);
            }
    }
    };
    {
        const int workers = resolve_threads(qopts.threads);
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(sigma_worker);
        for (auto& t : pool) t.join();
    }

    // Assemble <n1, m1|R|n2, m2>: zero unless n1 - n2 = m1 - m2 = d, in which
    // case it is the d-th Fourier coefficient of T over the phase sum.
    std::vector<Complex> out(static_cast<std::size_t>(N) * N * N * N, 0.0);
    auto idx2 = [N](int n1, int m1, int n2, int m2) {
        return ((static_cast<std::size_t>(n1) * N + m1) * N + n2) * N + m2;
    };
    for (int n1 = 0; n1 < N; ++n1)
        for (int n2 = 0; n2 < N; ++n2)
            for (int m1 = 0; m1 < N; ++m1)
                for (int m2 = 0; m2 < N; ++m2) {
                    const int d1 = n1 - n2, d2 = m1 - m2;
                    if (d1 != d2) continue;
                    const int p = kernel::KernelEvaluator::pair_index(std::max(n1, n2),
                                                                      std::min(n1, n2));
                    const int q = kernel::KernelEvaluator::pair_index(std::max(m1, m2),
                                                                      std::min(m1, m2));
                    const std::size_t f = (static_cast<std::size_t>(p) * npairs + q) * N;
                    const Complex fd = fourier[f + std::abs(d1)];
                    out[idx2(n1, m1, n2, m2)] = d1 >= 0 ? fd : std::conj(fd);
                }
    return out;
}

}  // namespace twinbeam::estimator
