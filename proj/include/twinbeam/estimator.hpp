#ifndef TWINBEAM_ESTIMATOR_HPP
#define TWINBEAM_ESTIMATOR_HPP

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "twinbeam/nopa_model.hpp"
#include "twinbeam/sampler.hpp"
#include "twinbeam/tomokernel.hpp"

// Turns record streams into density-matrix estimates with per-element
// statistical errors, by averaging pattern-kernel values over the records
// (self-normalized importance weighting), and derives the total-number and
// number-correlation statistics.

namespace twinbeam::estimator {

using Complex = std::complex<double>;

enum class AnalysisKind { Bare, DressedGaussian, DressedLoss };

struct AnalysisMode {
    AnalysisKind kind = AnalysisKind::Bare;
    double eta = 1.0;  // detector efficiency: kernel eta for Bare, the
                       // sqrt(eta) rescale for DressedLoss; unused by
                       // DressedGaussian

    static AnalysisMode bare(double eta) { return {AnalysisKind::Bare, eta}; }
    static AnalysisMode dressed_gaussian() { return {AnalysisKind::DressedGaussian, 1.0}; }
    static AnalysisMode dressed_loss(double eta) { return {AnalysisKind::DressedLoss, eta}; }

    double kernel_eta() const { return kind == AnalysisKind::Bare ? eta : 1.0; }
    double record_scale() const {
        return kind == AnalysisKind::DressedLoss ? std::sqrt(eta) : 1.0;
    }
    std::string name() const;
    static AnalysisMode from_name(const std::string& name, double eta);
};

enum class EstimateScope { Full, JointDiagonal };

struct DensityMatrixEstimate {
    int arity = 1;
    int nmax = 0;
    EstimateScope scope = EstimateScope::Full;  // arity-1 is always Full
    AnalysisMode mode;
    kernel::KernelSpec kernel_spec;  // resolved spec actually used
    std::uint64_t n_records = 0;
    double mean_weight = 1.0;
    double mean_weight_stderr = 0.0;
    double n_effective = 0.0;
    // Largest |stored weight - 1/gain(sumphase)| seen (SelfHomodyne data
    // carrying the sumphase column); 0 otherwise.
    double weight_recompute_defect = 0.0;

    // Full arity-1: (nmax+1)^2 row-major <n|rho|m>.
    // Full arity-2: (nmax+1)^4 indexed ((n1 N + m1) N + n2) N + m2.
    // JointDiagonal: (nmax+1)^2 row-major p(n, m) = <n,m|R|n,m>.
    std::vector<Complex> value;
    std::vector<double> sigma;

    int dim() const { return nmax + 1; }
    std::size_t index1(int n, int m) const { return static_cast<std::size_t>(n) * dim() + m; }
    std::size_t index2(int n1, int m1, int n2, int m2) const {
        const std::size_t N = dim();
        return ((static_cast<std::size_t>(n1) * N + m1) * N + n2) * N + m2;
    }
    // p(n, m) and its error from either two-mode scope.
    double joint_prob(int n, int m) const;
    double joint_prob_sigma(int n, int m) const;
};

struct ReconstructOptions {
    int nmax = 20;
    EstimateScope scope = EstimateScope::Full;
    int threads = 0;  // 0 -> hardware concurrency
    // Kernel quadrature overrides (0 keeps the defaults).
    double k_cutoff = 0.0;
    int quadrature_nodes = 4096;
    int panels = 16;
    // Base-value tabulation; dx = 0 disables the table (direct evaluation).
    double table_dx = 1.0 / 512.0;
    double table_pad_sigmas = 5.0;
    double table_half_width = 0.0;  // > 0 pins the grid span (cache sharing)
    std::string table_cache_path;   // optional binary cache
};

// Single-mode reconstruction: element (n, m) = weighted mean over records of
// e^{i(n-m) phi} base(n, m, x_eff).
DensityMatrixEstimate reconstruct_single(sampler::ChunkSource& source,
                                         const AnalysisMode& mode,
                                         const ReconstructOptions& opts);

// Two-mode reconstruction; scope selects the full tensor or only the joint
// photon-number probabilities p(n, m).
DensityMatrixEstimate reconstruct_joint(sampler::ChunkSource& source,
                                        const AnalysisMode& mode,
                                        const ReconstructOptions& opts);

struct StatPoint {
    int n = 0;
    double value = 0.0;
    double sigma = 0.0;
};

// s(n) = sum_l p(l, n-l), n = 0..nmax; errors by quadrature sum.
std::vector<StatPoint> total_number_dist(const DensityMatrixEstimate& est);
// d_N(n) = sum_l p(l, n+l), n = -N..N; requires 2N <= nmax so every term
// lies inside the estimate.
std::vector<StatPoint> number_correlation(const DensityMatrixEstimate& est, int N);
// p(n, n) with errors.
std::vector<StatPoint> joint_diagonal(const DensityMatrixEstimate& est);
// sqrt(N_eff) * sigma(rho_nn) for a single-mode estimate; for photon numbers
// well above the state occupation these approach sqrt(2).
std::vector<double> stderr_saturation_probe(const DensityMatrixEstimate& est);

// Deterministic quadrature average of the two-mode pattern kernels against
// the exact joint quadrature density (no Monte Carlo): the full estimate
// tensor an infinite-statistics run would converge to. Used as the
// unbiasedness / phase-convention oracle.
struct QuadratureOracleOptions {
    int sum_phase_nodes = 96;  // uniform grid for the phase-sum average
    int threads = 0;
};
std::vector<Complex> quadrature_joint_tensor(const nopa::TwinBeamParams& params,
                                             const AnalysisMode& mode, int nmax,
                                             const ReconstructOptions& kopts = {},
                                             const QuadratureOracleOptions& qopts = {});

// Same deterministic average for a single mode against a caller-supplied
// phase-invariant quadrature density p(x).
std::vector<Complex> quadrature_single_matrix(const std::vector<double>& x_nodes,
                                              const std::vector<double>& x_weights,
                                              const std::vector<double>& pdf_values,
                                              const kernel::KernelEvaluator& eval,
                                              int phase_nodes = 64);

}  // namespace twinbeam::estimator

#endif
