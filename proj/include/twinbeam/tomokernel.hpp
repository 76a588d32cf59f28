#ifndef TWINBEAM_TOMOKERNEL_HPP
#define TWINBEAM_TOMOKERNEL_HPP

#include <complex>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

// Pattern-kernel matrix elements <n|K_eta(x - X_phi)|m> for eta > 1/2.
//
// The kernel is evaluated by direct quadrature of its k-integral through the
// Fock matrix elements of e^{-ik X_0}: the integrand carries an overall
// Gaussian factor exp[-k^2 (2 eta - 1)/(8 eta)] times a polynomial-oscillatory
// part, so the integral converges absolutely exactly when eta > 1/2, and a
// finite cutoff with Gauss-Legendre panels evaluates it to quadrature
// accuracy. The phase dependence is carried analytically:
//   <n|K_eta(x - X_phi)|m> = e^{i(n-m) phi} * base(n, m, x)
// with base real-valued.

namespace twinbeam::kernel {

using Complex = std::complex<double>;

// Reconstruction below eta = 1/2 is impossible (unbounded kernel matrix
// elements); distinct from ordinary configuration errors so callers can map
// it to a dedicated exit code.
struct PhysicsBoundError : std::domain_error {
    using std::domain_error::domain_error;
};

struct KernelSpec {
    double eta = 1.0;          // must be > 0.5
    int nmax = 20;
    double k_cutoff = 0.0;     // 0 selects the tail-bound default
    int quadrature_nodes = 4096;
    int panels = 16;

    // Cutoff such that the neglected tail of k^{2 nmax + 2} e^{-beta k^2}
    // is below tail_eps.
    static double default_cutoff(double eta, int nmax, double tail_eps = 1e-14);
    // Validates and fills derived defaults; throws std::domain_error for
    // eta <= 0.5 (the kernel matrix elements are unbounded there and no
    // reconstruction is possible).
    KernelSpec resolved() const;
    // Upper bound on the neglected quadrature tail.
    double tail_bound() const;
    // Hash over all resolved fields (cache key).
    std::uint64_t hash() const;
};

class KernelTable;

class KernelEvaluator {
public:
    explicit KernelEvaluator(const KernelSpec& spec);

    const KernelSpec& spec() const { return spec_; }
    int nmax() const { return spec_.nmax; }

    // base(n, m, x): the phase-free real kernel value.
    double base(int n, int m, double x) const;

    // base for every pair n >= m at one x; out has pair_count() slots
    // indexed by pair_index().
    void base_row(double x, std::span<double> out) const;

    // e^{i(n-m) phi} base(n, m, x).
    Complex element(int n, int m, double x, double phi) const;

    static int pair_index(int n, int m) {  // requires n >= m
        return n * (n + 1) / 2 + m;
    }
    int pair_count() const { return (spec_.nmax + 1) * (spec_.nmax + 2) / 2; }

private:
    KernelSpec spec_;
    std::vector<double> nodes_;       // k_j
    std::vector<double> planes_;      // [pair][j]: signed weighted magnitudes
    std::vector<std::uint8_t> use_sin_;  // per pair: odd n-m
    friend class KernelTable;
};

// Uniform-grid tabulation of the base values with 4-point cubic
// interpolation; out-of-grid arguments fall back to direct evaluation.
class KernelTable {
public:
    // Empty grid => direct evaluation everywhere.
    KernelTable(const KernelEvaluator& eval, std::span<const double> x_grid,
                int n_threads = 0);

    double base(int n, int m, double x) const;
    Complex element(int n, int m, double x, double phi) const;
    // All diagonal base values at once (phase-free).
    void base_diagonal(double x, std::span<double> out) const;
    // base for every pair at one x.
    void base_row(double x, std::span<double> out) const;

    const KernelEvaluator& evaluator() const { return eval_; }
    bool tabulated() const { return n_nodes_ >= 4; }
    std::size_t value_count() const { return values_.size(); }

    // Versioned binary cache keyed by the spec hash and grid layout;
    // load returns nullopt on any mismatch or corruption.
    void save(const std::string& path) const;
    static std::optional<std::vector<double>> load_values(
        const std::string& path, const KernelSpec& spec, double x0, double dx,
        int n_nodes);
    // Table whose values come from the cache when valid, else rebuilt
    // (and re-saved when a cache path is given).
    static KernelTable cached(const KernelEvaluator& eval,
                              std::span<const double> x_grid,
                              const std::string& cache_path, int n_threads = 0);

    // Grid covering [-half_width, half_width] at the given spacing.
    static std::vector<double> uniform_grid(double half_width, double dx);
    // Grid sized from expected sample support: +-(sigma sqrt(2 ln N) + pad
    // * sigma).
    static std::vector<double> grid_for_samples(double sigma, double n_records,
                                                double pad_sigmas = 5.0,
                                                double dx = 1.0 / 512.0);

private:
    KernelTable(const KernelEvaluator& eval, double x0, double dx, int n_nodes,
                std::vector<double> values);
    const KernelEvaluator& eval_;
    double x0_ = 0.0;
    double dx_ = 1.0;
    int n_nodes_ = 0;
    std::vector<double> values_;  // [pair][node]
};

}  // namespace twinbeam::kernel

#endif
