#include "twinbeam/tomokernel.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "twinbeam/fockmath.hpp"
#include "twinbeam/quadrature.hpp"

namespace twinbeam::kernel {

namespace {

double gaussian_rate(double eta) { return (2.0 * eta - 1.0) / (8.0 * eta); }

int resolve_threads(int n_threads) {
    if (n_threads > 0) return n_threads;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

}  // namespace

double KernelSpec::default_cutoff(double eta, int nmax, double tail_eps) {
    const double beta = gaussian_rate(eta);
    const double log_eps = -std::log(tail_eps);
    const double poly_deg = 2.0 * nmax + 2.0;
    double k = std::sqrt(log_eps / beta);
    for (int i = 0; i < 12; ++i)
        k = std::sqrt((log_eps + poly_deg * std::log(std::max(k, std::numbers::e))) / beta);
    return k;
}

KernelSpec KernelSpec::resolved() const {
    if (!(eta > 0.5) || eta > 1.0)
        throw PhysicsBoundError(
            "KernelSpec: eta must satisfy 0.5 < eta <= 1; the pattern-kernel "
            "matrix elements are unbounded for eta <= 0.5 and the state cannot "
            "be reconstructed from such data");
    if (nmax < 0 || nmax > fock::kMaxPhotonNumber)
        throw std::domain_error("KernelSpec: nmax out of range");
    if (quadrature_nodes < panels || panels < 1)
        throw std::domain_error("KernelSpec: bad quadrature layout");
    KernelSpec r = *this;
    if (r.k_cutoff <= 0.0) r.k_cutoff = default_cutoff(eta, nmax);
    return r;
}

double KernelSpec::tail_bound() const {
    // Tail of int_K^inf k^p e^{-beta k^2} dk with p = 2 nmax + 2, bounded by
    // K^{p-1} e^{-beta K^2} / (2 beta - (p - 1)/K^2) when positive.
    const double beta = gaussian_rate(eta);
    const double p = 2.0 * nmax + 2.0;
    const double k = k_cutoff;
    const double denom = 2.0 * beta - (p - 1.0) / (k * k);
    if (denom <= 0.0) return HUGE_VAL;
    return std::exp((p - 1.0) * std::log(k) - beta * k * k) / denom;
}

std::uint64_t KernelSpec::hash() const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001B3ULL;
        }
    };
    mix(&eta, sizeof(eta));
    mix(&nmax, sizeof(nmax));
    mix(&k_cutoff, sizeof(k_cutoff));
    mix(&quadrature_nodes, sizeof(quadrature_nodes));
    mix(&panels, sizeof(panels));
    return h;
}

KernelEvaluator::KernelEvaluator(const KernelSpec& spec) : spec_(spec.resolved()) {
    const int per_panel = spec_.quadrature_nodes / spec_.panels;
    const quad::Rule rule =
        quad::panel_rule(0.0, spec_.k_cutoff, spec_.panels, per_panel);
    const int nk = static_cast<int>(rule.size());
    nodes_ = rule.x;

    // Weighted integrand factor w_j k_j exp[(1-eta) k^2/(8 eta)]; the
    // exp(-k^2/8) of the matrix element keeps the product decaying.
    std::vector<double> wfac(nk);
    const double grow = (1.0 - spec_.eta) / (8.0 * spec_.eta);
    for (int j = 0; j < nk; ++j)
        wfac[j] = rule.w[j] * nodes_[j] * std::exp(grow * nodes_[j] * nodes_[j]);

    const int npairs = pair_count();
    planes_.assign(static_cast<std::size_t>(npairs) * nk, 0.0);
    use_sin_.assign(npairs, 0);

    // <n|e^{-ik X_0}|m> = (-i)^{n-m} G(n,m,k) with G real; folding the
    // quadrant of (-i)^{n-m} into a sign leaves cos for even n-m and sin
    // for odd n-m in Re[e^{ikx} <n|e^{-ikX_0}|m>].
    for (int n = 0; n <= spec_.nmax; ++n) {
        for (int m = 0; m <= n; ++m) {
            const int p = pair_index(n, m);
            const int d = n - m;
            use_sin_[p] = static_cast<std::uint8_t>(d % 2);
            double sign = 1.0;
            if (d % 4 == 2 || d % 4 == 3) sign = -1.0;
            double* plane = &planes_[static_cast<std::size_t>(p) * nk];
            for (int j = 0; j < nk; ++j)
                plane[j] = sign * wfac[j] * fock::quad_char_axis_magnitude(n, m, nodes_[j]);
        }
    }
}

double KernelEvaluator::base(int n, int m, double x) const {
    if (n < m) std::swap(n, m);
    const int nk = static_cast<int>(nodes_.size());
    const double* plane = &planes_[static_cast<std::size_t>(pair_index(n, m)) * nk];
    double acc = 0.0;
    if (use_sin_[pair_index(n, m)]) {
        for (int j = 0; j < nk; ++j) acc += plane[j] * std::sin(nodes_[j] * x);
    } else {
        for (int j = 0; j < nk; ++j) acc += plane[j] * std::cos(nodes_[j] * x);
    }
    return 0.5 * acc;
}

void KernelEvaluator::base_row(double x, std::span<double> out) const {
    const int nk = static_cast<int>(nodes_.size());
    std::vector<double> tcos(nk), tsin(nk);
    for (int j = 0; j < nk; ++j) {
        tcos[j] = std::cos(nodes_[j] * x);
        tsin[j] = std::sin(nodes_[j] * x);
    }
    const int npairs = pair_count();
    for (int p = 0; p < npairs; ++p) {
        const double* plane = &planes_[static_cast<std::size_t>(p) * nk];
        const double* trig = use_sin_[p] ? tsin.data() : tcos.data();
        double acc = 0.0;
        for (int j = 0; j < nk; ++j) acc += plane[j] * trig[j];
        out[p] = 0.5 * acc;
    }
}

Complex KernelEvaluator::element(int n, int m, double x, double phi) const {
    const double b = base(n, m, x);
    return std::polar(1.0, (n - m) * phi) * b;
}

KernelTable::KernelTable(const KernelEvaluator& eval, double x0, double dx,
                         int n_nodes, std::vector<double> values)
    : eval_(eval), x0_(x0), dx_(dx), n_nodes_(n_nodes), values_(std::move(values)) {}

KernelTable::KernelTable(const KernelEvaluator& eval, std::span<const double> x_grid,
                         int n_threads)
    : eval_(eval) {
    n_nodes_ = static_cast<int>(x_grid.size());
    if (n_nodes_ < 4) {  // degenerate grid: keep direct evaluation only
        n_nodes_ = 0;
        return;
    }
    x0_ = x_grid[0];
    dx_ = (x_grid[x_grid.size() - 1] - x_grid[0]) / (n_nodes_ - 1);
    const int npairs = eval_.pair_count();
    values_.assign(static_cast<std::size_t>(npairs) * n_nodes_, 0.0);

    const int workers = resolve_threads(n_threads);
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    auto run = [&] {
        std::vector<double> row(npairs);
        int i;
        while ((i = next.fetch_add(1)) < n_nodes_) {
            eval_.base_row(x0_ + i * dx_, row);
            for (int p = 0; p < npairs; ++p)
                values_[static_cast<std::size_t>(p) * n_nodes_ + i] = row[p];
        }
    };
    for (int t = 0; t < workers; ++t) pool.emplace_back(run);
    for (auto& t : pool) t.join();
}

double KernelTable::base(int n, int m, double x) const {
    if (n < m) std::swap(n, m);
    if (!tabulated()) return eval_.base(n, m, x);
    const double t = (x - x0_) / dx_;
    const int i = static_cast<int>(std::floor(t));
    if (i < 1 || i > n_nodes_ - 3) return eval_.base(n, m, x);
    const double s = t - i;
    const double w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    const double w1 = (s * s - 1.0) * (s - 2.0) / 2.0;
    const double w2 = -s * (s + 1.0) * (s - 2.0) / 2.0;
    const double w3 = s * (s * s - 1.0) / 6.0;
    const double* v =
        &values_[static_cast<std::size_t>(KernelEvaluator::pair_index(n, m)) * n_nodes_ + i - 1];
    return w0 * v[0] + w1 * v[1] + w2 * v[2] + w3 * v[3];
}

void KernelTable::base_diagonal(double x, std::span<double> out) const {
    const int nmax = eval_.nmax();
    if (!tabulated()) {
        for (int n = 0; n <= nmax; ++n) out[n] = eval_.base(n, n, x);
        return;
    }
    const double t = (x - x0_) / dx_;
    const int i = static_cast<int>(std::floor(t));
    if (i < 1 || i > n_nodes_ - 3) {
        for (int n = 0; n <= nmax; ++n) out[n] = eval_.base(n, n, x);
        return;
    }
    const double s = t - i;
    const double w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    const double w1 = (s * s - 1.0) * (s - 2.0) / 2.0;
    const double w2 = -s * (s + 1.0) * (s - 2.0) / 2.0;
    const double w3 = s * (s * s - 1.0) / 6.0;
    for (int n = 0; n <= nmax; ++n) {
        const double* v =
            &values_[static_cast<std::size_t>(KernelEvaluator::pair_index(n, n)) * n_nodes_ + i - 1];
        out[n] = w0 * v[0] + w1 * v[1] + w2 * v[2] + w3 * v[3];
    }
}

void KernelTable::base_row(double x, std::span<double> out) const {
    const int npairs = eval_.pair_count();
    if (!tabulated()) {
        eval_.base_row(x, out);
        return;
    }
    const double t = (x - x0_) / dx_;
    const int i = static_cast<int>(std::floor(t));
    if (i < 1 || i > n_nodes_ - 3) {
        eval_.base_row(x, out);
        return;
    }
    const double s = t - i;
    const double w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    const double w1 = (s * s - 1.0) * (s - 2.0) / 2.0;
    const double w2 = -s * (s + 1.0) * (s - 2.0) / 2.0;
    const double w3 = s * (s * s - 1.0) / 6.0;
    for (int p = 0; p < npairs; ++p) {
        const double* v = &values_[static_cast<std::size_t>(p) * n_nodes_ + i - 1];
        out[p] = w0 * v[0] + w1 * v[1] + w2 * v[2] + w3 * v[3];
    }
}

Complex KernelTable::element(int n, int m, double x, double phi) const {
    return std::polar(1.0, (n - m) * phi) * base(n, m, x);
}

namespace {
constexpr std::uint32_t kCacheMagic = 0x54424B43;  // "TBKC"
constexpr std::uint32_t kCacheVersion = 1;
}  // namespace

void KernelTable::save(const std::string& path) const {
    if (!tabulated()) return;
    std::ofstream out(path, std::ios::binary);
    if (!out) return;  // cache is best effort
    const std::uint64_t spec_hash = eval_.spec().hash();
    out.write(reinterpret_cast<const char*>(&kCacheMagic), 4);
    out.write(reinterpret_cast<const char*>(&kCacheVersion), 4);
    out.write(reinterpret_cast<const char*>(&spec_hash), 8);
    out.write(reinterpret_cast<const char*>(&x0_), 8);
    out.write(reinterpret_cast<const char*>(&dx_), 8);
    out.write(reinterpret_cast<const char*>(&n_nodes_), 4);
    const std::uint64_t count = values_.size();
    out.write(reinterpret_cast<const char*>(&count), 8);
    out.write(reinterpret_cast<const char*>(values_.data()),
              static_cast<std::streamsize>(count * sizeof(double)));
    // Trailing checksum so truncation/corruption is detected on load.
    std::uint64_t sum = 0;
    const auto* raw = reinterpret_cast<const std::uint64_t*>(values_.data());
    for (std::uint64_t i = 0; i < count; ++i) sum = sum * 1099511628211ULL + raw[i];
    out.write(reinterpret_cast<const char*>(&sum), 8);
}

std::optional<std::vector<double>> KernelTable::load_values(
    const std::string& path, const KernelSpec& spec, double x0, double dx,
    int n_nodes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::uint32_t magic = 0, version = 0;
    std::uint64_t spec_hash = 0, count = 0;
    double fx0 = 0, fdx = 0;
    int fn = 0;
    in.read(reinterpret_cast<char*>(&magic), 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&spec_hash), 8);
    in.read(reinterpret_cast<char*>(&fx0), 8);
    in.read(reinterpret_cast<char*>(&fdx), 8);
    in.read(reinterpret_cast<char*>(&fn), 4);
    in.read(reinterpret_cast<char*>(&count), 8);
    if (!in || magic != kCacheMagic || version != kCacheVersion) return std::nullopt;
    if (spec_hash != spec.hash() || fx0 != x0 || fdx != dx || fn != n_nodes)
        return std::nullopt;
    std::vector<double> values(count);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    std::uint64_t sum_stored = 0;
    in.read(reinterpret_cast<char*>(&sum_stored), 8);
    if (!in) return std::nullopt;
    std::uint64_t sum = 0;
    const auto* raw = reinterpret_cast<const std::uint64_t*>(values.data());
    for (std::uint64_t i = 0; i < count; ++i) sum = sum * 1099511628211ULL + raw[i];
    if (sum != sum_stored) return std::nullopt;
    return values;
}

KernelTable KernelTable::cached(const KernelEvaluator& eval,
                                std::span<const double> x_grid,
                                const std::string& cache_path, int n_threads) {
    if (x_grid.size() >= 4 && !cache_path.empty()) {
        const double x0 = x_grid[0];
        const int n = static_cast<int>(x_grid.size());
        const double dx = (x_grid[x_grid.size() - 1] - x_grid[0]) / (n - 1);
        if (auto values = load_values(cache_path, eval.spec(), x0, dx, n))
            return KernelTable(eval, x0, dx, n, std::move(*values));
    }
    KernelTable table(eval, x_grid, n_threads);
    if (!cache_path.empty()) table.save(cache_path);
    return table;
}

std::vector<double> KernelTable::uniform_grid(double half_width, double dx) {
    const int n = 2 * static_cast<int>(std::ceil(half_width / dx)) + 1;
    std::vector<double> grid(n);
    const double x0 = -dx * (n - 1) / 2.0;
    for (int i = 0; i < n; ++i) grid[i] = x0 + i * dx;
    return grid;
}

std::vector<double> KernelTable::grid_for_samples(double sigma, double n_records,
                                                  double pad_sigmas, double dx) {
    const double expected_max = sigma * std::sqrt(2.0 * std::log(std::max(n_records, 2.0)));
    return uniform_grid(expected_max + pad_sigmas * sigma, dx);
}

}  // namespace twinbeam::kernel
