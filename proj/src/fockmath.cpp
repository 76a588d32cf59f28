#include "twinbeam/fockmath.hpp"

#include <cassert>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace twinbeam::fock {

namespace {

constexpr int kLogFactTableSize = 10001;

const std::vector<double>& log_factorial_table() {
    static const std::vector<double> table = [] {
        std::vector<double> t(kLogFactTableSize);
        t[0] = 0.0;
        for (int k = 1; k < kLogFactTableSize; ++k)
            t[k] = t[k - 1] + std::log(static_cast<double>(k));
        return t;
    }();
    return table;
}

}  // namespace

double log_factorial(int n) {
    if (n < 0) throw std::domain_error("log_factorial: n must be >= 0");
    if (n < kLogFactTableSize) return log_factorial_table()[n];
    return std::lgamma(static_cast<double>(n) + 1.0);
}

double laguerre_assoc(int degree, int order, double x) {
    if (degree < 0 || order < 0)
        throw std::domain_error("laguerre_assoc: indices must be >= 0");
    if (degree == 0) return 1.0;
    double lkm1 = 1.0;
    double lk = 1.0 + order - x;
    for (int k = 1; k < degree; ++k) {
        const double lkp1 =
            ((2.0 * k + 1.0 + order - x) * lk - (k + order) * lkm1) / (k + 1.0);
        lkm1 = lk;
        lk = lkp1;
    }
    return lk;
}

Complex displacement_matrix_element(int n, int m, Complex w) {
    if (n < 0 || m < 0)
        throw std::domain_error("displacement_matrix_element: indices must be >= 0");
    if (n < m) return std::conj(displacement_matrix_element(m, n, -w));
    const int d = n - m;
    const double r2 = std::norm(w);
    // sqrt(m!/n!) w^d e^{-|w|^2/2} L_m^d(|w|^2), magnitude in log space.
    double log_mag = 0.5 * (log_factorial(m) - log_factorial(n)) - 0.5 * r2;
    double phase = 0.0;
    if (d > 0) {
        if (r2 == 0.0) return 0.0;
        log_mag += 0.5 * d * std::log(r2);
        phase = d * std::arg(w);
    }
    const double lag = laguerre_assoc(m, d, r2);
    const double mag = std::exp(log_mag) * lag;  // signed
    return Complex(mag * std::cos(phase), mag * std::sin(phase));
}

Complex quad_char_element(int n, int m, double k, double phi) {
    const Complex w = Complex(0.0, -0.5 * k) * std::polar(1.0, phi);
    return displacement_matrix_element(n, m, w);
}

double quad_char_axis_magnitude(int n, int m, double k) {
    if (n < m) std::swap(n, m);
    const int d = n - m;
    const double r2 = 0.25 * k * k;
    double log_mag = 0.5 * (log_factorial(m) - log_factorial(n)) - 0.5 * r2;
    if (d > 0) {
        if (r2 == 0.0) return 0.0;
        log_mag += 0.5 * d * std::log(r2);
    }
    return std::exp(log_mag) * laguerre_assoc(m, d, r2);
}

double quad_wavefunction(int n, double x) {
    if (n < 0) throw std::domain_error("quad_wavefunction: n must be >= 0");
    // psi_{k+1} = 2x/sqrt(k+1) psi_k - sqrt(k/(k+1)) psi_{k-1}; values stay
    // O(1) so there is no overflow at any n we use.
    const double psi0 = std::pow(2.0 / std::numbers::pi, 0.25) * std::exp(-x * x);
    if (n == 0) return psi0;
    double pkm1 = psi0;
    double pk = 2.0 * x * psi0;
    for (int k = 1; k < n; ++k) {
        const double pkp1 =
            (2.0 * x * pk - std::sqrt(static_cast<double>(k)) * pkm1) /
            std::sqrt(k + 1.0);
        pkm1 = pk;
        pk = pkp1;
    }
    return pk;
}

void quad_wavefunction_all(int nmax, double x, std::span<double> out) {
    assert(static_cast<int>(out.size()) == nmax + 1);
    out[0] = std::pow(2.0 / std::numbers::pi, 0.25) * std::exp(-x * x);
    if (nmax == 0) return;
    out[1] = 2.0 * x * out[0];
    for (int k = 1; k < nmax; ++k)
        out[k + 1] = (2.0 * x * out[k] - std::sqrt(static_cast<double>(k)) * out[k - 1]) /
                     std::sqrt(k + 1.0);
}

}  // namespace twinbeam::fock
