#ifndef TWINBEAM_FOCKMATH_HPP
#define TWINBEAM_FOCKMATH_HPP

#include <complex>
#include <span>

// Special-function and Fock-space operator numerics shared by the state
// model, the pattern kernels and the oracle suites.
//
// Conventions used throughout:
//   quadrature operator  X_phi = (e^{-i phi} a + e^{i phi} a^dag) / 2
//   (vacuum variance 1/4), displacement D(w) = exp(w a^dag - w* a),
//   position wavefunction <x|n> with weight e^{-x^2}.
// Factorial ratios are carried in log space so that photon numbers up to
// nmax = 64 stay inside double range.

namespace twinbeam::fock {

using Complex = std::complex<double>;

inline constexpr int kMaxPhotonNumber = 64;

// ln(n!) with relative error well below 1e-12 for n <= 10^4.
double log_factorial(int n);

// Associated Laguerre polynomial L_degree^(order)(x) by the three-term
// recurrence in the degree.
double laguerre_assoc(int degree, int order, double x);

// <n|D(w)|m>.
Complex displacement_matrix_element(int n, int m, Complex w);

// <n|exp(-i k X_phi)|m>, i.e. the displacement element at w = -(i k / 2) e^{i phi}.
// Satisfies <n|e^{-ik X_phi}|m> = e^{i(n-m) phi} <n|e^{-ik X_0}|m>.
Complex quad_char_element(int n, int m, double k, double phi);

// Real magnitude G in <n|e^{-ik X_0}|m> = (-i)^{n-m} G(n, m, k) for n >= m
// (pass indices in either order; G is symmetric). Hot path of the kernel
// quadrature.
double quad_char_axis_magnitude(int n, int m, double k);

// Quadrature-representation wavefunction <x|n>:
//   (2/pi)^{1/4} (2^n n!)^{-1/2} H_n(sqrt(2) x) e^{-x^2},
// evaluated by the normalized (overflow-free) Hermite recurrence.
double quad_wavefunction(int n, double x);

// All of <x|0..nmax> in one recurrence pass; out.size() must be nmax+1.
void quad_wavefunction_all(int nmax, double x, std::span<double> out);

}  // namespace twinbeam::fock

#endif
