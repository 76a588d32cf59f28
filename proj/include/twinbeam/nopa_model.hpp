#ifndef TWINBEAM_NOPA_MODEL_HPP
#define TWINBEAM_NOPA_MODEL_HPP

#include <complex>
#include <span>
#include <vector>

// Analytic physics of the twin-beam state produced by a nondegenerate
// optical parametric amplifier seeded with vacuum sidebands:
//   |Psi> = sqrt(1 - tau^2) sum_n tau^n |n, n>,  tau = tanh r.
// Photon statistics, joint/single quadrature densities, and the
// phase-dependent gain/weighting functions of the self-homodyne scheme.

namespace twinbeam::nopa {

using Complex = std::complex<double>;

struct TwinBeamParams {
    double tau = 0.0;  // tanh of the squeeze parameter, in [0, 1)
    double eta = 1.0;  // common photodetector quantum efficiency, in (0, 1]

    double nbar() const { return tau * tau / (1.0 - tau * tau); }
    double mu2() const { return 1.0 / (1.0 - tau * tau); }        // cosh^2 r
    double nu2() const { return tau * tau / (1.0 - tau * tau); }  // sinh^2 r
    // Gaussian smearing variance equivalent to efficiency eta.
    double delta2_eta() const { return (1.0 - eta) / (4.0 * eta); }
};

TwinBeamParams params_from_nbar(double nbar, double eta = 1.0);
TwinBeamParams params_from_tau(double tau, double eta = 1.0);

// Coefficients of the joint quadrature density in the factored form
//   p(x, x') = (a b / pi) exp[-a^2 (x - c x')^2 - b^2 x'^2],
// equivalent to the sum/difference form with widths d^2_{+-} + 4 Delta^2_eta.
struct QuadPdfCoeffs {
    Complex kappa;      // e^{-i(phi+psi)} tau
    double d2_plus;     // |1+kappa|^2 / (1-|kappa|^2)   (no eta smearing)
    double d2_minus;    // |1-kappa|^2 / (1-|kappa|^2)
    double delta2_eta;  // (1-eta)/(4 eta)
    double a2;
    double c;
    double b2;
};

QuadPdfCoeffs quad_pdf_coeffs(const TwinBeamParams& p, double phi, double psi);

// Photon statistics.
double joint_photon_pdf(const TwinBeamParams& p, int n, int m);     // delta_nm (1-tau^2) tau^2n
double marginal_thermal_pdf(const TwinBeamParams& p, int n);        // thermal with nbar
double diag45_photon_pdf(const TwinBeamParams& p, int n, int m);    // +-45 deg polarized modes
double total_photon_pdf_theory(const TwinBeamParams& p, int n);     // s(n)
double correlation_theory(const TwinBeamParams& p, int N, int n);   // d_N(n)

// Quadrature densities.
double joint_quad_pdf(const TwinBeamParams& p, double x, double xp, double phi, double psi);
// Same density from the sum/difference Gaussian form (cross-check route).
double joint_quad_pdf_sumdiff(const TwinBeamParams& p, double x, double xp, double phi, double psi);
double single_quad_pdf(const TwinBeamParams& p, double x);
double single_quad_variance(const TwinBeamParams& p);  // (nbar + 1/2)/2 + Delta^2_eta

// Independent Fock-series evaluation of the joint quadrature density:
// |sum_n c_n e^{-in(phi+psi)} psi_n(x) psi_n(x')|^2, truncated where
// tau^{2n} < tail_bound; for eta < 1 the series is convolved numerically
// with the efficiency Gaussians. Oracle-grade, not for the hot path.
double joint_quad_pdf_fock_series(const TwinBeamParams& p, double x, double xp,
                                  double phi, double psi, double tail_bound = 1e-18);

// Batched series evaluation on an (xs x xps) grid, row-major xs-first;
// shares the convolution grid across points, so use this for grid oracles.
std::vector<double> joint_quad_pdf_fock_series_grid(const TwinBeamParams& p,
                                                    std::span<const double> xs,
                                                    std::span<const double> xps,
                                                    double phi, double psi,
                                                    double tail_bound = 1e-18);

// Central-frequency gain of the self-homodyne scheme as a function of the
// physical input-phase sum; mean of 1/gain over a uniform sum is exactly 1.
double gain(const TwinBeamParams& p, double sum_phase);
// Density 1/(2 pi gain); integrates to 1 over one period.
double weight_fn(const TwinBeamParams& p, double sum_phase);

}  // namespace twinbeam::nopa

#endif
