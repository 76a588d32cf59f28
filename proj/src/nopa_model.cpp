#include "twinbeam/nopa_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "twinbeam/fockmath.hpp"
#include "twinbeam/quadrature.hpp"

namespace twinbeam::nopa {

namespace {
constexpr double kPi = std::numbers::pi;

void check_params(const TwinBeamParams& p) {
    if (!(p.tau >= 0.0 && p.tau < 1.0))
        throw std::domain_error("TwinBeamParams: tau must be in [0, 1)");
    if (!(p.eta > 0.0 && p.eta <= 1.0))
        throw std::domain_error("TwinBeamParams: eta must be in (0, 1]");
}
}  // namespace

TwinBeamParams params_from_nbar(double nbar, double eta) {
    if (!(nbar >= 0.0))
        throw std::domain_error("params_from_nbar: nbar must be >= 0");
    TwinBeamParams p{std::sqrt(nbar / (nbar + 1.0)), eta};
    check_params(p);
    return p;
}

TwinBeamParams params_from_tau(double tau, double eta) {
    TwinBeamParams p{tau, eta};
    check_params(p);
    return p;
}

QuadPdfCoeffs quad_pdf_coeffs(const TwinBeamParams& p, double phi, double psi) {
    QuadPdfCoeffs co;
    co.kappa = std::polar(p.tau, -(phi + psi));
    const double k2 = std::norm(co.kappa);
    co.d2_plus = std::norm(1.0 + co.kappa) / (1.0 - k2);
    co.d2_minus = std::norm(1.0 - co.kappa) / (1.0 - k2);
    co.delta2_eta = p.delta2_eta();
    const double dp = co.d2_plus + 4.0 * co.delta2_eta;
    const double dm = co.d2_minus + 4.0 * co.delta2_eta;
    co.a2 = (co.d2_plus + co.d2_minus + 8.0 * co.delta2_eta) / (dp * dm);
    co.c = (co.d2_plus - co.d2_minus) / (co.d2_plus + co.d2_minus + 8.0 * co.delta2_eta);
    co.b2 = co.a2 * (1.0 - co.c * co.c);
    return co;
}

double joint_photon_pdf(const TwinBeamParams& p, int n, int m) {
    if (n < 0 || m < 0) throw std::domain_error("joint_photon_pdf: n, m must be >= 0");
    if (n != m) return 0.0;
    return (1.0 - p.tau * p.tau) * std::pow(p.tau, 2.0 * n);
}

double marginal_thermal_pdf(const TwinBeamParams& p, int n) {
    if (n < 0) throw std::domain_error("marginal_thermal_pdf: n must be >= 0");
    const double nb = p.nbar();
    if (nb == 0.0) return n == 0 ? 1.0 : 0.0;
    return std::exp(n * std::log(nb / (nb + 1.0))) / (nb + 1.0);
}

double diag45_photon_pdf(const TwinBeamParams& p, int n, int m) {
    if (n < 0 || m < 0) throw std::domain_error("diag45_photon_pdf: n, m must be >= 0");
    if (n % 2 == 1 || m % 2 == 1) return 0.0;
    const int k = n / 2, l = m / 2;
    const double nb = p.nbar();
    // (2k-1)!! (2l-1)!! / (2^{k+l} k! l!) in log space.
    using fock::log_factorial;
    // (2k-1)!! = (2k)! / (2^k k!)
    const double log_dfact_k = log_factorial(2 * k) - k * std::log(2.0) - log_factorial(k);
    const double log_dfact_l = log_factorial(2 * l) - l * std::log(2.0) - log_factorial(l);
    const double log_coef = log_dfact_k + log_dfact_l - (k + l) * std::log(2.0) -
                            log_factorial(k) - log_factorial(l);
    return std::exp(log_coef + (k + l) * std::log(nb / (nb + 1.0))) / (nb + 1.0);
}

// For an even total n the only contribution is the pair state with n/2
// photons per mode, so s(n) = p(n/2, n/2) = (1 - tau^2) tau^n.
double total_photon_pdf_theory(const TwinBeamParams& p, int n) {
    if (n < 0) throw std::domain_error("total_photon_pdf_theory: n must be >= 0");
    if (n % 2 == 1) return 0.0;
    if (p.tau == 0.0) return n == 0 ? 1.0 : 0.0;
    return (1.0 - p.tau * p.tau) * std::pow(p.tau, static_cast<double>(n));
}

double correlation_theory(const TwinBeamParams& p, int N, int n) {
    if (N < 0) throw std::domain_error("correlation_theory: N must be >= 0");
    if (n != 0) return 0.0;
    return 1.0 - std::pow(p.tau, 2.0 * (N + 1));
}

double joint_quad_pdf(const TwinBeamParams& p, double x, double xp, double phi, double psi) {
    const QuadPdfCoeffs co = quad_pdf_coeffs(p, phi, psi);
    const double u = x - co.c * xp;
    return std::sqrt(co.a2 * co.b2) / kPi *
           std::exp(-co.a2 * u * u - co.b2 * xp * xp);
}

double joint_quad_pdf_sumdiff(const TwinBeamParams& p, double x, double xp,
                              double phi, double psi) {
    const QuadPdfCoeffs co = quad_pdf_coeffs(p, phi, psi);
    const double dp = co.d2_plus + 4.0 * co.delta2_eta;
    const double dm = co.d2_minus + 4.0 * co.delta2_eta;
    const double s = x + xp, d = x - xp;
    return 2.0 / (kPi * std::sqrt(dp * dm)) *
           std::exp(-s * s / dp - d * d / dm);
}

double single_quad_variance(const TwinBeamParams& p) {
    return 0.5 * (p.nbar() + 0.5) + p.delta2_eta();
}

double single_quad_pdf(const TwinBeamParams& p, double x) {
    const double var = single_quad_variance(p);
    return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * kPi * var);
}

namespace {

// Truncation index for the Fock series: first n with tau^{2n} < bound.
int series_terms(double tau, double bound) {
    if (tau <= 0.0) return 1;
    const int n = static_cast<int>(std::ceil(std::log(bound) / (2.0 * std::log(tau))));
    return std::max(n, 1) + 1;
}

// sum_n c_n e^{-in s} psi_n(x) psi_n(xp), c_n = sqrt(1-tau^2) tau^n.
Complex fock_series_amplitude(double tau, double sum_phase, double x, double xp,
                              int nterms) {
    std::vector<double> psix(nterms), psiy(nterms);
    fock::quad_wavefunction_all(nterms - 1, x, psix);
    fock::quad_wavefunction_all(nterms - 1, xp, psiy);
    const Complex step = std::polar(tau, -sum_phase);
    Complex coef = std::sqrt(1.0 - tau * tau);
    Complex acc = 0.0;
    for (int n = 0; n < nterms; ++n) {
        acc += coef * psix[n] * psiy[n];
        coef *= step;
    }
    return acc;
}

}  // namespace

std::vector<double> joint_quad_pdf_fock_series_grid(const TwinBeamParams& p,
                                                    std::span<const double> xs,
                                                    std::span<const double> xps,
                                                    double phi, double psi,
                                                    double tail_bound) {
    const int nterms = series_terms(p.tau, tail_bound);
    const double s = phi + psi;
    const std::size_t nx = xs.size(), ny = xps.size();
    std::vector<double> out(nx * ny);

    if (p.eta >= 1.0) {
        for (std::size_t i = 0; i < nx; ++i)
            for (std::size_t j = 0; j < ny; ++j)
                out[i * ny + j] =
                    std::norm(fock_series_amplitude(p.tau, s, xs[i], xps[j], nterms));
        return out;
    }

    // eta < 1: convolve the ideal series density with the efficiency
    // Gaussians. The series density is evaluated once on a shared uniform
    // grid (trapezoid sums converge spectrally for these entire functions),
    // then each output point is a separable Gaussian-weighted sum over the
    // window where the kernel is non-negligible.
    const double d2 = p.delta2_eta();
    const double sig = std::sqrt(d2);
    const double pad = 8.5 * sig;
    const QuadPdfCoeffs co = quad_pdf_coeffs(p, phi, psi);
    const double narrow = 1.0 / std::sqrt(2.0 * std::max(co.a2, co.b2));
    const double h = std::min(narrow, sig) / 3.0;

    auto make_axis = [&](std::span<const double> pts) {
        double lo = pts[0], hi = pts[0];
        for (double v : pts) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        lo -= pad;
        hi += pad;
        const int n = static_cast<int>(std::ceil((hi - lo) / h)) + 1;
        std::vector<double> axis(n);
        for (int i = 0; i < n; ++i) axis[i] = lo + i * h;
        return axis;
    };
    const std::vector<double> us = make_axis(xs);
    const std::vector<double> vs = make_axis(xps);
    const int nu = static_cast<int>(us.size());
    const int nv = static_cast<int>(vs.size());

    std::vector<double> psiu(static_cast<std::size_t>(nu) * nterms);
    std::vector<double> psiv(static_cast<std::size_t>(nv) * nterms);
    for (int i = 0; i < nu; ++i)
        fock::quad_wavefunction_all(nterms - 1, us[i],
                                    std::span(psiu).subspan(static_cast<std::size_t>(i) * nterms, nterms));
    for (int j = 0; j < nv; ++j)
        fock::quad_wavefunction_all(nterms - 1, vs[j],
                                    std::span(psiv).subspan(static_cast<std::size_t>(j) * nterms, nterms));

    // A_n = c_n e^{-i n s}; amp = Pu diag(A) Pv^T done as two real products.
    std::vector<double> a_re(nterms), a_im(nterms);
    {
        Complex coef = std::sqrt(1.0 - p.tau * p.tau);
        const Complex step = std::polar(p.tau, -s);
        for (int n = 0; n < nterms; ++n) {
            a_re[n] = coef.real();
            a_im[n] = coef.imag();
            coef *= step;
        }
    }
    std::vector<double> mv_re(static_cast<std::size_t>(nv) * nterms);
    std::vector<double> mv_im(static_cast<std::size_t>(nv) * nterms);
    for (int j = 0; j < nv; ++j)
        for (int n = 0; n < nterms; ++n) {
            const double pv = psiv[static_cast<std::size_t>(j) * nterms + n];
            mv_re[static_cast<std::size_t>(j) * nterms + n] = a_re[n] * pv;
            mv_im[static_cast<std::size_t>(j) * nterms + n] = a_im[n] * pv;
        }

    std::vector<double> dens(static_cast<std::size_t>(nu) * nv);
    for (int i = 0; i < nu; ++i) {
        const double* pu = &psiu[static_cast<std::size_t>(i) * nterms];
        for (int j = 0; j < nv; ++j) {
            const double* mr = &mv_re[static_cast<std::size_t>(j) * nterms];
            const double* mi = &mv_im[static_cast<std::size_t>(j) * nterms];
            double re = 0.0, im = 0.0;
            for (int n = 0; n < nterms; ++n) {
                re += pu[n] * mr[n];
                im += pu[n] * mi[n];
            }
            dens[static_cast<std::size_t>(i) * nv + j] = re * re + im * im;
        }
    }

    const double norm_g = h * h / (2.0 * kPi * d2);
    const int win = static_cast<int>(std::ceil(pad / h));
    std::vector<double> ti(nu);
    for (std::size_t jy = 0; jy < ny; ++jy) {
        const double yc = xps[jy];
        const int j0 = std::max(0, static_cast<int>((yc - pad - vs[0]) / h));
        const int j1 = std::min(nv - 1, j0 + 2 * win + 2);
        for (int i = 0; i < nu; ++i) {
            double acc = 0.0;
            const double* row = &dens[static_cast<std::size_t>(i) * nv];
            for (int j = j0; j <= j1; ++j) {
                const double dv = vs[j] - yc;
                acc += row[j] * std::exp(-dv * dv / (2.0 * d2));
            }
            ti[i] = acc;
        }
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const double xc = xs[ix];
            const int i0 = std::max(0, static_cast<int>((xc - pad - us[0]) / h));
            const int i1 = std::min(nu - 1, i0 + 2 * win + 2);
            double acc = 0.0;
            for (int i = i0; i <= i1; ++i) {
                const double du = us[i] - xc;
                acc += ti[i] * std::exp(-du * du / (2.0 * d2));
            }
            out[ix * ny + jy] = acc * norm_g;
        }
    }
    return out;
}

double joint_quad_pdf_fock_series(const TwinBeamParams& p, double x, double xp,
                                  double phi, double psi, double tail_bound) {
    const double xs[1] = {x}, xps[1] = {xp};
    return joint_quad_pdf_fock_series_grid(p, xs, xps, phi, psi, tail_bound)[0];
}

double gain(const TwinBeamParams& p, double sum_phase) {
    return p.mu2() * std::norm(1.0 + std::polar(p.tau, -sum_phase));
}

double weight_fn(const TwinBeamParams& p, double sum_phase) {
    return 1.0 / (2.0 * kPi * gain(p, sum_phase));
}

}  // namespace twinbeam::nopa
