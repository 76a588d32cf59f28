#include "twinbeam/channels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "twinbeam/fockmath.hpp"
#include "twinbeam/linalg.hpp"
#include "twinbeam/quadrature.hpp"

namespace twinbeam::channels {

namespace {

void check_eta(double eta) {
    if (!(eta > 0.0 && eta <= 1.0))
        throw std::domain_error("dress channel: eta must be in (0, 1]");
}

double mbar_of(double eta) { return (1.0 - eta) / (2.0 * eta); }

}  // namespace

double FockDensityMatrix::trace() const {
    const int N = dim();
    double t = 0.0;
    if (arity == 1) {
        for (int n = 0; n < N; ++n) t += at1(n, n).real();
    } else {
        for (int n = 0; n < N; ++n)
            for (int m = 0; m < N; ++m) t += at2(n, m, n, m).real();
    }
    return t;
}

double FockDensityMatrix::hermiticity_defect() const {
    const int N = dim();
    double worst = 0.0;
    if (arity == 1) {
        for (int n = 0; n < N; ++n)
            for (int m = 0; m < N; ++m)
                worst = std::max(worst, std::abs(at1(n, m) - std::conj(at1(m, n))));
    } else {
        for (int n1 = 0; n1 < N; ++n1)
            for (int m1 = 0; m1 < N; ++m1)
                for (int n2 = 0; n2 < N; ++n2)
                    for (int m2 = 0; m2 < N; ++m2)
                        worst = std::max(worst,
                                         std::abs(at2(n1, m1, n2, m2) -
                                                  std::conj(at2(n2, m2, n1, m1))));
    }
    return worst;
}

double FockDensityMatrix::min_eigenvalue() const {
    const int N = dim();
    if (arity == 1) return linalg::min_eigenvalue(elems, N);
    // Two-mode: rows/columns are the composite index (n, m).
    const int D = N * N;
    std::vector<Complex> flat(static_cast<std::size_t>(D) * D);
    for (int n1 = 0; n1 < N; ++n1)
        for (int m1 = 0; m1 < N; ++m1)
            for (int n2 = 0; n2 < N; ++n2)
                for (int m2 = 0; m2 < N; ++m2)
                    flat[static_cast<std::size_t>(n1 * N + m1) * D + (n2 * N + m2)] =
                        at2(n1, m1, n2, m2);
    return linalg::min_eigenvalue(flat, D);
}

FockDensityMatrix FockDensityMatrix::vacuum(int nmax) { return fock(0, nmax); }

FockDensityMatrix FockDensityMatrix::fock(int n, int nmax) {
    FockDensityMatrix rho;
    rho.arity = 1;
    rho.nmax = nmax;
    rho.elems.assign(static_cast<std::size_t>(nmax + 1) * (nmax + 1), 0.0);
    rho.at1(n, n) = 1.0;
    return rho;
}

FockDensityMatrix FockDensityMatrix::thermal(double nbar, int nmax) {
    FockDensityMatrix rho;
    rho.arity = 1;
    rho.nmax = nmax;
    rho.elems.assign(static_cast<std::size_t>(nmax + 1) * (nmax + 1), 0.0);
    const double q = nbar / (nbar + 1.0);
    double p = 1.0 / (nbar + 1.0);
    for (int n = 0; n <= nmax; ++n) {
        rho.at1(n, n) = p;
        p *= q;
    }
    return rho;
}

FockDensityMatrix FockDensityMatrix::twin_beam(double tau, int nmax) {
    FockDensityMatrix rho;
    rho.arity = 2;
    rho.nmax = nmax;
    const std::size_t N = nmax + 1;
    rho.elems.assign(N * N * N * N, 0.0);
    for (int n = 0; n <= nmax; ++n)
        for (int m = 0; m <= nmax; ++m)
            rho.at2(n, n, m, m) = (1.0 - tau * tau) * std::pow(tau, n + m);
    return rho;
}

namespace {

// Gamma_eta as a linear map on Fock matrices at the inflated truncation Ni.
// Writing w = s e^{i theta}, the uniform angular average of
// D(w)_{ik} conj(D(w)_{jl}) is a trigonometric polynomial whose mean picks
// out i - k = j - l exactly, leaving the radial Gauss-Laguerre sum
//   S(i, j, k) = int_0^inf du e^{-u} D_{ik}(s) D_{jl}(s),  s = sqrt(mbar u),
// with l = k - (i - j).
struct GaussianTransferOp {
    int Ni = 0;
    std::vector<double> s;  // [(i*Ni + j)*Ni + k]

    void apply(const std::vector<Complex>& in, std::vector<Complex>& out) const {
        out.assign(static_cast<std::size_t>(Ni) * Ni, 0.0);
        for (int i = 0; i < Ni; ++i) {
            for (int j = 0; j < Ni; ++j) {
                const int shift = i - j;
                const double* row = &s[(static_cast<std::size_t>(i) * Ni + j) * Ni];
                Complex acc = 0.0;
                const int k0 = std::max(0, shift);
                const int k1 = std::min(Ni - 1, Ni - 1 + shift);
                for (int k = k0; k <= k1; ++k)
                    acc += row[k] * in[static_cast<std::size_t>(k) * Ni + (k - shift)];
                out[static_cast<std::size_t>(i) * Ni + j] = acc;
            }
        }
    }
};

GaussianTransferOp build_gaussian_transfer(double eta, int Ni, int radial_nodes) {
    GaussianTransferOp op;
    op.Ni = Ni;
    op.s.assign(static_cast<std::size_t>(Ni) * Ni * Ni, 0.0);
    const double mbar = mbar_of(eta);
    const quad::Rule radial = quad::gauss_laguerre(radial_nodes);
    std::vector<double> disp(static_cast<std::size_t>(Ni) * Ni);
    for (int q = 0; q < static_cast<int>(radial.size()); ++q) {
        const double sq = std::sqrt(mbar * radial.x[q]);
        for (int n = 0; n < Ni; ++n)
            for (int m = 0; m < Ni; ++m)
                disp[static_cast<std::size_t>(n) * Ni + m] =
                    fock::displacement_matrix_element(n, m, Complex(sq, 0.0)).real();
        for (int i = 0; i < Ni; ++i) {
            for (int j = 0; j < Ni; ++j) {
                const int shift = i - j;
                double* row = &op.s[(static_cast<std::size_t>(i) * Ni + j) * Ni];
                const int k0 = std::max(0, shift);
                const int k1 = std::min(Ni - 1, Ni - 1 + shift);
                for (int k = k0; k <= k1; ++k)
                    row[k] += radial.w[q] * disp[static_cast<std::size_t>(i) * Ni + k] *
                              disp[static_cast<std::size_t>(j) * Ni + (k - shift)];
            }
        }
    }
    return op;
}

// renormalize restores the cropped trace; it must stay off when the input
// is a general (possibly traceless) slice of a larger matrix.
FockDensityMatrix gaussian_dress_with(const GaussianTransferOp& op,
                                      const FockDensityMatrix& rho, double* renorm,
                                      bool renormalize) {
    const int nmax = rho.nmax;
    const int Ni = op.Ni;
    std::vector<Complex> in(static_cast<std::size_t>(Ni) * Ni, 0.0);
    for (int n = 0; n <= nmax; ++n)
        for (int m = 0; m <= nmax; ++m)
            in[static_cast<std::size_t>(n) * Ni + m] = rho.at1(n, m);
    std::vector<Complex> dressed;
    op.apply(in, dressed);

    FockDensityMatrix out;
    out.arity = 1;
    out.nmax = nmax;
    out.elems.assign(static_cast<std::size_t>(nmax + 1) * (nmax + 1), 0.0);
    for (int n = 0; n <= nmax; ++n)
        for (int m = 0; m <= nmax; ++m)
            out.at1(n, m) = dressed[static_cast<std::size_t>(n) * Ni + m];
    if (renormalize) {
        // Symmetrize the quadrature round-off, then restore the trace.
        for (int n = 0; n <= nmax; ++n)
            for (int m = n; m <= nmax; ++m) {
                const Complex sym = 0.5 * (out.at1(n, m) + std::conj(out.at1(m, n)));
                out.at1(n, m) = sym;
                out.at1(m, n) = std::conj(sym);
            }
        const double tr_in = rho.trace();
        const double tr_out = out.trace();
        const double factor = tr_out != 0.0 ? tr_in / tr_out : 1.0;
        if (renorm) *renorm = factor;
        for (auto& v : out.elems) v *= factor;
    } else if (renorm) {
        *renorm = 1.0;
    }
    return out;
}

}  // namespace

FockDensityMatrix gaussian_dress(const FockDensityMatrix& rho, double eta,
                                 double* renorm, const GaussianDressOptions& opts) {
    check_eta(eta);
    if (rho.arity != 1)
        throw std::invalid_argument("gaussian_dress: single-mode input expected");
    if (eta == 1.0) {
        if (renorm) *renorm = 1.0;
        return rho;
    }
    const GaussianTransferOp op =
        build_gaussian_transfer(eta, rho.nmax + opts.inflate + 1, opts.radial_nodes);
    return gaussian_dress_with(op, rho, renorm, /*renormalize=*/true);
}

FockDensityMatrix loss_dress(const FockDensityMatrix& rho, double eta) {
    check_eta(eta);
    if (rho.arity != 1)
        throw std::invalid_argument("loss_dress: single-mode input expected");
    const int nmax = rho.nmax;
    const int N = nmax + 1;
    FockDensityMatrix out;
    out.arity = 1;
    out.nmax = nmax;
    out.elems.assign(static_cast<std::size_t>(N) * N, 0.0);
    if (eta == 1.0) {
        out.elems = rho.elems;
        return out;
    }
    // Kraus term t: sqrt((1-eta)^t / t!) eta^{n/2} a^t applied on both sides:
    //   out_{nm} += (1-eta)^t / t! eta^{(n+m)/2}
    //              sqrt((n+t)!/n!) sqrt((m+t)!/m!) rho_{n+t, m+t}.
    using fock::log_factorial;
    const double log_1me = std::log(1.0 - eta);
    const double log_eta = std::log(eta);
    for (int t = 0; t <= nmax; ++t) {
        double frob2 = 0.0;
        for (int n = 0; n + t <= nmax; ++n) {
            for (int m = 0; m + t <= nmax; ++m) {
                const double log_coef =
                    t * log_1me - log_factorial(t) + 0.5 * (n + m) * log_eta +
                    0.5 * (log_factorial(n + t) - log_factorial(n)) +
                    0.5 * (log_factorial(m + t) - log_factorial(m));
                const Complex term = std::exp(log_coef) * rho.at1(n + t, m + t);
                out.at1(n, m) += term;
                frob2 += std::norm(term);
            }
        }
        if (t > 0 && std::sqrt(frob2) < 1e-14) break;
    }
    return out;
}

FockDensityMatrix apply_per_mode(const FockDensityMatrix& two_mode, DressChannel ch,
                                 double eta) {
    check_eta(eta);
    if (two_mode.arity != 2)
        throw std::invalid_argument("apply_per_mode: two-mode input expected");
    const int nmax = two_mode.nmax;
    const int N = nmax + 1;

    GaussianTransferOp op;
    if (ch == DressChannel::Gaussian && eta < 1.0)
        op = build_gaussian_transfer(eta, nmax + GaussianDressOptions{}.inflate + 1,
                                     GaussianDressOptions{}.radial_nodes);
    auto apply_single = [&](const FockDensityMatrix& rho) {
        if (ch == DressChannel::Loss) return loss_dress(rho, eta);
        if (eta == 1.0) return rho;
        return gaussian_dress_with(op, rho, nullptr, /*renormalize=*/false);
    };

    // Mode 1: transform the (n1, n2) indices for every fixed (m1, m2).
    FockDensityMatrix mid = two_mode;
    for (int m1 = 0; m1 < N; ++m1) {
        for (int m2 = 0; m2 < N; ++m2) {
            FockDensityMatrix slice;
            slice.arity = 1;
            slice.nmax = nmax;
            slice.elems.resize(static_cast<std::size_t>(N) * N);
            for (int n1 = 0; n1 < N; ++n1)
                for (int n2 = 0; n2 < N; ++n2)
                    slice.at1(n1, n2) = two_mode.at2(n1, m1, n2, m2);
            const FockDensityMatrix dressed = apply_single(slice);
            for (int n1 = 0; n1 < N; ++n1)
                for (int n2 = 0; n2 < N; ++n2)
                    mid.at2(n1, m1, n2, m2) = dressed.at1(n1, n2);
        }
    }
    // Mode 2: transform the (m1, m2) indices.
    FockDensityMatrix out = mid;
    for (int n1 = 0; n1 < N; ++n1) {
        for (int n2 = 0; n2 < N; ++n2) {
            FockDensityMatrix slice;
            slice.arity = 1;
            slice.nmax = nmax;
            slice.elems.resize(static_cast<std::size_t>(N) * N);
            for (int m1 = 0; m1 < N; ++m1)
                for (int m2 = 0; m2 < N; ++m2)
                    slice.at1(m1, m2) = mid.at2(n1, m1, n2, m2);
            const FockDensityMatrix dressed = apply_single(slice);
            for (int m1 = 0; m1 < N; ++m1)
                for (int m2 = 0; m2 < N; ++m2)
                    out.at2(n1, m1, n2, m2) = dressed.at1(m1, m2);
        }
    }
    return out;
}

std::vector<double> gaussian_diag_transfer(double eta, int n_out, int k_in,
                                           int radial_nodes) {
    check_eta(eta);
    std::vector<double> transfer(static_cast<std::size_t>(n_out + 1) * (k_in + 1), 0.0);
    if (eta == 1.0) {
        for (int n = 0; n <= std::min(n_out, k_in); ++n)
            transfer[static_cast<std::size_t>(n) * (k_in + 1) + n] = 1.0;
        return transfer;
    }
    const double mbar = mbar_of(eta);
    const quad::Rule radial = quad::gauss_laguerre(radial_nodes);
    // <n|Gamma(|k><k|)|n> = int_0^inf du e^{-u} |<n|D(sqrt(mbar u))|k>|^2;
    // the angular average is trivial for diagonal elements.
    for (int q = 0; q < static_cast<int>(radial.size()); ++q) {
        const double s = std::sqrt(mbar * radial.x[q]);
        for (int n = 0; n <= n_out; ++n)
            for (int k = 0; k <= k_in; ++k) {
                const double d =
                    std::abs(fock::displacement_matrix_element(n, k, Complex(s, 0.0)));
                transfer[static_cast<std::size_t>(n) * (k_in + 1) + k] +=
                    radial.w[q] * d * d;
            }
    }
    return transfer;
}

std::vector<double> loss_diag_transfer(double eta, int n_out, int k_in) {
    check_eta(eta);
    using fock::log_factorial;
    std::vector<double> transfer(static_cast<std::size_t>(n_out + 1) * (k_in + 1), 0.0);
    for (int n = 0; n <= n_out; ++n)
        for (int k = n; k <= k_in; ++k) {
            // Binomial thinning C(k, n) eta^n (1-eta)^{k-n}.
            double log_p = log_factorial(k) - log_factorial(n) - log_factorial(k - n) +
                           n * std::log(eta);
            if (k > n) log_p += (k - n) * std::log1p(-eta);
            transfer[static_cast<std::size_t>(n) * (k_in + 1) + k] = std::exp(log_p);
        }
    return transfer;
}

std::vector<double> dressed_twin_beam_pnm(double tau, double eta, DressChannel ch,
                                          int nmax, double tail_bound) {
    const int k_in =
        tau > 0.0
            ? std::max(nmax, static_cast<int>(std::ceil(
                                 std::log(tail_bound) / (2.0 * std::log(tau)))))
            : nmax;
    const std::vector<double> transfer =
        ch == DressChannel::Gaussian ? gaussian_diag_transfer(eta, nmax, k_in)
                                     : loss_diag_transfer(eta, nmax, k_in);
    std::vector<double> pnm(static_cast<std::size_t>(nmax + 1) * (nmax + 1), 0.0);
    // The twin beam is diagonal-correlated, and both channels are phase
    // covariant, so p(n, m) = sum_k (1 - tau^2) tau^{2k} T(n, k) T(m, k).
    for (int k = 0; k <= k_in; ++k) {
        const double pk = (1.0 - tau * tau) * std::pow(tau, 2.0 * k);
        for (int n = 0; n <= nmax; ++n) {
            const double tn = transfer[static_cast<std::size_t>(n) * (k_in + 1) + k];
            if (tn == 0.0) continue;
            for (int m = 0; m <= nmax; ++m)
                pnm[static_cast<std::size_t>(n) * (nmax + 1) + m] +=
                    pk * tn * transfer[static_cast<std::size_t>(m) * (k_in + 1) + k];
        }
    }
    return pnm;
}

}  // namespace twinbeam::channels
