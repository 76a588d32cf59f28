#ifndef TWINBEAM_CHANNELS_HPP
#define TWINBEAM_CHANNELS_HPP

#include <complex>
#include <vector>

// Exact Fock-basis implementations of the two efficiency-dressing channels:
//   gaussian_dress: random displacement with isotropic Gaussian weight of
//     mean thermal photon number mbar = (1 - eta)/(2 eta) -- the state that
//     an eta < 1 measurement analyzed with eta = 1 kernels reconstructs;
//   loss_dress: beam-splitter loss of transmissivity eta -- the state
//     reconstructed when outcomes are rescaled by sqrt(eta) instead.
// These serve as oracles for the dressed reconstruction modes.

namespace twinbeam::channels {

using Complex = std::complex<double>;

struct FockDensityMatrix {
    int arity = 1;  // 1 or 2 modes
    int nmax = 0;
    // arity 1: (nmax+1)^2 row-major <n|rho|m>.
    // arity 2: (nmax+1)^4 with index ((n1 N + m1) N + n2) N + m2,
    //          N = nmax + 1, i.e. <n1, m1|R|n2, m2>.
    std::vector<Complex> elems;

    int dim() const { return nmax + 1; }
    Complex& at1(int n, int m) { return elems[static_cast<std::size_t>(n) * dim() + m]; }
    Complex at1(int n, int m) const { return elems[static_cast<std::size_t>(n) * dim() + m]; }
    std::size_t idx2(int n1, int m1, int n2, int m2) const {
        const std::size_t N = dim();
        return ((static_cast<std::size_t>(n1) * N + m1) * N + n2) * N + m2;
    }
    Complex& at2(int n1, int m1, int n2, int m2) { return elems[idx2(n1, m1, n2, m2)]; }
    Complex at2(int n1, int m1, int n2, int m2) const { return elems[idx2(n1, m1, n2, m2)]; }

    double trace() const;
    double hermiticity_defect() const;   // max |A - A^dag| entry
    double min_eigenvalue() const;       // smallest eigenvalue (Hermitian part)

    static FockDensityMatrix vacuum(int nmax);
    static FockDensityMatrix fock(int n, int nmax);
    static FockDensityMatrix thermal(double nbar, int nmax);
    // Truncated twin-beam state sum_{n,m} c_n c_m |n,n><m,m|.
    static FockDensityMatrix twin_beam(double tau, int nmax);
};

enum class DressChannel { Gaussian, Loss };

struct GaussianDressOptions {
    int radial_nodes = 96;  // Gauss-Laguerre order against e^{-|w|^2/mbar}
    int inflate = 16;       // internal truncation margin
};

// Gamma_eta(rho); single-mode input. The renormalization factor applied to
// restore unit trace after truncation is written to *renorm if given
// (should be 1 within ~1e-6 when nmax covers the state).
FockDensityMatrix gaussian_dress(const FockDensityMatrix& rho, double eta,
                                 double* renorm = nullptr,
                                 const GaussianDressOptions& opts = {});

// Lambda_eta(rho): Kraus series of the loss channel, truncated when a
// term's Frobenius norm drops below 1e-14.
FockDensityMatrix loss_dress(const FockDensityMatrix& rho, double eta);

// Apply the chosen channel once per mode of a two-mode state.
FockDensityMatrix apply_per_mode(const FockDensityMatrix& two_mode, DressChannel ch,
                                 double eta);

// Diagonal transfer probabilities T(n, k) = <n|C(|k><k|)|n> for n <= n_out,
// k <= k_in, row-major (n_out+1) x (k_in+1). Lets oracles for number
// statistics reach photon numbers far beyond a practical full-matrix nmax.
std::vector<double> gaussian_diag_transfer(double eta, int n_out, int k_in,
                                           int radial_nodes = 128);
std::vector<double> loss_diag_transfer(double eta, int n_out, int k_in);

// Joint photon-number probabilities p(n, m) of the per-mode dressed
// twin-beam state, summing the diagonal transfer over the photon ladder
// until the geometric tail is below tail_bound.
std::vector<double> dressed_twin_beam_pnm(double tau, double eta, DressChannel ch,
                                          int nmax, double tail_bound = 1e-10);

}  // namespace twinbeam::channels

#endif
