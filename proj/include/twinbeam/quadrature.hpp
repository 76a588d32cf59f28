#ifndef TWINBEAM_QUADRATURE_HPP
#define TWINBEAM_QUADRATURE_HPP

#include <cstddef>
#include <vector>

namespace twinbeam::quad {

struct Rule {
    std::vector<double> x;
    std::vector<double> w;
    std::size_t size() const { return x.size(); }
};

// Gauss-Legendre nodes/weights on [-1, 1].
Rule gauss_legendre(int n);

// Gauss-Legendre rule mapped to [a, b].
Rule gauss_legendre(int n, double a, double b);

// [a, b] split into n_panels equal panels, nodes_per_panel Gauss-Legendre
// nodes in each.
Rule panel_rule(double a, double b, int n_panels, int nodes_per_panel);

// Gauss-Laguerre nodes/weights for integrals \int_0^inf e^{-u} f(u) du
// (weight function folded into w).
Rule gauss_laguerre(int n);

// Eigenvalues and first eigenvector components of a symmetric tridiagonal
// matrix (diag d, off-diagonal e with e[0] unused); used by Golub-Welsch.
void tridiag_eigen(std::vector<double>& d, std::vector<double>& e,
                   std::vector<double>& first_component);

}  // namespace twinbeam::quad

#endif
