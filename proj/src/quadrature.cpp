#include "twinbeam/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace twinbeam::quad {

Rule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    Rule rule;
    rule.x.resize(n);
    rule.w.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Tricomi-style initial guess, then Newton on P_n.
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        rule.x[i] = -z;
        rule.x[n - 1 - i] = z;
        rule.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.w[n - 1 - i] = rule.w[i];
    }
    return rule;
}

Rule gauss_legendre(int n, double a, double b) {
    Rule base = gauss_legendre(n);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        base.x[i] = mid + half * base.x[i];
        base.w[i] *= half;
    }
    return base;
}

Rule panel_rule(double a, double b, int n_panels, int nodes_per_panel) {
    if (n_panels < 1) throw std::invalid_argument("panel_rule: n_panels must be >= 1");
    Rule base = gauss_legendre(nodes_per_panel);
    Rule rule;
    rule.x.reserve(static_cast<std::size_t>(n_panels) * nodes_per_panel);
    rule.w.reserve(static_cast<std::size_t>(n_panels) * nodes_per_panel);
    const double h = (b - a) / n_panels;
    for (int p = 0; p < n_panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        for (int i = 0; i < nodes_per_panel; ++i) {
            rule.x.push_back(mid + 0.5 * h * base.x[i]);
            rule.w.push_back(0.5 * h * base.w[i]);
        }
    }
    return rule;
}

// Symmetric tridiagonal QL with implicit shifts, tracking only the first row
// of the accumulated rotations (all that Golub-Welsch needs).
void tridiag_eigen(std::vector<double>& d, std::vector<double>& e,
                   std::vector<double>& first_component) {
    const int n = static_cast<int>(d.size());
    first_component.assign(n, 0.0);
    if (n == 0) return;
    first_component[0] = 1.0;
    if (n == 1) return;

    for (int i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;

    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= 1e-300 + 2.3e-16 * dd) break;
            }
            if (m != l) {
                if (iter++ == 60)
                    throw std::runtime_error("tridiag_eigen: too many iterations");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                bool underflow = false;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    f = first_component[i + 1];
                    first_component[i + 1] = s * first_component[i] + c * f;
                    first_component[i] = c * first_component[i] - s * f;
                }
                if (underflow) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }

    // Sort ascending, permuting the tracked components along.
    for (int i = 0; i < n - 1; ++i) {
        int k = i;
        for (int j = i + 1; j < n; ++j)
            if (d[j] < d[k]) k = j;
        std::swap(d[i], d[k]);
        std::swap(first_component[i], first_component[k]);
    }
}

Rule gauss_laguerre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_laguerre: n must be >= 1");
    // Jacobi matrix of the Laguerre polynomials (alpha = 0):
    // a_k = 2k + 1, b_k = k.
    std::vector<double> d(n), e(n), v0;
    for (int k = 0; k < n; ++k) {
        d[k] = 2.0 * k + 1.0;
        e[k] = static_cast<double>(k);  // shifted down by tridiag_eigen
    }
    tridiag_eigen(d, e, v0);
    Rule rule;
    rule.x = std::move(d);
    rule.w.resize(n);
    for (int k = 0; k < n; ++k) rule.w[k] = v0[k] * v0[k];  // mu_0 = 1
    return rule;
}

}  // namespace twinbeam::quad
