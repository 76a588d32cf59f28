#include "twinbeam/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace twinbeam::linalg {

std::vector<double> hermitian_eigenvalues(std::vector<Complex> a, int n) {
    if (static_cast<std::size_t>(n) * n != a.size())
        throw std::invalid_argument("hermitian_eigenvalues: size mismatch");
    auto at = [&](int i, int j) -> Complex& { return a[static_cast<std::size_t>(i) * n + j]; };

    double scale = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(at(i, i).real()));
    for (const auto& v : a) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return std::vector<double>(n, 0.0);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += std::norm(at(p, q));
        if (std::sqrt(off) < 1e-14 * scale * n) break;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const Complex apq = at(p, q);
                const double g = std::abs(apq);
                if (g < 1e-300) continue;
                const double app = at(p, p).real();
                const double aqq = at(q, q).real();
                // Unitary 2x2 rotation: J_pp = c, J_pq = s e^{i alpha},
                // J_qp = -s e^{-i alpha}, J_qq = c with e^{i alpha} = apq/|apq|
                // and tan(2 theta) = 2|apq| / (aqq - app), which zeroes the
                // transformed (p, q) entry.
                const Complex phase = apq / g;
                const double theta = 0.5 * std::atan2(2.0 * g, aqq - app);
                const double c = std::cos(theta);
                const double s = std::sin(theta);
                for (int k = 0; k < n; ++k) {  // A <- A J
                    const Complex akp = at(k, p);
                    const Complex akq = at(k, q);
                    at(k, p) = c * akp - s * std::conj(phase) * akq;
                    at(k, q) = s * phase * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {  // A <- J^dag A
                    const Complex apk = at(p, k);
                    const Complex aqk = at(q, k);
                    at(p, k) = c * apk - s * phase * aqk;
                    at(q, k) = s * std::conj(phase) * apk + c * aqk;
                }
            }
        }
    }

    std::vector<double> evals(n);
    for (int i = 0; i < n; ++i) evals[i] = at(i, i).real();
    std::sort(evals.begin(), evals.end());
    return evals;
}

double min_eigenvalue(const std::vector<Complex>& a, int n) {
    return hermitian_eigenvalues(a, n).front();
}

}  // namespace twinbeam::linalg
