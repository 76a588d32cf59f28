#ifndef TWINBEAM_LINALG_HPP
#define TWINBEAM_LINALG_HPP

#include <complex>
#include <vector>

namespace twinbeam::linalg {

using Complex = std::complex<double>;

// Eigenvalues (ascending) of a dense Hermitian matrix, row-major n x n,
// by cyclic complex Jacobi rotations. Intended for the modest sizes used in
// oracle checks; no eigenvectors.
std::vector<double> hermitian_eigenvalues(std::vector<Complex> a, int n);

double min_eigenvalue(const std::vector<Complex>& a, int n);

}  // namespace twinbeam::linalg

#endif
