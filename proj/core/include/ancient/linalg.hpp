#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace ancient {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Lower-triangular factor of a positive semi-definite matrix.
///
/// Pivots whose value falls below `rank_tol * G(i,i)` (the residual energy of
/// row i relative to its own energy) are treated as exact zeros: the pivot is clamped to 0 and the column below it is zeroed.
/// `pivots(i)` is L(i,i)^2, the Schur-complement energy of row i against the
/// previous rows.
struct SemidefiniteCholesky {
    Matrix lower;
    Vector pivots;
    std::vector<bool> deficient;
    std::size_t rank = 0;
};

SemidefiniteCholesky semidefinite_cholesky(const Matrix& g, double rank_tol = 1e-10);

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues are returned in descending order with matching columns.
struct SymmetricEigen {
    Vector values;
    Matrix vectors;
    int sweeps = 0;
};

SymmetricEigen jacobi_eigen(const Matrix& a, double tol = 1e-15, int max_sweeps = 100);

/// Moore-Penrose pseudo-inverse of a symmetric positive semi-definite matrix;
/// eigenvalues below `rtol * max eigenvalue` are dropped.
Matrix pseudo_inverse_psd(const Matrix& a, double rtol = 1e-10);

/// Solves L x = b for lower-triangular L (all diagonal entries nonzero).
Vector forward_substitute(const Matrix& lower, const Vector& b);
/// Solves L^T x = b for lower-triangular L.
Vector backward_substitute_transposed(const Matrix& lower, const Vector& b);

double max_abs(const Matrix& m);
double max_off_diagonal(const Matrix& m);
double symmetry_defect(const Matrix& m);

/// Flips signs so the first component of each column exceeding
/// `tol * max|column|` is positive.
void normalize_column_signs(Matrix& v, double tol = 1e-12);

} // namespace ancient
