#include "ancient/linalg.hpp"
#include "ancient/error.hpp"
#include "ancient/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ancient {

const char* category_name(ErrorCategory c) noexcept {
    switch (c) {
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Precondition: return "precondition";
    case ErrorCategory::Numerical: return "numerical";
    case ErrorCategory::Invariant: return "invariant";
    case ErrorCategory::Io: return "io";
    }
    return "unknown";
}

double SeededRng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

SemidefiniteCholesky semidefinite_cholesky(const Matrix& g, double rank_tol) {
    const auto n = g.rows();
    require(g.cols() == n, "semidefinite_cholesky: matrix must be square");

    SemidefiniteCholesky out;
    out.lower = Matrix::Zero(n, n);
    out.pivots = Vector::Zero(n);
    out.deficient.assign(static_cast<std::size_t>(n), false);

    Matrix& l = out.lower;
    for (Eigen::Index j = 0; j < n; ++j) {
        double pivot = g(j, j);
        for (Eigen::Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
        if (!(pivot > rank_tol * g(j, j))) {
            out.deficient[static_cast<std::size_t>(j)] = true;
            continue;
        }
        const double ljj = std::sqrt(pivot);
        l(j, j) = ljj;
        out.pivots(j) = pivot;
        ++out.rank;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double s = g(i, j);
            for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return out;
}

SymmetricEigen jacobi_eigen(const Matrix& input, double tol, int max_sweeps) {
    const auto n = input.rows();
    require(input.cols() == n, "jacobi_eigen: matrix must be square");

    Matrix a = 0.5 * (input + input.transpose());
    Matrix v = Matrix::Identity(n, n);

    const double norm = std::max(a.norm(), std::numeric_limits<double>::min());
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(off) <= tol * norm) break;

        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (sweep == max_sweeps)
        fail(ErrorCategory::Numerical, "jacobi_eigen: no convergence after " + std::to_string(max_sweeps) + " sweeps");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });

    SymmetricEigen out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        out.values(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
        out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
    }
    out.sweeps = sweep;
    return out;
}

Matrix pseudo_inverse_psd(const Matrix& a, double rtol) {
    const auto n = a.rows();
    if (n == 0) return Matrix(0, 0);
    const SymmetricEigen eig = jacobi_eigen(a);
    const double top = std::max(eig.values(0), 0.0);
    Matrix out = Matrix::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double lam = eig.values(k);
        if (lam > rtol * top && lam > 0.0) out += (1.0 / lam) * eig.vectors.col(k) * eig.vectors.col(k).transpose();
    }
    return out;
}

Vector forward_substitute(const Matrix& lower, const Vector& b) {
    const auto n = lower.rows();
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = b(i);
        for (Eigen::Index k = 0; k < i; ++k) s -= lower(i, k) * x(k);
        x(i) = s / lower(i, i);
    }
    return x;
}

Vector backward_substitute_transposed(const Matrix& lower, const Vector& b) {
    const auto n = lower.rows();
    Vector x(n);
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        double s = b(i);
        for (Eigen::Index k = i + 1; k < n; ++k) s -= lower(k, i) * x(k);
        x(i) = s / lower(i, i);
    }
    return x;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double max_off_diagonal(const Matrix& m) {
    double out = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (i != j) out = std::max(out, std::abs(m(i, j)));
    return out;
}

double symmetry_defect(const Matrix& m) {
    const double scale = max_abs(m);
    if (scale == 0.0) return 0.0;
    return max_abs(m - m.transpose()) / scale;
}

void normalize_column_signs(Matrix& v, double tol) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        const double colmax = v.col(j).cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            if (std::abs(v(i, j)) > tol * colmax) {
                if (v(i, j) < 0.0) v.col(j) *= -1.0;
                break;
            }
        }
    }
}

} // namespace ancient
