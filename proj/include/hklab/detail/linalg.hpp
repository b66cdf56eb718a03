#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

namespace hklab::detail {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kRankTol = 1e-10;

/// Orthonormal basis of the column span of W (rank decided at tol * largest singular value).
inline Matrix orthonormal_basis(Matrix const& W, double tol = kRankTol) {
    if (W.cols() == 0) return Matrix(W.rows(), 0);
    Eigen::JacobiSVD<Matrix> svd(W, Eigen::ComputeFullU);
    auto const& s = svd.singularValues();
    double const smax = s.size() ? s[0] : 0.0;
    Eigen::Index r = 0;
    while (r < s.size() && s[r] > tol * std::max(1.0, smax)) ++r;
    return svd.matrixU().leftCols(r);
}

inline Eigen::Index numerical_rank(Matrix const& W, double tol = kRankTol) {
    return orthonormal_basis(W, tol).cols();
}

/// Orthonormal basis of the orthogonal complement of an orthonormal Q in R^rows.
inline Matrix orthogonal_complement(Matrix const& Q) {
    Eigen::Index const D = Q.rows(), d = Q.cols();
    if (d == 0) return Matrix::Identity(D, D);
    Eigen::JacobiSVD<Matrix> svd(Q, Eigen::ComputeFullU);
    return svd.matrixU().rightCols(D - d);
}

struct NullspaceResult {
    Matrix basis;     // orthonormal columns spanning the numerical kernel
    Vector singular;  // all singular values, descending
};

/// Right nullspace of A: singular vectors with singular value <= tol * max(1, smax).
inline NullspaceResult nullspace(Matrix const& A, double tol = kRankTol) {
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullV);
    Vector s = svd.singularValues();
    double const smax = s.size() ? s[0] : 0.0;
    Eigen::Index const cols = A.cols();
    Eigen::Index r = 0;
    while (r < s.size() && s[r] > tol * std::max(1.0, smax)) ++r;
    return {svd.matrixV().rightCols(cols - r), s};
}

/// Unitary polar factor of a square complex matrix.
inline CMatrix polar_unitary(CMatrix const& M) {
    Eigen::JacobiSVD<CMatrix> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

inline std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return r;
}

inline double factorial(int m) {
    double r = 1;
    for (int i = 2; i <= m; ++i) r *= i;
    return r;
}

/// Pfaffian of a real skew-symmetric matrix by skew Gaussian elimination.
inline double pfaffian(Matrix A) {
    Eigen::Index const n = A.rows();
    if (n % 2) return 0.0;
    double pf = 1.0;
    for (Eigen::Index k = 0; k + 1 < n; k += 2) {
        Eigen::Index piv = k + 1;
        for (Eigen::Index i = k + 2; i < n; ++i)
            if (std::abs(A(k, i)) > std::abs(A(k, piv))) piv = i;
        if (A(k, piv) == 0.0) return 0.0;
        if (piv != k + 1) {
            A.row(k + 1).swap(A.row(piv));
            A.col(k + 1).swap(A.col(piv));
            pf = -pf;
        }
        double const akk1 = A(k, k + 1);
        pf *= akk1;
        for (Eigen::Index i = k + 2; i < n; ++i) {
            double const t = A(k, i) / akk1;
            A.row(i) -= t * A.row(k + 1);
            A.col(i) -= t * A.col(k + 1);
        }
    }
    return pf;
}

/// Gauss-Legendre nodes/weights on [-1, 1] (Golub-Welsch).
inline std::pair<Vector, Vector> gauss_legendre(int points) {
    Matrix T = Matrix::Zero(points, points);
    for (int i = 1; i < points; ++i) {
        double const b = i / std::sqrt(4.0 * i * i - 1.0);
        T(i, i - 1) = T(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(T);
    Vector w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
    return {es.eigenvalues(), w};
}

/// Fibonacci lattice of `count` well-spread points on the unit 2-sphere.
inline std::vector<Eigen::Vector3d> fibonacci_sphere(int count) {
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(count);
    double const golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        double const z = 1.0 - (2.0 * i + 1.0) / count;
        double const r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double const phi = golden * i;
        pts.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
    return pts;
}

} // namespace hklab::detail
