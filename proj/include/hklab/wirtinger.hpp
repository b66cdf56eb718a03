#pragma once

/**
 * @file wirtinger.hpp
 * @brief Calibration ratios, symplectic volumes, trianalyticity verdicts,
 *        degrees of constant classes and Poincare duals of subtori.
 *
 * Xi is normalized by m! : for a 2m-dimensional W with orthonormal basis Q,
 * Xi_L(W) = |(w_L|_W)^m (Q)| / m! = |Pf(Q^T L^T Q)|, which lies in [0, 1] and
 * equals 1 exactly on L-complex subspaces.
 */

#include "hklab/ambient.hpp"
#include "hklab/detail/linalg.hpp"
#include "hklab/errors.hpp"
#include "hklab/exterior.hpp"
#include "hklab/quaternion.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace hklab {

namespace detail {

/// Orthonormal basis of span(B) with the orientation of B's columns.
inline Matrix oriented_orthonormal(Matrix const& B) {
    if (numerical_rank(B) != B.cols()) throw RankDeficient("subspace basis is not linearly independent");
    Eigen::HouseholderQR<Matrix> qr(B);
    Matrix Q = qr.householderQ() * Matrix::Identity(B.rows(), B.cols());
    Matrix const R = qr.matrixQR().topRows(B.cols()).triangularView<Eigen::Upper>();
    for (Eigen::Index k = 0; k < B.cols(); ++k)
        if (R(k, k) < 0) Q.col(k) = -Q.col(k);
    return Q;
}

inline int quaternionic_rank(Eigen::Index rows) {
    if (rows % 4) throw std::invalid_argument("subspace does not live in H^n");
    return static_cast<int>(rows / 4);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Xi ratios

/// |Pf(Q^T L^T Q)| for an orthonormal basis Q of W: the m!-normalized Xi.
inline double xi_ratio(Matrix const& W, ImaginaryUnit const& L) {
    if (W.cols() % 2) throw std::invalid_argument("xi_ratio needs an even-dimensional subspace");
    Matrix const Q = detail::oriented_orthonormal(W);
    Matrix const Lop = complex_structure_operator(L, detail::quaternionic_rank(W.rows()));
    Matrix M = Q.transpose() * Lop.transpose() * Q;
    M = 0.5 * (M - M.transpose());
    return std::min(1.0, std::abs(detail::pfaffian(M)));
}

/// |(w_L|_W)^m / Vol_W| without the m! normalization.
inline double raw_xi_ratio(Matrix const& W, ImaginaryUnit const& L) {
    return detail::factorial(static_cast<int>(W.cols() / 2)) * xi_ratio(W, L);
}

// ---------------------------------------------------------------------------
// Volumes

inline double symplectic_volume(HKTorus const& torus, AffineSubtorus const& X, ImaginaryUnit const& L) {
    return xi_ratio(X.basis, L) * riemannian_volume(torus, X);
}

struct QuadratureEstimate {
    double value = 0;
    double error = 0;
};

namespace detail {

/// Tensor Gauss-Legendre integral of f over the box [lo, hi].
template <typename F>
double box_quadrature(Vector const& lo, Vector const& hi, int points, F&& f) {
    auto const [x, w] = gauss_legendre(points);
    int const d = static_cast<int>(lo.size());
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    double total = 0;
    for (;;) {
        Vector t(d);
        double weight = 1;
        for (int a = 0; a < d; ++a) {
            int const k = idx[static_cast<std::size_t>(a)];
            double const half = 0.5 * (hi[a] - lo[a]);
            t[a] = lo[a] + half * (x[k] + 1.0);
            weight *= half * w[k];
        }
        total += weight * f(t);
        int a = 0;
        while (a < d && ++idx[static_cast<std::size_t>(a)] == points) idx[static_cast<std::size_t>(a++)] = 0;
        if (a == d) break;
    }
    return total;
}

template <typename F>
QuadratureEstimate refined_quadrature(ParametrizedPatch const& P, int points, F&& f) {
    double const coarse = box_quadrature(P.lo, P.hi, points, f);
    double const fine = box_quadrature(P.lo, P.hi, 2 * points, f);
    if (!std::isfinite(coarse) || !std::isfinite(fine)) throw IntegratorFailure("quadrature diverged");
    return {fine, std::abs(fine - coarse)};
}

inline double patch_xi(Matrix const& J, ImaginaryUnit const& L) {
    Matrix const Lop = complex_structure_operator(L, quaternionic_rank(J.rows()));
    Matrix M = J.transpose() * Lop.transpose() * J;
    return std::abs(pfaffian(0.5 * (M - M.transpose())));
}

} // namespace detail

/// (1/m!) integral of |w_L^m| over a patch of a flat ambient.
inline QuadratureEstimate symplectic_volume(ParametrizedPatch const& P, ImaginaryUnit const& L, int points = 8) {
    if (P.dim() % 2) throw std::invalid_argument("symplectic volume needs an even-dimensional patch");
    return detail::refined_quadrature(P, points, [&](Vector const& t) { return detail::patch_xi(P.jacobian(t), L); });
}

inline QuadratureEstimate riemannian_volume(ParametrizedPatch const& P, int points = 8) {
    return detail::refined_quadrature(P, points, [&](Vector const& t) {
        Matrix const J = P.jacobian(t);
        return std::sqrt(std::max(0.0, (J.transpose() * J).determinant()));
    });
}

/// 1 - Xi over the patch grid nodes, maximized.
inline double max_pointwise_xi_defect(ParametrizedPatch const& P, ImaginaryUnit const& L) {
    double worst = 0;
    for (Vector const& t : P.nodes()) worst = std::max(worst, 1.0 - xi_ratio(P.jacobian(t), L));
    return worst;
}

// ---------------------------------------------------------------------------
// Complex analyticity and trianalyticity

inline constexpr double kAffineVerdictTol = 1e-8;

inline bool is_complex_analytic(HKTorus const& torus, AffineSubtorus const& X, ImaginaryUnit const& L,
                                double tol = kAffineVerdictTol) {
    double const riem = riemannian_volume(torus, X);
    return riem - symplectic_volume(torus, X, L) <= tol * riem;
}

/// tol <= 0 selects 10x the quadrature error estimate.
inline bool is_complex_analytic(ParametrizedPatch const& P, ImaginaryUnit const& L, double tol = 0, int points = 8) {
    auto const s = symplectic_volume(P, L, points);
    auto const r = riemannian_volume(P, points);
    double const t = tol > 0 ? tol * r.value : 10 * (s.error + r.error) + 1e-12 * r.value;
    return r.value - s.value <= t;
}

struct StructureResult {
    ImaginaryUnit L;
    double symplectic = 0;
    double riemannian = 0;
    double defect = 0;  // max pointwise 1 - Xi
    bool complex = false;
};

enum class VerdictKind { trianalytic, complex_only, not_complex };

inline std::string to_string(VerdictKind k) {
    switch (k) {
    case VerdictKind::trianalytic: return "trianalytic";
    case VerdictKind::complex_only: return "complex-only-for";
    case VerdictKind::not_complex: return "not-complex";
    }
    return "?";
}

struct TrianalyticVerdict {
    std::string name;
    int dim = 0;
    int ambient_dim = 0;
    std::vector<StructureResult> per_structure;
    VerdictKind verdict = VerdictKind::not_complex;
    std::vector<ImaginaryUnit> complex_for;  // populated for complex_only

    bool trianalytic() const { return verdict == VerdictKind::trianalytic; }
};

/// i, j, k followed by count - 3 Fibonacci points of the structure sphere.
inline std::vector<ImaginaryUnit> structure_samples(int count) {
    if (count < 3) throw std::invalid_argument("sphere_samples must be at least 3 (i, j, k are always sampled)");
    std::vector<ImaginaryUnit> out{ImaginaryUnit::I(), ImaginaryUnit::J(), ImaginaryUnit::K()};
    for (auto const& p : detail::fibonacci_sphere(count - 3)) out.push_back(ImaginaryUnit::from_direction(p[0], p[1], p[2]));
    return out;
}

namespace detail {

inline void finish_verdict(TrianalyticVerdict& v, std::size_t sampled) {
    bool all = true;
    for (std::size_t s = 0; s < sampled; ++s) all = all && v.per_structure[s].complex;
    if (all) {
        v.verdict = VerdictKind::trianalytic;
        return;
    }
    for (auto const& r : v.per_structure)
        if (r.complex) v.complex_for.push_back(r.L);
    v.verdict = v.complex_for.empty() ? VerdictKind::not_complex : VerdictKind::complex_only;
}

} // namespace detail

/// Volume verdict over sampled structures, cross-checked against the exact linear oracle.
inline TrianalyticVerdict is_trianalytic(HKTorus const& torus, AffineSubtorus const& X, double tol = kAffineVerdictTol,
                                         int sphere_samples = 32) {
    if (X.dim() % 2) throw std::invalid_argument("odd-dimensional subtorus");
    TrianalyticVerdict v;
    v.name = X.name;
    v.dim = static_cast<int>(X.dim());
    v.ambient_dim = static_cast<int>(X.ambient_dim());
    double const riem = riemannian_volume(torus, X);
    auto record = [&](ImaginaryUnit const& L) {
        double const xi = xi_ratio(X.basis, L);
        v.per_structure.push_back({L, xi * riem, riem, 1.0 - xi, 1.0 - xi <= tol});
    };
    auto const samples = structure_samples(sphere_samples);
    for (auto const& L : samples) record(L);
    auto const axes = complex_axes(X.basis);
    if (axes.kernel_dim == 1) {
        auto const L = ImaginaryUnit::from_direction(axes.axis[0], axes.axis[1], axes.axis[2]);
        for (auto const& A : {L, -L}) {
            bool const sampled = std::any_of(samples.begin(), samples.end(), [&](ImaginaryUnit const& S) {
                return (S.direction() - A.direction()).norm() < 1e-12;
            });
            if (!sampled) record(A);
        }
    }
    detail::finish_verdict(v, samples.size());

    bool const quaternionic = is_quaternionic_subspace(X.basis);
    if (v.trianalytic() != quaternionic)
        throw OracleDisagreement("volume verdict for '" + X.name + "' disagrees with the quaternionic-subspace oracle");
    for (auto const& r : v.per_structure) {
        Eigen::Vector3d const d = r.L.direction();
        bool const exact = axes.kernel_dim == 3 || (axes.kernel_dim == 1 && std::abs(std::abs(d.dot(axes.axis)) - 1.0) < 1e-9);
        if (exact && !r.complex)
            throw OracleDisagreement("'" + X.name + "' is exactly complex for a structure the volume test rejects");
        if (!exact && r.complex && axes.kernel_dim != 3) {
            // near-axis samples may pass a loose tolerance; a far one cannot
            double const angle = axes.kernel_dim == 1 ? std::acos(std::min(1.0, std::abs(d.dot(axes.axis)))) : M_PI;
            if (angle > 1e-3) throw OracleDisagreement("'" + X.name + "' passes the volume test for a non-complex structure");
        }
    }
    return v;
}

/// Patch verdict from quadrature; tol <= 0 selects 10x the quadrature error estimate.
inline TrianalyticVerdict is_trianalytic(ParametrizedPatch const& P, double tol = 0, int sphere_samples = 32,
                                         int points = 8, std::string name = "patch") {
    if (P.dim() % 2) throw std::invalid_argument("odd-dimensional patch");
    TrianalyticVerdict v;
    v.name = std::move(name);
    v.dim = P.dim();
    auto const r = riemannian_volume(P, points);
    v.ambient_dim = static_cast<int>(P.eval(P.lo).size());
    auto record = [&](ImaginaryUnit const& L) {
        auto const s = symplectic_volume(P, L, points);
        double const t = tol > 0 ? tol * r.value : 10 * (s.error + r.error) + 1e-12 * r.value;
        v.per_structure.push_back({L, s.value, r.value, max_pointwise_xi_defect(P, L), r.value - s.value <= t});
    };
    auto const samples = structure_samples(sphere_samples);
    for (auto const& L : samples) record(L);
    auto const axes = complex_axes(P.jacobian(0.5 * (P.lo + P.hi)));
    if (axes.kernel_dim == 1) {
        auto const L = ImaginaryUnit::from_direction(axes.axis[0], axes.axis[1], axes.axis[2]);
        for (auto const& A : {L, -L}) {
            bool const sampled = std::any_of(samples.begin(), samples.end(), [&](ImaginaryUnit const& S) {
                return (S.direction() - A.direction()).norm() < 1e-12;
            });
            if (!sampled) record(A);
        }
    }
    detail::finish_verdict(v, samples.size());
    return v;
}

// ---------------------------------------------------------------------------
// Degrees of constant classes

/// Top coefficient of w_L^(2n-p) ^ alpha times the torus volume, deg alpha = 2p.
inline double degree(ConstantForm const& alpha, ImaginaryUnit const& L, HKTorus const& torus) {
    if (alpha.degree() % 2) throw std::invalid_argument("degree needs an even form");
    if (alpha.dim() != torus.dim()) throw std::invalid_argument("form and torus dimensions differ");
    int const n = torus.n();
    int const p = alpha.degree() / 2;
    ConstantForm const top = p == 2 * n ? alpha : wedge(wedge_power(kahler_form(L, n), 2 * n - p), alpha);
    return top.top() * torus.volume();
}

inline double degree(ConstantForm const& alpha, ImaginaryUnit const& L) {
    return degree(alpha, L, HKTorus(alpha.dim() / 4));
}

struct DegreeInvarianceReport {
    std::vector<ImaginaryUnit> structures;
    std::vector<double> degrees;
    double spread = 0;
    bool invariant = false;            // is_su2_invariant(alpha)
    bool divisible_by_four = true;     // nonzero invariant degree forces deg alpha = 0 mod 4
    bool passed = false;
};

inline DegreeInvarianceReport degree_su2_invariance_check(ConstantForm const& alpha, int samples = 20, double tol = 1e-10) {
    DegreeInvarianceReport rep;
    HKTorus const torus(alpha.dim() / 4);
    rep.structures = structure_samples(samples);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, scale = 1;
    for (auto const& L : rep.structures) {
        double const d = degree(alpha, L, torus);
        rep.degrees.push_back(d);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
        scale = std::max(scale, std::abs(d));
    }
    rep.spread = hi - lo;
    rep.invariant = is_su2_invariant(alpha, 1e-9);
    if (rep.invariant && scale > 0 && std::max(std::abs(lo), std::abs(hi)) > tol) rep.divisible_by_four = alpha.degree() % 4 == 0;
    rep.passed = (!rep.invariant || rep.spread <= tol * scale) && rep.divisible_by_four;
    return rep;
}

// ---------------------------------------------------------------------------
// Poincare duals and isometric images

/// Constant (D - d)-form with integral over M of dual ^ beta equal to integral over X of beta.
inline ConstantForm dual_class(HKTorus const& torus, AffineSubtorus const& X) {
    int const D = torus.dim();
    if (X.ambient_dim() != D) throw std::invalid_argument("subtorus and torus dimensions differ");
    double const scale = riemannian_volume(torus, X) / torus.volume();
    Matrix const Q = detail::oriented_orthonormal(X.basis);
    Matrix N = detail::orthogonal_complement(Q);
    ConstantForm out = ConstantForm::scalar(D, scale);
    if (N.cols() == 0) return out;
    Matrix F(D, D);
    F << N, Q;
    if (F.determinant() < 0) N.col(0) = -N.col(0);
    for (Eigen::Index k = 0; k < N.cols(); ++k) {
        ConstantForm covector(D, 1);
        covector.coefficients() = N.col(k);
        out = wedge(out, covector);
    }
    return out;
}

struct AffineIsometry {
    Matrix linear;
    Vector translation;

    static AffineIsometry translation_by(Vector const& b) { return {Matrix::Identity(b.size(), b.size()), b}; }
};

/// Verdict for T(X); T must be orthogonal and lattice preserving.
inline TrianalyticVerdict isometry_image_check(HKTorus const& torus, AffineSubtorus const& X, AffineIsometry const& T,
                                               double tol = kAffineVerdictTol, int sphere_samples = 32) {
    Matrix const& A = T.linear;
    if (A.rows() != torus.dim() || A.cols() != torus.dim()) throw std::invalid_argument("isometry has the wrong size");
    if ((A.transpose() * A - Matrix::Identity(A.rows(), A.cols())).norm() > 1e-9)
        throw std::invalid_argument("linear part is not orthogonal");
    if (!torus.preserves_lattice(A)) throw std::invalid_argument("isometry does not preserve the lattice");
    AffineSubtorus const image{X.name + "'", A * X.basis, A * X.offset + T.translation};
    return is_trianalytic(torus, image, tol, sphere_samples);
}

} // namespace hklab
