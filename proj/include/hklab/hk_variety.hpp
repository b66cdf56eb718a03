#pragma once

/**
 * @file hk_variety.hpp
 * @brief Hyperkaehler structure data (metric form s_x and holomorphic
 *        symplectic forms Omega per triple) and the compatibility axiom
 *        r_x(a, b) = Re Omega(a, J b) = s_x(a, b).
 *
 * Forms are stored as matrices in a basis of the tangent space:
 * s(a, b) = a^T S b and Omega(a, b) = a^T W b. With w_L(v, w) = g(L v, w),
 * Omega = w_J + i w_K gives r = s on every quaternionic subspace.
 */

#include "hklab/ambient.hpp"
#include "hklab/detail/linalg.hpp"
#include "hklab/quaternion.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <functional>
#include <stdexcept>
#include <vector>

namespace hklab {

using CMatrix = Eigen::MatrixXcd;

struct HKStructureData {
    int dim = 0;
    std::function<Matrix(Vector const&)> metric;
    /// L acting on the tangent space at x, in the same basis as the forms.
    std::function<Matrix(ImaginaryUnit const&, Vector const&)> structure;
    std::function<CMatrix(StructureTriple const&, Vector const&)> holomorphic_form;
};

struct HKAxiomReport {
    std::vector<StructureTriple> triples;
    std::vector<double> defects;  // per triple, max over samples
    double max_defect = 0;
    bool passed = false;
};

namespace detail {

inline void require_positive_definite(Matrix const& S) {
    double const scale = std::max(1.0, S.norm());
    if ((S - S.transpose()).norm() > 1e-12 * scale) throw std::invalid_argument("metric form is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().size() == 0 || es.eigenvalues().minCoeff() <= 1e-14 * scale)
        throw std::invalid_argument("metric form is not positive definite");
}

inline void require_quaternionic_triple(StructureTriple const& T) {
    Quaternion const d = T.I.quaternion() * T.J.quaternion() - T.K.quaternion();
    if (d.norm() > 1e-10) throw std::invalid_argument("triple does not satisfy I J = K");
}

} // namespace detail

/// Restriction of the flat structure of H^n to a quaternionic subtorus, in an orthonormal tangent basis.
inline HKStructureData flat_hk_structure(AffineSubtorus const& X) {
    if (!is_quaternionic_subspace(X.basis)) throw std::invalid_argument("subtorus is not trianalytic");
    Matrix const Q = detail::orthonormal_basis(X.basis);
    int const n = X.ambient_dim() / 4;
    HKStructureData D;
    D.dim = static_cast<int>(Q.cols());
    D.metric = [d = D.dim](Vector const&) { return Matrix(Matrix::Identity(d, d)); };
    D.structure = [Q, n](ImaginaryUnit const& L, Vector const&) {
        return Matrix(Q.transpose() * complex_structure_operator(L, n) * Q);
    };
    D.holomorphic_form = [Q, n](StructureTriple const& T, Vector const&) {
        Matrix const wJ = Q.transpose() * complex_structure_operator(T.J, n).transpose() * Q;
        Matrix const wK = Q.transpose() * complex_structure_operator(T.K, n).transpose() * Q;
        CMatrix W(wJ.rows(), wJ.cols());
        W.real() = wJ;
        W.imag() = wK;
        return W;
    };
    return D;
}

inline HKStructureData flat_hk_structure(HKTorus const& torus) {
    return flat_hk_structure(AffineSubtorus{"torus", Matrix::Identity(torus.dim(), torus.dim()), Vector::Zero(torus.dim())});
}

/// max over samples and triples of |r_x - s_x| (Frobenius), r_x(a, b) = Re Omega(a, J b).
inline HKAxiomReport hk_axiom_check(HKStructureData const& D, std::vector<StructureTriple> const& triples,
                                    std::vector<Vector> const& samples, double tol = 1e-10) {
    if (samples.empty()) throw std::invalid_argument("no sample points");
    HKAxiomReport rep;
    rep.triples = triples;
    rep.defects.assign(triples.size(), 0.0);
    for (auto const& x : samples) {
        Matrix const S = D.metric(x);
        detail::require_positive_definite(S);
        for (std::size_t t = 0; t < triples.size(); ++t) {
            detail::require_quaternionic_triple(triples[t]);
            Matrix const r = D.holomorphic_form(triples[t], x).real() * D.structure(triples[t].J, x);
            rep.defects[t] = std::max(rep.defects[t], (r - S).norm());
        }
    }
    for (double d : rep.defects) rep.max_defect = std::max(rep.max_defect, d);
    rep.passed = rep.max_defect <= tol;
    return rep;
}

/// Trianalytic subtori have real dimension divisible by 4; false flags a violated precondition.
inline bool tangent_dim_mod4_check(AffineSubtorus const& X) { return detail::numerical_rank(X.basis) % 4 == 0; }

} // namespace hklab
