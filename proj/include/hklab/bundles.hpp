#pragma once

/**
 * @file bundles.hpp
 * @brief Constant-curvature line bundles, subbundles of a trivial flat bundle
 *        and their curvature identities, triholomorphic sections.
 *
 * A subbundle E1 of the trivial bundle C^r over a box in R^d is given by an
 * orthonormal frame field e(x) (r x k). Finite-difference stencils are gauged
 * by unitary Procrustes alignment to the frame at the stencil centre.
 *
 * Conventions, with B_a = (1 - P) d_a e expressed in a frame f of E3 = E1^perp
 * and (B ^ C)_ab = B_a C_b - B_b C_a:
 *   Theta1 = B^H ^ B,   Theta3 = B ^ B^H.
 * A = B^{0,1}, A_a = (B_a + i B(L e_a)) / 2.
 */

#include "hklab/ambient.hpp"
#include "hklab/detail/linalg.hpp"
#include "hklab/errors.hpp"
#include "hklab/exterior.hpp"
#include "hklab/quaternion.hpp"
#include "hklab/wirtinger.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <ostream>
#include <vector>

namespace hklab {

using detail::CMatrix;
using CVector = Eigen::VectorXcd;

// ---------------------------------------------------------------------------
// Line bundles with constant curvature

struct ConstantCurvatureLineBundle {
    ConstantForm F;  // c1 representative
};

namespace detail {

inline void require_two_form(ConstantForm const& F) {
    if (F.degree() != 2) throw std::invalid_argument("curvature must be a 2-form");
}

} // namespace detail

inline bool is_hyperholomorphic(ConstantForm const& F, double tol = 1e-9) {
    detail::require_two_form(F);
    return is_su2_invariant(F, tol);
}

inline bool is_hyperholomorphic(ConstantCurvatureLineBundle const& b, double tol = 1e-9) { return is_hyperholomorphic(b.F, tol); }

/// |Lambda_L F|.
inline double yang_mills_defect(ConstantForm const& F, ImaginaryUnit const& L) {
    detail::require_two_form(F);
    return std::abs(lambda_op(F, L).coefficients()[0]);
}

struct DegreeSlope {
    double degree = 0;
    double slope = 0;
};

inline DegreeSlope degree_slope(ConstantForm const& F, ImaginaryUnit const& L, int rank, HKTorus const& torus) {
    detail::require_two_form(F);
    if (rank < 1) throw std::invalid_argument("rank must be positive");
    double const d = degree(F, L, torus);
    return {d, d / rank};
}

inline DegreeSlope degree_slope(ConstantForm const& F, ImaginaryUnit const& L, int rank = 1) {
    return degree_slope(F, L, rank, HKTorus(F.dim() / 4));
}

// ---------------------------------------------------------------------------
// Subbundle fields

struct SubbundleField {
    int rank = 2;      // r, ambient C^r
    int sub_rank = 1;  // k
    std::function<CMatrix(Vector const&)> frame;  // r x k, orthonormal columns
    Vector lo;
    Vector hi;
    int grid = 3;            // nodes per axis
    double h = 1e-3;         // finite-difference step
    double max_angle = 0.5;  // largest principal angle tolerated inside one stencil

    int base_dim() const { return static_cast<int>(lo.size()); }

    std::vector<Vector> nodes() const {
        ParametrizedPatch p;
        p.lo = lo;
        p.hi = hi;
        p.grid = grid;
        return p.nodes();
    }
};

/// Matrix-valued 1- or 2-form coefficients per node (2-forms indexed by pairs a < b).
struct CurvatureField {
    int degree = 1;
    int base_dim = 0;
    std::vector<Vector> nodes;
    std::vector<std::vector<CMatrix>> values;

    static std::size_t pair_index(int a, int b, int d) {
        return static_cast<std::size_t>(a * d - a * (a + 1) / 2 + (b - a - 1));
    }

    double norm_at(std::size_t node) const {
        double s = 0;
        for (auto const& m : values[node]) s += m.squaredNorm();
        return std::sqrt(s);
    }

    double max_norm() const {
        double out = 0;
        for (std::size_t i = 0; i < values.size(); ++i) out = std::max(out, norm_at(i));
        return out;
    }
};

namespace detail {

inline CMatrix complement_frame(CMatrix const& e) {
    Eigen::HouseholderQR<CMatrix> qr(e);
    CMatrix const Q = qr.householderQ();
    return Q.rightCols(e.rows() - e.cols());
}

/// Frames near a stencil centre, Procrustes-aligned to the centre frames.
class GaugedFrames {
public:
    GaugedFrames(SubbundleField const& S, Vector const& centre) : S_{S} {
        ec_ = S.frame(centre);
        if (ec_.rows() != S.rank || ec_.cols() != S.sub_rank) throw std::invalid_argument("frame has the wrong shape");
        if ((ec_.adjoint() * ec_ - CMatrix::Identity(S.sub_rank, S.sub_rank)).norm() > 1e-8)
            throw std::invalid_argument("frame columns are not orthonormal");
        fc_ = complement_frame(ec_);
    }

    CMatrix const& centre_sub() const { return ec_; }
    CMatrix const& centre_complement() const { return fc_; }

    CMatrix sub(Vector const& q) const { return align(S_.frame(q), ec_); }
    CMatrix complement(Vector const& q) const { return align(complement_frame(S_.frame(q)), fc_); }

private:
    CMatrix align(CMatrix const& e, CMatrix const& ref) const {
        CMatrix const overlap = e.adjoint() * ref;
        Eigen::JacobiSVD<CMatrix> svd(overlap);
        if (overlap.size() && svd.singularValues().minCoeff() < std::cos(S_.max_angle))
            throw FrameDiscontinuity("frames inside one stencil differ by a principal angle above the threshold");
        return e * polar_unitary(overlap);
    }

    SubbundleField const& S_;
    CMatrix ec_;
    CMatrix fc_;
};

template <typename F>
CMatrix central_difference(F&& frame, Vector const& q, int a, double h) {
    Vector e = Vector::Zero(q.size());
    e[a] = h;
    return (frame(q + e) - frame(q - e)) / (2 * h);
}

/// Connection matrices w_a = e^H d_a e at q for a gauged frame function.
template <typename F>
std::vector<CMatrix> connection(F&& frame, Vector const& q, int d, double h) {
    CMatrix const e = frame(q);
    std::vector<CMatrix> w;
    for (int a = 0; a < d; ++a) w.push_back(e.adjoint() * central_difference(frame, q, a, h));
    return w;
}

/// Theta_ab = d_a w_b - d_b w_a + [w_a, w_b] at the centre, by central differences.
template <typename F>
std::vector<CMatrix> curvature_at(F&& frame, Vector const& c, int d, double h) {
    std::vector<std::vector<CMatrix>> plus(static_cast<std::size_t>(d)), minus(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) {
        Vector e = Vector::Zero(d);
        e[a] = h;
        plus[static_cast<std::size_t>(a)] = connection(frame, c + e, d, h);
        minus[static_cast<std::size_t>(a)] = connection(frame, c - e, d, h);
    }
    auto const w = connection(frame, c, d, h);
    std::vector<CMatrix> out;
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b) {
            auto const ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
            CMatrix const dawb = (plus[ua][ub] - minus[ua][ub]) / (2 * h);
            CMatrix const dbwa = (plus[ub][ua] - minus[ub][ua]) / (2 * h);
            out.push_back(dawb - dbwa + w[ua] * w[ub] - w[ub] * w[ua]);
        }
    return out;
}

inline std::vector<CMatrix> wedge_matrices(std::vector<CMatrix> const& X, std::vector<CMatrix> const& Y) {
    std::vector<CMatrix> out;
    int const d = static_cast<int>(X.size());
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b) out.push_back(X[a] * Y[b] - X[b] * Y[a]);
    return out;
}

inline std::vector<CMatrix> adjoints(std::vector<CMatrix> const& X) {
    std::vector<CMatrix> out;
    for (auto const& m : X) out.push_back(m.adjoint());
    return out;
}

/// (0,1)-part of a matrix 1-form for the base complex structure L.
inline std::vector<CMatrix> zero_one_part(std::vector<CMatrix> const& B, Matrix const& L) {
    int const d = static_cast<int>(B.size());
    std::vector<CMatrix> A;
    for (int a = 0; a < d; ++a) {
        CMatrix along_L = CMatrix::Zero(B[0].rows(), B[0].cols());
        for (int b = 0; b < d; ++b) along_L += L(b, a) * B[static_cast<std::size_t>(b)];
        A.push_back(0.5 * (B[static_cast<std::size_t>(a)] + Complex(0, 1) * along_L));
    }
    return A;
}

/// Lambda of a matrix 2-form: sum_{a<b} w_L(e_a, e_b) Theta_ab.
inline CMatrix lambda_matrix(std::vector<CMatrix> const& theta, Matrix const& L) {
    int const d = static_cast<int>(L.rows());
    CMatrix out = CMatrix::Zero(theta[0].rows(), theta[0].cols());
    std::size_t idx = 0;
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b) out += L(b, a) * theta[idx++];
    return out;
}

inline double frob(std::vector<CMatrix> const& X) {
    double s = 0;
    for (auto const& m : X) s += m.squaredNorm();
    return std::sqrt(s);
}

inline Matrix base_structure(SubbundleField const& S, ImaginaryUnit const& L) {
    if (S.base_dim() % 4) throw std::invalid_argument("base of the subbundle is not H^n");
    return complex_structure_operator(L, S.base_dim() / 4);
}

} // namespace detail

/// Full second fundamental form B_a in Hom(E1, E3), coefficients in the centre frames.
inline std::vector<CMatrix> full_second_fundamental_form_at(SubbundleField const& S, Vector const& x, double h) {
    detail::GaugedFrames const g(S, x);
    auto frame = [&](Vector const& q) { return g.sub(q); };
    std::vector<CMatrix> B;
    for (int a = 0; a < S.base_dim(); ++a) B.push_back(g.centre_complement().adjoint() * detail::central_difference(frame, x, a, h));
    return B;
}

inline CurvatureField full_second_fundamental_form(SubbundleField const& S) {
    CurvatureField out{1, S.base_dim(), S.nodes(), {}};
    for (auto const& x : out.nodes) out.values.push_back(full_second_fundamental_form_at(S, x, S.h));
    return out;
}

/// A = (0,1)-part of the second fundamental form for the base structure L.
inline CurvatureField second_fundamental_form(SubbundleField const& S, Matrix const& L) {
    CurvatureField out{1, S.base_dim(), S.nodes(), {}};
    for (auto const& x : out.nodes) out.values.push_back(detail::zero_one_part(full_second_fundamental_form_at(S, x, S.h), L));
    return out;
}

inline CurvatureField second_fundamental_form(SubbundleField const& S, ImaginaryUnit const& L) {
    return second_fundamental_form(S, detail::base_structure(S, L));
}

struct InducedCurvature {
    CurvatureField theta1;  // on E1
    CurvatureField theta3;  // on E3 = E1^perp
};

inline InducedCurvature induced_curvature(SubbundleField const& S, double h) {
    int const d = S.base_dim();
    InducedCurvature out{{2, d, S.nodes(), {}}, {2, d, S.nodes(), {}}};
    for (auto const& x : out.theta1.nodes) {
        detail::GaugedFrames const g(S, x);
        out.theta1.values.push_back(detail::curvature_at([&](Vector const& q) { return g.sub(q); }, x, d, h));
        out.theta3.values.push_back(detail::curvature_at([&](Vector const& q) { return g.complement(q); }, x, d, h));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gauss-Codazzi identities

struct GaussCodazziRow {
    std::size_t node = 0;
    double r1 = 0;
    double r3 = 0;
    double norm_A = 0;
    double norm_B = 0;
    double lambda1 = 0;     // |Lambda Theta1|
    double lambda3 = 0;     // |Lambda Theta3|
    double positivity = 0;  // Re(i tr Lambda(A^H ^ A)), >= 0
};

struct GaussCodazziReport {
    double h = 0;
    std::vector<GaussCodazziRow> rows;
    double max_r1 = 0;
    double max_r3 = 0;
    double min_positivity = 0;

    void write_csv(std::ostream& os) const {
        os << "node,r1,r3,norm_A,norm_B,lambda1,lambda3,positivity\n";
        os.precision(12);
        for (auto const& r : rows)
            os << r.node << ',' << r.r1 << ',' << r.r3 << ',' << r.norm_A << ',' << r.norm_B << ',' << r.lambda1 << ','
               << r.lambda3 << ',' << r.positivity << '\n';
    }
};

inline GaussCodazziReport gauss_codazzi_check(SubbundleField const& S, Matrix const& L, double h) {
    GaussCodazziReport rep;
    rep.h = h;
    rep.min_positivity = std::numeric_limits<double>::infinity();
    auto const curv = induced_curvature(S, h);
    auto const& nodes = curv.theta1.nodes;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        auto const B = full_second_fundamental_form_at(S, nodes[i], h);
        auto const Bh = detail::adjoints(B);
        auto const A = detail::zero_one_part(B, L);
        auto const g1 = detail::wedge_matrices(Bh, B);
        auto const g3 = detail::wedge_matrices(B, Bh);
        GaussCodazziRow row;
        row.node = i;
        double s1 = 0, s3 = 0;
        for (std::size_t p = 0; p < g1.size(); ++p) {
            s1 += (curv.theta1.values[i][p] - g1[p]).squaredNorm();
            s3 += (curv.theta3.values[i][p] - g3[p]).squaredNorm();
        }
        row.r1 = std::sqrt(s1);
        row.r3 = std::sqrt(s3);
        row.norm_A = detail::frob(A);
        row.norm_B = detail::frob(B);
        row.lambda1 = detail::lambda_matrix(curv.theta1.values[i], L).norm();
        row.lambda3 = detail::lambda_matrix(curv.theta3.values[i], L).norm();
        row.positivity = (Complex(0, 1) * detail::lambda_matrix(detail::wedge_matrices(detail::adjoints(A), A), L).trace()).real();
        rep.max_r1 = std::max(rep.max_r1, row.r1);
        rep.max_r3 = std::max(rep.max_r3, row.r3);
        rep.min_positivity = std::min(rep.min_positivity, row.positivity);
        rep.rows.push_back(row);
    }
    return rep;
}

inline GaussCodazziReport gauss_codazzi_check(SubbundleField const& S, ImaginaryUnit const& L, double h) {
    return gauss_codazzi_check(S, detail::base_structure(S, L), h);
}

struct SplittingReport {
    double lambda1 = 0;  // max |Lambda Theta1|
    double lambda3 = 0;  // max |Lambda Theta3|
    double max_A = 0;
    double max_B = 0;
    bool splits = false;            // B vanishes: E2 = E1 + E3 holomorphically and metrically
    bool implication_holds = true;  // vanishing Lambda-defect => B vanishes
};

inline SplittingReport splitting_check(SubbundleField const& S, Matrix const& L, double tol) {
    auto const gc = gauss_codazzi_check(S, L, S.h);
    SplittingReport rep;
    for (auto const& r : gc.rows) {
        rep.lambda1 = std::max(rep.lambda1, r.lambda1);
        rep.lambda3 = std::max(rep.lambda3, r.lambda3);
        rep.max_A = std::max(rep.max_A, r.norm_A);
        rep.max_B = std::max(rep.max_B, r.norm_B);
    }
    rep.splits = rep.max_B <= tol;
    bool const lambda_vanishes = rep.lambda1 <= tol || rep.lambda3 <= tol;
    rep.implication_holds = !lambda_vanishes || rep.splits;
    return rep;
}

inline SplittingReport splitting_check(SubbundleField const& S, ImaginaryUnit const& L, double tol) {
    return splitting_check(S, detail::base_structure(S, L), tol);
}

// ---------------------------------------------------------------------------
// Triholomorphic sections of a flat trivial bundle over a subtorus

struct TriholomorphicReport {
    double dbar_I = 0;        // max |dbar_I nu|
    double dbar_minus_I = 0;  // max |dbar_{-I} nu|
    double d_nu = 0;          // max |d nu|
    bool parallel = false;
    bool implication_holds = true;
};

/// nu is sampled on X over the orthonormal parameter box [0,1]^d in the oriented frame of X.
inline TriholomorphicReport triholomorphic_section_parallel(std::function<CVector(Vector const&)> const& nu,
                                                            AffineSubtorus const& X, ImaginaryUnit const& I,
                                                            double tol = 1e-8, int grid = 3, double h = 1e-3) {
    if (!is_quaternionic_subspace(X.basis)) throw std::invalid_argument("triholomorphic sections live on quaternionic subtori");
    Matrix const Q = detail::oriented_orthonormal(X.basis);
    int const d = static_cast<int>(Q.cols());
    Matrix const Ls = Q.transpose() * complex_structure_operator(I, static_cast<int>(Q.rows() / 4)) * Q;
    auto f = [&](Vector const& s) { return CMatrix(nu(X.offset + Q * s)); };
    ParametrizedPatch box;
    box.lo = Vector::Zero(d);
    box.hi = Vector::Ones(d);
    box.grid = grid;
    TriholomorphicReport rep;
    for (Vector const& s : box.nodes()) {
        std::vector<CMatrix> D;
        for (int a = 0; a < d; ++a) {
            CMatrix const c1 = detail::central_difference(f, s, a, h), c2 = detail::central_difference(f, s, a, 2 * h);
            D.push_back((4.0 * c1 - c2) / 3.0);
        }
        std::vector<CMatrix> plus, minus;
        for (int a = 0; a < d; ++a) {
            CMatrix along = CMatrix::Zero(D[0].rows(), 1);
            for (int b = 0; b < d; ++b) along += Ls(b, a) * D[static_cast<std::size_t>(b)];
            plus.push_back(0.5 * (D[static_cast<std::size_t>(a)] + Complex(0, 1) * along));
            minus.push_back(0.5 * (D[static_cast<std::size_t>(a)] - Complex(0, 1) * along));
        }
        rep.dbar_I = std::max(rep.dbar_I, detail::frob(plus));
        rep.dbar_minus_I = std::max(rep.dbar_minus_I, detail::frob(minus));
        rep.d_nu = std::max(rep.d_nu, detail::frob(D));
    }
    bool const both = rep.dbar_I <= tol && rep.dbar_minus_I <= tol;
    rep.parallel = both && rep.d_nu <= tol;
    rep.implication_holds = !both || rep.d_nu <= tol;
    return rep;
}

} // namespace hklab
