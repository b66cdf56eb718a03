#pragma once

/**
 * @file ambient.hpp
 * @brief Flat hyperkaehler tori H^n / Lattice, the round sphere, affine
 *        subtori and parametrized patches.
 */

#include "hklab/detail/linalg.hpp"
#include "hklab/errors.hpp"
#include "hklab/quaternion.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace hklab {

/// H^n modulo a full-rank lattice (columns of `lattice`), standard flat metric.
class HKTorus {
public:
    explicit HKTorus(int n) : HKTorus(n, Matrix::Identity(4 * n, 4 * n)) {}
    HKTorus(int n, Matrix lattice) : n_{n}, lattice_{std::move(lattice)} {
        if (n < 1) throw std::invalid_argument("quaternionic dimension must be >= 1");
        if (lattice_.rows() != 4 * n || lattice_.cols() != 4 * n)
            throw std::invalid_argument("lattice basis must be 4n x 4n");
        Eigen::FullPivLU<Matrix> lu(lattice_);
        if (!lu.isInvertible()) throw std::invalid_argument("lattice basis is singular");
        inverse_ = lu.inverse();
        qr_ = Eigen::HouseholderQR<Matrix>(lattice_).matrixQR().triangularView<Eigen::Upper>();
    }

    int n() const { return n_; }
    int dim() const { return 4 * n_; }
    Matrix const& lattice() const { return lattice_; }
    Matrix const& lattice_inverse() const { return inverse_; }
    double volume() const { return std::abs(lattice_.determinant()); }

    /// Exact flat distance: closest lattice vector to y - x (Schnorr-Euchner enumeration).
    double distance(Vector const& x, Vector const& y) const {
        Vector c = inverse_ * (y - x);
        c -= c.array().round().matrix();  // fundamental cell, keeps enumeration centred
        Eigen::Index const D = c.size();
        // Babai estimate as the initial radius
        double best = (lattice_ * c).squaredNorm();
        Vector k = Vector::Zero(D);
        search(c, k, D - 1, 0.0, best);
        return std::sqrt(best);
    }

    /// True when the orthogonal map A sends the lattice onto itself.
    bool preserves_lattice(Matrix const& A, double tol = 1e-9) const {
        if ((A.transpose() * A - Matrix::Identity(dim(), dim())).norm() > tol) return false;
        Matrix const C = inverse_ * A * lattice_;
        if ((C - C.array().round().matrix()).norm() > tol) return false;
        return std::abs(std::abs(C.array().round().matrix().determinant()) - 1.0) < 0.5;
    }

private:
    void search(Vector const& c, Vector& k, Eigen::Index level, double partial, double& best) const {
        if (level < 0) {
            best = std::min(best, partial);
            return;
        }
        double const rii = qr_(level, level);
        double shift = 0.0;
        for (Eigen::Index j = level + 1; j < c.size(); ++j) shift += qr_(level, j) * (c[j] - k[j]);
        double const centre = c[level] + shift / rii;
        double const start = std::round(centre);
        // zig-zag around the centre; stop once both directions exceed the radius
        for (int step = 0;; ++step) {
            bool any = false;
            for (int side : {1, -1}) {
                if (step == 0 && side == -1) continue;
                double const cand = start + side * step;
                double const d = rii * (centre - cand);
                double const p = partial + d * d;
                if (p >= best) continue;
                any = true;
                k[level] = cand;
                search(c, k, level - 1, p, best);
            }
            double const lo = rii * (std::abs(centre - start) - step);
            if (!any && step > 0 && lo * lo + partial >= best) break;
            if (step > 64) break;
        }
        k[level] = 0;
    }

    int n_;
    Matrix lattice_;
    Matrix inverse_;
    Matrix qr_;
};

/// Sphere of dimension m and the given radius, embedded in R^{m+1}.
struct RoundSphere {
    int m = 2;
    double radius = 1.0;

    int embedding_dim() const { return m + 1; }

    double distance(Vector const& x, Vector const& y) const {
        Vector const a = x.normalized(), b = y.normalized();
        double const chord = (a - b).norm();
        return radius * 2.0 * std::asin(std::min(1.0, chord / 2.0));
    }
};

inline double geodesic_distance(HKTorus const& t, Vector const& x, Vector const& y) { return t.distance(x, y); }
inline double geodesic_distance(RoundSphere const& s, Vector const& x, Vector const& y) { return s.distance(x, y); }

// ---------------------------------------------------------------------------
// Affine subtori

/// offset + span(basis) in H^n; columns of `basis` span the tangent space.
struct AffineSubtorus {
    std::string name;
    Matrix basis;
    Vector offset;

    Eigen::Index dim() const { return basis.cols(); }
    Eigen::Index ambient_dim() const { return basis.rows(); }
};

struct SublatticeInfo {
    Eigen::MatrixXi generators;  // d x D integer rows (lattice coordinates) spanning span(W) rationally
    long long saturation_index = 1;
    double covolume = 0;
};

namespace detail {

/// p/q approximation with q <= max_den, if within tol.
inline std::optional<std::pair<long long, long long>> as_rational(double x, long long max_den, double tol) {
    long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double r = x;
    for (int it = 0; it < 64; ++it) {
        double const a = std::floor(r);
        long long const ai = static_cast<long long>(a);
        long long const h2 = ai * h1 + h0, k2 = ai * k1 + k0;
        if (k2 > max_den) break;
        h0 = h1, h1 = h2, k0 = k1, k1 = k2;
        if (std::abs(x - static_cast<double>(h1) / static_cast<double>(k1)) <= tol) return std::pair{h1, k1};
        double const frac = r - a;
        if (frac < 1e-15) break;
        r = 1.0 / frac;
    }
    if (k1 != 0 && std::abs(x - static_cast<double>(h1) / static_cast<double>(k1)) <= tol) return std::pair{h1, k1};
    return std::nullopt;
}

/// Reduced row echelon form with partial pivoting.
inline Matrix rref(Matrix A, double tol = 1e-10) {
    Eigen::Index row = 0;
    for (Eigen::Index col = 0; col < A.cols() && row < A.rows(); ++col) {
        Eigen::Index piv;
        double const best = A.col(col).segment(row, A.rows() - row).cwiseAbs().maxCoeff(&piv);
        if (best <= tol) continue;
        piv += row;
        A.row(row).swap(A.row(piv));
        A.row(row) /= A(row, col);
        for (Eigen::Index r = 0; r < A.rows(); ++r)
            if (r != row) A.row(r) -= A(r, col) * A.row(row);
        ++row;
    }
    return A.topRows(row);
}

inline long long integer_determinant(Eigen::MatrixXi const& M) {
    return std::llround(M.cast<double>().determinant());
}

} // namespace detail

/// Integer generators of span(W) in lattice coordinates, and covolume of Lattice cap span(W).
/// Throws IrrationalSubspace when the span is not spanned by lattice vectors.
inline SublatticeInfo sublattice(HKTorus const& torus, Matrix const& W, long long max_den = 1000) {
    if (W.rows() != torus.dim()) throw std::invalid_argument("subspace basis has wrong ambient dimension");
    Eigen::Index const d = W.cols();
    Eigen::Index const D = W.rows();
    SublatticeInfo info;
    if (d == 0) {
        info.generators.resize(0, D);
        info.covolume = 1.0;
        return info;
    }
    if (detail::numerical_rank(W) != d) throw std::invalid_argument("subspace basis is rank deficient");
    Matrix const C = torus.lattice_inverse() * W;  // lattice coordinates
    Matrix R = detail::rref(C.transpose());
    if (R.rows() != d) throw std::invalid_argument("subspace basis is rank deficient");
    info.generators.resize(d, D);
    for (Eigen::Index r = 0; r < d; ++r) {
        std::vector<std::pair<long long, long long>> q(static_cast<std::size_t>(D));
        long long lcm = 1;
        for (Eigen::Index c = 0; c < D; ++c) {
            auto frac = detail::as_rational(R(r, c), max_den, 1e-9);
            if (!frac) throw IrrationalSubspace("subspace is not spanned by lattice vectors");
            q[static_cast<std::size_t>(c)] = *frac;
            lcm = std::lcm(lcm, frac->second);
        }
        for (Eigen::Index c = 0; c < D; ++c) {
            auto [num, den] = q[static_cast<std::size_t>(c)];
            info.generators(r, c) = static_cast<int>(num * (lcm / den));
        }
    }
    // index of the generated lattice inside its saturation = gcd of maximal minors
    long long g = 0;
    std::vector<int> cols(static_cast<std::size_t>(d));
    std::iota(cols.begin(), cols.end(), 0);
    for (;;) {
        Eigen::MatrixXi minor(d, d);
        for (Eigen::Index j = 0; j < d; ++j) minor.col(j) = info.generators.col(cols[static_cast<std::size_t>(j)]);
        g = std::gcd(g, std::llabs(detail::integer_determinant(minor)));
        // next combination
        Eigen::Index i = d - 1;
        while (i >= 0 && cols[static_cast<std::size_t>(i)] == D - d + i) --i;
        if (i < 0) break;
        ++cols[static_cast<std::size_t>(i)];
        for (Eigen::Index j = i + 1; j < d; ++j) cols[static_cast<std::size_t>(j)] = cols[static_cast<std::size_t>(j - 1)] + 1;
    }
    info.saturation_index = std::max(1LL, g);
    Matrix const V = torus.lattice() * info.generators.cast<double>().transpose();
    info.covolume = std::sqrt((V.transpose() * V).determinant()) / static_cast<double>(info.saturation_index);
    return info;
}

inline double riemannian_volume(HKTorus const& torus, AffineSubtorus const& X) {
    return sublattice(torus, X.basis).covolume;
}

struct TangentSplitting {
    Matrix tangent;  // D x d orthonormal
    Matrix normal;   // D x (D - d) orthonormal
};

inline TangentSplitting tangent_splitting(Matrix const& W) {
    Matrix const Q = detail::orthonormal_basis(W);
    return {Q, detail::orthogonal_complement(Q)};
}

inline TangentSplitting tangent_splitting(AffineSubtorus const& X) { return tangent_splitting(X.basis); }

/// L W = W for L = i, j, k (rank test at 1e-10).
inline bool is_quaternionic_subspace(Matrix const& W, double tol = 1e-10) {
    if (W.rows() % 4) throw std::invalid_argument("subspace does not live in H^n");
    int const n = static_cast<int>(W.rows() / 4);
    Matrix const Q = detail::orthonormal_basis(W);
    Matrix const P = Matrix::Identity(W.rows(), W.rows()) - Q * Q.transpose();
    for (auto const& L : {ImaginaryUnit::I(), ImaginaryUnit::J(), ImaginaryUnit::K()})
        if ((P * complex_structure_operator(L, n) * Q).norm() > tol) return false;
    return true;
}

/// Exact set of induced structures L with L W = W, from the linear condition in (a, b, c).
struct ComplexAxes {
    int kernel_dim = 0;       // 0: none, 1: the pair {axis, -axis}, 3: every L
    Eigen::Vector3d axis{0, 0, 0};
};

inline ComplexAxes complex_axes(Matrix const& W, double tol = 1e-9) {
    int const n = static_cast<int>(W.rows() / 4);
    Matrix const Q = detail::orthonormal_basis(W);
    Matrix const P = Matrix::Identity(W.rows(), W.rows()) - Q * Q.transpose();
    Matrix M(W.rows() * Q.cols(), 3);
    int c = 0;
    for (auto const& L : {ImaginaryUnit::I(), ImaginaryUnit::J(), ImaginaryUnit::K()}) {
        Matrix const R = P * complex_structure_operator(L, n) * Q;
        M.col(c++) = Eigen::Map<Vector const>(R.data(), R.size());
    }
    auto const ns = detail::nullspace(M, tol);
    ComplexAxes out;
    out.kernel_dim = static_cast<int>(ns.basis.cols());
    if (out.kernel_dim == 1) {
        out.axis = ns.basis.col(0).normalized();
        // canonical sign: first nonzero component positive
        for (int k = 0; k < 3; ++k)
            if (std::abs(out.axis[k]) > 1e-12) {
                if (out.axis[k] < 0) out.axis = -out.axis;
                break;
            }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parametrized patches and the completely-geodesic test

struct ParametrizedPatch {
    Vector lo;
    Vector hi;
    std::function<Vector(Vector const&)> eval;
    std::function<Matrix(Vector const&)> jacobian_fn;  // optional analytic jacobian
    double h = 2e-3;                                   // finite-difference step
    int grid = 5;                                      // nodes per parameter axis
    std::optional<RoundSphere> sphere;                 // nullopt: flat ambient

    int dim() const { return static_cast<int>(lo.size()); }

    Matrix jacobian(Vector const& x) const {
        if (jacobian_fn) return jacobian_fn(x);
        Vector const f0 = eval(x);
        Matrix J(f0.size(), dim());
        for (int a = 0; a < dim(); ++a) {
            auto central = [&](double s) {
                Vector e = Vector::Zero(dim());
                e[a] = s;
                return Vector((eval(x + e) - eval(x - e)) / (2 * s));
            };
            J.col(a) = (4.0 * central(h) - central(2 * h)) / 3.0;  // Richardson
        }
        return J;
    }

    /// d^2 eval / dx_a dx_b by central differences with Richardson extrapolation.
    Vector hessian(Vector const& x, int a, int b) const {
        auto mixed = [&](double s) {
            Vector ea = Vector::Zero(dim()), eb = Vector::Zero(dim());
            ea[a] = s;
            eb[b] = s;
            if (a == b) return Vector((eval(x + ea) - 2.0 * eval(x) + eval(x - ea)) / (s * s));
            return Vector((eval(x + ea + eb) - eval(x + ea - eb) - eval(x - ea + eb) + eval(x - ea - eb)) / (4 * s * s));
        };
        return (4.0 * mixed(h) - mixed(2 * h)) / 3.0;
    }

    std::vector<Vector> nodes() const {
        std::vector<Vector> out;
        int const d = dim();
        std::vector<int> idx(static_cast<std::size_t>(d), 0);
        for (;;) {
            Vector x(d);
            for (int a = 0; a < d; ++a) {
                double const t = grid > 1 ? static_cast<double>(idx[static_cast<std::size_t>(a)]) / (grid - 1) : 0.5;
                x[a] = lo[a] + t * (hi[a] - lo[a]);
            }
            out.push_back(x);
            int a = 0;
            while (a < d && ++idx[static_cast<std::size_t>(a)] == grid) idx[static_cast<std::size_t>(a++)] = 0;
            if (a == d) break;
        }
        return out;
    }
};

inline ParametrizedPatch as_patch(AffineSubtorus const& X) {
    ParametrizedPatch p;
    p.lo = Vector::Zero(X.dim());
    p.hi = Vector::Ones(X.dim());
    p.eval = [W = X.basis, o = X.offset](Vector const& x) { return Vector(o + W * x); };
    p.jacobian_fn = [W = X.basis](Vector const&) { return W; };
    return p;
}

/// Circle of the given latitude on the sphere (latitude 0 is a great circle).
inline ParametrizedPatch latitude_circle(RoundSphere const& s, double latitude) {
    ParametrizedPatch p;
    p.lo = Vector::Constant(1, 0.0);
    p.hi = Vector::Constant(1, 2 * M_PI);
    p.sphere = s;
    p.eval = [s, latitude](Vector const& t) {
        Vector x(3);
        x << std::cos(latitude) * std::cos(t[0]), std::cos(latitude) * std::sin(t[0]), std::sin(latitude);
        return Vector(s.radius * x);
    };
    return p;
}

/// Max norm of the second fundamental form over the grid, in orthonormal tangent frames.
inline double second_fundamental_form_max(ParametrizedPatch const& P) {
    if (P.grid < 3) throw std::invalid_argument("completely-geodesic test needs >= 3 grid nodes per axis");
    int const d = P.dim();
    double worst = 0.0;
    for (Vector const& x : P.nodes()) {
        Matrix const J = P.jacobian(x);
        Eigen::JacobiSVD<Matrix> svd(J);
        auto const& s = svd.singularValues();
        if (s.size() < d || s[d - 1] <= 1e-8 * std::max(1.0, s[0])) throw RankDeficient("patch jacobian is rank deficient");
        Matrix span = J;
        if (P.sphere) {
            span.conservativeResize(J.rows(), d + 1);
            span.col(d) = P.eval(x);
        }
        Matrix const Q = detail::orthonormal_basis(span);
        Matrix const PN = Matrix::Identity(J.rows(), J.rows()) - Q * Q.transpose();
        // orthonormal tangent frame u = J Rinv
        Eigen::HouseholderQR<Matrix> qr(J);
        Matrix const R = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
        Matrix const Rinv = R.inverse();
        std::vector<Vector> H(static_cast<std::size_t>(d * d));
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) H[static_cast<std::size_t>(a * d + b)] = H[static_cast<std::size_t>(b * d + a)] = PN * P.hessian(x, a, b);
        double norm2 = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                Vector v = Vector::Zero(J.rows());
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b) v += Rinv(a, i) * Rinv(b, j) * H[static_cast<std::size_t>(a * d + b)];
                norm2 += v.squaredNorm();
            }
        worst = std::max(worst, std::sqrt(norm2));
    }
    return worst;
}

inline bool is_completely_geodesic(ParametrizedPatch const& P, double tol = 1e-6) {
    return second_fundamental_form_max(P) <= tol;
}

} // namespace hklab
