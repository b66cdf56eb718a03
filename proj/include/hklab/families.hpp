#pragma once

/**
 * @file families.hpp
 * @brief Families of completely geodesic submanifolds moved by ambient
 *        motions, the natural connection on them, transport maps and their
 *        verification.
 *
 * A family is X_s = R(s) X_0 + c(s). The natural connection lifts a base
 * velocity s' at a fiber point p to the normal projection of the motion
 * generator, P_N(p) sum_i s'_i (dR_i R^{-1} (p - c) + dc_i).
 */

#include "hklab/ambient.hpp"
#include "hklab/detail/linalg.hpp"
#include "hklab/errors.hpp"
#include "hklab/quaternion.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace hklab {

/// R(s), c(s) and their partial derivatives in the base coordinates.
struct MotionJet {
    Matrix R;
    Vector c;
    std::vector<Matrix> dR;
    std::vector<Vector> dc;
};

/// The fiber at the basepoint: a parametrization plus point-wise tangent and distance queries.
struct FiberTemplate {
    ParametrizedPatch patch;
    std::function<Matrix(Vector const&)> tangent_at;  // point of X_0 -> tangent basis
    std::function<double(Vector const&)> distance;    // point -> distance to X_0
};

inline FiberTemplate affine_template(AffineSubtorus const& X) {
    FiberTemplate t;
    t.patch = as_patch(X);
    Matrix const Q = detail::orthonormal_basis(X.basis);
    t.tangent_at = [W = X.basis](Vector const&) { return W; };
    t.distance = [Q, o = X.offset](Vector const& q) {
        Vector const r = q - o;
        return (r - Q * (Q.transpose() * r)).norm();
    };
    return t;
}

/// The equator {z = 0} of a round 2-sphere.
inline FiberTemplate equator_template(RoundSphere const& S) {
    if (S.m != 2) throw std::invalid_argument("great-circle families live on S^2");
    FiberTemplate t;
    t.patch = latitude_circle(S, 0.0);
    t.tangent_at = [](Vector const& q) {
        Matrix T(3, 1);
        T << -q[1], q[0], 0;
        return T;
    };
    t.distance = [r = S.radius](Vector const& q) { return std::hypot(q[2], std::hypot(q[0], q[1]) - r); };
    return t;
}

struct DeformationFamily {
    std::string name;
    Vector base_lo;
    Vector base_hi;
    Vector s0;
    FiberTemplate fiber;
    std::function<MotionJet(Vector const&)> motion;
    std::optional<HKTorus> torus;
    std::optional<RoundSphere> sphere;
    std::optional<Vector> template_pole;  // sphere families: pole of X_0

    int base_dim() const { return static_cast<int>(s0.size()); }
    int ambient_dim() const { return static_cast<int>(fiber.patch.eval(fiber.patch.lo).size()); }

    Vector point(Vector const& s, Vector const& x) const {
        MotionJet const g = motion(s);
        return g.R * fiber.patch.eval(x) + g.c;
    }

    ParametrizedPatch fiber_at(Vector const& s) const {
        ParametrizedPatch p = fiber.patch;
        MotionJet const g = motion(s);
        p.eval = [e = fiber.patch.eval, R = g.R, c = g.c](Vector const& x) { return Vector(R * e(x) + c); };
        if (fiber.patch.jacobian_fn)
            p.jacobian_fn = [j = fiber.patch.jacobian_fn, R = g.R](Vector const& x) { return Matrix(R * j(x)); };
        p.sphere = sphere;
        return p;
    }

    /// Orthonormal basis of the normal space of X_s at p (inside T S^m on the sphere).
    Matrix normal_basis(MotionJet const& g, Vector const& p) const {
        Vector const q = g.R.fullPivLu().solve(p - g.c);
        Matrix span = g.R * fiber.tangent_at(q);
        if (sphere) {
            span.conservativeResize(span.rows(), span.cols() + 1);
            span.col(span.cols() - 1) = p;
        }
        return detail::orthogonal_complement(detail::orthonormal_basis(span));
    }

    double distance_to_fiber(Vector const& s, Vector const& p) const {
        MotionJet const g = motion(s);
        return fiber.distance(g.R.fullPivLu().solve(p - g.c));
    }

    /// The motion generator along base direction t, as an ambient vector field.
    Vector generator(MotionJet const& g, Vector const& t, Vector const& p) const {
        Vector v = Vector::Zero(p.size());
        Matrix const Rinv = g.R.inverse();
        for (int i = 0; i < base_dim(); ++i)
            if (t[i] != 0.0) v += t[i] * (g.dR[static_cast<std::size_t>(i)] * (Rinv * (p - g.c)) + g.dc[static_cast<std::size_t>(i)]);
        return v;
    }

    /// The natural connection: normal projection of the generator.
    Vector horizontal_lift(Vector const& s, Vector const& t, Vector const& p) const {
        MotionJet const g = motion(s);
        Matrix const N = normal_basis(g, p);
        return N * (N.transpose() * generator(g, t, p));
    }
};

// ---------------------------------------------------------------------------
// Family factories

namespace detail {

inline MotionJet identity_jet(int D, int k) {
    return {Matrix::Identity(D, D), Vector::Zero(D), std::vector<Matrix>(static_cast<std::size_t>(k), Matrix::Zero(D, D)),
            std::vector<Vector>(static_cast<std::size_t>(k), Vector::Zero(D))};
}

inline Eigen::Matrix3d rot_y(double t) {
    Eigen::Matrix3d R;
    R << std::cos(t), 0, std::sin(t), 0, 1, 0, -std::sin(t), 0, std::cos(t);
    return R;
}

inline Eigen::Matrix3d rot_z(double t) {
    Eigen::Matrix3d R;
    R << std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t), 0, 0, 0, 1;
    return R;
}

} // namespace detail

/// x + B (s - s0); the columns of B must be normal to X_0.
inline DeformationFamily translation_family(HKTorus const& torus, AffineSubtorus const& X0, Matrix const& B, Vector const& lo,
                                            Vector const& hi, Vector s0 = {}) {
    if (B.rows() != torus.dim() || B.cols() != lo.size()) throw std::invalid_argument("translation matrix has the wrong shape");
    Matrix const Q = detail::orthonormal_basis(X0.basis);
    if ((Q.transpose() * B).norm() > 1e-10 * std::max(1.0, B.norm()))
        throw std::invalid_argument("translation directions must be normal to the fiber");
    DeformationFamily F;
    F.name = "translation(" + X0.name + ")";
    F.base_lo = lo;
    F.base_hi = hi;
    F.s0 = s0.size() ? s0 : Vector(0.5 * (lo + hi));
    F.fiber = affine_template(X0);
    F.torus = torus;
    int const D = torus.dim(), k = static_cast<int>(lo.size());
    F.motion = [B, D, k, base = F.s0](Vector const& s) {
        MotionJet g = detail::identity_jet(D, k);
        g.c = B * (s - base);
        for (int i = 0; i < k; ++i) g.dc[static_cast<std::size_t>(i)] = B.col(i);
        return g;
    };
    return F;
}

/// Great circles with pole R_z(phi) R_y(theta) e_z, s = (theta, phi).
inline DeformationFamily great_circle_family(RoundSphere const& S, Vector const& lo, Vector const& hi, Vector s0 = {}) {
    if (lo.size() != 2) throw std::invalid_argument("great-circle families have a 2-dimensional base");
    DeformationFamily F;
    F.name = "great-circles";
    F.base_lo = lo;
    F.base_hi = hi;
    F.s0 = s0.size() ? s0 : Vector(0.5 * (lo + hi));
    F.fiber = equator_template(S);
    F.sphere = S;
    F.template_pole = Vector::Unit(3, 2);
    F.motion = [](Vector const& s) {
        Eigen::Matrix3d const Ry = detail::rot_y(s[0]), Rz = detail::rot_z(s[1]);
        Eigen::Matrix3d dRy, dRz;
        dRy << -std::sin(s[0]), 0, std::cos(s[0]), 0, 0, 0, -std::cos(s[0]), 0, -std::sin(s[0]);
        dRz << -std::sin(s[1]), -std::cos(s[1]), 0, std::cos(s[1]), -std::sin(s[1]), 0, 0, 0, 0;
        MotionJet g;
        g.R = Rz * Ry;
        g.c = Vector::Zero(3);
        g.dR = {Rz * dRy, dRz * Ry};
        g.dc = {Vector::Zero(3), Vector::Zero(3)};
        return g;
    };
    return F;
}

/// exp((s-s0)_1 A_1) ... exp((s-s0)_k A_k) applied to X_0.
inline DeformationFamily rotating_family(HKTorus const& torus, AffineSubtorus const& X0, std::vector<Matrix> const& generators,
                                         Vector const& lo, Vector const& hi, Vector s0 = {}) {
    if (generators.size() != static_cast<std::size_t>(lo.size())) throw std::invalid_argument("one generator per base direction");
    DeformationFamily F;
    F.name = "rotating(" + X0.name + ")";
    F.base_lo = lo;
    F.base_hi = hi;
    F.s0 = s0.size() ? s0 : Vector(0.5 * (lo + hi));
    F.fiber = affine_template(X0);
    F.torus = torus;
    int const D = torus.dim();
    F.motion = [generators, D, base = F.s0](Vector const& s) {
        auto const k = generators.size();
        std::vector<Matrix> E;
        for (std::size_t i = 0; i < k; ++i) E.push_back(Matrix((s[static_cast<Eigen::Index>(i)] - base[static_cast<Eigen::Index>(i)]) * generators[i]).exp());
        MotionJet g = detail::identity_jet(D, static_cast<int>(k));
        for (std::size_t i = 0; i < k; ++i) g.R = g.R * E[i];
        for (std::size_t i = 0; i < k; ++i) {
            Matrix left = Matrix::Identity(D, D), right = Matrix::Identity(D, D);
            for (std::size_t j = 0; j < i; ++j) left = left * E[j];
            for (std::size_t j = i; j < k; ++j) right = right * E[j];
            g.dR[i] = left * generators[i] * right;
        }
        return g;
    };
    return F;
}

/// (1 + s) (x - p0) + p0: a non-isometric control on the torus minus p0.
inline DeformationFamily radial_stretch_family(HKTorus const& torus, AffineSubtorus const& X0, Vector const& p0, double lo,
                                               double hi) {
    DeformationFamily F;
    F.name = "radial-stretch(" + X0.name + ")";
    F.base_lo = Vector::Constant(1, lo);
    F.base_hi = Vector::Constant(1, hi);
    F.s0 = Vector::Zero(1);
    F.fiber = affine_template(X0);
    F.torus = torus;
    int const D = torus.dim();
    F.motion = [p0, D](Vector const& s) {
        MotionJet g = detail::identity_jet(D, 1);
        g.R *= 1.0 + s[0];
        g.c = -s[0] * p0;
        g.dR[0] = Matrix::Identity(D, D);
        g.dc[0] = -p0;
        return g;
    };
    return F;
}

inline bool fibers_completely_geodesic(DeformationFamily const& F, int base_grid = 3, double tol = 1e-6) {
    ParametrizedPatch base;
    base.lo = F.base_lo;
    base.hi = F.base_hi;
    base.grid = base_grid;
    for (Vector const& s : base.nodes())
        if (!is_completely_geodesic(F.fiber_at(s), tol)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Normal sections

struct NormalSection {
    Vector s;
    ParametrizedPatch fiber;                      // X_s
    std::function<Vector(Vector const&)> field;   // fiber parameter -> normal vector
    std::vector<Vector> nodes;                    // fiber parameters
    std::vector<Vector> points;
    std::vector<Vector> values;

    void sample(int grid) {
        ParametrizedPatch g = fiber;
        g.grid = grid;
        nodes = g.nodes();
        points.clear();
        values.clear();
        for (auto const& x : nodes) {
            points.push_back(fiber.eval(x));
            values.push_back(field(x));
        }
    }

    double max_tangential_component() const {
        double worst = 0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            Matrix const Q = detail::orthonormal_basis(fiber.jacobian(nodes[i]));
            worst = std::max(worst, (Q.transpose() * values[i]).norm());
        }
        return worst;
    }
};

/// eta(x) = P_N d/de phi(s + e t, x), by Richardson-extrapolated central differences.
inline NormalSection normal_field(DeformationFamily const& F, Vector const& s, Vector const& t, int grid = 5, double h = 1e-3) {
    NormalSection eta;
    eta.s = s;
    eta.fiber = F.fiber_at(s);
    eta.field = [F, s, t, h](Vector const& x) {
        auto diff = [&](double e) { return Vector((F.point(s + e * t, x) - F.point(s - e * t, x)) / (2 * e)); };
        Vector const d = (4.0 * diff(h) - diff(2 * h)) / 3.0;
        MotionJet const g = F.motion(s);
        Matrix const J = g.R * F.fiber.patch.jacobian(x);
        Eigen::JacobiSVD<Matrix> svd(J);
        if (svd.singularValues().minCoeff() <= 1e-10 * std::max(1.0, svd.singularValues().maxCoeff()))
            throw RankDeficient("fiber jacobian is degenerate");
        Matrix const N = F.normal_basis(g, F.point(s, x));
        return Vector(N * (N.transpose() * d));
    };
    eta.sample(grid);
    return eta;
}

namespace detail {

inline std::vector<Vector> fiber_derivatives(NormalSection const& eta, Vector const& x, double h) {
    std::vector<Vector> D;
    for (int a = 0; a < eta.fiber.dim(); ++a) {
        auto diff = [&](double e) {
            Vector dx = Vector::Zero(x.size());
            dx[a] = e;
            return Vector((eta.field(x + dx) - eta.field(x - dx)) / (2 * e));
        };
        D.push_back((4.0 * diff(h) - diff(2 * h)) / 3.0);
    }
    return D;
}

} // namespace detail

/// max over nodes of |dbar_L eta|, dbar_L eta(v) = (d eta(v) + L d eta(L v)) / 2 on a quaternionic fiber.
inline double normal_field_dbar_defect(NormalSection const& eta, ImaginaryUnit const& L, double h = 1e-3) {
    int const D = static_cast<int>(eta.points.front().size());
    if (D % 4) throw std::invalid_argument("holomorphy needs a hyperkaehler ambient");
    Matrix const Lop = complex_structure_operator(L, D / 4);
    double worst = 0;
    for (auto const& x : eta.nodes) {
        Matrix const J = eta.fiber.jacobian(x);
        Matrix const C = J.colPivHouseholderQr().solve(Lop * J);  // L J e_a = J C e_a
        if ((J * C - Lop * J).norm() > 1e-8 * std::max(1.0, J.norm()))
            throw std::invalid_argument("fiber is not L-complex");
        auto const Dv = detail::fiber_derivatives(eta, x, h);
        double s = 0;
        for (int a = 0; a < J.cols(); ++a) {
            Vector along = Vector::Zero(D);
            for (int b = 0; b < J.cols(); ++b) along += C(b, a) * Dv[static_cast<std::size_t>(b)];
            s += (0.5 * (Dv[static_cast<std::size_t>(a)] + Lop * along)).squaredNorm();
        }
        worst = std::max(worst, std::sqrt(s));
    }
    return worst;
}

inline bool normal_field_holomorphy_check(NormalSection const& eta, ImaginaryUnit const& L, double tol = 1e-8) {
    return normal_field_dbar_defect(eta, L) <= tol;
}

/// max over nodes of the normal-connection derivative P_N d_a eta along the fiber.
inline double normal_covariant_derivative(NormalSection const& eta, double h = 1e-3) {
    double worst = 0;
    for (std::size_t i = 0; i < eta.nodes.size(); ++i) {
        Matrix span = eta.fiber.jacobian(eta.nodes[i]);
        if (eta.fiber.sphere) {
            span.conservativeResize(span.rows(), span.cols() + 1);
            span.col(span.cols() - 1) = eta.points[i];
        }
        Matrix const T = detail::orthonormal_basis(span);
        Matrix const J = eta.fiber.jacobian(eta.nodes[i]);
        Eigen::HouseholderQR<Matrix> qr(J);
        Matrix const Rinv = Matrix(qr.matrixQR().topRows(J.cols()).triangularView<Eigen::Upper>()).inverse();
        auto const Dv = detail::fiber_derivatives(eta, eta.nodes[i], h);
        double s = 0;
        for (int a = 0; a < J.cols(); ++a) {
            Vector d = Vector::Zero(J.rows());
            for (int b = 0; b < J.cols(); ++b) d += Rinv(b, a) * Dv[static_cast<std::size_t>(b)];  // unit-speed direction
            s += (d - T * (T.transpose() * d)).squaredNorm();
        }
        worst = std::max(worst, std::sqrt(s));
    }
    return worst;
}

inline bool verify_parallel(NormalSection const& eta, double tol = 1e-8) { return normal_covariant_derivative(eta) <= tol; }

struct KillingReport {
    double max_defect = 0;
    std::size_t points = 0;
    bool passed = false;
};

/// Symmetrized derivative of the family's motion generator along t, at fiber sample points of X_s.
inline KillingReport verify_killing(DeformationFamily const& F, Vector const& s, Vector const& t, double tol = 1e-8, int grid = 5,
                                    double h = 1e-4) {
    MotionJet const g = F.motion(s);
    ParametrizedPatch P = F.fiber_at(s);
    P.grid = grid;
    KillingReport rep;
    for (Vector const& x : P.nodes()) {
        Vector const p = P.eval(x);
        int const D = static_cast<int>(p.size());
        Matrix dirs = Matrix::Identity(D, D);
        if (F.sphere) dirs = detail::orthogonal_complement(p.normalized());
        Matrix JV(D, dirs.cols());
        for (Eigen::Index a = 0; a < dirs.cols(); ++a)
            JV.col(a) = (F.generator(g, t, p + h * dirs.col(a)) - F.generator(g, t, p - h * dirs.col(a))) / (2 * h);
        Matrix const S = dirs.transpose() * JV;
        rep.max_defect = std::max(rep.max_defect, (S + S.transpose()).cwiseAbs().maxCoeff());
        ++rep.points;
    }
    rep.passed = rep.max_defect <= tol;
    return rep;
}

// ---------------------------------------------------------------------------
// Paths and transport

struct BasePath {
    std::vector<Vector> vertices;  // piecewise-linear; a single vertex is the constant path

    static BasePath straight(Vector const& a, Vector const& b) { return {{a, b}}; }
    static BasePath constant(Vector const& a) { return {{a}}; }

    /// s -> s + h a -> s + h a + h b -> s + h b -> s.
    static BasePath parallelogram(Vector const& s, Vector const& a, Vector const& b, double h) {
        return {{s, s + h * a, s + h * a + h * b, s + h * b, s}};
    }

    Vector const& start() const { return vertices.front(); }
    Vector const& end() const { return vertices.back(); }
};

struct IntegratorSettings {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double initial_step = 0.05;
    double min_step = 1e-14;
    std::size_t max_steps = 100000;
};

struct IntegratorStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

/// Lift of one point along a path; the state is the displacement from the start point.
inline Vector transport_point(DeformationFamily const& F, BasePath const& path, Vector const& p, IntegratorSettings const& cfg,
                              IntegratorStats& stats) {
    namespace ode = boost::numeric::odeint;
    using State = std::vector<double>;
    Vector current = p;
    for (std::size_t seg = 0; seg + 1 < path.vertices.size(); ++seg) {
        Vector const a = path.vertices[seg], b = path.vertices[seg + 1];
        Vector const v = b - a;
        if (v.norm() == 0.0) continue;
        Vector const origin = current;
        auto rhs = [&](State const& y, State& dydt, double tau) {
            Vector const q = origin + Eigen::Map<Vector const>(y.data(), static_cast<Eigen::Index>(y.size()));
            Vector const lift = F.horizontal_lift(a + tau * v, v, q);
            dydt.assign(lift.data(), lift.data() + lift.size());
        };
        auto stepper = ode::make_controlled(cfg.abs_tol, cfg.rel_tol, ode::runge_kutta_dopri5<State>());
        State y(static_cast<std::size_t>(p.size()), 0.0);
        double tau = 0, dt = cfg.initial_step;
        std::size_t steps = 0;
        while (tau < 1.0) {
            if (++steps > cfg.max_steps) throw IntegratorFailure("step budget exhausted");
            if (tau + dt > 1.0) dt = 1.0 - tau;
            if (stepper.try_step(rhs, y, tau, dt) == ode::success) {
                ++stats.accepted;
            } else {
                ++stats.rejected;
                if (dt < cfg.min_step) throw IntegratorFailure("step size underflow");
            }
            for (double c : y)
                if (!std::isfinite(c)) throw IntegratorFailure("non-finite state");
        }
        current = origin + Eigen::Map<Vector const>(y.data(), static_cast<Eigen::Index>(y.size()));
    }
    return current;
}

struct TransportMap {
    BasePath path;
    std::vector<Vector> sources;
    std::vector<Vector> images;
    IntegratorStats stats;
    double max_drift = 0;  // distance of images from the target fiber
    std::function<Vector(Vector const&)> apply;
    std::optional<HKTorus> torus;
    std::optional<RoundSphere> sphere;
    std::function<Matrix(Vector const&)> source_tangent;  // tangent basis of the source fiber at a source point

    double distance(Vector const& x, Vector const& y) const {
        if (torus) return torus->distance(x, y);
        if (sphere) return sphere->distance(x, y);
        return (x - y).norm();
    }

    /// This map followed by a linear map M (negative controls).
    TransportMap composed_with(Matrix const& M) const {
        TransportMap out = *this;
        for (auto& q : out.images) q = M * q;
        out.apply = [f = apply, M](Vector const& p) { return Vector(M * f(p)); };
        return out;
    }
};

/// Uniform random fiber parameters on the basepoint fiber of the path, mapped to ambient points.
inline std::vector<Vector> fiber_samples(DeformationFamily const& F, Vector const& s, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto const& P = F.fiber.patch;
    std::vector<Vector> out;
    for (int i = 0; i < count; ++i) {
        Vector x(P.dim());
        for (int a = 0; a < P.dim(); ++a) x[a] = P.lo[a] + u(rng) * (P.hi[a] - P.lo[a]);
        out.push_back(F.point(s, x));
    }
    return out;
}

inline TransportMap integrate(DeformationFamily const& F, BasePath const& path, std::vector<Vector> const& samples,
                              IntegratorSettings const& cfg = {}) {
    TransportMap T;
    T.path = path;
    T.sources = samples;
    T.torus = F.torus;
    T.sphere = F.sphere;
    for (auto const& p : samples) {
        T.images.push_back(transport_point(F, path, p, cfg, T.stats));
        T.max_drift = std::max(T.max_drift, F.distance_to_fiber(path.end(), T.images.back()));
    }
    T.apply = [F, path, cfg](Vector const& p) {
        IntegratorStats scratch;
        return transport_point(F, path, p, cfg, scratch);
    };
    T.source_tangent = [F, s = path.start()](Vector const& p) {
        MotionJet const g = F.motion(s);
        return Matrix(g.R * F.fiber.tangent_at(g.R.fullPivLu().solve(p - g.c)));
    };
    return T;
}

struct IsometryReport {
    double max_defect = 0;
    std::size_t pairs = 0;
    bool passed = false;
};

/// max |d(x, y) - d(Psi x, Psi y)| over up to `pair_samples` deterministic sample pairs.
inline IsometryReport verify_isometry(TransportMap const& T, std::size_t pair_samples, double tol = 1e-6) {
    IsometryReport rep;
    std::size_t const n = T.sources.size();
    if (n >= 2) {
        for (std::size_t k = 0; k < pair_samples; ++k) {
            std::size_t const i = k % n, j = (i + 1 + (k / n) % (n - 1)) % n;
            double const d0 = T.distance(T.sources[i], T.sources[j]);
            double const d1 = T.distance(T.images[i], T.images[j]);
            rep.max_defect = std::max(rep.max_defect, std::abs(d0 - d1));
            ++rep.pairs;
        }
    }
    rep.passed = rep.max_defect <= tol;
    return rep;
}

struct HolomorphyReport {
    std::vector<ImaginaryUnit> structures;
    std::vector<double> defects;  // per structure
    double max_defect = 0;
    bool passed = false;
};

/// max |dPsi(L v) - L dPsi(v)| over fiber tangents at the samples; dPsi by central differences.
inline HolomorphyReport verify_holomorphy(TransportMap const& T, std::vector<ImaginaryUnit> const& structures, double tol = 1e-6,
                                          std::size_t max_points = 0, double h = 1e-4) {
    HolomorphyReport rep;
    rep.structures = structures;
    rep.defects.assign(structures.size(), 0.0);
    std::size_t const count = max_points ? std::min(max_points, T.sources.size()) : T.sources.size();
    for (std::size_t i = 0; i < count; ++i) {
        Vector const& p = T.sources[i];
        Matrix const W = detail::orthonormal_basis(T.source_tangent(p));
        int const D = static_cast<int>(p.size());
        Matrix dPsi(D, W.cols());
        for (Eigen::Index a = 0; a < W.cols(); ++a) dPsi.col(a) = (T.apply(p + h * W.col(a)) - T.apply(p - h * W.col(a))) / (2 * h);
        for (std::size_t l = 0; l < structures.size(); ++l) {
            Matrix const Lop = complex_structure_operator(structures[l], D / 4);
            Matrix const C = W.transpose() * Lop * W;  // L restricted to the fiber tangent
            if ((W * C - Lop * W).norm() > 1e-8) throw std::invalid_argument("source fiber is not L-complex");
            rep.defects[l] = std::max(rep.defects[l], (dPsi * C - Lop * dPsi).norm());
        }
    }
    for (double d : rep.defects) rep.max_defect = std::max(rep.max_defect, d);
    rep.passed = rep.max_defect <= tol;
    return rep;
}

// ---------------------------------------------------------------------------
// Curvature of the family connection

struct HolonomyReport {
    double h = 0;
    Matrix displacement;  // columns (image - source) / h^2
    double max_defect = 0;
    double rotation_angle = std::numeric_limits<double>::quiet_NaN();  // sphere families: mean rotation about the pole
    double enclosed_area = std::numeric_limits<double>::quiet_NaN();   // sphere families: solid angle swept by the pole
};

inline HolonomyReport family_curvature(DeformationFamily const& F, Vector const& s, Vector const& a, Vector const& b, double h,
                                       std::vector<Vector> const& samples, IntegratorSettings const& cfg = {}) {
    auto const T = integrate(F, BasePath::parallelogram(s, a, b, h), samples, cfg);
    HolonomyReport rep;
    rep.h = h;
    rep.displacement.resize(F.ambient_dim(), static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        rep.displacement.col(static_cast<Eigen::Index>(i)) = (T.images[i] - samples[i]) / (h * h);
        rep.max_defect = std::max(rep.max_defect, rep.displacement.col(static_cast<Eigen::Index>(i)).norm());
    }
    if (F.sphere && F.template_pole) {
        Vector const n = F.motion(s).R * *F.template_pole;
        double sum = 0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            Eigen::Vector3d const p = samples[i], q = T.images[i], nn = n;
            sum += std::atan2(nn.dot(p.cross(q)), p.dot(q));
        }
        rep.rotation_angle = samples.empty() ? 0.0 : sum / static_cast<double>(samples.size());
        // solid angle of the pole loop for (theta, phi) coordinates
        if (F.base_dim() == 2) {
            double const th0 = s[0], dth = h * a[0] + h * b[0], dph = h * a[1] + h * b[1];
            if (a[1] == 0.0 && b[0] == 0.0) rep.enclosed_area = dph * (std::cos(th0) - std::cos(th0 + dth));
        }
    }
    return rep;
}

struct PathIndependenceReport {
    double max_discrepancy = 0;
    bool passed = false;
};

inline PathIndependenceReport path_independence_check(DeformationFamily const& F, BasePath const& g1, BasePath const& g2,
                                                      std::vector<Vector> const& samples, double tol = 1e-7,
                                                      IntegratorSettings const& cfg = {}) {
    if ((g1.start() - g2.start()).norm() > 1e-14 || (g1.end() - g2.end()).norm() > 1e-14)
        throw std::invalid_argument("paths must share their endpoints");
    auto const T1 = integrate(F, g1, samples, cfg), T2 = integrate(F, g2, samples, cfg);
    PathIndependenceReport rep;
    for (std::size_t i = 0; i < samples.size(); ++i) rep.max_discrepancy = std::max(rep.max_discrepancy, T1.distance(T1.images[i], T2.images[i]));
    rep.passed = rep.max_discrepancy <= tol;
    return rep;
}

/// max |P_N lift(nu) - nu| over normal vectors nu in the image of the base directions, at the given fiber points of X_s.
inline double connection_axiom_defect(DeformationFamily const& F, Vector const& s, std::vector<Vector> const& points) {
    MotionJet const g = F.motion(s);
    int const k = F.base_dim();
    double worst = 0;
    for (auto const& p : points) {
        Matrix const N = F.normal_basis(g, p);
        Matrix eta(N.rows(), k);
        for (int i = 0; i < k; ++i) eta.col(i) = N * (N.transpose() * F.generator(g, Vector::Unit(k, i), p));
        Eigen::JacobiSVD<Matrix> svd(eta, Eigen::ComputeThinU | Eigen::ComputeThinV);
        double const cutoff = 1e-10 * std::max(1.0, svd.singularValues().size() ? svd.singularValues()[0] : 0.0);
        for (Eigen::Index r = 0; r < svd.singularValues().size(); ++r) {
            if (svd.singularValues()[r] <= cutoff) break;
            Vector const nu = svd.matrixU().col(r);
            Vector const t = svd.matrixV().col(r) / svd.singularValues()[r];  // a base direction whose normal field at p is nu
            Vector const lift = F.horizontal_lift(s, t, p);
            worst = std::max(worst, (N * (N.transpose() * lift) - nu).norm());
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// The weight argument: Hom(Lambda^2 V, V) has no invariants for weight-1 V

struct WeightArgumentReport {
    int hom_dim = 0;
    int invariant_dim = 0;            // left multiplication, weight 1
    double smallest_singular = 0;     // of the stacked invariance constraint
    int contrast_invariant_dim = 0;   // conjugation v -> u v ubar, weights 0 + 2
};

namespace detail {

/// Action of a skew X on Lambda^2 R^m in the basis e_a ^ e_b, a < b.
inline Matrix lambda2_action(Matrix const& X) {
    int const m = static_cast<int>(X.rows());
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b) pairs.emplace_back(a, b);
    auto index = [&](int a, int b) {
        for (std::size_t i = 0; i < pairs.size(); ++i)
            if (pairs[i] == std::make_pair(a, b)) return static_cast<Eigen::Index>(i);
        return Eigen::Index{-1};
    };
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(pairs.size()));
    auto add = [&](int a, int b, double c, Eigen::Index col) {  // c e_a ^ e_b
        if (a == b || c == 0.0) return;
        if (a < b) out(index(a, b), col) += c;
        else out(index(b, a), col) -= c;
    };
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        auto const [a, b] = pairs[p];
        for (int r = 0; r < m; ++r) {
            add(r, b, X(r, a), static_cast<Eigen::Index>(p));
            add(a, r, X(r, b), static_cast<Eigen::Index>(p));
        }
    }
    return out;
}

/// Stacked constraint phi -> X phi - phi Lambda^2(X) on Hom(Lambda^2 V, V), phi vectorized column-major.
inline Matrix hom_invariance_constraint(std::array<Matrix, 3> const& gens) {
    auto const m = gens[0].rows();
    auto const p = m * (m - 1) / 2;
    Matrix stacked(3 * m * p, m * p);
    for (int g = 0; g < 3; ++g) {
        Matrix const L2 = lambda2_action(gens[static_cast<std::size_t>(g)]);
        // vec(X phi) = (I kron X) vec(phi); vec(phi M) = (M^T kron I) vec(phi)
        Matrix block = Matrix::Zero(m * p, m * p);
        for (Eigen::Index c = 0; c < p; ++c) block.block(c * m, c * m, m, m) += gens[static_cast<std::size_t>(g)];
        for (Eigen::Index r = 0; r < p; ++r)
            for (Eigen::Index c = 0; c < p; ++c)
                if (L2(c, r) != 0.0) block.block(r * m, c * m, m, m) -= L2(c, r) * Matrix::Identity(m, m);
        stacked.middleRows(g * m * p, m * p) = block;
    }
    return stacked;
}

} // namespace detail

inline WeightArgumentReport weight_argument_check(double tol = 1e-10) {
    std::array<Matrix, 3> left, conj;
    Quaternion const units[3] = {Quaternion::i(), Quaternion::j(), Quaternion::k()};
    for (int g = 0; g < 3; ++g) {
        left[static_cast<std::size_t>(g)] = left_mult_matrix(units[g]);
        conj[static_cast<std::size_t>(g)] = left_mult_matrix(units[g]) - right_mult_matrix(units[g]);
    }
    WeightArgumentReport rep;
    Matrix const C = detail::hom_invariance_constraint(left);
    rep.hom_dim = static_cast<int>(C.cols());
    Eigen::JacobiSVD<Matrix> svd(C);
    rep.smallest_singular = svd.singularValues().minCoeff();
    rep.invariant_dim = static_cast<int>(detail::nullspace(C, tol).basis.cols());
    rep.contrast_invariant_dim = static_cast<int>(detail::nullspace(detail::hom_invariance_constraint(conj), tol).basis.cols());
    return rep;
}

} // namespace hklab
