#pragma once

/**
 * @file quaternion.hpp
 * @brief Quaternions, the sphere of induced complex structures and the
 *        SU(2) actions on H^n = R^{4n}.
 *
 * Coordinates on H^n are ordered factor by factor: index 4f + c with
 * c = 0,1,2,3 for the components along 1, i, j, k of factor f.
 *
 * Complex structures act by LEFT multiplication, so that the operators of
 * i, j, k compose as I*J = K. Two SU(2) actions on tangent vectors exist:
 *   - conjugation v -> u v ubar (rotates the structure sphere, fixes Re),
 *   - the hypercomplex action v -> u v (the unit quaternions acting through
 *     the structures themselves). Invariance of forms, hyperholomorphicity
 *     and the weight decomposition all refer to the hypercomplex action.
 */

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>

namespace hklab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

template <typename T = double>
struct BasicQuaternion {
    T w{0}, x{0}, y{0}, z{0};  // w + x i + y j + z k

    constexpr BasicQuaternion() = default;
    constexpr BasicQuaternion(T w_, T x_, T y_, T z_) : w{w_}, x{x_}, y{y_}, z{z_} {}

    static constexpr BasicQuaternion one() { return {1, 0, 0, 0}; }
    static constexpr BasicQuaternion i() { return {0, 1, 0, 0}; }
    static constexpr BasicQuaternion j() { return {0, 0, 1, 0}; }
    static constexpr BasicQuaternion k() { return {0, 0, 0, 1}; }

    constexpr bool operator==(BasicQuaternion const&) const = default;

    constexpr BasicQuaternion operator+(BasicQuaternion const& o) const {
        return {w + o.w, x + o.x, y + o.y, z + o.z};
    }
    constexpr BasicQuaternion operator-(BasicQuaternion const& o) const {
        return {w - o.w, x - o.x, y - o.y, z - o.z};
    }
    constexpr BasicQuaternion operator-() const { return {-w, -x, -y, -z}; }
    constexpr BasicQuaternion operator*(T s) const { return {w * s, x * s, y * s, z * s}; }
    constexpr BasicQuaternion operator/(T s) const { return {w / s, x / s, y / s, z / s}; }

    // Hamilton product
    constexpr BasicQuaternion operator*(BasicQuaternion const& o) const {
        return {w * o.w - x * o.x - y * o.y - z * o.z,
                w * o.x + x * o.w + y * o.z - z * o.y,
                w * o.y - x * o.z + y * o.w + z * o.x,
                w * o.z + x * o.y - y * o.x + z * o.w};
    }

    constexpr BasicQuaternion conj() const { return {w, -x, -y, -z}; }
    constexpr T norm2() const { return w * w + x * x + y * y + z * z; }
    T norm() const { return std::sqrt(norm2()); }
    BasicQuaternion normalized() const { return *this / norm(); }

    Eigen::Matrix<T, 4, 1> vec() const { return {w, x, y, z}; }
    static BasicQuaternion from_vec(Eigen::Matrix<T, 4, 1> const& v) { return {v[0], v[1], v[2], v[3]}; }
};

using Quaternion = BasicQuaternion<double>;

inline constexpr Quaternion operator*(double s, Quaternion const& q) { return q * s; }

inline Quaternion qmul(Quaternion const& p, Quaternion const& q) { return p * q; }

inline constexpr double kUnitTol = 1e-12;

inline bool is_unit(Quaternion const& u, double tol = kUnitTol) {
    return std::abs(u.norm() - 1.0) <= tol;
}

inline void require_unit(Quaternion const& u) {
    if (!is_unit(u)) throw std::invalid_argument("quaternion is not a unit quaternion");
}

/// Point a I + b J + c K of the sphere of induced complex structures.
class ImaginaryUnit {
public:
    ImaginaryUnit() : q_{0, 1, 0, 0} {}

    /// Throws unless q is purely imaginary with |q| = 1 (within 1e-12).
    explicit ImaginaryUnit(Quaternion const& q) : q_{q} {
        if (std::abs(q.w) > kUnitTol || !is_unit(q))
            throw std::invalid_argument("not a unit imaginary quaternion");
    }
    ImaginaryUnit(double a, double b, double c) : ImaginaryUnit(Quaternion{0, a, b, c}) {}

    /// Normalizes a nonzero direction onto the sphere.
    static ImaginaryUnit from_direction(double a, double b, double c) {
        double const r = std::sqrt(a * a + b * b + c * c);
        if (r == 0) throw std::invalid_argument("zero direction");
        ImaginaryUnit L;
        L.q_ = {0, a / r, b / r, c / r};
        return L;
    }

    static ImaginaryUnit I() { return {1, 0, 0}; }
    static ImaginaryUnit J() { return {0, 1, 0}; }
    static ImaginaryUnit K() { return {0, 0, 1}; }

    Quaternion const& quaternion() const { return q_; }
    double a() const { return q_.x; }
    double b() const { return q_.y; }
    double c() const { return q_.z; }
    Eigen::Vector3d direction() const { return {q_.x, q_.y, q_.z}; }
    ImaginaryUnit operator-() const {
        ImaginaryUnit L;
        L.q_ = -q_;
        return L;
    }

private:
    Quaternion q_;
};

/// 4x4 matrix of v -> q v on H = R^4.
inline Eigen::Matrix4d left_mult_matrix(Quaternion const& q) {
    Eigen::Matrix4d m;
    m << q.w, -q.x, -q.y, -q.z,
         q.x,  q.w, -q.z,  q.y,
         q.y,  q.z,  q.w, -q.x,
         q.z, -q.y,  q.x,  q.w;
    return m;
}

/// 4x4 matrix of v -> v q on H = R^4.
inline Eigen::Matrix4d right_mult_matrix(Quaternion const& q) {
    Eigen::Matrix4d m;
    m << q.w, -q.x, -q.y, -q.z,
         q.x,  q.w,  q.z, -q.y,
         q.y, -q.z,  q.w,  q.x,
         q.z,  q.y, -q.x,  q.w;
    return m;
}

/// Block-diagonal copy of a 4x4 block on each of the n quaternionic factors.
inline Matrix block_diagonal(Eigen::Matrix4d const& block, int n) {
    if (n < 1) throw std::invalid_argument("quaternionic dimension must be >= 1");
    Matrix m = Matrix::Zero(4 * n, 4 * n);
    for (int f = 0; f < n; ++f) m.block<4, 4>(4 * f, 4 * f) = block;
    return m;
}

/// Operator of the induced complex structure L on H^n (left multiplication).
inline Matrix complex_structure_operator(ImaginaryUnit const& L, int n) {
    return block_diagonal(left_mult_matrix(L.quaternion()), n);
}

/// Conjugation action v -> u v ubar, component-wise on H^n.
inline Matrix su2_tangent_action(Quaternion const& u, int n) {
    require_unit(u);
    return block_diagonal(left_mult_matrix(u) * right_mult_matrix(u.conj()), n);
}

/// Hypercomplex action v -> u v, component-wise on H^n.
inline Matrix hypercomplex_action(Quaternion const& u, int n) {
    require_unit(u);
    return block_diagonal(left_mult_matrix(u), n);
}

/// u L ubar; satisfies A_u L A_u^{-1} = rotate_structure(u, L) for both actions.
inline ImaginaryUnit rotate_structure(Quaternion const& u, ImaginaryUnit const& L) {
    require_unit(u);
    Quaternion r = u * L.quaternion() * u.conj();
    return ImaginaryUnit::from_direction(r.x, r.y, r.z);
}

/// Rotated triple (u i ubar, u j ubar, u k ubar); still satisfies I J = K.
struct StructureTriple {
    ImaginaryUnit I = ImaginaryUnit::I();
    ImaginaryUnit J = ImaginaryUnit::J();
    ImaginaryUnit K = ImaginaryUnit::K();

    static StructureTriple rotated(Quaternion const& u) {
        return {rotate_structure(u, ImaginaryUnit::I()), rotate_structure(u, ImaginaryUnit::J()),
                rotate_structure(u, ImaginaryUnit::K())};
    }
};

template <typename Rng>
Quaternion random_unit_quaternion(Rng& rng) {
    std::normal_distribution<double> g;
    Quaternion q{g(rng), g(rng), g(rng), g(rng)};
    return q.normalized();
}

template <typename Rng>
ImaginaryUnit random_imaginary_unit(Rng& rng) {
    std::normal_distribution<double> g;
    for (;;) {
        double a = g(rng), b = g(rng), c = g(rng);
        if (a * a + b * b + c * c > 1e-12) return ImaginaryUnit::from_direction(a, b, c);
    }
}

} // namespace hklab
