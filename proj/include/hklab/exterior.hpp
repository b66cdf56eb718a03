#pragma once

/**
 * @file exterior.hpp
 * @brief Constant-coefficient exterior algebra on R^D.
 *
 * A p-form stores one coefficient per strictly increasing multi-index,
 * encoded as a bitmask with p bits set. Coefficients are laid out in
 * colexicographic order, which coincides with increasing mask value. The
 * inner product declares the coordinate wedges e^{i_1}^...^e^{i_p} orthonormal.
 */

#include "hklab/detail/linalg.hpp"
#include "hklab/quaternion.hpp"

#include <Eigen/Dense>

#include <array>
#include <bit>
#include <complex>
#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

namespace hklab {

using Complex = std::complex<double>;
using Mask = std::uint32_t;

namespace detail {

inline constexpr int kMaxFormDim = 24;

/// Masks with `degree` bits below bit `dim`, in increasing (= colex) order.
inline std::vector<Mask> masks_of_degree(int dim, int degree) {
    std::vector<Mask> out;
    if (degree < 0 || degree > dim) return out;
    if (degree == 0) return {0u};
    Mask m = (Mask{1} << degree) - 1;
    Mask const limit = Mask{1} << dim;
    while (m < limit) {
        out.push_back(m);
        Mask const c = m & (~m + 1);  // Gosper's hack
        Mask const r = m + c;
        m = (((r ^ m) >> 2) / c) | r;
    }
    return out;
}

/// Colex rank of a mask among masks of the same popcount.
inline std::size_t mask_rank(Mask m) {
    std::size_t rank = 0;
    int i = 1;
    while (m) {
        int const c = std::countr_zero(m);
        rank += binomial(c, i++);
        m &= m - 1;
    }
    return rank;
}

/// Sign of e^A ^ e^B relative to e^{A|B} (A, B disjoint).
inline int merge_sign(Mask a, Mask b) {
    int inversions = 0;
    while (b) {
        int const j = std::countr_zero(b);
        inversions += std::popcount(a >> (j + 1));
        b &= b - 1;
    }
    return (inversions & 1) ? -1 : 1;
}

inline std::vector<int> mask_indices(Mask m) {
    std::vector<int> idx;
    while (m) {
        idx.push_back(std::countr_zero(m));
        m &= m - 1;
    }
    return idx;
}

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};

template <typename T>
double abs2(T const& v) {
    return std::norm(v);
}

} // namespace detail

template <typename Scalar>
class BasicForm {
public:
    using Coefficients = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    BasicForm() : BasicForm(0, 0) {}
    BasicForm(int dim, int degree) : dim_{dim}, degree_{degree} {
        if (dim < 0 || dim > detail::kMaxFormDim) throw std::invalid_argument("form dimension out of range");
        if (degree < 0 || degree > dim) throw std::invalid_argument("form degree out of range");
        coeffs_ = Coefficients::Zero(static_cast<Eigen::Index>(detail::binomial(dim, degree)));
    }

    static BasicForm scalar(int dim, Scalar value) {
        BasicForm f(dim, 0);
        f.coeffs_[0] = value;
        return f;
    }

    /// e^{i_1} ^ ... ^ e^{i_p} for the indices in `mask`.
    static BasicForm basis(int dim, Mask mask) {
        BasicForm f(dim, std::popcount(mask));
        f[mask] = Scalar(1);
        return f;
    }

    int dim() const { return dim_; }
    int degree() const { return degree_; }
    std::size_t size() const { return static_cast<std::size_t>(coeffs_.size()); }
    std::vector<Mask> masks() const { return detail::masks_of_degree(dim_, degree_); }

    Coefficients const& coefficients() const { return coeffs_; }
    Coefficients& coefficients() { return coeffs_; }

    Scalar& operator[](Mask m) { return coeffs_[static_cast<Eigen::Index>(detail::mask_rank(m))]; }
    Scalar operator[](Mask m) const { return coeffs_[static_cast<Eigen::Index>(detail::mask_rank(m))]; }

    /// Coefficient on the sorted index pair (a, b); antisymmetric in (a, b).
    Scalar pair(int a, int b) const {
        if (a == b) return Scalar(0);
        Mask const m = (Mask{1} << a) | (Mask{1} << b);
        return a < b ? (*this)[m] : -(*this)[m];
    }

    /// Coefficient of e^0 ^ ... ^ e^{dim-1}; requires a top-degree form.
    Scalar top() const {
        if (degree_ != dim_) throw std::invalid_argument("not a top-degree form");
        return coeffs_[0];
    }

    double norm() const { return std::sqrt(coeffs_.squaredNorm()); }

    BasicForm& operator+=(BasicForm const& o) {
        check_same_space(o);
        coeffs_ += o.coeffs_;
        return *this;
    }
    BasicForm& operator-=(BasicForm const& o) {
        check_same_space(o);
        coeffs_ -= o.coeffs_;
        return *this;
    }
    BasicForm& operator*=(Scalar s) {
        coeffs_ *= s;
        return *this;
    }
    friend BasicForm operator+(BasicForm a, BasicForm const& b) { return a += b; }
    friend BasicForm operator-(BasicForm a, BasicForm const& b) { return a -= b; }
    friend BasicForm operator*(BasicForm a, Scalar s) { return a *= s; }
    friend BasicForm operator*(Scalar s, BasicForm a) { return a *= s; }
    BasicForm operator-() const { return *this * Scalar(-1); }

    BasicForm<Complex> to_complex() const {
        BasicForm<Complex> c(dim_, degree_);
        c.coefficients() = coeffs_.template cast<Complex>();
        return c;
    }

private:
    void check_same_space(BasicForm const& o) const {
        if (o.dim_ != dim_ || o.degree_ != degree_) throw std::invalid_argument("forms live in different spaces");
    }

    int dim_;
    int degree_;
    Coefficients coeffs_;
};

using ConstantForm = BasicForm<double>;
using ComplexForm = BasicForm<Complex>;

inline BasicForm<double> real_part(ComplexForm const& f) {
    ConstantForm r(f.dim(), f.degree());
    r.coefficients() = f.coefficients().real();
    return r;
}
inline BasicForm<double> imag_part(ComplexForm const& f) {
    ConstantForm r(f.dim(), f.degree());
    r.coefficients() = f.coefficients().imag();
    return r;
}

/// Hermitian inner product, linear in the second slot.
template <typename S>
auto inner(BasicForm<S> const& a, BasicForm<S> const& b) {
    if (a.dim() != b.dim() || a.degree() != b.degree()) throw std::invalid_argument("forms live in different spaces");
    return a.coefficients().dot(b.coefficients());
}

template <typename S>
BasicForm<S> wedge(BasicForm<S> const& a, BasicForm<S> const& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("wedge of forms on different spaces");
    int const dim = a.dim();
    if (a.degree() + b.degree() > dim) throw std::invalid_argument("wedge degree exceeds dimension");
    BasicForm<S> out(dim, a.degree() + b.degree());
    auto const ma = a.masks();
    auto const mb = b.masks();
    for (std::size_t i = 0; i < ma.size(); ++i) {
        S const ca = a.coefficients()[static_cast<Eigen::Index>(i)];
        if (ca == S(0)) continue;
        for (std::size_t j = 0; j < mb.size(); ++j) {
            if (ma[i] & mb[j]) continue;
            S const cb = b.coefficients()[static_cast<Eigen::Index>(j)];
            if (cb == S(0)) continue;
            out[ma[i] | mb[j]] += S(detail::merge_sign(ma[i], mb[j])) * ca * cb;
        }
    }
    return out;
}

template <typename S>
BasicForm<S> wedge_power(BasicForm<S> const& a, int k) {
    BasicForm<S> out = BasicForm<S>::scalar(a.dim(), S(1));
    for (int i = 0; i < k; ++i) out = wedge(out, a);
    return out;
}

/// Pullback along a linear map M: R^{d'} -> R^{dim}: (M^* a)(v..) = a(M v, ..).
template <typename S, typename Derived>
auto pullback(BasicForm<S> const& a, Eigen::MatrixBase<Derived> const& M) {
    using MS = typename Derived::Scalar;
    using R = std::conditional_t<detail::is_complex<S>::value || detail::is_complex<MS>::value, Complex, double>;
    if (M.rows() != a.dim()) throw std::invalid_argument("pullback map has wrong target dimension");
    int const target = static_cast<int>(M.cols());
    int const p = a.degree();
    BasicForm<R> out(target, p);
    if (p > target) return out;
    auto const src = a.masks();
    auto const dst = out.masks();
    using Mat = Eigen::Matrix<R, Eigen::Dynamic, Eigen::Dynamic>;
    Mat const Mc = M.template cast<R>();
    std::vector<std::vector<int>> src_idx;
    src_idx.reserve(src.size());
    for (Mask m : src) src_idx.push_back(detail::mask_indices(m));
    for (std::size_t s = 0; s < dst.size(); ++s) {
        auto const cols = detail::mask_indices(dst[s]);
        R acc(0);
        for (std::size_t t = 0; t < src.size(); ++t) {
            S const c = a.coefficients()[static_cast<Eigen::Index>(t)];
            if (c == S(0)) continue;
            if (p == 0) {
                acc += R(c);
                continue;
            }
            Mat sub(p, p);
            for (int r = 0; r < p; ++r)
                for (int q = 0; q < p; ++q) sub(r, q) = Mc(src_idx[t][r], cols[q]);
            acc += R(c) * sub.determinant();
        }
        out.coefficients()[static_cast<Eigen::Index>(s)] = acc;
    }
    return out;
}

/// a(v_1, ..., v_p) for the columns of V.
template <typename S, typename Derived>
auto evaluate(BasicForm<S> const& a, Eigen::MatrixBase<Derived> const& V) {
    if (V.cols() != a.degree()) throw std::invalid_argument("wrong number of arguments for form");
    return pullback(a, V).coefficients()[0];
}

/// Derivation induced on p-forms by X: (D a)(v_1..v_p) = sum_k a(v_1, .., X v_k, .., v_p).
template <typename S>
BasicForm<S> derivation(BasicForm<S> const& a, Matrix const& X) {
    int const dim = a.dim();
    BasicForm<S> out(dim, a.degree());
    auto const masks = a.masks();
    for (std::size_t si = 0; si < masks.size(); ++si) {
        Mask const m = masks[si];
        S acc(0);
        for (int s : detail::mask_indices(m)) {
            Mask const rest = m & ~(Mask{1} << s);
            for (int j = 0; j < dim; ++j) {
                double const x = X(j, s);
                if (x == 0.0) continue;
                if (j == s) {
                    acc += S(x) * a[m];
                    continue;
                }
                if (rest & (Mask{1} << j)) continue;
                // replace index s by j; sign counts indices of `rest` strictly between them
                Mask const lo = std::min(s, j), hi = std::max(s, j);
                Mask const between = rest & (((Mask{1} << hi) - 1) & ~((Mask{1} << (lo + 1)) - 1));
                int const sign = (std::popcount(between) & 1) ? -1 : 1;
                acc += S(sign * x) * a[rest | (Mask{1} << j)];
            }
        }
        out.coefficients()[static_cast<Eigen::Index>(si)] = acc;
    }
    return out;
}

/// Matrix of a -> derivation(a, X) on the coefficient vectors of p-forms.
inline Matrix derivation_matrix(int dim, int degree, Matrix const& X) {
    auto const n = static_cast<Eigen::Index>(detail::binomial(dim, degree));
    Matrix M(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        ConstantForm e(dim, degree);
        e.coefficients()[c] = 1.0;
        M.col(c) = derivation(e, X).coefficients();
    }
    return M;
}

inline ConstantForm volume_form(int dim) { return ConstantForm::basis(dim, (Mask{1} << dim) - 1); }

/// 2-form w(v, w) = g(L v, w) of an operator on R^D.
inline ConstantForm kahler_form_from_operator(Matrix const& L) {
    int const dim = static_cast<int>(L.rows());
    ConstantForm w(dim, 2);
    for (int a = 0; a < dim; ++a)
        for (int b = a + 1; b < dim; ++b) w[(Mask{1} << a) | (Mask{1} << b)] = L(b, a);
    return w;
}

inline ConstantForm kahler_form(ImaginaryUnit const& L, int n) {
    return kahler_form_from_operator(complex_structure_operator(L, n));
}

/// Omega = w_J + sqrt(-1) w_K, the I-holomorphic symplectic form of a triple.
inline ComplexForm holomorphic_symplectic(StructureTriple const& t, int n, double tol = 1e-10) {
    Matrix const I = complex_structure_operator(t.I, n);
    Matrix const J = complex_structure_operator(t.J, n);
    Matrix const K = complex_structure_operator(t.K, n);
    if ((I * J - K).norm() > tol) throw std::invalid_argument("structures do not satisfy I J = K");
    return kahler_form(t.J, n).to_complex() + Complex(0, 1) * kahler_form(t.K, n).to_complex();
}

// ---------------------------------------------------------------------------
// Hodge type decomposition

struct HodgeComponent {
    int p;
    int q;
    ComplexForm form;
};

struct HodgeDecomposition {
    std::vector<HodgeComponent> components;  // all (p, q) with p + q = degree, p ascending

    ComplexForm const& component(int p, int q) const {
        for (auto const& c : components)
            if (c.p == p && c.q == q) return c.form;
        throw std::out_of_range("no such Hodge component");
    }
    ComplexForm sum() const {
        ComplexForm s = components.front().form;
        for (std::size_t i = 1; i < components.size(); ++i) s += components[i].form;
        return s;
    }
};

/// Rows: (1,0)-covectors theta_k (theta L = i theta) followed by their conjugates.
/// Unitary, so its inverse is the adjoint.
inline detail::CMatrix holomorphic_coframe(Matrix const& L) {
    Eigen::Index const D = L.rows();
    Matrix V(D, 0);
    Matrix span(D, 0);
    for (Eigen::Index e = 0; e < D && span.cols() < D; ++e) {
        Vector v = Vector::Unit(D, e);
        if (span.cols()) v -= span * (span.transpose() * v);
        if (v.norm() < 1e-8) continue;
        v.normalize();
        Vector const Lv = L * v;
        V.conservativeResize(D, V.cols() + 1);
        V.col(V.cols() - 1) = v;
        span.conservativeResize(D, span.cols() + 2);
        span.col(span.cols() - 2) = v;
        span.col(span.cols() - 1) = Lv;
    }
    Eigen::Index const h = V.cols();
    detail::CMatrix Theta(D, D);
    double const r = 1.0 / std::sqrt(2.0);
    for (Eigen::Index k = 0; k < h; ++k) {
        Eigen::VectorXcd row = (V.col(k).cast<Complex>() + Complex(0, 1) * (L * V.col(k)).cast<Complex>()) * r;
        Theta.row(k) = row.transpose();
        Theta.row(h + k) = row.conjugate().transpose();
    }
    return Theta;
}

template <typename S>
HodgeDecomposition hodge_components_for_operator(BasicForm<S> const& alpha, Matrix const& L) {
    int const dim = alpha.dim();
    int const deg = alpha.degree();
    int const h = dim / 2;
    detail::CMatrix const Theta = holomorphic_coframe(L);
    // coefficients in the coframe basis: b_S = alpha(f_S) with f the dual frame
    ComplexForm const b = pullback(alpha, Theta.adjoint());
    HodgeDecomposition out;
    Mask const holo = (Mask{1} << h) - 1;
    for (int p = 0; p <= deg; ++p) {
        int const q = deg - p;
        ComplexForm part(dim, deg);
        if (p <= h && q <= h) {
            auto const masks = b.masks();
            for (std::size_t i = 0; i < masks.size(); ++i)
                if (std::popcount(masks[i] & holo) == p)
                    part.coefficients()[static_cast<Eigen::Index>(i)] = b.coefficients()[static_cast<Eigen::Index>(i)];
        }
        out.components.push_back({p, q, pullback(part, Theta)});
    }
    return out;
}

template <typename S>
HodgeDecomposition hodge_components(BasicForm<S> const& alpha, ImaginaryUnit const& L) {
    if (alpha.dim() % 4) throw std::invalid_argument("form does not live on H^n");
    return hodge_components_for_operator(alpha, complex_structure_operator(L, alpha.dim() / 4));
}

// ---------------------------------------------------------------------------
// SU(2) action on forms (through the hypercomplex action v -> u v)

/// Pullback of alpha by the hypercomplex action of u on every slot.
template <typename S>
BasicForm<S> su2_pullback(Quaternion const& u, BasicForm<S> const& alpha) {
    if (alpha.dim() % 4) throw std::invalid_argument("form does not live on H^n");
    return pullback(alpha, hypercomplex_action(u, alpha.dim() / 4));
}

/// Infinitesimal generators of the hypercomplex action (left multiplication by i, j, k).
inline std::array<Matrix, 3> su2_generators(int n) {
    return {block_diagonal(left_mult_matrix(Quaternion::i()), n),
            block_diagonal(left_mult_matrix(Quaternion::j()), n),
            block_diagonal(left_mult_matrix(Quaternion::k()), n)};
}

/// Orthonormal basis (columns) of SU(2)-invariant p-forms on R^dim; cached per (dim, degree).
inline Matrix const& su2_invariant_basis(int dim, int degree) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, Matrix> cache;
    std::lock_guard lock(mu);
    auto key = std::make_pair(dim, degree);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    if (dim % 4) throw std::invalid_argument("form does not live on H^n");
    auto const gens = su2_generators(dim / 4);
    auto const n = static_cast<Eigen::Index>(detail::binomial(dim, degree));
    Matrix stacked(3 * n, n);
    for (int g = 0; g < 3; ++g) stacked.middleRows(g * n, n) = derivation_matrix(dim, degree, gens[g]);
    return cache.emplace(key, detail::nullspace(stacked).basis).first->second;
}

/// Orthogonal projection onto the joint kernel of the three generators.
template <typename S>
BasicForm<S> su2_invariant_project(BasicForm<S> const& alpha) {
    Matrix const& B = su2_invariant_basis(alpha.dim(), alpha.degree());
    BasicForm<S> out(alpha.dim(), alpha.degree());
    if (B.cols() == 0) return out;
    if constexpr (detail::is_complex<S>::value) {
        Vector const re = alpha.coefficients().real();
        Vector const im = alpha.coefficients().imag();
        Vector const pr = B * (B.transpose() * re);
        Vector const pi = B * (B.transpose() * im);
        out.coefficients() = pr.cast<Complex>() + Complex(0, 1) * pi.cast<Complex>();
    } else {
        out.coefficients() = B * (B.transpose() * alpha.coefficients());
    }
    return out;
}

template <typename S>
bool is_su2_invariant(BasicForm<S> const& alpha, double tol) {
    double const n = alpha.norm();
    if (n == 0.0) return true;
    return (alpha - su2_invariant_project(alpha)).norm() <= tol * n;
}

// ---------------------------------------------------------------------------
// Lefschetz adjoint

/// Adjoint of wedging with the 2-form w for the orthonormal-wedge inner product.
template <typename S>
BasicForm<S> contract_with_2form(BasicForm<S> const& alpha, ConstantForm const& w) {
    if (alpha.degree() < 2) throw std::invalid_argument("Lambda needs a form of degree >= 2");
    int const dim = alpha.dim();
    BasicForm<S> out(dim, alpha.degree() - 2);
    auto const targets = out.masks();
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        Mask const t = targets[ti];
        S acc(0);
        for (int a = 0; a < dim; ++a) {
            if (t & (Mask{1} << a)) continue;
            for (int b = a + 1; b < dim; ++b) {
                if (t & (Mask{1} << b)) continue;
                Mask const ab = (Mask{1} << a) | (Mask{1} << b);
                double const c = w[ab];
                if (c == 0.0) continue;
                acc += S(c * detail::merge_sign(ab, t)) * alpha[ab | t];
            }
        }
        out.coefficients()[static_cast<Eigen::Index>(ti)] = acc;
    }
    return out;
}

template <typename S>
BasicForm<S> lambda_op(BasicForm<S> const& alpha, ImaginaryUnit const& L) {
    if (alpha.dim() % 4) throw std::invalid_argument("form does not live on H^n");
    return contract_with_2form(alpha, kahler_form(L, alpha.dim() / 4));
}

// ---------------------------------------------------------------------------
// Single Fourier modes on the flat torus

/// base * exp(2 pi sqrt(-1) <frequency, x>).
struct FourierForm {
    ConstantForm base;
    Vector frequency;
};

/// Hodge Laplacian of a single mode: multiplication by (2 pi |frequency|)^2.
inline FourierForm laplacian(FourierForm const& f) {
    double const s = 2.0 * M_PI * f.frequency.norm();
    return {f.base * (s * s), f.frequency};
}

/// Pullback by the hypercomplex action: base pulled back, frequency mapped by A^T.
inline FourierForm su2_pullback(Quaternion const& u, FourierForm const& f) {
    Matrix const A = hypercomplex_action(u, f.base.dim() / 4);
    return {su2_pullback(u, f.base), A.transpose() * f.frequency};
}

} // namespace hklab
