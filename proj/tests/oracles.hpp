#pragma once

// Test-only reference computations, written independently of the library's
// evaluation paths (Leibniz permutation sums instead of determinants,
// group averaging instead of Lie-algebra kernels).

#include "hklab/exterior.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

inline int permutation_sign(std::vector<int> const& p) {
    int s = 1;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j)
            if (p[i] > p[j]) s = -s;
    return s;
}

/// alpha(v_1, ..., v_p) by the Leibniz formula on each coordinate wedge.
template <typename S>
S evaluate(hklab::BasicForm<S> const& a, std::vector<Eigen::VectorXd> const& v) {
    S total(0);
    auto const masks = a.masks();
    for (std::size_t m = 0; m < masks.size(); ++m) {
        std::vector<int> idx;
        for (int b = 0; b < a.dim(); ++b)
            if (masks[m] >> b & 1u) idx.push_back(b);
        std::vector<int> perm(idx.size());
        std::iota(perm.begin(), perm.end(), 0);
        double det = 0;
        do {
            double prod = permutation_sign(perm);
            for (std::size_t k = 0; k < idx.size(); ++k) prod *= v[k][idx[perm[k]]];
            det += prod;
        } while (std::next_permutation(perm.begin(), perm.end()));
        total += a.coefficients()[static_cast<Eigen::Index>(m)] * det;
    }
    return total;
}

inline double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

/// (a ^ b)(v) = 1/(p! q!) sum_sigma sgn(sigma) a(v_sigma..) b(v_sigma..).
inline double wedge_evaluate(hklab::ConstantForm const& a, hklab::ConstantForm const& b,
                             std::vector<Eigen::VectorXd> const& v) {
    int const p = a.degree(), q = b.degree();
    std::vector<int> perm(p + q);
    std::iota(perm.begin(), perm.end(), 0);
    double total = 0;
    do {
        std::vector<Eigen::VectorXd> va, vb;
        for (int k = 0; k < p; ++k) va.push_back(v[perm[k]]);
        for (int k = 0; k < q; ++k) vb.push_back(v[perm[p + k]]);
        total += permutation_sign(perm) * evaluate(a, va) * evaluate(b, vb);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return total / (factorial(p) * factorial(q));
}

/// Monte-Carlo Haar average of the hypercomplex pullback.
template <typename Rng>
hklab::ConstantForm group_average(hklab::ConstantForm const& a, int samples, Rng& rng) {
    hklab::ConstantForm acc(a.dim(), a.degree());
    for (int s = 0; s < samples; ++s) acc += hklab::su2_pullback(hklab::random_unit_quaternion(rng), a);
    return acc * (1.0 / samples);
}

template <typename Rng>
hklab::ConstantForm random_form(int dim, int degree, Rng& rng) {
    std::normal_distribution<double> g;
    hklab::ConstantForm f(dim, degree);
    for (auto& c : f.coefficients()) c = g(rng);
    return f;
}

template <typename Rng>
Eigen::VectorXd random_vector(int dim, Rng& rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = g(rng);
    return v;
}

template <typename Rng>
Eigen::MatrixXd random_matrix(int rows, int cols, Rng& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = g(rng);
    return m;
}

} // namespace oracle
