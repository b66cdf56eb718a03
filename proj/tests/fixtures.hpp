#pragma once

// Hand-built subtori of H^2 (unit lattice) with known classification.

#include "hklab/ambient.hpp"

#include <string>
#include <vector>

namespace fixture {

using hklab::Matrix;
using hklab::Vector;

inline Matrix unit_columns(std::vector<int> const& idx, int D = 8) {
    Matrix W = Matrix::Zero(D, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) W(idx[c], static_cast<Eigen::Index>(c)) = 1;
    return W;
}

/// {(v, v q)}: the graph of right multiplication by q.
inline Matrix right_graph(hklab::Quaternion const& q) {
    Matrix W = Matrix::Zero(8, 4);
    W.topRows(4) = Matrix::Identity(4, 4);
    W.bottomRows(4) = hklab::right_mult_matrix(q);
    return W;
}

enum class Expect { trianalytic, complex_i, not_complex };

struct Entry {
    hklab::AffineSubtorus X;
    Expect expect;
};

inline std::vector<Entry> catalog() {
    Vector const o = Vector::Zero(8);
    Vector shifted = Vector::Zero(8);
    shifted << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8;
    return {
        {{"H x 0", unit_columns({0, 1, 2, 3}), o}, Expect::trianalytic},
        {{"0 x H shifted", unit_columns({4, 5, 6, 7}), shifted}, Expect::trianalytic},
        {{"graph of right i", right_graph(hklab::Quaternion::i()), o}, Expect::trianalytic},
        {{"diagonal", right_graph(hklab::Quaternion::one()), o}, Expect::trianalytic},
        {{"full torus", Matrix::Identity(8, 8), o}, Expect::trianalytic},
        {{"C_i x 0", unit_columns({0, 1}), o}, Expect::complex_i},
        {{"C_i x C_i", unit_columns({0, 1, 4, 5}), shifted}, Expect::complex_i},
        {{"1,i,j x 1", unit_columns({0, 1, 2, 4}), o}, Expect::not_complex},
        {{"real plane", unit_columns({0, 4}), o}, Expect::not_complex},
    };
}

} // namespace fixture
