#include "hklab/exterior.hpp"

#include "oracles.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <gtest/gtest.h>

#include <random>

using namespace hklab;

namespace {

Mask m2(int a, int b) { return (Mask{1} << a) | (Mask{1} << b); }

ConstantForm sum_of_squares(int n) {
    ConstantForm s(4 * n, 4);
    for (auto const& L : {ImaginaryUnit::I(), ImaginaryUnit::J(), ImaginaryUnit::K()}) {
        auto w = kahler_form(L, n);
        s += wedge(w, w);
    }
    return s;
}

/// alpha(I v, I w) for a 2-form, through the coordinate matrix.
Matrix pair_matrix(ConstantForm const& w) {
    Matrix m = Matrix::Zero(w.dim(), w.dim());
    for (int a = 0; a < w.dim(); ++a)
        for (int b = 0; b < w.dim(); ++b) m(a, b) = w.pair(a, b);
    return m;
}

} // namespace

TEST(ConstantForm, StorageAndIndexing) {
    ConstantForm f(8, 4);
    EXPECT_EQ(f.size(), 70u);
    EXPECT_EQ(volume_form(8).size(), 1u);
    f[m2(1, 5) | m2(6, 7)] = 3.0;
    EXPECT_EQ(f[m2(1, 5) | m2(6, 7)], 3.0);
    EXPECT_THROW(ConstantForm(4, 5), std::invalid_argument);
}

TEST(ConstantForm, EvaluateMatchesLeibnizOracle) {
    std::mt19937_64 rng(1);
    for (int deg : {1, 2, 3, 4}) {
        auto a = oracle::random_form(6, deg, rng);
        std::vector<Eigen::VectorXd> v;
        Matrix V(6, deg);
        for (int k = 0; k < deg; ++k) v.push_back(oracle::random_vector(6, rng)), V.col(k) = v.back();
        EXPECT_NEAR(evaluate(a, V), oracle::evaluate(a, v), 1e-10);
    }
}

TEST(ConstantForm, WedgeMatchesPermutationOracle) {
    std::mt19937_64 rng(2);
    for (auto [p, q] : {std::pair{1, 1}, {1, 2}, {2, 2}, {1, 3}, {2, 3}}) {
        auto a = oracle::random_form(6, p, rng);
        auto b = oracle::random_form(6, q, rng);
        std::vector<Eigen::VectorXd> v;
        Matrix V(6, p + q);
        for (int k = 0; k < p + q; ++k) v.push_back(oracle::random_vector(6, rng)), V.col(k) = v.back();
        EXPECT_NEAR(evaluate(wedge(a, b), V), oracle::wedge_evaluate(a, b, v), 1e-9);
    }
}

TEST(ConstantForm, WedgeAssociativeAndGradedCommutative) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        auto a = oracle::random_form(8, 1 + t % 3, rng);
        auto b = oracle::random_form(8, 1 + (t / 3) % 2, rng);
        auto c = oracle::random_form(8, 2, rng);
        EXPECT_LE((wedge(wedge(a, b), c) - wedge(a, wedge(b, c))).norm(), 1e-9);
        double const sign = (a.degree() * b.degree()) % 2 ? -1.0 : 1.0;
        EXPECT_LE((wedge(a, b) - sign * wedge(b, a)).norm(), 1e-10);
    }
}

TEST(ConstantForm, PullbackIsFunctorialAndMultiplicative) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 10; ++t) {
        Matrix A = oracle::random_matrix(6, 6, rng), B = oracle::random_matrix(6, 6, rng);
        auto a = oracle::random_form(6, 2, rng), b = oracle::random_form(6, 1, rng);
        EXPECT_LE((pullback(pullback(a, A), B) - pullback(a, A * B)).norm(), 1e-8 * (1 + a.norm()));
        EXPECT_LE((pullback(wedge(a, b), A) - wedge(pullback(a, A), pullback(b, A))).norm(), 1e-8 * (1 + a.norm()));
    }
}

TEST(ConstantForm, DerivationIsDerivativeOfPullback) {
    std::mt19937_64 rng(5);
    auto a = oracle::random_form(6, 3, rng);
    Matrix X = oracle::random_matrix(6, 6, rng);
    double const h = 1e-6;
    Matrix const Ep = (h * X).exp(), Em = (-h * X).exp();
    ConstantForm fd = (pullback(a, Ep) - pullback(a, Em)) * (1.0 / (2 * h));
    EXPECT_LE((fd - derivation(a, X)).norm(), 1e-6 * a.norm());
}

TEST(KahlerForm, BasisValues) {
    auto w = kahler_form(ImaginaryUnit::I(), 1);
    EXPECT_DOUBLE_EQ(w[m2(0, 1)], 1.0);  // g(i*1, i)
    EXPECT_DOUBLE_EQ(w[m2(2, 3)], 1.0);  // g(i*j, k)
    EXPECT_DOUBLE_EQ(w[m2(0, 2)], 0.0);
}

TEST(KahlerForm, LinearInTheStructure) {
    double const r = 1 / std::sqrt(2.0);
    auto w = kahler_form(ImaginaryUnit(r, r, 0), 2);
    auto expected = (kahler_form(ImaginaryUnit::I(), 2) + kahler_form(ImaginaryUnit::J(), 2)) * r;
    EXPECT_LE((w - expected).norm(), 1e-14);
}

TEST(KahlerForm, NondegenerateTopPower) {
    for (int n : {1, 2}) {
        auto w = kahler_form(ImaginaryUnit(0, 0.6, 0.8), n);
        // w^{2n} = (2n)! Vol for a Kahler form in an adapted orthonormal frame
        EXPECT_NEAR(wedge_power(w, 2 * n).top(), oracle::factorial(2 * n), 1e-10);
    }
}

TEST(HolomorphicSymplectic, BasisValuesAndType) {
    auto const Omega = holomorphic_symplectic({}, 1);
    EXPECT_NEAR(std::abs(Omega[m2(0, 2)] - Complex(1, 0)), 0, 1e-15);  // Omega(1, j)
    EXPECT_NEAR(std::abs(Omega[m2(0, 3)] - Complex(0, 1)), 0, 1e-15);  // Omega(1, k)

    auto const hd = hodge_components(Omega, ImaginaryUnit::I());
    EXPECT_LE((hd.component(2, 0) - Omega).norm(), 1e-12);
    EXPECT_LE(hd.component(1, 1).norm(), 1e-12);
    EXPECT_LE(hd.component(0, 2).norm(), 1e-12);

    // Omega vanishes on the -sqrt(-1) eigenspace of I
    Matrix const I = complex_structure_operator(ImaginaryUnit::I(), 1);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(I.cast<Complex>());
    Eigen::MatrixXcd anti(4, 0);
    for (int c = 0; c < 4; ++c)
        if (std::abs(es.eigenvalues()[c] - Complex(0, -1)) < 1e-9) {
            anti.conservativeResize(4, anti.cols() + 1);
            anti.col(anti.cols() - 1) = es.eigenvectors().col(c);
        }
    ASSERT_EQ(anti.cols(), 2);
    EXPECT_LE(std::abs(evaluate(Omega, anti)), 1e-12);

    // Omega^n != 0 while Omega^{n+1} is of type (2n+2, 0), hence zero
    for (int n : {1, 2}) EXPECT_GT(wedge_power(holomorphic_symplectic({}, n), n).norm(), 0.5);
    EXPECT_LE(wedge_power(Omega, 2).norm(), 1e-14);

    StructureTriple bad{ImaginaryUnit::J(), ImaginaryUnit::I(), ImaginaryUnit::K()};
    EXPECT_THROW(holomorphic_symplectic(bad, 1), std::invalid_argument);
}

TEST(HodgeComponents, KahlerFormIsOneOne) {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 5; ++t) {
        auto L = random_imaginary_unit(rng);
        auto w = kahler_form(L, 2);
        auto hd = hodge_components(w, L);
        EXPECT_LE((hd.component(1, 1) - w.to_complex()).norm(), 1e-12);
    }
}

TEST(HodgeComponents, OmegaJAgainstIIsTwoZeroPlusZeroTwo) {
    auto wJ = kahler_form(ImaginaryUnit::J(), 2);
    // oracle: a 2-form is of type (2,0)+(0,2) for I iff a(Iv, Iw) = -a(v, w)
    Matrix const I = complex_structure_operator(ImaginaryUnit::I(), 2);
    Matrix const P = pair_matrix(wJ);
    EXPECT_LE((I.transpose() * P * I + P).norm(), 1e-14);

    auto hd = hodge_components(wJ, ImaginaryUnit::I());
    EXPECT_LE(hd.component(1, 1).norm(), 1e-12);
    EXPECT_GT(hd.component(2, 0).norm(), 0.5);
    EXPECT_GT(hd.component(0, 2).norm(), 0.5);
    EXPECT_LE((hd.sum() - wJ.to_complex()).norm(), 1e-12);
}

TEST(HodgeComponents, ScalarsAndSumReproduces) {
    auto c = ConstantForm::scalar(8, 2.5);
    auto hd = hodge_components(c, ImaginaryUnit::K());
    ASSERT_EQ(hd.components.size(), 1u);
    EXPECT_NEAR(std::abs(hd.component(0, 0)[0] - Complex(2.5)), 0, 1e-14);

    std::mt19937_64 rng(7);
    for (int deg : {1, 2, 3, 4}) {
        auto a = oracle::random_form(8, deg, rng);
        auto hd2 = hodge_components(a, random_imaginary_unit(rng));
        EXPECT_LE((hd2.sum() - a.to_complex()).norm(), 1e-12 * a.norm());
        EXPECT_EQ(hd2.components.size(), static_cast<std::size_t>(deg + 1));
    }
}

TEST(Su2Pullback, Examples) {
    std::mt19937_64 rng(8);
    auto a = oracle::random_form(8, 3, rng);
    EXPECT_LE((su2_pullback(Quaternion::one(), a) - a).norm(), 1e-13);

    for (int t = 0; t < 10; ++t) {
        Quaternion u = random_unit_quaternion(rng);
        ImaginaryUnit L = random_imaginary_unit(rng);
        auto lhs = su2_pullback(u, kahler_form(L, 2));
        auto rhs = kahler_form(rotate_structure(u.conj(), L), 2);
        EXPECT_LE((lhs - rhs).norm(), 1e-12);
        EXPECT_LE((su2_pullback(u, volume_form(8)) - volume_form(8)).norm(), 1e-12);
        // functoriality: (A_u A_v)^* = A_v^* A_u^*
        Quaternion v = random_unit_quaternion(rng);
        EXPECT_LE((su2_pullback(v, su2_pullback(u, a)) - su2_pullback(u * v, a)).norm(), 1e-11);
        // preserves wedge products
        auto b = oracle::random_form(8, 2, rng);
        EXPECT_LE((su2_pullback(u, wedge(a, b)) - wedge(su2_pullback(u, a), su2_pullback(u, b))).norm(), 1e-10);
    }
}

TEST(Su2InvariantProject, AgreesWithGroupAveraging) {
    std::mt19937_64 rng(9);
    auto triplet = kahler_form(ImaginaryUnit::I(), 1) + kahler_form(ImaginaryUnit::J(), 1) + kahler_form(ImaginaryUnit::K(), 1);
    auto avg = oracle::group_average(triplet, 1000, rng);
    EXPECT_LE(avg.norm(), 0.15 * triplet.norm());
    EXPECT_LE(su2_invariant_project(triplet).norm(), 1e-12);

    auto squares = sum_of_squares(1);
    auto avg2 = oracle::group_average(squares, 1000, rng);
    EXPECT_LE((avg2 - squares).norm(), 1e-10 * squares.norm());
    EXPECT_LE((su2_invariant_project(squares) - squares).norm(), 1e-10 * squares.norm());

    auto c = ConstantForm::scalar(8, -3.0);
    EXPECT_LE((su2_invariant_project(c) - c).norm(), 1e-14);

    // idempotent, and the MC average of a random form tracks the projection
    auto r = oracle::random_form(8, 2, rng);
    auto p = su2_invariant_project(r);
    EXPECT_LE((su2_invariant_project(p) - p).norm(), 1e-12);
    EXPECT_LE((oracle::group_average(r, 2000, rng) - p).norm(), 0.15 * r.norm());
}

TEST(IsSu2Invariant, Examples) {
    auto wI = kahler_form(ImaginaryUnit::I(), 1);
    double const r = 1 / std::sqrt(2.0);
    EXPECT_GT((su2_pullback(Quaternion{r, 0, 0, r}, wI) - wI).norm(), 0.5);
    EXPECT_FALSE(is_su2_invariant(wI, 1e-8));
    EXPECT_TRUE(is_su2_invariant(sum_of_squares(2), 1e-8));
    EXPECT_TRUE(is_su2_invariant(volume_form(8), 1e-8));
    EXPECT_TRUE(is_su2_invariant(ConstantForm(8, 2), 1e-8));
    // anti-self-dual 2-form on H
    ConstantForm asd(4, 2);
    asd[m2(0, 1)] = 1;
    asd[m2(2, 3)] = -1;
    EXPECT_TRUE(is_su2_invariant(asd, 1e-10));
}

TEST(LambdaOp, Examples) {
    for (int n : {1, 2}) {
        for (auto L : {ImaginaryUnit::I(), ImaginaryUnit(0, 0.6, 0.8)}) {
            auto l = lambda_op(kahler_form(L, n), L);
            ASSERT_EQ(l.degree(), 0);
            EXPECT_NEAR(l[0], 2.0 * n, 1e-12);
        }
        EXPECT_NEAR(lambda_op(kahler_form(ImaginaryUnit::J(), n), ImaginaryUnit::I())[0], 0.0, 1e-14);
    }
    EXPECT_THROW(lambda_op(ConstantForm(4, 1), ImaginaryUnit::I()), std::invalid_argument);

    // Lambda_L w_L via the inner product pairing <w ^ 1, w> = |w|^2
    auto w = kahler_form(ImaginaryUnit::K(), 2);
    EXPECT_NEAR(inner(w, w), 4.0, 1e-12);
}

TEST(ExteriorProperties, PpCriterionMatchesInvariance) {
    std::mt19937_64 rng(10);
    int invariant_count = 0;
    for (int t = 0; t < 100; ++t) {
        int const deg = (t % 2) ? 4 : 2;
        auto a = oracle::random_form(8, deg, rng);
        if (t % 3 == 0) a = su2_invariant_project(a);  // exercise the invariant side too
        if (a.norm() < 1e-9) a = sum_of_squares(2);
        bool const inv = is_su2_invariant(a, 1e-8);
        invariant_count += inv;
        bool pp = true;
        for (int s = 0; s < 20; ++s) {
            auto hd = hodge_components(a, random_imaginary_unit(rng));
            auto const& mid = hd.component(deg / 2, deg / 2);
            if ((mid - a.to_complex()).norm() > 1e-8 * a.norm()) pp = false;
        }
        EXPECT_EQ(inv, pp) << "trial " << t;
    }
    EXPECT_GE(invariant_count, 30);
}

TEST(ExteriorProperties, LambdaVanishesOnInvariantTwoForms) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 20; ++t) {
        auto a = su2_invariant_project(oracle::random_form(8, 2, rng));
        ASSERT_TRUE(is_su2_invariant(a, 1e-10));
        for (int s = 0; s < 20; ++s) EXPECT_LE(lambda_op(a, random_imaginary_unit(rng)).norm(), 1e-10 * a.norm());
    }
}

TEST(ExteriorProperties, LaplacianCommutesWithSu2) {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 10; ++t) {
        FourierForm f{oracle::random_form(8, 2, rng), Vector::Zero(8)};
        f.frequency << 1, 0, -2, 3, 0, 1, 0, 0;
        Quaternion u = random_unit_quaternion(rng);
        auto lhs = laplacian(su2_pullback(u, f));
        auto rhs = su2_pullback(u, laplacian(f));
        EXPECT_LE((lhs.base - rhs.base).norm(), 1e-10 * rhs.base.norm());
        EXPECT_LE((lhs.frequency - rhs.frequency).norm(), 1e-12);
        EXPECT_NEAR(su2_pullback(u, f).frequency.norm(), f.frequency.norm(), 1e-12);
    }
}

TEST(ExteriorProperties, WedgeLambdaDuality) {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 20; ++t) {
        ImaginaryUnit L = random_imaginary_unit(rng);
        auto beta = oracle::random_form(8, 1 + t % 3, rng);
        auto gamma = oracle::random_form(8, beta.degree() + 2, rng);
        double const lhs = inner(wedge(kahler_form(L, 2), beta), gamma);
        double const rhs = inner(beta, lambda_op(gamma, L));
        EXPECT_NEAR(lhs, rhs, 1e-10 * (1 + std::abs(lhs)));
    }
}
