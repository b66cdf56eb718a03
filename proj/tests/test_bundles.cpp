#include "hklab/bundles.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace hklab;

namespace {

constexpr Complex kI{0, 1};

ConstantForm anti_self_dual() {
    ConstantForm F(4, 2);
    F[0b0011] = 1;
    F[0b1100] = -1;
    return F;
}

Vector box(double v, int d = 4) { return Vector::Constant(d, v); }

/// span{(cos k x0, e^{i mu y} sin k x0)} in C^2 over H, y = x_{y_axis}.
SubbundleField rotating_line(double kappa, double mu, double h = 1e-3, int y_axis = 2) {
    SubbundleField S;
    S.rank = 2;
    S.sub_rank = 1;
    S.frame = [kappa, mu, y_axis](Vector const& x) {
        CMatrix e(2, 1);
        e << std::cos(kappa * x[0]), std::exp(kI * (mu * x[y_axis])) * std::sin(kappa * x[0]);
        return e;
    };
    S.lo = box(0.1);
    S.hi = box(0.7);
    S.h = h;
    return S;
}

/// span{(1, z^2)} with z = x0 + i x1, holomorphic for I.
SubbundleField holomorphic_graph() {
    SubbundleField S;
    S.frame = [](Vector const& x) {
        Complex const z(x[0], x[1]);
        CMatrix e(2, 1);
        e << 1.0, z * z;
        return CMatrix(e / e.norm());
    };
    S.lo = box(0.1);
    S.hi = box(0.6);
    return S;
}

SubbundleField constant_subbundle(int r, int k) {
    SubbundleField S;
    S.rank = r;
    S.sub_rank = k;
    S.frame = [r, k](Vector const&) { return CMatrix(CMatrix::Identity(r, k)); };
    S.lo = box(0);
    S.hi = box(1);
    return S;
}

SubbundleField random_subbundle(int r, int k, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    auto cm = [&] {
        CMatrix m(r, k);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = Complex(g(rng), g(rng));
        return m;
    };
    CMatrix const M0 = cm();
    std::vector<CMatrix> M1, M2;
    for (int a = 0; a < 4; ++a) {
        M1.push_back(0.5 * cm());
        M2.push_back(0.3 * cm());
    }
    SubbundleField S;
    S.rank = r;
    S.sub_rank = k;
    S.frame = [=](Vector const& x) {
        CMatrix m = M0;
        for (int a = 0; a < 4; ++a) m += x[a] * M1[a] + std::sin(x[a] * x[(a + 1) % 4]) * M2[a];
        Eigen::HouseholderQR<CMatrix> qr(m);
        return CMatrix(qr.householderQ() * CMatrix::Identity(r, k));
    };
    S.lo = box(-0.3);
    S.hi = box(0.3);
    return S;
}

double fitted_order(std::vector<double> const& h, std::vector<double> const& r) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    auto const n = static_cast<double>(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        double const x = std::log(h[i]), y = std::log(r[i]);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace

TEST(LineBundle, HyperholomorphicExamples) {
    EXPECT_FALSE(is_hyperholomorphic(kahler_form(ImaginaryUnit::I(), 1)));
    EXPECT_TRUE(is_hyperholomorphic(anti_self_dual()));
    EXPECT_TRUE(is_hyperholomorphic(ConstantForm(4, 2)));
    EXPECT_TRUE(is_hyperholomorphic(ConstantCurvatureLineBundle{anti_self_dual()}));
    EXPECT_THROW(is_hyperholomorphic(wedge(kahler_form(ImaginaryUnit::I(), 1), kahler_form(ImaginaryUnit::I(), 1))),
                 std::invalid_argument);
    // averaging oracle: the Haar average of an invariant form is itself
    std::mt19937_64 rng(41);
    auto const avg = oracle::group_average(anti_self_dual(), 400, rng);
    EXPECT_LE((avg - anti_self_dual()).norm(), 1e-12);
    // ... and it fixes the (1,1)-part for sampled L
    for (int t = 0; t < 20; ++t) {
        auto const hd = hodge_components(anti_self_dual(), random_imaginary_unit(rng));
        EXPECT_LE((hd.component(1, 1) - anti_self_dual().to_complex()).norm(), 1e-12);
    }
}

TEST(LineBundle, YangMillsDefectExamples) {
    for (int n : {1, 2}) {
        EXPECT_NEAR(yang_mills_defect(kahler_form(ImaginaryUnit::I(), n), ImaginaryUnit::I()), 2.0 * n, 1e-13);
        EXPECT_NEAR(yang_mills_defect(kahler_form(ImaginaryUnit::J(), n), ImaginaryUnit::I()), 0.0, 1e-14);
    }
    EXPECT_FALSE(is_hyperholomorphic(kahler_form(ImaginaryUnit::J(), 1)));
    std::mt19937_64 rng(42);
    for (int t = 0; t < 20; ++t) EXPECT_LE(yang_mills_defect(anti_self_dual(), random_imaginary_unit(rng)), 1e-14);
}

TEST(LineBundle, DegreeSlopeExamples) {
    auto const ds = degree_slope(kahler_form(ImaginaryUnit::I(), 1), ImaginaryUnit::I(), 1);
    EXPECT_NEAR(ds.degree, 2.0, 1e-14);
    auto const ds2 = degree_slope(kahler_form(ImaginaryUnit::I(), 1), ImaginaryUnit::I(), 2, HKTorus(1, 2.0 * Matrix::Identity(4, 4)));
    EXPECT_NEAR(ds2.degree, 32.0, 1e-12);
    EXPECT_NEAR(ds2.slope, 16.0, 1e-12);
    std::mt19937_64 rng(43);
    for (int t = 0; t < 10; ++t) EXPECT_NEAR(degree_slope(anti_self_dual(), random_imaginary_unit(rng)).degree, 0.0, 1e-14);
    auto const zero = degree_slope(ConstantForm(4, 2), ImaginaryUnit::K(), 3);
    EXPECT_EQ(zero.degree, 0.0);
    EXPECT_EQ(zero.slope, 0.0);
    EXPECT_THROW(degree_slope(anti_self_dual(), ImaginaryUnit::I(), 0), std::invalid_argument);
}

TEST(LineBundle, HyperholomorphicImpliesYangMillsAndDegreeZero) {
    std::mt19937_64 rng(44);
    for (int n : {1, 2}) {
        for (int t = 0; t < 10; ++t) {
            ConstantForm const F = su2_invariant_project(oracle::random_form(4 * n, 2, rng));
            ASSERT_TRUE(is_hyperholomorphic(F));
            double lo = 1e300, hi = -1e300;
            for (auto const& L : structure_samples(20)) {
                EXPECT_LE(yang_mills_defect(F, L), 1e-10);
                double const d = degree_slope(F, L).degree;
                lo = std::min(lo, d);
                hi = std::max(hi, d);
                EXPECT_NEAR(d, 0.0, 1e-10);
            }
            EXPECT_LE(hi - lo, 1e-10);
        }
        // and a generic form fails both
        ConstantForm const G = oracle::random_form(4 * n, 2, rng);
        EXPECT_FALSE(is_hyperholomorphic(G));
    }
}

TEST(SecondFundamentalForm, ConstantSubbundleVanishes) {
    auto const S = constant_subbundle(3, 1);
    EXPECT_EQ(second_fundamental_form(S, ImaginaryUnit::I()).max_norm(), 0.0);
    auto const gc = gauss_codazzi_check(S, ImaginaryUnit::I(), 1e-3);
    EXPECT_EQ(gc.max_r1, 0.0);
    EXPECT_EQ(gc.max_r3, 0.0);
    auto const sp = splitting_check(S, ImaginaryUnit::I(), 1e-10);
    EXPECT_TRUE(sp.splits);
    EXPECT_TRUE(sp.implication_holds);
    EXPECT_EQ(sp.lambda1, 0.0);
}

TEST(SecondFundamentalForm, RotatingLineClosedForm) {
    double const kappa = 1.3;
    auto const S = rotating_line(kappa, 0.0);
    auto const A = second_fundamental_form(S, ImaginaryUnit::I());
    for (std::size_t i = 0; i < A.nodes.size(); ++i) EXPECT_NEAR(A.norm_at(i), kappa / std::sqrt(2.0), 1e-6);

    double const mu = 0.7;
    auto const B = full_second_fundamental_form(rotating_line(kappa, mu));
    for (std::size_t i = 0; i < B.nodes.size(); ++i) {
        double const x = B.nodes[i][0];
        EXPECT_NEAR(std::abs(B.values[i][0](0, 0)), kappa, 1e-6);
        EXPECT_NEAR(std::abs(B.values[i][2](0, 0)), std::abs(mu * std::sin(kappa * x) * std::cos(kappa * x)), 1e-6);
        EXPECT_NEAR(std::abs(B.values[i][1](0, 0)) + std::abs(B.values[i][3](0, 0)), 0.0, 1e-9);
    }
}

TEST(SecondFundamentalForm, HolomorphicGraphHasNoZeroOnePart) {
    auto const S = holomorphic_graph();
    EXPECT_LE(second_fundamental_form(S, ImaginaryUnit::I()).max_norm(), 1e-6);
    EXPECT_GT(full_second_fundamental_form(S).max_norm(), 0.1);
    EXPECT_GT(second_fundamental_form(S, ImaginaryUnit::J()).max_norm(), 0.05);
}

TEST(InducedCurvature, RotatingLineMatchesClosedForm) {
    double const kappa = 1.3, mu = 0.7;
    auto const S = rotating_line(kappa, mu);
    auto const c = induced_curvature(S, 1e-3);
    auto const p02 = CurvatureField::pair_index(0, 2, 4);
    for (std::size_t i = 0; i < c.theta1.nodes.size(); ++i) {
        Complex const expected = kI * mu * kappa * std::sin(2 * kappa * c.theta1.nodes[i][0]);
        for (std::size_t p = 0; p < 6; ++p) {
            Complex const want = p == p02 ? expected : Complex(0);
            EXPECT_NEAR(std::abs(c.theta1.values[i][p](0, 0) - want), 0.0, 1e-5);
            EXPECT_NEAR(std::abs(c.theta3.values[i][p](0, 0) + want), 0.0, 1e-5);
        }
    }
}

TEST(GaussCodazzi, RotatingLineConvergesAtSecondOrder) {
    auto const S = rotating_line(1.3, 0.7);
    std::vector<double> hs{8e-3, 4e-3, 2e-3, 1e-3}, r1, r3;
    for (double h : hs) {
        auto const rep = gauss_codazzi_check(S, ImaginaryUnit::I(), h);
        r1.push_back(rep.max_r1);
        r3.push_back(rep.max_r3);
        EXPECT_GE(rep.min_positivity, -1e-12);
    }
    EXPECT_LE(r1.back(), 1e-4);
    EXPECT_LE(r3.back(), 1e-4);
    EXPECT_GE(fitted_order(hs, r1), 1.9);
    EXPECT_GE(fitted_order(hs, r3), 1.9);
}

TEST(GaussCodazzi, RandomSubbundles) {
    std::mt19937_64 rng(45);
    for (auto [r, k] : {std::pair{3, 1}, std::pair{4, 2}, std::pair{3, 2}}) {
        auto S = random_subbundle(r, k, rng);
        S.grid = 2;
        for (auto const& L : {ImaginaryUnit::I(), ImaginaryUnit::from_direction(1, -2, 0.5)}) {
            auto const rep = gauss_codazzi_check(S, L, 1e-3);
            EXPECT_LE(rep.max_r1, 1e-4);
            EXPECT_LE(rep.max_r3, 1e-4);
            EXPECT_GE(rep.min_positivity, -1e-12);
        }
    }
}

TEST(GaussCodazzi, PositivityVanishesOnlyWithA) {
    auto const hol = gauss_codazzi_check(holomorphic_graph(), ImaginaryUnit::I(), 1e-3);
    for (auto const& row : hol.rows) EXPECT_NEAR(row.positivity, 0.0, 1e-10);
    auto const rot = gauss_codazzi_check(rotating_line(1.3, 0.7), ImaginaryUnit::I(), 1e-3);
    for (auto const& row : rot.rows) {
        EXPECT_GT(row.norm_A, 0.1);
        EXPECT_GT(row.positivity, 1e-3);
    }
    std::ostringstream csv;
    rot.write_csv(csv);
    std::string const text = csv.str();
    EXPECT_EQ(text.rfind("node,r1,r3,norm_A,norm_B,lambda1,lambda3,positivity\n", 0), 0u);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(rot.rows.size() + 1));
}

TEST(Splitting, Examples) {
    // phase along x1, the I-partner of x0, so Lambda_I sees the curvature
    auto const rot = splitting_check(rotating_line(1.3, 0.7, 1e-3, 1), ImaginaryUnit::I(), 1e-6);
    EXPECT_GT(rot.lambda1, 1e-3);
    EXPECT_GT(rot.max_A, 1e-3);
    EXPECT_FALSE(rot.splits);
    EXPECT_TRUE(rot.implication_holds);

    // real rotation: flat induced connections although B != 0 (not a holomorphic subbundle)
    auto const flat = splitting_check(rotating_line(1.3, 0.0), ImaginaryUnit::I(), 1e-6);
    EXPECT_LE(flat.lambda1, 1e-6);
    EXPECT_FALSE(flat.implication_holds);

    // holomorphic subbundle: Lambda-defect is sign-definite, so it cannot vanish
    auto const hol = splitting_check(holomorphic_graph(), ImaginaryUnit::I(), 1e-6);
    EXPECT_GT(hol.lambda1, 1e-3);
    EXPECT_TRUE(hol.implication_holds);

    // normal bundle of H x 0 in H^2 = C^4 (structure i): a constant frame
    SubbundleField N = constant_subbundle(4, 2);
    N.frame = [](Vector const&) {
        CMatrix e = CMatrix::Zero(4, 2);
        e(2, 0) = e(3, 1) = 1;
        return e;
    };
    auto const sp = splitting_check(N, ImaginaryUnit::I(), 1e-10);
    EXPECT_TRUE(sp.splits);
    EXPECT_TRUE(sp.implication_holds);
}

TEST(Splitting, FrameJumpIsDetected) {
    SubbundleField S = constant_subbundle(2, 1);
    S.frame = [](Vector const& x) {
        CMatrix e = CMatrix::Zero(2, 1);
        e(x[0] < 0.5 ? 0 : 1, 0) = 1;
        return e;
    };
    S.lo = box(0.5);
    S.hi = box(0.6);
    EXPECT_THROW(gauss_codazzi_check(S, ImaginaryUnit::I(), 1e-3), FrameDiscontinuity);
}

TEST(Triholomorphic, Examples) {
    AffineSubtorus const X{"H", Matrix::Identity(8, 8).leftCols(4), Vector::Zero(8)};
    auto constant = [](Vector const&) { CVector v(2); v << 1.0, kI; return v; };
    auto const c = triholomorphic_section_parallel(constant, X, ImaginaryUnit::I());
    EXPECT_LE(c.dbar_I + c.dbar_minus_I + c.d_nu, 1e-12);
    EXPECT_TRUE(c.parallel);

    // linear I-holomorphic function z = x0 + i x1: Cauchy-Riemann gives |dbar_{-I}| = |d nu| = sqrt 2
    auto holo = [](Vector const& x) { CVector v(1); v << Complex(x[0], x[1]); return v; };
    auto const h = triholomorphic_section_parallel(holo, X, ImaginaryUnit::I());
    EXPECT_LE(h.dbar_I, 1e-10);
    EXPECT_NEAR(h.dbar_minus_I, std::sqrt(2.0), 1e-10);
    EXPECT_NEAR(h.d_nu, std::sqrt(2.0), 1e-10);
    EXPECT_FALSE(h.parallel);
    EXPECT_TRUE(h.implication_holds);

    auto anti = [](Vector const& x) { CVector v(1); v << Complex(x[0], -x[1]); return v; };
    auto const a = triholomorphic_section_parallel(anti, X, ImaginaryUnit::I());
    EXPECT_LE(a.dbar_minus_I, 1e-10);
    EXPECT_NEAR(a.dbar_I, std::sqrt(2.0), 1e-10);
    EXPECT_FALSE(a.parallel);

    AffineSubtorus const bad{"C", Matrix::Identity(8, 8).leftCols(2), Vector::Zero(8)};
    EXPECT_THROW(triholomorphic_section_parallel(constant, bad, ImaginaryUnit::I()), std::invalid_argument);
}
