#pragma once

/**
 * @file selftest.hpp
 * @brief Invariant suites of every module, run by `hklab-cli selftest`.
 *
 * Suites marked finite_difference gate on a discretization tolerance that
 * `tol_override` replaces; tightening it below the discretization floor
 * (e.g. 1e-15) makes them fail by design.
 */

#include "hklab/ambient.hpp"
#include "hklab/bundles.hpp"
#include "hklab/catalog.hpp"
#include "hklab/experiments.hpp"
#include "hklab/exterior.hpp"
#include "hklab/families.hpp"
#include "hklab/hk_variety.hpp"
#include "hklab/quaternion.hpp"
#include "hklab/wirtinger.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace hklab {

struct SelftestOptions {
    std::uint64_t seed = 1;
    std::optional<double> tol_override;
    int sphere_samples = 64;
};

struct SelftestSuite {
    std::string name;
    bool finite_difference = false;
    std::function<Json(SelftestOptions const&)> run;  // metrics plus "passed"
};

struct SuiteOutcome {
    std::string name;
    Json metrics;
    bool passed = false;
    double seconds = 0;
};

namespace detail {

template <typename Rng>
Vector gaussian_vector(int n, Rng& rng) {
    std::normal_distribution<double> g;
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = g(rng);
    return v;
}

template <typename Rng>
ConstantForm gaussian_form(int dim, int degree, Rng& rng) {
    std::normal_distribution<double> g;
    ConstantForm f(dim, degree);
    for (auto m : masks_of_degree(dim, degree)) f[m] = g(rng);
    return f;
}

inline Json suite_quat_core(SelftestOptions const& o) {
    std::mt19937_64 rng(o.seed);
    double relations = 0, intertwine = 0;
    for (int t = 0; t < 100; ++t) {
        Quaternion const u = random_unit_quaternion(rng);
        auto const T = StructureTriple::rotated(u);
        Quaternion const I = T.I.quaternion(), J = T.J.quaternion(), K = T.K.quaternion();
        relations = std::max({relations, (I * J - K).norm(), (I * J + J * I).norm(), (I * I + Quaternion{1, 0, 0, 0}).norm()});
        ImaginaryUnit const L = random_imaginary_unit(rng);
        Matrix const rotated = complex_structure_operator(rotate_structure(u, L), 2);
        for (Matrix const& A : {hypercomplex_action(u, 2), su2_tangent_action(u, 2)})
            intertwine = std::max(intertwine, (A * complex_structure_operator(L, 2) * A.transpose() - rotated).norm());
    }
    return {{"cases", 100}, {"max_relation_defect", relations}, {"max_intertwining_defect", intertwine},
            {"passed", relations <= 1e-10 && intertwine <= 1e-10}};
}

inline Json suite_exterior(SelftestOptions const& o) {
    std::mt19937_64 rng(o.seed + 1);
    double idempotence = 0, lambda = 0;
    bool invariant = true;
    for (int t = 0; t < 5; ++t) {
        auto const a = su2_invariant_project(gaussian_form(8, 2, rng));
        idempotence = std::max(idempotence, (su2_invariant_project(a).coefficients() - a.coefficients()).norm());
        invariant = invariant && is_su2_invariant(a, 1e-10);
        for (int l = 0; l < 20; ++l) lambda = std::max(lambda, lambda_op(a, random_imaginary_unit(rng)).coefficients().norm());
    }
    double kahler = 0;  // w_L(v, w) = g(L v, w)
    for (int t = 0; t < 20; ++t) {
        ImaginaryUnit const L = random_imaginary_unit(rng);
        Vector const v = gaussian_vector(8, rng), w = gaussian_vector(8, rng);
        Matrix V(8, 2);
        V << v, w;
        kahler = std::max(kahler, std::abs(evaluate(kahler_form(L, 2), V) - (complex_structure_operator(L, 2) * v).dot(w)));
    }
    return {{"max_projection_idempotence_defect", idempotence}, {"projections_invariant", invariant},
            {"max_lambda_of_invariant_2forms", lambda}, {"max_kahler_form_defect", kahler},
            {"passed", invariant && idempotence <= 1e-10 && lambda <= 1e-10 && kahler <= 1e-12}};
}

inline Json suite_ambient(SelftestOptions const& o) {
    std::mt19937_64 rng(o.seed + 2);
    Matrix lattice = Matrix::Identity(4, 4);
    lattice(0, 1) = 0.5;
    lattice(2, 3) = -0.3;
    HKTorus const T(1, lattice);
    double triangle = 0, periodicity = 0;
    for (int t = 0; t < 1000; ++t) {
        Vector const x = 2 * gaussian_vector(4, rng), y = 2 * gaussian_vector(4, rng), z = 2 * gaussian_vector(4, rng);
        triangle = std::max(triangle, T.distance(x, z) - T.distance(x, y) - T.distance(y, z));
        Vector shift = lattice.col(t % 4) * static_cast<double>(t % 3 - 1);
        periodicity = std::max(periodicity, std::abs(T.distance(x + shift, y) - T.distance(x, y)));
    }
    AffineSubtorus const X{"slope 1,2", (Matrix(4, 1) << 1, 2, 0, 0).finished(), Vector::Zero(4)};
    double const vol = riemannian_volume(HKTorus(1), X);
    return {{"max_triangle_violation", triangle}, {"max_periodicity_defect", periodicity}, {"volume_slope_1_2", vol},
            {"passed", triangle <= 1e-12 && periodicity <= 1e-12 && std::abs(vol - std::sqrt(5.0)) <= 1e-12}};
}

inline Json suite_wirtinger(SelftestOptions const& o) {
    std::mt19937_64 rng(o.seed + 3);
    double excess = 0;
    std::size_t disagreements = 0, equalities = 0;
    for (int t = 0; t < 2000; ++t) {
        ImaginaryUnit const L = random_imaginary_unit(rng);
        Matrix const Lop = complex_structure_operator(L, 2);
        int const m = 1 + t % 3;
        Matrix W(8, 2 * m);
        for (int c = 0; c < m; ++c) {
            Vector const v = gaussian_vector(8, rng);
            W.col(2 * c) = v;
            W.col(2 * c + 1) = t % 2 ? Vector(Lop * v) : gaussian_vector(8, rng);
        }
        double const xi = xi_ratio(W, L);
        excess = std::max(excess, xi - 1.0);
        Matrix const Q = orthonormal_basis(W);
        bool const exact = ((Matrix::Identity(8, 8) - Q * Q.transpose()) * Lop * Q).norm() <= 1e-9;
        bool const equal = std::abs(xi - 1.0) <= 1e-9;
        equalities += equal;
        disagreements += exact != equal;
    }
    auto const records = classify_catalog(builtin_catalog(), kAffineVerdictTol, o.sphere_samples);
    Json verdicts = Json::array();
    bool agree = true;
    for (auto const& r : records) {
        verdicts.push_back(r.status == RecordStatus::ok ? to_string(r.verdict.verdict) : r.error);
        agree = agree && r.status == RecordStatus::ok;
    }
    bool const partition = verdicts == Json::array({"trianalytic", "trianalytic", "complex-only-for", "complex-only-for", "not-complex",
                                                    "not-complex"});
    return {{"subspaces", 2000}, {"max_bound_excess", excess}, {"equality_cases", equalities}, {"equality_disagreements", disagreements},
            {"catalog_verdicts", verdicts}, {"catalog_criteria_agree", agree},
            {"passed", excess <= 1e-12 && disagreements == 0 && agree && partition}};
}

inline Json suite_degree(SelftestOptions const& o) {
    std::mt19937_64 rng(o.seed + 4);
    double spread = 0;
    for (int t = 0; t < 3; ++t) spread = std::max(spread, degree_su2_invariance_check(su2_invariant_project(gaussian_form(8, 4, rng))).spread);
    auto const wI = kahler_form(ImaginaryUnit::I(), 2);
    double const control = degree_su2_invariance_check(wedge(wI, wI)).spread;
    return {{"max_invariant_spread", spread}, {"control_spread", control}, {"passed", spread <= 1e-10 && control > 0.1}};
}

inline Json suite_bundles(SelftestOptions const& o) {
    BundleCheckOptions b;
    b.seed = o.seed;
    if (o.tol_override) b.tol = *o.tol_override;
    auto const res = run_bundle_check(b);
    auto const& gc = res.report["gauss_codazzi"];
    return {{"gauss_codazzi_max_r1", gc["max_r1"].back()}, {"gauss_codazzi_max_r3", gc["max_r3"].back()},
            {"order_r1", gc["order_r1"]}, {"order_r3", gc["order_r3"]}, {"tolerance", b.tol},
            {"line_bundles", res.report["line_bundles"]}, {"passed", res.passed}};
}

inline Json suite_families(SelftestOptions const& o) {
    double const tol = o.tol_override.value_or(1e-8);
    auto const F = standard_translation_family();
    auto const samples = fiber_samples(F, F.s0, 50, o.seed);
    auto const flat = family_curvature(F, F.s0, Vector::Unit(2, 0), Vector::Unit(2, 1), 1e-2, samples);

    FamilySpec spec;
    spec.samples = 50;
    spec.seed = o.seed;
    auto const translation = run_deform(spec);
    spec.kind = "sphere";
    auto const sphere = run_deform(spec);

    auto const w = weight_argument_check();
    bool const weight_ok = w.invariant_dim == 0 && w.contrast_invariant_dim > 0;
    return {{"translation_holonomy_defect", flat.max_defect}, {"tolerance", tol},
            {"translation_report_passed", translation.passed},
            {"sphere_rotation_angle", sphere.report["curvature"]["rotation_angle"]},
            {"sphere_expected_angle", sphere.report["curvature"]["expected_angle"]},
            {"sphere_report_passed", sphere.passed},
            {"weight_invariant_dim", w.invariant_dim}, {"weight_smallest_singular", w.smallest_singular},
            {"passed", flat.max_defect <= tol && translation.passed && sphere.passed && weight_ok}};
}

inline Json suite_hk_variety(SelftestOptions const& o) {
    std::mt19937_64 rng(o.seed + 5);
    std::vector<StructureTriple> triples{StructureTriple{}};
    while (triples.size() < 20) triples.push_back(StructureTriple::rotated(random_unit_quaternion(rng)));
    double worst = hk_axiom_check(flat_hk_structure(HKTorus(2)), triples, {Vector::Zero(8)}).max_defect;
    int checked = 1;
    for (auto const& X : builtin_catalog().entries) {
        if (!is_quaternionic_subspace(X.basis)) continue;
        auto const D = flat_hk_structure(X);
        worst = std::max(worst, hk_axiom_check(D, triples, {Vector::Zero(D.dim)}).max_defect);
        ++checked;
    }
    return {{"structures_checked", checked}, {"triples", 20}, {"max_defect", worst}, {"passed", worst <= 1e-10}};
}

} // namespace detail

inline std::vector<SelftestSuite> selftest_suites() {
    return {{"quat_core", false, detail::suite_quat_core},   {"exterior", false, detail::suite_exterior},
            {"ambient", false, detail::suite_ambient},       {"wirtinger", false, detail::suite_wirtinger},
            {"degree", false, detail::suite_degree},         {"bundles", true, detail::suite_bundles},
            {"families", true, detail::suite_families},      {"hk_variety", false, detail::suite_hk_variety}};
}

inline std::vector<SuiteOutcome> run_selftest(SelftestOptions const& opt) {
    std::vector<SuiteOutcome> out;
    for (auto const& s : selftest_suites()) {
        auto const t0 = std::chrono::steady_clock::now();
        SuiteOutcome r;
        r.name = s.name;
        try {
            r.metrics = s.run(opt);
            r.passed = r.metrics.value("passed", false);
        } catch (std::exception const& e) {
            r.metrics = {{"error", e.what()}, {"passed", false}};
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(std::move(r));
    }
    return out;
}

/// Timing-free report, identical across runs with the same options.
inline Json selftest_report(SelftestOptions const& opt, std::vector<SuiteOutcome> const& outcomes) {
    Json j;
    j["seed"] = opt.seed;
    if (opt.tol_override) j["tolerance_override"] = *opt.tol_override;
    j["suites"] = Json::array();
    bool all = true;
    for (auto const& s : outcomes) {
        j["suites"].push_back({{"name", s.name}, {"passed", s.passed}, {"metrics", s.metrics}});
        all = all && s.passed;
    }
    j["passed"] = all;
    return j;
}

} // namespace hklab
