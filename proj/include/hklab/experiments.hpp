#pragma once

/**
 * @file experiments.hpp
 * @brief Report-producing runs behind the `deform` and `bundle-check`
 *        subcommands: a family transport study and the bundle identity checks.
 */

#include "hklab/bundles.hpp"
#include "hklab/catalog.hpp"
#include "hklab/exterior.hpp"
#include "hklab/families.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace hklab {

/// Least-squares slope of log r against log h.
inline double convergence_order(std::vector<double> const& h, std::vector<double> const& r) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    auto const n = static_cast<double>(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        double const x = std::log(h[i]), y = std::log(r[i]);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Families

struct FamilySpec {
    std::string kind = "translation";  // "translation" or "sphere"
    int samples = 1000;
    std::vector<double> from;          // base points; empty selects the defaults
    std::vector<double> to;
    double h = 0;                      // curvature loop size; 0 selects 1e-2 (translation) or 0.1 (sphere)
    int random_structures = 8;
    std::uint64_t seed = 1;
    double tol = 1e-6;
};

/// H x 0 in H^2 translated along two normal directions, base [-1, 1]^2.
inline DeformationFamily standard_translation_family() {
    Matrix B = Matrix::Zero(8, 2);
    B(4, 0) = 1;
    B(6, 1) = B(7, 1) = std::sqrt(0.5);
    Matrix W = Matrix::Zero(8, 4);
    W.topRows(4) = Matrix::Identity(4, 4);
    return translation_family(HKTorus(2), AffineSubtorus{"H x 0", W, Vector::Zero(8)}, B, Vector::Constant(2, -1),
                              Vector::Constant(2, 1), Vector::Zero(2));
}

/// Great circles of the unit sphere with poles (theta, phi) in [0.3, 1.2] x [0, 1].
inline DeformationFamily standard_sphere_family() {
    Vector lo(2), hi(2), s0(2);
    lo << 0.3, 0.0;
    hi << 1.2, 1.0;
    s0 << 0.7, 0.2;
    return great_circle_family(RoundSphere{2, 1.0}, lo, hi, s0);
}

struct DeformResult {
    Json report;
    bool passed = false;
};

/// Transport, isometry, holomorphy, path independence, connection axiom and curvature of a standard family.
inline DeformResult run_deform(FamilySpec const& spec) {
    bool const sphere = spec.kind == "sphere";
    if (!sphere && spec.kind != "translation") throw std::invalid_argument("unknown family kind '" + spec.kind + "'");
    if (spec.samples < 2) throw std::invalid_argument("need at least 2 samples");
    if (!(spec.tol > 0) || spec.h < 0) throw std::invalid_argument("tolerance must be positive and loop size non-negative");
    double const loop_h = spec.h > 0 ? spec.h : (sphere ? 0.1 : 1e-2);
    auto const F = sphere ? standard_sphere_family() : standard_translation_family();
    auto point = [&](std::vector<double> const& v, Vector const& fallback) {
        if (v.empty()) return fallback;
        if (static_cast<int>(v.size()) != F.base_dim()) throw std::invalid_argument("path endpoints need " + std::to_string(F.base_dim()) + " coordinates");
        Vector p = Eigen::Map<Vector const>(v.data(), static_cast<Eigen::Index>(v.size()));
        for (int i = 0; i < F.base_dim(); ++i)
            if (p[i] < F.base_lo[i] || p[i] > F.base_hi[i]) throw std::invalid_argument("path endpoint outside the base box");
        return p;
    };
    Vector const a = point(spec.from, F.s0);
    Vector default_b = F.s0;
    if (sphere) default_b += Eigen::Vector2d(0.3, 0.5);
    else default_b += Eigen::Vector2d(0.6, -0.4);
    Vector const b = point(spec.to, default_b);
    BasePath const path = (a - b).norm() == 0 ? BasePath::constant(a) : BasePath::straight(a, b);

    auto const samples = fiber_samples(F, a, spec.samples, spec.seed);
    auto const T = integrate(F, path, samples);

    Json r;
    r["family"] = F.name;
    r["kind"] = spec.kind;
    r["path"] = {{"from", detail::to_json(a)}, {"to", detail::to_json(b)}};
    r["samples"] = spec.samples;
    r["seed"] = spec.seed;
    r["tolerance"] = spec.tol;
    r["transport"] = {{"max_drift", T.max_drift}, {"accepted_steps", T.stats.accepted}, {"rejected_steps", T.stats.rejected}};
    bool passed = T.max_drift <= spec.tol;

    auto const iso = verify_isometry(T, static_cast<std::size_t>(spec.samples), spec.tol);
    r["isometry"] = {{"pairs", iso.pairs}, {"max_defect", iso.max_defect}, {"passed", iso.passed}};
    passed = passed && iso.passed;

    double const axiom = connection_axiom_defect(F, a, std::vector<Vector>(samples.begin(), samples.begin() + std::min(samples.size(), std::size_t{20})));
    r["connection_axiom"] = {{"max_defect", axiom}, {"passed", axiom <= 1e-12}};
    passed = passed && axiom <= 1e-12;

    if (!sphere) {
        auto structures = structure_samples(3);
        std::mt19937_64 rng(spec.seed);
        for (int i = 0; i < spec.random_structures; ++i) structures.push_back(random_imaginary_unit(rng));
        auto const hol = verify_holomorphy(T, structures, spec.tol);
        Json per = Json::array();
        for (std::size_t l = 0; l < structures.size(); ++l) per.push_back({{"L", detail::to_json(structures[l])}, {"defect", hol.defects[l]}});
        r["holomorphy"] = {{"structures", per}, {"max_defect", hol.max_defect}, {"passed", hol.passed}};
        passed = passed && hol.passed;

        // dog-leg through a corner of the box spanned by the endpoints
        Vector corner = a;
        corner[0] = b[0];
        BasePath const dogleg{{a, corner, b}};
        auto const pi = path_independence_check(F, BasePath::straight(a, b), dogleg, samples, 1e-7);
        r["path_independence"] = {{"max_discrepancy", pi.max_discrepancy}, {"passed", pi.passed}};
        passed = passed && pi.passed;

        Json hs = Json::array(), ds = Json::array();
        bool envelope = true;
        auto const loop_samples = std::vector<Vector>(samples.begin(), samples.begin() + std::min(samples.size(), std::size_t{50}));
        for (double h = loop_h, k = 0; k < 4; h /= 2, ++k) {
            auto const c = family_curvature(F, F.s0, Vector::Unit(2, 0), Vector::Unit(2, 1), h, loop_samples);
            hs.push_back(h);
            ds.push_back(c.max_defect);
            envelope = envelope && c.max_defect <= 1e-8 * (h / 1e-2) * (h / 1e-2);
        }
        r["curvature"] = {{"h", hs}, {"defect", ds}, {"bound", "1e-8 (h / 1e-2)^2"}, {"passed", envelope}};
        passed = passed && envelope;
    } else {
        auto const c = family_curvature(F, F.s0, Vector::Unit(2, 0), Vector::Unit(2, 1), loop_h, fiber_samples(F, F.s0, 20, spec.seed));
        double const err = std::abs(c.rotation_angle - c.enclosed_area);
        bool const ok = err <= 1e-4 && std::abs(c.rotation_angle) > 1e-4;
        r["curvature"] = {{"h", loop_h},
                          {"rotation_angle", c.rotation_angle},
                          {"expected_angle", c.enclosed_area},
                          {"error", err},
                          {"max_defect", c.max_defect},
                          {"passed", ok}};
        passed = passed && ok;
    }
    r["passed"] = passed;
    return {r, passed};
}

// ---------------------------------------------------------------------------
// Bundles

/// span{(cos k x0, e^{i mu x_axis} sin k x0)} in C^2 over [0.1, 0.7]^4.
inline SubbundleField rotating_line_subbundle(double kappa, double mu, int phase_axis = 2, int grid = 3, double h = 1e-3) {
    SubbundleField S;
    S.rank = 2;
    S.sub_rank = 1;
    S.frame = [kappa, mu, phase_axis](Vector const& x) {
        CMatrix e(2, 1);
        e << std::cos(kappa * x[0]), std::exp(Complex(0, mu * x[phase_axis])) * std::sin(kappa * x[0]);
        return e;
    };
    S.lo = Vector::Constant(4, 0.1);
    S.hi = Vector::Constant(4, 0.7);
    S.grid = grid;
    S.h = h;
    return S;
}

struct BundleCheckOptions {
    int grid = 3;
    double tol = 1e-4;       // Gauss-Codazzi residual at the finest step
    int structures = 20;
    std::uint64_t seed = 1;
};

struct BundleCheckResult {
    Json report;
    std::string table;  // Gauss-Codazzi rows at the finest step
    bool passed = false;
};

inline BundleCheckResult run_bundle_check(BundleCheckOptions const& opt) {
    if (opt.grid < 2) throw std::invalid_argument("grid must be at least 2");
    if (!(opt.tol > 0)) throw std::invalid_argument("tolerance must be positive");
    BundleCheckResult out;
    Json& r = out.report;
    bool passed = true;

    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> g;
    ConstantForm random2(4, 2);
    for (auto m : detail::masks_of_degree(4, 2)) random2[m] = g(rng);
    std::vector<std::pair<std::string, ConstantForm>> forms{{"su2-invariant part of a random 2-form", su2_invariant_project(random2)},
                                                            {"kahler form w_I", kahler_form(ImaginaryUnit::I(), 1)}};
    auto const Ls = structure_samples(std::max(3, opt.structures));
    r["line_bundles"] = Json::array();
    for (auto const& [name, F] : forms) {
        double ym = 0, deg = 0;
        for (auto const& L : Ls) {
            ym = std::max(ym, yang_mills_defect(F, L));
            deg = std::max(deg, std::abs(degree_slope(F, L).degree));
        }
        bool const hh = is_hyperholomorphic(F);
        r["line_bundles"].push_back({{"form", name}, {"hyperholomorphic", hh}, {"max_yang_mills_defect", ym}, {"max_abs_degree", deg}});
        if (hh) passed = passed && ym <= 1e-10 && deg <= 1e-10;
    }

    auto const S = rotating_line_subbundle(1.3, 0.7, 2, opt.grid);
    std::vector<double> hs{8e-3, 4e-3, 2e-3, 1e-3}, r1, r3;
    double positivity = std::numeric_limits<double>::infinity();
    GaussCodazziReport finest;
    for (double h : hs) {
        finest = gauss_codazzi_check(S, ImaginaryUnit::I(), h);
        r1.push_back(finest.max_r1);
        r3.push_back(finest.max_r3);
        positivity = std::min(positivity, finest.min_positivity);
    }
    double const o1 = convergence_order(hs, r1), o3 = convergence_order(hs, r3);
    bool const gc_ok = r1.back() <= opt.tol && r3.back() <= opt.tol && o1 >= 1.9 && o3 >= 1.9 && positivity >= -1e-12;
    r["gauss_codazzi"] = {{"subbundle", "rotating line kappa=1.3 mu=0.7"},
                          {"h", hs},
                          {"max_r1", r1},
                          {"max_r3", r3},
                          {"order_r1", o1},
                          {"order_r3", o3},
                          {"min_positivity", positivity},
                          {"tolerance", opt.tol},
                          {"passed", gc_ok}};
    passed = passed && gc_ok;
    std::ostringstream csv;
    finest.write_csv(csv);
    out.table = csv.str();

    r["splitting"] = Json::array();
    auto split = [&](std::string const& name, SubbundleField const& field) {
        auto const s = splitting_check(field, ImaginaryUnit::I(), 1e-6);
        r["splitting"].push_back({{"subbundle", name},
                                  {"lambda1", s.lambda1},
                                  {"lambda3", s.lambda3},
                                  {"max_A", s.max_A},
                                  {"max_B", s.max_B},
                                  {"splits", s.splits},
                                  {"implication_holds", s.implication_holds}});
    };
    SubbundleField flat;
    flat.frame = [](Vector const&) { return CMatrix(CMatrix::Identity(2, 1)); };
    flat.lo = Vector::Zero(4);
    flat.hi = Vector::Ones(4);
    flat.grid = opt.grid;
    split("constant line", flat);
    split("rotating line, phase along x1", rotating_line_subbundle(1.3, 0.7, 1, opt.grid));

    Matrix W = Matrix::Zero(8, 4);
    W.topRows(4) = Matrix::Identity(4, 4);
    AffineSubtorus const X{"H x 0", W, Vector::Zero(8)};
    auto const tri = triholomorphic_section_parallel([](Vector const&) { return CVector(CVector::Constant(2, Complex(1, -2))); }, X,
                                                     ImaginaryUnit::I(), 1e-8, opt.grid);
    r["triholomorphic_constant_section"] = {{"dbar_I", tri.dbar_I}, {"dbar_minus_I", tri.dbar_minus_I}, {"d_nu", tri.d_nu},
                                            {"parallel", tri.parallel}, {"implication_holds", tri.implication_holds}};
    passed = passed && tri.parallel && tri.implication_holds;
    r["passed"] = passed;
    out.passed = passed;
    return out;
}

} // namespace hklab
