#pragma once

/**
 * @file catalog.hpp
 * @brief JSON catalogs of affine subtori, classification records and
 *        structure-sphere sweep tables.
 *
 * Catalog format:
 *
 *     { "n": 2,                       // quaternionic dimension, default 2
 *       "lattice": [[...], ...],      // optional lattice basis vectors, default Z^{4n}
 *       "entries": [ { "name": "...", "basis": [[...], ...], "offset": [...] }, ... ] }
 *
 * `basis` lists spanning vectors of the linear part; `offset` defaults to 0.
 */

#include "hklab/ambient.hpp"
#include "hklab/errors.hpp"
#include "hklab/exterior.hpp"
#include "hklab/quaternion.hpp"
#include "hklab/wirtinger.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace hklab {

using Json = nlohmann::ordered_json;

/// Malformed catalog; `line` is 1-based (0 if unknown).
struct CatalogError : std::runtime_error {
    int line = 0;
    CatalogError(int l, std::string const& msg) : std::runtime_error(l ? "line " + std::to_string(l) + ": " + msg : msg), line(l) {}
};

struct Catalog {
    int n = 2;
    Matrix lattice;  // columns; empty for Z^{4n}
    std::vector<AffineSubtorus> entries;
    std::vector<int> lines;  // source line of each entry, 0 when built in code

    HKTorus torus() const { return lattice.size() ? HKTorus(n, lattice) : HKTorus(n); }
};

namespace detail {

inline int line_of_offset(std::string const& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Line numbers of the objects inside the top-level "entries" array.
inline std::vector<int> entry_lines(std::string const& text) {
    std::vector<int> out;
    std::vector<char> stack;
    std::string last_string, pending_key;
    int entries_depth = -1;
    int line = 1;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char const ch = text[i];
        if (ch == '\n') ++line;
        if (ch == '"') {
            std::string s;
            for (++i; i < text.size() && text[i] != '"'; ++i) {
                if (text[i] == '\\') ++i;
                else s += text[i];
            }
            last_string = s;
            continue;
        }
        if (ch == ':') pending_key = last_string;
        if (ch == '{' || ch == '[') {
            if (ch == '{' && entries_depth >= 0 && static_cast<int>(stack.size()) == entries_depth + 1) out.push_back(line);
            if (ch == '[' && stack.size() == 1 && pending_key == "entries") entries_depth = 1;
            stack.push_back(ch);
            pending_key.clear();
        } else if (ch == '}' || ch == ']') {
            if (!stack.empty()) stack.pop_back();
            if (ch == ']' && entries_depth >= 0 && static_cast<int>(stack.size()) == entries_depth) entries_depth = -2;
        } else if (ch == ',') {
            pending_key.clear();
        }
    }
    return out;
}

inline Vector vector_from_json(Json const& j, int expected, int line, std::string const& what) {
    if (!j.is_array()) throw CatalogError(line, what + " must be an array of numbers");
    if (static_cast<int>(j.size()) != expected)
        throw CatalogError(line, what + " has length " + std::to_string(j.size()) + ", expected " + std::to_string(expected));
    Vector v(expected);
    for (int i = 0; i < expected; ++i) {
        if (!j[static_cast<std::size_t>(i)].is_number()) throw CatalogError(line, what + " must be an array of numbers");
        v[i] = j[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

inline Matrix columns_from_json(Json const& j, int rows, int line, std::string const& what) {
    if (!j.is_array() || j.empty()) throw CatalogError(line, what + " must be a non-empty array of vectors");
    Matrix M(rows, static_cast<Eigen::Index>(j.size()));
    for (std::size_t c = 0; c < j.size(); ++c)
        M.col(static_cast<Eigen::Index>(c)) = vector_from_json(j[c], rows, line, what + " vector " + std::to_string(c));
    return M;
}

inline Json to_json(Vector const& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline Json to_json(ImaginaryUnit const& L) { return Json::array({L.a() + 0.0, L.b() + 0.0, L.c() + 0.0}); }

} // namespace detail

inline Catalog parse_catalog(std::string const& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (nlohmann::json::parse_error const& e) {
        throw CatalogError(detail::line_of_offset(text, e.byte ? e.byte - 1 : 0), std::string("JSON syntax error: ") + e.what());
    }
    if (!doc.is_object()) throw CatalogError(1, "catalog must be a JSON object");
    Catalog cat;
    if (doc.contains("n")) {
        if (!doc["n"].is_number_integer() || doc["n"].get<int>() < 1) throw CatalogError(0, "\"n\" must be a positive integer");
        cat.n = doc["n"].get<int>();
    }
    int const D = 4 * cat.n;
    if (doc.contains("lattice")) {
        cat.lattice = detail::columns_from_json(doc["lattice"], D, 0, "lattice");
        if (cat.lattice.cols() != D) throw CatalogError(0, "lattice needs " + std::to_string(D) + " basis vectors");
        if (std::abs(cat.lattice.determinant()) < 1e-12) throw CatalogError(0, "lattice basis is singular");
    }
    if (!doc.contains("entries") || !doc["entries"].is_array()) throw CatalogError(0, "missing \"entries\" array");
    auto const lines = detail::entry_lines(text);
    auto const& entries = doc["entries"];
    for (std::size_t k = 0; k < entries.size(); ++k) {
        int const line = k < lines.size() ? lines[k] : 0;
        auto const& e = entries[k];
        std::string const where = "entry " + std::to_string(k);
        if (!e.is_object()) throw CatalogError(line, where + " must be an object");
        if (!e.contains("name") || !e["name"].is_string()) throw CatalogError(line, where + " needs a string \"name\"");
        if (!e.contains("basis")) throw CatalogError(line, where + " needs \"basis\"");
        AffineSubtorus X;
        X.name = e["name"].get<std::string>();
        X.basis = detail::columns_from_json(e["basis"], D, line, where + " basis");
        X.offset = e.contains("offset") ? detail::vector_from_json(e["offset"], D, line, where + " offset") : Vector(Vector::Zero(D));
        if (detail::numerical_rank(X.basis) == 0) throw CatalogError(line, where + " has a zero basis");
        cat.entries.push_back(std::move(X));
        cat.lines.push_back(line);
    }
    return cat;
}

inline Catalog load_catalog(std::string const& path) {
    std::ifstream in(path);
    if (!in) throw CatalogError(0, "cannot read catalog '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_catalog(ss.str());
}

inline Json catalog_to_json(Catalog const& cat) {
    Json doc;
    doc["n"] = cat.n;
    if (cat.lattice.size()) {
        Json L = Json::array();
        for (Eigen::Index c = 0; c < cat.lattice.cols(); ++c) L.push_back(detail::to_json(Vector(cat.lattice.col(c))));
        doc["lattice"] = L;
    }
    doc["entries"] = Json::array();
    for (auto const& X : cat.entries) {
        Json e;
        e["name"] = X.name;
        e["basis"] = Json::array();
        for (Eigen::Index c = 0; c < X.basis.cols(); ++c) e["basis"].push_back(detail::to_json(Vector(X.basis.col(c))));
        e["offset"] = detail::to_json(X.offset);
        doc["entries"].push_back(e);
    }
    return doc;
}

/// Six subtori of H^2: two trianalytic, two complex only for +-i, two not complex.
inline Catalog builtin_catalog() {
    auto cols = [](std::vector<Vector> const& vs) {
        Matrix M(8, static_cast<Eigen::Index>(vs.size()));
        for (std::size_t c = 0; c < vs.size(); ++c) M.col(static_cast<Eigen::Index>(c)) = vs[c];
        return M;
    };
    auto e = [](int i) { return Vector(Vector::Unit(8, i)); };
    Matrix graph(8, 4);  // {(v, v i)}
    graph.topRows(4) = Matrix::Identity(4, 4);
    graph.bottomRows(4) = right_mult_matrix(Quaternion::i());
    Vector shift = Vector::Zero(8);
    shift << 0.5, 0.25, 0, 0, 0.125, 0, 0, 0;
    Catalog cat;
    cat.entries = {
        {"quaternionic line H x 0", cols({e(0), e(1), e(2), e(3)}), Vector::Zero(8)},
        {"graph of right multiplication by i", graph, shift},
        {"complex line span(1,i) x 0", cols({e(0), e(1)}), Vector::Zero(8)},
        {"span(1,i) x span(1,i)", cols({e(0), e(1), e(4), e(5)}), shift},
        {"span(1,i,j) x span(1)", cols({e(0), e(1), e(2), e(4)}), Vector::Zero(8)},
        {"real plane span(1) x span(1)", cols({e(0), e(4)}), Vector::Zero(8)},
    };
    cat.lines.assign(cat.entries.size(), 0);
    return cat;
}

// ---------------------------------------------------------------------------
// Deterministic parallel map

/// out[i] = f(i), evaluated on a small thread pool; the result order does not depend on scheduling.
template <typename F>
auto parallel_map(std::size_t count, F&& f, unsigned threads = 0) {
    using R = decltype(f(std::size_t{}));
    std::vector<R> out(count);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) {
            try {
                out[i] = f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto const& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

// ---------------------------------------------------------------------------
// Classification

enum class RecordStatus { ok, irrational, disagreement, invalid };

struct ClassifyRecord {
    std::string name;
    RecordStatus status = RecordStatus::ok;
    std::string error;
    TrianalyticVerdict verdict;
    bool volume_trianalytic = false;
    bool dual_class_invariant = false;
    bool quaternionic = false;

    bool agree() const { return volume_trianalytic == dual_class_invariant && dual_class_invariant == quaternionic; }
};

/// Volume-equality verdict, SU(2)-invariance of the dual class and the quaternionic-subspace oracle.
inline ClassifyRecord classify_entry(HKTorus const& torus, AffineSubtorus const& X, double tol = kAffineVerdictTol,
                                     int sphere_samples = 64) {
    ClassifyRecord r;
    r.name = X.name;
    try {
        r.verdict = is_trianalytic(torus, X, tol, sphere_samples);
        r.volume_trianalytic = r.verdict.trianalytic();
        r.dual_class_invariant = is_su2_invariant(dual_class(torus, X), 1e-9);
        r.quaternionic = is_quaternionic_subspace(X.basis);
        if (!r.agree()) {
            r.status = RecordStatus::disagreement;
            r.error = "trianalyticity criteria disagree";
        }
    } catch (IrrationalSubspace const& e) {
        r.status = RecordStatus::irrational;
        r.error = e.what();
    } catch (OracleDisagreement const& e) {
        r.status = RecordStatus::disagreement;
        r.error = e.what();
    } catch (std::invalid_argument const& e) {  // e.g. odd dimension
        r.status = RecordStatus::invalid;
        r.error = e.what();
    }
    return r;
}

inline Json to_json(ClassifyRecord const& r) {
    Json j;
    j["name"] = r.name;
    if (r.status == RecordStatus::irrational || r.status == RecordStatus::invalid) {
        j["error"] = r.status == RecordStatus::irrational ? "irrational subspace" : "invalid entry";
        j["message"] = r.error;
        return j;
    }
    auto const& v = r.verdict;
    j["dim"] = v.dim;
    j["ambient_dim"] = v.ambient_dim;
    j["verdict"] = to_string(v.verdict);
    j["complex_for"] = Json::array();
    for (auto const& L : v.complex_for) j["complex_for"].push_back(detail::to_json(L));
    j["checks"] = {{"volume_equality", r.volume_trianalytic},
                   {"dual_class_su2_invariant", r.dual_class_invariant},
                   {"quaternionic", r.quaternionic},
                   {"agree", r.agree()}};
    if (r.status == RecordStatus::disagreement) j["error"] = r.error;
    j["per_structure"] = Json::array();
    for (auto const& s : v.per_structure)
        j["per_structure"].push_back(
            {{"L", detail::to_json(s.L)}, {"symplectic", s.symplectic}, {"riemannian", s.riemannian}, {"defect", s.defect}, {"complex", s.complex}});
    return j;
}

inline std::vector<ClassifyRecord> classify_catalog(Catalog const& cat, double tol = kAffineVerdictTol, int sphere_samples = 64) {
    HKTorus const torus = cat.torus();
    return parallel_map(cat.entries.size(), [&](std::size_t i) { return classify_entry(torus, cat.entries[i], tol, sphere_samples); });
}

// ---------------------------------------------------------------------------
// Structure-sphere sweep

struct SweepRow {
    ImaginaryUnit L;
    double xi = 0;
    double symplectic = 0;
    double riemannian = 0;
    double defect = 0;  // 1 - symplectic / riemannian
};

inline std::vector<SweepRow> sweep(HKTorus const& torus, AffineSubtorus const& X, int sphere_samples) {
    auto const Ls = structure_samples(sphere_samples);
    double const riem = riemannian_volume(torus, X);
    return parallel_map(Ls.size(), [&](std::size_t i) {
        SweepRow r;
        r.L = Ls[i];
        r.xi = xi_ratio(X.basis, Ls[i]);
        r.symplectic = symplectic_volume(torus, X, Ls[i]);
        r.riemannian = riem;
        r.defect = 1.0 - r.symplectic / riem;
        return r;
    });
}

inline std::string sweep_csv(std::vector<SweepRow> const& rows) {
    std::string out = "index,a,b,c,xi,symplectic,riemannian,defect\n";
    char buf[256];
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto const& r = rows[i];
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", i, r.L.a(), r.L.b(), r.L.c(), r.xi, r.symplectic,
                      r.riemannian, r.defect);
        out += buf;
    }
    return out;
}

} // namespace hklab
