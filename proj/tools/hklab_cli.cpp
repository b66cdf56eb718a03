// hklab-cli: catalog classification, structure-sphere sweeps, family runs,
// bundle identity checks and the self-test suite.
//
// Exit codes: 0 ok, 1 usage error or malformed input, 2 irrational subspace,
// 3 integrator failure, 4 verification failure or oracle disagreement.

#include "hklab/catalog.hpp"
#include "hklab/experiments.hpp"
#include "hklab/selftest.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

namespace {

using hklab::Json;

enum Exit { kOk = 0, kUsage = 1, kIrrational = 2, kIntegrator = 3, kVerification = 4 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string command;
    std::string catalog;  // empty: built-in catalog
    std::string out;      // empty: stdout
    std::optional<double> tol;
    int sphere_samples = 64;
    int grid = 3;
    std::uint64_t seed = 1;
    bool list = false;
    std::string entry;
    hklab::FamilySpec family;
};

/// Values given on the command line; unset ones fall back to the config file, then to defaults.
struct Flags {
    std::string config, catalog, out, entry, family;
    double tol = 0;
    int sphere_samples = 0, grid = 0, samples = 0;
    std::uint64_t seed = 0;
    bool list = false;
    std::map<std::string, CLI::Option*> given;

    bool has(std::string const& name) const {
        auto it = given.find(name);
        return it != given.end() && it->second && it->second->count() > 0;
    }
};

Json read_json_file(std::string const& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return Json::parse(ss.str());
    } catch (nlohmann::json::parse_error const& e) {
        throw UsageError("config '" + path + "' line " + std::to_string(hklab::detail::line_of_offset(ss.str(), e.byte ? e.byte - 1 : 0)) +
                         ": " + e.what());
    }
}

template <typename T>
T config_value(Json const& cfg, std::string const& key) {
    try {
        return cfg.at(key).get<T>();
    } catch (nlohmann::json::exception const&) {
        throw UsageError("config key '" + key + "' has the wrong type");
    }
}

/// The key spelling present in the config: "sphere-samples" or "sphere_samples".
std::optional<std::string> config_key(Json const& cfg, std::string const& dashed) {
    std::string underscored = dashed;
    for (auto& c : underscored)
        if (c == '-') c = '_';
    for (auto const& k : {dashed, underscored})
        if (cfg.contains(k)) return k;
    return std::nullopt;
}

void apply_family(Json const& f, hklab::FamilySpec& spec) {
    if (f.is_string()) {
        spec.kind = f.get<std::string>();
        return;
    }
    if (!f.is_object()) throw UsageError("config key 'family' must be a string or an object");
    if (f.contains("kind")) spec.kind = config_value<std::string>(f, "kind");
    if (f.contains("samples")) spec.samples = config_value<int>(f, "samples");
    if (f.contains("from")) spec.from = config_value<std::vector<double>>(f, "from");
    if (f.contains("to")) spec.to = config_value<std::vector<double>>(f, "to");
    if (f.contains("h")) spec.h = config_value<double>(f, "h");
    if (f.contains("random_structures")) spec.random_structures = config_value<int>(f, "random_structures");
}

ExperimentConfig merge(std::string const& command, Flags const& flags) {
    ExperimentConfig c;
    c.command = command;
    if (flags.has("config")) {
        Json const cfg = read_json_file(flags.config);
        if (!cfg.is_object()) throw UsageError("config must be a JSON object");
        if (cfg.contains("command") && cfg["command"] != command)
            throw UsageError("config is for command '" + cfg["command"].dump() + "', not '" + command + "'");
        if (cfg.contains("catalog")) c.catalog = config_value<std::string>(cfg, "catalog");
        if (cfg.contains("out")) c.out = config_value<std::string>(cfg, "out");
        if (cfg.contains("tol")) c.tol = config_value<double>(cfg, "tol");
        if (auto k = config_key(cfg, "sphere-samples")) c.sphere_samples = config_value<int>(cfg, *k);
        if (cfg.contains("grid")) c.grid = config_value<int>(cfg, "grid");
        if (cfg.contains("seed")) c.seed = config_value<std::uint64_t>(cfg, "seed");
        if (cfg.contains("list")) c.list = config_value<bool>(cfg, "list");
        if (cfg.contains("entry")) c.entry = config_value<std::string>(cfg, "entry");
        if (cfg.contains("family")) apply_family(cfg["family"], c.family);
        if (cfg.contains("samples")) c.family.samples = config_value<int>(cfg, "samples");
    }
    if (flags.has("catalog")) c.catalog = flags.catalog;
    if (flags.has("out")) c.out = flags.out;
    if (flags.has("tol")) c.tol = flags.tol;
    if (flags.has("sphere-samples")) c.sphere_samples = flags.sphere_samples;
    if (flags.has("grid")) c.grid = flags.grid;
    if (flags.has("seed")) c.seed = flags.seed;
    if (flags.has("list")) c.list = flags.list;
    if (flags.has("entry")) c.entry = flags.entry;
    if (flags.has("family")) c.family.kind = flags.family;
    if (flags.has("samples")) c.family.samples = flags.samples;
    if (c.tol && !(*c.tol > 0)) throw UsageError("--tol must be positive");
    return c;
}

void emit(ExperimentConfig const& c, std::string const& text) {
    if (c.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(c.out, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + c.out + "'");
    f << text;
}

hklab::Catalog load(ExperimentConfig const& c) { return c.catalog.empty() ? hklab::builtin_catalog() : hklab::load_catalog(c.catalog); }

int run_classify(ExperimentConfig const& c) {
    auto const cat = load(c);
    double const tol = c.tol.value_or(hklab::kAffineVerdictTol);
    if (c.sphere_samples < 3) throw UsageError("--sphere-samples must be at least 3");
    auto const records = hklab::classify_catalog(cat, tol, c.sphere_samples);
    Json report;
    report["catalog"] = c.catalog.empty() ? "built-in" : c.catalog;
    report["sphere_samples"] = c.sphere_samples;
    report["tolerance"] = tol;
    report["records"] = Json::array();
    int code = kOk;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto const& r = records[i];
        Json j = hklab::to_json(r);
        if (cat.lines[i]) j["line"] = cat.lines[i];
        report["records"].push_back(j);
        if (r.status == hklab::RecordStatus::irrational) {
            std::cerr << "entry '" << r.name << "'" << (cat.lines[i] ? " (line " + std::to_string(cat.lines[i]) + ")" : "") << ": " << r.error << '\n';
            if (code == kOk) code = kIrrational;
        } else if (r.status == hklab::RecordStatus::invalid) {
            std::cerr << "entry '" << r.name << "'" << (cat.lines[i] ? " (line " + std::to_string(cat.lines[i]) + ")" : "") << ": " << r.error << '\n';
            if (code != kVerification) code = kUsage;
        } else if (r.status == hklab::RecordStatus::disagreement) {
            std::cerr << "entry '" << r.name << "': " << r.error << '\n';
            code = kVerification;
        }
    }
    emit(c, report.dump(2) + "\n");
    return code;
}

int run_sweep(ExperimentConfig const& c) {
    if (c.sphere_samples < 3) throw UsageError("--sphere-samples must be at least 3 (i, j, k are always sampled)");
    auto const cat = load(c);
    std::optional<std::size_t> pick;
    if (c.entry.empty()) {
        if (cat.entries.size() != 1) throw UsageError("select a subtorus with --entry NAME or a catalog with one entry");
        pick = 0;
    } else {
        for (std::size_t i = 0; i < cat.entries.size(); ++i)
            if (cat.entries[i].name == c.entry) pick = i;
        if (!pick) throw UsageError("no catalog entry named '" + c.entry + "'");
    }
    auto const rows = hklab::sweep(cat.torus(), cat.entries[*pick], c.sphere_samples);
    emit(c, hklab::sweep_csv(rows));
    return kOk;
}

int run_deform(ExperimentConfig const& c) {
    auto spec = c.family;
    spec.seed = c.seed;
    if (c.tol) spec.tol = *c.tol;
    hklab::DeformResult res;
    try {
        res = hklab::run_deform(spec);
    } catch (std::invalid_argument const& e) {
        throw UsageError(e.what());
    }
    emit(c, res.report.dump(2) + "\n");
    return res.passed ? kOk : kVerification;
}

int run_bundle_check(ExperimentConfig const& c) {
    hklab::BundleCheckOptions opt;
    opt.grid = c.grid;
    opt.seed = c.seed;
    if (c.tol) opt.tol = *c.tol;
    hklab::BundleCheckResult res;
    try {
        res = hklab::run_bundle_check(opt);
    } catch (std::invalid_argument const& e) {
        throw UsageError(e.what());
    }
    if (!c.out.empty()) {
        std::filesystem::path table = c.out;
        table.replace_extension(".csv");
        if (table == std::filesystem::path(c.out)) table.replace_extension(".table.csv");
        std::ofstream f(table, std::ios::binary);
        if (!f) throw UsageError("cannot write '" + table.string() + "'");
        f << res.table;
        res.report["table"] = table.filename().string();
    }
    emit(c, res.report.dump(2) + "\n");
    return res.passed ? kOk : kVerification;
}

int run_selftest(ExperimentConfig const& c) {
    if (c.list) {
        for (auto const& s : hklab::selftest_suites()) std::cout << s.name << (s.finite_difference ? "  [finite-difference]" : "") << '\n';
        return kOk;
    }
    hklab::SelftestOptions opt;
    opt.seed = c.seed;
    opt.tol_override = c.tol;
    opt.sphere_samples = c.sphere_samples;
    auto const outcomes = hklab::run_selftest(opt);
    bool all = true;
    double total = 0;
    for (auto const& s : outcomes) {
        char line[160];
        std::snprintf(line, sizeof line, "%-4s %-12s %8.3f s", s.passed ? "PASS" : "FAIL", s.name.c_str(), s.seconds);
        std::cout << line << '\n';
        all = all && s.passed;
        total += s.seconds;
    }
    std::printf("%s: %zu suites, %.3f s\n", all ? "selftest passed" : "selftest FAILED", outcomes.size(), total);
    if (!c.out.empty()) emit(c, hklab::selftest_report(opt, outcomes).dump(2) + "\n");
    return all ? kOk : kVerification;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hklab-cli: trianalytic subtori, hyperholomorphic bundles and deformation families on hyperkaehler tori"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    Flags flags;
    std::map<std::string, CLI::App*> subs;
    std::map<std::string, std::map<std::string, CLI::Option*>> options;  // per subcommand
    auto opt = [&](CLI::App* s, std::string const& name, auto& target, std::string const& help) {
        options[s->get_name()][name] = s->add_option("--" + name, target, help);
    };
    auto* classify = app.add_subcommand("classify", "Trianalyticity verdict for every catalog entry");
    auto* sweep = app.add_subcommand("sweep", "Xi and volume defect over the structure sphere for one subtorus (CSV)");
    auto* deform = app.add_subcommand("deform", "Transport study of a deformation family");
    auto* bundle = app.add_subcommand("bundle-check", "Hyperholomorphic, Gauss-Codazzi, splitting and triholomorphic checks");
    auto* selftest = app.add_subcommand("selftest", "Run the invariant suites of every module");
    for (auto* s : {classify, sweep, deform, bundle, selftest}) {
        subs[s->get_name()] = s;
        opt(s, "config", flags.config, "JSON config file; command-line flags override its values");
        opt(s, "out", flags.out, "Output path (default: stdout)");
        opt(s, "tol", flags.tol, "Tolerance");
        opt(s, "seed", flags.seed, "Seed for any sampling");
    }
    for (auto* s : {classify, sweep}) opt(s, "catalog", flags.catalog, "Catalog JSON (default: built-in 6-entry catalog)");
    for (auto* s : {classify, sweep, selftest}) opt(s, "sphere-samples", flags.sphere_samples, "Structure-sphere samples (>= 3)");
    opt(sweep, "entry", flags.entry, "Catalog entry name");
    opt(deform, "family", flags.family, "Family kind: translation or sphere");
    opt(deform, "samples", flags.samples, "Fiber samples");
    opt(bundle, "grid", flags.grid, "Nodes per base axis");
    options["selftest"]["list"] = selftest->add_flag("--list", flags.list, "Print suite names without running");

    try {
        app.parse(argc, argv);
    } catch (CLI::CallForHelp const& e) {
        return app.exit(e);
    } catch (CLI::CallForAllHelp const& e) {
        return app.exit(e);
    } catch (CLI::ParseError const& e) {
        app.exit(e);
        return kUsage;
    }

    std::string command;
    for (auto const& [name, s] : subs)
        if (s->parsed()) command = name;
    flags.given = options[command];

    try {
        ExperimentConfig const c = merge(command, flags);
        if (command == "classify") return run_classify(c);
        if (command == "sweep") return run_sweep(c);
        if (command == "deform") return run_deform(c);
        if (command == "bundle-check") return run_bundle_check(c);
        return run_selftest(c);
    } catch (UsageError const& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (hklab::CatalogError const& e) {
        std::cerr << "malformed catalog: " << e.what() << '\n';
        return kUsage;
    } catch (hklab::IrrationalSubspace const& e) {
        std::cerr << "irrational subspace: " << e.what() << '\n';
        return kIrrational;
    } catch (hklab::IntegratorFailure const& e) {
        std::cerr << "integrator failure: " << e.what() << '\n';
        return kIntegrator;
    } catch (hklab::OracleDisagreement const& e) {
        std::cerr << "oracle disagreement: " << e.what() << '\n';
        return kVerification;
    } catch (std::exception const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kVerification;
    }
}
