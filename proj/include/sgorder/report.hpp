#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgorder/verify.hpp"
#include "sgorder/version.hpp"

namespace sgorder::report {

using nlohmann::json;

/// A config problem, located by line/column (syntax) or JSON path (fields).
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& where, const std::string& what)
        : std::runtime_error(where + ": " + what), where_(where) {}
    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

/// Parses config text; syntax errors carry "<source>:<line>:<column>".
inline json parse_config_text(const std::string& text, const std::string& source = "config") {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string msg = e.what();
        if (auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col), msg);
    }
}

inline json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), "cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

namespace detail {

/// Reads fields from one JSON object, remembering which keys were consumed
/// so that unknown keys are reported instead of silently ignored.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    bool has(const std::string& k) const { return j_.contains(k); }
    std::string at(const std::string& k) const { return path_ + "." + k; }

    template <class T>
    T get(const std::string& k, const T& fallback) {
        if (!j_.contains(k)) return fallback;
        return required<T>(k);
    }

    template <class T>
    T required(const std::string& k) {
        used_.insert(k);
        if (!j_.contains(k)) throw ConfigError(at(k), "missing");
        try {
            return j_.at(k).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(at(k), "wrong type (" + std::string(j_.at(k).type_name()) + ")");
        }
    }

    const json& raw(const std::string& k) {
        used_.insert(k);
        return j_.at(k);
    }

    void mark(const std::string& k) { used_.insert(k); }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!used_.count(k)) throw ConfigError(at(k), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

inline Distribution dist_at(Fields& f, const std::string& k, const Distribution& fallback) {
    if (!f.has(k)) return fallback;
    try {
        return Distribution::from_json(f.raw(k));
    } catch (const std::exception& e) {
        throw ConfigError(f.at(k), e.what());
    }
}

/// Model-level keys, accepted both in "model" and as per-entry overrides.
inline void read_model_keys(Fields& f, EstimatorSettings& s) {
    s.dim = f.get<int>("d", s.dim);
    s.beta = f.get<double>("beta", s.beta);
    s.j_dist = dist_at(f, "j_dist", s.j_dist);
    s.h_dist = dist_at(f, "h_dist", s.h_dist);
    s.boundary.value = f.get<double>("boundary", s.boundary.value);
    s.n_disorder = f.get<std::size_t>("n_disorder", s.n_disorder);
    s.seed = f.get<std::uint64_t>("seed", s.seed);
    if (!(s.boundary.value >= -1.0 && s.boundary.value <= 1.0)) throw ConfigError(f.at("boundary"), "must be in [-1, 1]");
    if (s.dim < 1 || s.dim > 3) throw ConfigError(f.at("d"), "must be 1, 2 or 3");
}

}  // namespace detail

/// Parsed configuration: the base settings plus the battery entries.
struct Config {
    int schema_version = kReportSchemaVersion;
    EstimatorSettings base;
    std::vector<double> h_grid{0.005, 0.01, 0.02, 0.04, 0.08};
    std::vector<json> battery;  // expanded entries, each with "check"
    json source = json::object();
};

/// Canned desk-scale battery; runs in well under a minute on one core.
inline std::vector<json> desk_battery() {
    const json pm = {{"kind", "pm_j"}, {"p", 0.5}};
    const json zero = {{"kind", "constant"}, {"value", 0.0}};
    return {
        {{"check", "identities"}, {"d", 2}, {"sizes", {3}}, {"beta", 1.2}, {"j_dist", pm}, {"h_dist", zero}, {"n_disorder", 20}},
        {{"check", "identities"}, {"d", 1}, {"sizes", {8}}, {"beta", 1.2}, {"j_dist", pm}, {"h_dist", zero}, {"n_disorder", 20}},
        {{"check", "derivatives"}, {"d", 1}, {"sizes", {6}}, {"beta", 1.2}, {"j_dist", pm},
         {"h_dist", {{"kind", "gaussian"}, {"mean", 0.0}, {"sd", 0.5}}}, {"n_disorder", 5}},
        {{"check", "replica-concavity"}, {"d", 1}, {"sizes", {4, 6}}, {"beta", 1.0}, {"j_dist", pm}, {"h_dist", zero},
         {"n_disorder", 10}, {"lambda_grid", {0.01, 0.05, 0.1}}},
        {{"check", "block-decomposition"}, {"d", 1}, {"L", 8}, {"ell", 2}, {"beta", 1.5}, {"j_dist", pm}, {"h_dist", zero},
         {"n_disorder", 50}},
        {{"check", "qea-vs-qbr"}, {"d", 1}, {"sizes", {4, 8}}, {"ell", 2}, {"beta", 1.5}, {"j_dist", pm}, {"h_dist", zero},
         {"n_disorder", 20}},
        {{"check", "qjump-vs-qbr"}, {"d", 2}, {"sizes", {2, 3}}, {"beta", 1.5}, {"j_dist", pm}, {"h_dist", zero},
         {"n_disorder", 20}, {"lambda_grid", {0.02, 0.05, 0.1, 0.2, 0.4}}, {"resolution_floor", 1.0}},
        {{"check", "qjump-vs-qbr-rem"}},
        {{"check", "mu-pair"}, {"d", 2}, {"sizes", {3, 4}}, {"beta", 1.0}, {"h0", 0.0}, {"resolution_floor", 1.0}},
        {{"check", "rem-closed-forms"}},
        {{"check", "rem-branches"}},
        {{"check", "rem-finite-bounds"}},
    };
}

inline Config parse_config(const json& j) {
    Config c;
    c.source = j;
    detail::Fields top(j, "$");
    c.schema_version = top.get<int>("schema_version", kReportSchemaVersion);
    if (c.schema_version != kReportSchemaVersion)
        throw ConfigError(top.at("schema_version"), "unsupported version " + std::to_string(c.schema_version));
    c.base.n_disorder = 20;
    if (top.has("model")) {
        detail::Fields m(top.raw("model"), "$.model");
        detail::read_model_keys(m, c.base);
        m.finish();
    }
    c.base.sizes = top.get<std::vector<int>>("sizes", {});
    if (top.has("grids")) {
        detail::Fields g(top.raw("grids"), "$.grids");
        c.base.lambda_grid = g.get<std::vector<double>>("lambda", c.base.lambda_grid);
        c.base.resolution_floor = g.get<double>("resolution_floor", c.base.resolution_floor);
        c.h_grid = g.get<std::vector<double>>("h", c.h_grid);
        g.finish();
    }
    if (c.base.lambda_grid.empty()) c.base.lambda_grid = geometric_grid(0.01, 2.0, 6);
    if (top.has("battery")) {
        const auto& b = top.raw("battery");
        auto expand = [&](const json& e, const std::string& path) {
            if (e.is_string()) {
                if (e.get<std::string>() != "desk") throw ConfigError(path, "unknown battery \"" + e.get<std::string>() + "\"");
                for (auto& d : desk_battery()) c.battery.push_back(d);
            } else if (e.is_object()) {
                if (!e.contains("check") || !e["check"].is_string()) throw ConfigError(path + ".check", "missing");
                json entry = e;
                entry["__path"] = path;
                c.battery.push_back(entry);
            } else {
                throw ConfigError(path, "expected a check object or \"desk\"");
            }
        };
        if (b.is_array()) {
            for (std::size_t i = 0; i < b.size(); ++i) expand(b[i], "$.battery[" + std::to_string(i) + "]");
        } else {
            expand(b, "$.battery");
        }
    }
    top.finish();
    return c;
}

/// Runs one battery entry. Parameter errors surface as ConfigError at the entry's path.
inline verify::CheckResult run_entry(const json& entry, const Config& cfg, unsigned threads,
                                     std::optional<std::uint64_t> seed_override) {
    const std::string path = entry.value("__path", std::string("$.battery"));
    detail::Fields f(entry, path);
    f.mark("__path");
    const auto name = f.required<std::string>("check");
    const auto id = f.get<std::string>("id", name);
    EstimatorSettings s = cfg.base;
    detail::read_model_keys(f, s);
    if (seed_override) s.seed = *seed_override;
    s.sizes = f.get<std::vector<int>>("sizes", s.sizes);
    s.lambda_grid = f.get<std::vector<double>>("lambda_grid", s.lambda_grid);
    s.resolution_floor = f.get<double>("resolution_floor", s.resolution_floor);
    s.threads = threads;
    auto need_sizes = [&] {
        if (s.sizes.empty()) throw ConfigError(path + ".sizes", "no lattice sizes given");
    };

    verify::CheckResult r;
    try {
        if (name == "identities") {
            need_sizes();
            const double l = f.get<double>("lambda", 0.3), lp = f.get<double>("lambda_p", -0.45);
            f.finish();
            r = verify::check_identities(s, l, lp);
        } else if (name == "derivatives") {
            need_sizes();
            verify::DerivativeOptions o;
            o.lambdas = f.get<std::vector<double>>("lambdas", o.lambdas);
            o.corrupt_cross_term = f.get<bool>("corrupt_cross_term", false);
            f.finish();
            r = verify::check_derivatives(s, o);
        } else if (name == "block-decomposition") {
            const int L = f.required<int>("L");
            const int ell = f.required<int>("ell");
            verify::BlockOptions o;
            o.invert = f.get<bool>("invert", false);
            o.conditional = f.get<bool>("conditional", true);
            f.finish();
            r = verify::check_block_decomposition(s, L, ell, o);
        } else if (name == "qea-vs-qbr") {
            need_sizes();
            const int ell = f.get<int>("ell", 2);
            f.finish();
            r = verify::check_qea_vs_qbr(s, ell);
        } else if (name == "qjump-vs-qbr") {
            need_sizes();
            f.finish();
            r = verify::check_qjump_bound(s);
        } else if (name == "qjump-vs-qbr-rem") {
            const double lo = f.get<double>("beta_lo", 0.2), hi = f.get<double>("beta_hi", 6.0);
            const auto n = f.get<std::size_t>("points", 200);
            f.finish();
            r = verify::check_qjump_bound_rem(lo, hi, n);
        } else if (name == "replica-concavity") {
            need_sizes();
            verify::ConcavityOptions o;
            o.invert = f.get<bool>("invert", false);
            f.finish();
            r = verify::check_replica_concavity(s, o);
        } else if (name == "mu-pair") {
            need_sizes();
            UniformModel m;
            m.dim = s.dim;
            m.sizes = s.sizes;
            m.beta = s.beta;
            m.boundary = s.boundary;
            m.resolution_floor = s.resolution_floor;
            m.coupling = f.get<double>("coupling", 1.0);
            m.h0 = f.get<double>("h0", 0.0);
            m.h_grid = f.get<std::vector<double>>("h_grid", cfg.h_grid);
            f.finish();
            r = verify::check_mu_pair(m);
        } else if (name == "rem-closed-forms") {
            f.finish();
            r = verify::check_rem_closed_forms();
        } else if (name == "rem-branches") {
            const auto n = f.get<std::size_t>("points", 100);
            f.finish();
            r = verify::check_rem_branches(n);
        } else if (name == "rem-finite-bounds") {
            const auto n = f.get<std::size_t>("N", 8);
            const double b = f.get<double>("rem_beta", 1.5);
            const auto ls = f.get<std::vector<double>>("lambdas", {0.05, 0.2, 0.5});
            const auto k = f.get<std::size_t>("samples", 100);
            f.finish();
            r = verify::check_rem_finite_bounds(n, b, ls, k, s.seed, threads);
        } else if (name == "rem-convergence") {
            const auto n = f.get<std::size_t>("N", 20);
            const double b = f.get<double>("rem_beta", 2 * rem::kBetaC);
            const auto k = f.get<std::size_t>("samples", 200);
            const double tol = f.get<double>("rel_tol", 0.05);
            f.finish();
            r = verify::check_rem_convergence(n, b, k, tol, s.seed, threads);
        } else if (name == "mc-oracle") {
            need_sizes();
            McConfig mc;
            if (f.has("mc")) {
                detail::Fields m(f.raw("mc"), path + ".mc");
                mc.beta_ladder = m.required<std::vector<double>>("beta_ladder");
                mc.n_sweeps = m.get<std::size_t>("n_sweeps", mc.n_sweeps);
                mc.n_therm = m.get<std::size_t>("n_therm", mc.n_therm);
                mc.measure_every = m.get<std::size_t>("measure_every", mc.measure_every);
                mc.swap_every = m.get<std::size_t>("swap_every", mc.swap_every);
                mc.seed = m.get<std::uint64_t>("seed", s.seed);
                m.finish();
            } else {
                throw ConfigError(path + ".mc", "missing");
            }
            if (seed_override) mc.seed = *seed_override;
            const auto betas = f.required<std::vector<double>>("betas");
            const auto lambdas = f.get<std::vector<double>>("lambdas", {0.0});
            f.finish();
            r = verify::check_mc_oracle(s, mc, betas, lambdas);
        } else {
            throw ConfigError(path + ".check", "unknown check \"" + name + "\"");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
    if (id != name) r.check_id = id;
    return r;
}

struct Report {
    std::vector<verify::CheckResult> checks;
    json config = json::object();
    std::uint64_t seed = 0;

    bool any_fail() const {
        for (const auto& c : checks)
            if (c.failed()) return true;
        return false;
    }

    int exit_code() const { return any_fail() ? 1 : 0; }

    json to_json() const {
        json j{{"schema_version", kReportSchemaVersion}, {"toolkit_version", kToolkitVersion}, {"config", config}};
        j["checks"] = json::array();
        json counts = json::object();
        for (const auto& c : checks) {
            j["checks"].push_back(c.to_json());
            counts[verify::to_string(c.status)] = counts.value(verify::to_string(c.status), 0) + 1;
        }
        j["summary"] = {{"n_checks", checks.size()}, {"status_counts", counts}, {"any_fail", any_fail()}};
        return j;
    }
};

inline json meta_json(std::uint64_t seed, unsigned threads) {
    return {{"toolkit_version", kToolkitVersion}, {"prng", kPrngName}, {"seed", seed}, {"threads", threads},
            {"report_schema_version", kReportSchemaVersion}};
}

/// Runs every battery entry in order.
inline Report run_report(const Config& cfg, unsigned threads = 1, std::optional<std::uint64_t> seed_override = {}) {
    Report r;
    r.config = cfg.source;
    r.seed = seed_override.value_or(cfg.base.seed);
    for (const auto& e : cfg.battery) r.checks.push_back(run_entry(e, cfg, threads, seed_override));
    return r;
}

/// File stem for check i; indices keep repeated ids apart and preserve order.
inline std::string csv_stem(std::size_t i, const std::string& id) {
    std::ostringstream os;
    os << std::setw(2) << std::setfill('0') << i << '_' << id;
    return os.str();
}

/// Writes report.json, meta.json, summary.csv and one CSV per check. Each
/// CSV opens with a "# " line holding the check's JSON metadata.
inline void write_report(const std::filesystem::path& out, const Report& r, unsigned threads) {
    std::filesystem::create_directories(out);
    std::ofstream(out / "report.json") << std::setw(2) << r.to_json() << '\n';
    std::ofstream(out / "meta.json") << std::setw(2) << meta_json(r.seed, threads) << '\n';
    std::ofstream sum(out / "summary.csv");
    sum.precision(17);
    sum << "index,check_id,status,relation,lhs,rhs,slack,tolerance\n";
    for (std::size_t i = 0; i < r.checks.size(); ++i) {
        const auto& c = r.checks[i];
        sum << i << ',' << c.check_id << ',' << verify::to_string(c.status) << ',' << c.relation << ',' << c.lhs << ','
            << c.rhs << ',' << c.slack << ',' << c.tolerance << '\n';
        std::ofstream os(out / (csv_stem(i, c.check_id) + ".csv"));
        json head{{"check_id", c.check_id}, {"status", verify::to_string(c.status)}, {"settings", c.settings},
                  {"provenance", c.provenance}, {"toolkit_version", kToolkitVersion}};
        os << "# " << head.dump() << '\n';
        c.table.write_csv(os);
    }
}

}  // namespace sgorder::report
