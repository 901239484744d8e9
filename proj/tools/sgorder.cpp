// sgorder command-line front end.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sgorder/mc.hpp"
#include "sgorder/order_params.hpp"
#include "sgorder/quenched.hpp"
#include "sgorder/rem.hpp"
#include "sgorder/report.hpp"
#include "sgorder/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sgorder;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    unsigned threads = 1;
};

/// Model flags shared by the subcommands; unset flags fall back to the config.
struct ModelFlags {
    std::optional<int> d;
    std::vector<int> sizes;
    std::optional<double> beta;
    std::string j_dist, h_dist;
    std::optional<double> boundary;
    std::optional<std::size_t> n_disorder;
    std::vector<double> lambda_grid;
    std::optional<double> resolution_floor;

    void attach(CLI::App* app, bool with_grid) {
        app->add_option("--d", d, "lattice dimension (1-3)");
        app->add_option("--sizes,--L", sizes, "lattice sides")->delimiter(',');
        app->add_option("--beta", beta, "inverse temperature");
        app->add_option("--j-dist", j_dist, "coupling law: pm_j:p, gaussian:mean,sd, uniform:a,b, constant:v or JSON");
        app->add_option("--h-dist", h_dist, "field law, same syntax as --j-dist");
        app->add_option("--boundary", boundary, "constant boundary value in [-1,1]");
        app->add_option("--n-disorder", n_disorder, "disorder samples");
        if (with_grid) {
            app->add_option("--lambda-grid", lambda_grid, "positive coupling magnitudes")->delimiter(',');
            app->add_option("--resolution-floor", resolution_floor, "per-size value uses the smallest lambda with beta*lambda*N >= floor");
        }
    }
};

Distribution parse_dist(const std::string& text) {
    if (!text.empty() && text.front() == '{') return Distribution::from_json(json::parse(text));
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    std::vector<double> args;
    if (colon != std::string::npos) {
        std::stringstream ss(text.substr(colon + 1));
        for (std::string tok; std::getline(ss, tok, ',');) args.push_back(std::stod(tok));
    }
    auto arg = [&](std::size_t i, double fallback) { return i < args.size() ? args[i] : fallback; };
    if (kind == "pm_j") return Distribution::pm_j(arg(0, 0.5), arg(1, 1.0));
    if (kind == "gaussian") return Distribution::gaussian(arg(0, 0.0), arg(1, 1.0));
    if (kind == "uniform") return Distribution::uniform(arg(0, -1.0), arg(1, 1.0));
    if (kind == "constant") return Distribution::constant(arg(0, 0.0));
    throw std::invalid_argument("unknown distribution '" + text + "'");
}

report::Config base_config(const Globals& g) {
    return g.config.empty() ? report::parse_config(json::object()) : report::parse_config(report::load_config_file(g.config));
}

EstimatorSettings settings_from(const Globals& g, const ModelFlags& m, const report::Config& cfg) {
    EstimatorSettings s = cfg.base;
    if (m.d) s.dim = *m.d;
    if (!m.sizes.empty()) s.sizes = m.sizes;
    if (m.beta) s.beta = *m.beta;
    if (!m.j_dist.empty()) s.j_dist = parse_dist(m.j_dist);
    if (!m.h_dist.empty()) s.h_dist = parse_dist(m.h_dist);
    if (m.boundary) s.boundary.value = *m.boundary;
    if (m.n_disorder) s.n_disorder = *m.n_disorder;
    if (!m.lambda_grid.empty()) s.lambda_grid = m.lambda_grid;
    if (m.resolution_floor) s.resolution_floor = *m.resolution_floor;
    if (g.seed) s.seed = *g.seed;
    s.threads = g.threads;
    if (s.sizes.empty()) throw std::invalid_argument("no lattice sizes given (--sizes or config \"sizes\")");
    return s;
}

void write_meta(const Globals& g, std::uint64_t seed, const std::string& command, json extra = json::object()) {
    fs::create_directories(g.out);
    auto meta = report::meta_json(seed, g.threads);
    meta["command"] = command;
    for (auto& [k, v] : extra.items()) meta[k] = v;
    std::ofstream(fs::path(g.out) / "meta.json") << std::setw(2) << meta << '\n';
}

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << std::setw(2) << j << '\n'; }

// ---------------------------------------------------------------------------

struct EnumerateFlags {
    ModelFlags model;
    int replicas = 1;
    std::vector<double> lambdas{0.0};
    double lambda_prime = 0.0;
    std::size_t save_disorder = 0;
};

int run_enumerate(const Globals& g, const EnumerateFlags& f) {
    const auto cfg = base_config(g);
    const auto s = settings_from(g, f.model, cfg);
    fs::create_directories(g.out);
    const json head{{"engine_version", kToolkitVersion},
                    {"caps", {{"enumeration_sites", kMaxEnumSites}, {"replica_sites", kMaxReplicaSites}}},
                    {"replicas", f.replicas},
                    {"settings", s.to_json()}};
    std::ofstream csv(fs::path(g.out) / "enumerate.csv");
    csv << "# " << head.dump() << '\n';
    FreeEnergySample::write_csv_header(csv);
    for (int L : s.sizes) {
        const auto lat = build_lattice(s.dim, L);
        const auto bnd = s.boundary.on(lat);
        for (double l : f.replicas == 1 ? std::vector<double>{0.0} : f.lambdas) {
            const auto row = quenched_free_energy(lat, s.j_dist, s.h_dist, bnd, s.beta, f.replicas,
                                                  ReplicaCoupling{l, f.lambda_prime}, s.n_disorder, s.seed, s.threads);
            row.write_csv_row(csv);
            std::cout << "L=" << L << " lambda=" << l << " f=" << row.f_value << " +- " << row.stderr_ << '\n';
        }
        for (std::size_t i = 0; i < std::min(f.save_disorder, s.n_disorder); ++i) {
            const auto d = sample_disorder(lat, s.j_dist, s.h_dist, sample_seed(s.seed, i));
            write_json(fs::path(g.out) / ("disorder_L" + std::to_string(L) + "_" + std::to_string(i) + ".json"), d.to_json());
        }
    }
    write_meta(g, s.seed, "enumerate", {{"header", head}});
    return 0;
}

// ---------------------------------------------------------------------------

struct OrderParamFlags {
    ModelFlags model;
    std::vector<std::string> which{"q_br", "q_ea", "q_jump"};
    std::string strategy = "hybrid";
    bool extrapolate = false;
    bool uniform = false;
    double coupling = 1.0;
    double h0 = 0.0;
    std::vector<double> h_grid;
};

int run_orderparams(const Globals& g, const OrderParamFlags& f) {
    const auto cfg = base_config(g);
    fs::create_directories(g.out);
    std::vector<OrderParamEstimate> out;
    json settings;
    std::uint64_t seed = 0;
    if (f.uniform) {
        UniformModel m;
        const auto s = settings_from(g, f.model, cfg);
        m.dim = s.dim;
        m.sizes = s.sizes;
        m.beta = s.beta;
        m.boundary = s.boundary;
        m.resolution_floor = s.resolution_floor;
        m.coupling = f.coupling;
        m.h0 = f.h0;
        m.h_grid = f.h_grid.empty() ? cfg.h_grid : f.h_grid;
        const auto mu = mu_pair_estimate(m);
        out = {mu.fluc, mu.jump};
        settings = m.to_json();
    } else {
        auto s = settings_from(g, f.model, cfg);
        s.extrapolate = f.extrapolate;
        s.boundary_max.strategy = boundary_strategy_from_string(f.strategy);
        seed = s.seed;
        settings = s.to_json();
        for (const auto& w : f.which) {
            if (w == "q_br") out.push_back(q_br_estimate(s));
            else if (w == "q_ea") out.push_back(q_ea_estimate(s));
            else if (w == "q_jump") out.push_back(q_jump_estimate(s));
            else if (w == "q_lrsb") out.push_back(q_lrsb_estimate(s));
            else throw std::invalid_argument("unknown estimator '" + w + "'");
        }
    }
    std::ofstream csv(fs::path(g.out) / "orderparams.csv");
    csv << "# " << json{{"toolkit_version", kToolkitVersion}, {"settings", settings}}.dump() << '\n';
    OrderParamEstimate::write_csv_header(csv);
    json manifest{{"schema_version", kReportSchemaVersion}, {"settings", settings}, {"estimates", json::array()}};
    for (const auto& e : out) {
        e.write_csv(csv);
        manifest["estimates"].push_back(e.to_json());
        for (const auto& r : e.per_L)
            std::cout << e.name << " L=" << r.L << " value=" << r.value << " +- " << r.stderr_
                      << (r.certified ? "" : " (not certified)") << '\n';
    }
    write_json(fs::path(g.out) / "orderparams.json", manifest);
    write_meta(g, seed, "orderparams");
    return 0;
}

// ---------------------------------------------------------------------------

struct RemFlags {
    double beta_lo = 0.2, beta_hi = 5.0;
    std::size_t beta_points = 49;
    std::vector<double> lambdas{-0.5, -0.2, -0.05, 0.0, 0.05, 0.2, 0.5};
};

int run_rem(const Globals& g, const RemFlags& f) {
    if (f.beta_points < 2 || !(f.beta_hi > f.beta_lo) || !(f.beta_lo > 0.0)) throw std::invalid_argument("bad beta range");
    fs::create_directories(g.out);
    std::ofstream csv(fs::path(g.out) / "rem_surface.csv");
    csv.precision(17);
    csv << "# " << json{{"toolkit_version", kToolkitVersion}, {"beta_c", rem::kBetaC}}.dump() << '\n';
    csv << "beta,lambda,f2,a1,a2,active_branch\n";
    json table = json::array();
    for (std::size_t i = 0; i < f.beta_points; ++i) {
        const double b = f.beta_lo + (f.beta_hi - f.beta_lo) * static_cast<double>(i) / static_cast<double>(f.beta_points - 1);
        for (double l : f.lambdas)
            csv << b << ',' << l << ',' << rem::f2_rem(b, l) << ',' << rem::a1(b, l) << ',' << rem::a2(b, l) << ','
                << rem::active_branch(b, l) << '\n';
        const auto d = rem::f2_rem_one_sided_derivatives(b);
        json atoms = json::array();
        for (const auto& a : rem::p_q_rem(b)) atoms.push_back({{"q", a.q}, {"weight", a.weight}});
        table.push_back({{"beta", b}, {"f", rem::f_rem(b)}, {"right_derivative", d.right}, {"left_derivative", d.left},
                         {"q_jump", rem::q_jump_rem(b)}, {"q_br", rem::q_br_rem(b)}, {"p_q", atoms}});
    }
    json bbc = json::array();
    for (double l : f.lambdas)
        if (l != 0.0) bbc.push_back({{"lambda", l}, {"beta_bar_c", rem::beta_bar_c(l)}, {"rho", rem::rho(l)}});
    write_json(fs::path(g.out) / "rem_report.json",
               {{"schema_version", kReportSchemaVersion}, {"beta_c", rem::kBetaC}, {"derivatives", table}, {"beta_bar_c", bbc}});
    write_meta(g, 0, "rem");
    std::cout << "beta_c = " << std::setprecision(17) << rem::kBetaC << '\n';
    return 0;
}

// ---------------------------------------------------------------------------

struct McFlags {
    ModelFlags model;
    std::vector<double> ladder;
    std::size_t sweeps = 10000, therm = 1000, measure_every = 1, swap_every = 1;
    double lambda = 0.0;
    std::size_t sample = 0;
    std::string disorder_file, checkpoint, resume, series;
    std::size_t checkpoint_every = 0;
    std::size_t stop_at = 0;
    bool q_br = false;
};

McConfig mc_config(const McFlags& f, std::uint64_t seed) {
    McConfig c;
    c.beta_ladder = f.ladder;
    c.n_sweeps = f.sweeps;
    c.n_therm = f.therm;
    c.measure_every = f.measure_every;
    c.swap_every = f.swap_every;
    c.lambda = f.lambda;
    c.seed = seed;
    c.validate();
    return c;
}

void write_mc_result(const fs::path& out, const McRunResult& r, const json& head) {
    std::ofstream csv(out / "mc.csv");
    csv.precision(17);
    csv << "# " << head.dump() << '\n';
    csv << "beta,mean_R,stderr_R,mean_R2,stderr_R2,tau_int,acceptance_rate,n_measurements,equilibrated\n";
    json j{{"per_beta", json::array()}, {"swap_acceptance", r.swap_acceptance}, {"warnings", r.warnings}, {"header", head}};
    for (const auto& e : r.per_beta) {
        csv << e.beta << ',' << e.mean_R << ',' << e.stderr_R << ',' << e.mean_R2 << ',' << e.stderr_R2 << ',' << e.tau_int
            << ',' << e.acceptance_rate << ',' << e.n_measurements << ',' << (e.equilibrated ? 1 : 0) << '\n';
        j["per_beta"].push_back(e.to_json());
        std::cout << "beta=" << e.beta << " <R>=" << e.mean_R << " +- " << e.stderr_R << " <R^2>=" << e.mean_R2 << " +- "
                  << e.stderr_R2 << (e.equilibrated ? "" : " (not equilibrated)") << '\n';
    }
    write_json(out / "mc.json", j);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
}

int run_mc(const Globals& g, const McFlags& f) {
    const auto cfg = base_config(g);
    const auto s = settings_from(g, f.model, cfg);
    fs::create_directories(g.out);
    const fs::path out(g.out);
    const auto mc = mc_config(f, s.seed);

    if (f.q_br) {
        auto est = q_br_mc(s, mc);
        std::ofstream csv(out / "q_br_mc.csv");
        csv << "# " << json{{"toolkit_version", kToolkitVersion}, {"settings", est.settings}}.dump() << '\n';
        OrderParamEstimate::write_csv_header(csv);
        est.write_csv(csv);
        write_json(out / "q_br_mc.json", est.to_json());
        for (const auto& r : est.per_L)
            std::cout << "q_br_mc L=" << r.L << " value=" << r.value << " +- " << r.stderr_ << (r.certified ? "" : " (flagged)") << '\n';
        write_meta(g, s.seed, "mc");
        return 0;
    }

    if (s.sizes.size() != 1) throw std::invalid_argument("mc runs one lattice size; use --q-br for a size list");
    const auto lat = build_lattice(s.dim, s.sizes[0]);
    DisorderRealization dis;
    if (!f.disorder_file.empty()) {
        std::ifstream in(f.disorder_file);
        if (!in) throw std::invalid_argument("cannot open " + f.disorder_file);
        dis = DisorderRealization::from_json(json::parse(in));
        dis.check_matches(lat);
    } else {
        dis = sample_disorder(lat, s.j_dist, s.h_dist, sample_seed(s.seed, f.sample));
    }
    write_json(out / "disorder.json", dis.to_json());
    const auto lc = compile_couplings(lat, dis, s.boundary.on(lat));

    std::optional<ParallelTempering> pt;
    if (!f.resume.empty()) {
        std::ifstream in(f.resume, std::ios::binary);
        if (!in) throw std::invalid_argument("cannot open " + f.resume);
        pt.emplace(ParallelTempering::load(in, lc));
        if (pt->config().to_json() != mc.to_json())
            throw CheckpointError("run settings differ from the checkpoint: " + pt->config().to_json().dump());
        std::cout << "resumed at sweep " << pt->sweeps_done() << '\n';
    } else {
        pt.emplace(mc, lc);
    }
    std::ofstream series;
    if (!f.series.empty()) {
        series.open(f.series, pt->sweeps_done() ? std::ios::app : std::ios::trunc);
        series.precision(17);
        if (!pt->sweeps_done()) series << "sweep,beta,R\n";
    }
    auto save = [&] {
        if (f.checkpoint.empty()) return;
        const fs::path tmp = f.checkpoint + ".tmp";
        {
            std::ofstream os(tmp, std::ios::binary);
            pt->save(os);
        }
        fs::rename(tmp, f.checkpoint);
    };
    const std::size_t step = f.checkpoint_every ? f.checkpoint_every : pt->config().n_sweeps;
    const std::size_t stop = f.stop_at ? std::min(f.stop_at, pt->config().n_sweeps) : pt->config().n_sweeps;
    while (pt->sweeps_done() < stop) {
        pt->advance_to(std::min(pt->sweeps_done() + step, stop), g.threads, series.is_open() ? &series : nullptr);
        save();
    }
    if (!pt->finished()) {
        std::cout << "stopped at sweep " << pt->sweeps_done() << " of " << pt->config().n_sweeps << '\n';
        return 0;
    }
    const json head{{"toolkit_version", kToolkitVersion}, {"mc", pt->config().to_json()}, {"L", s.sizes[0]},
                    {"d", s.dim}, {"disorder_seed", dis.seed}};
    write_mc_result(out, pt->result(), head);
    write_meta(g, pt->config().seed, "mc");
    return 0;
}

// ---------------------------------------------------------------------------

struct VerifyFlags {
    std::string battery;
};

int run_verify(const Globals& g, const VerifyFlags& f) {
    json src = g.config.empty() ? json::object() : report::load_config_file(g.config);
    if (!f.battery.empty()) src["battery"] = f.battery;
    const auto cfg = report::parse_config(src);
    const auto r = report::run_report(cfg, g.threads, g.seed);
    report::write_report(g.out, r, g.threads);
    for (std::size_t i = 0; i < r.checks.size(); ++i) {
        const auto& c = r.checks[i];
        std::cout << std::left << std::setw(22) << verify::to_string(c.status) << ' ' << c.check_id << "  slack=" << c.slack
                  << '\n';
    }
    std::cout << r.checks.size() << " checks, " << (r.any_fail() ? "some failed" : "none failed") << '\n';
    return r.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-size spin-glass order parameters and their inequalities"};
    app.set_version_flag("--version", kToolkitVersion);
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "JSON config with sections model, sizes, grids, battery");
    app.add_option("--seed", g.seed, "master seed (overrides the config)");
    app.add_option("--out", g.out, "output directory")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads (speed only)")->check(CLI::PositiveNumber)->capture_default_str();

    EnumerateFlags ef;
    auto* en = app.add_subcommand("enumerate", "quenched free energies by exact enumeration");
    ef.model.attach(en, false);
    en->add_option("--replicas", ef.replicas, "1, 2 or 3")->check(CLI::Range(1, 3));
    en->add_option("--lambda", ef.lambdas, "replica couplings")->delimiter(',');
    en->add_option("--lambda-prime", ef.lambda_prime, "second coupling for three replicas");
    en->add_option("--save-disorder", ef.save_disorder, "write the first N disorder samples per size as JSON");

    OrderParamFlags of;
    auto* op = app.add_subcommand("orderparams", "finite-size order-parameter estimates");
    of.model.attach(op, true);
    op->add_option("--which", of.which, "q_br,q_ea,q_jump,q_lrsb")->delimiter(',');
    op->add_option("--boundary-strategy", of.strategy, "corner-enum, coord-ascent or hybrid");
    op->add_flag("--extrapolate", of.extrapolate, "add a 1/L extrapolation");
    op->add_flag("--uniform", of.uniform, "non-random model: mu_fluc and mu_jump");
    op->add_option("--coupling", of.coupling, "uniform coupling (with --uniform)");
    op->add_option("--h0", of.h0, "field point (with --uniform)");
    op->add_option("--h-grid", of.h_grid, "field offsets (with --uniform)")->delimiter(',');

    RemFlags rf;
    auto* re = app.add_subcommand("rem", "REM closed forms: surface CSV and derivative table");
    re->add_option("--beta-lo", rf.beta_lo);
    re->add_option("--beta-hi", rf.beta_hi);
    re->add_option("--beta-points", rf.beta_points);
    re->add_option("--lambda", rf.lambdas, "coupling values")->delimiter(',');

    McFlags mf;
    auto* mc = app.add_subcommand("mc", "parallel tempering for the coupled two-replica system");
    mf.model.attach(mc, false);
    mc->add_option("--ladder", mf.ladder, "increasing beta ladder")->delimiter(',')->required();
    mc->add_option("--sweeps", mf.sweeps)->capture_default_str();
    mc->add_option("--therm", mf.therm)->capture_default_str();
    mc->add_option("--measure-every", mf.measure_every)->capture_default_str();
    mc->add_option("--swap-every", mf.swap_every)->capture_default_str();
    mc->add_option("--lambda", mf.lambda, "replica coupling");
    mc->add_option("--sample", mf.sample, "disorder sample index drawn from the seed");
    mc->add_option("--disorder", mf.disorder_file, "disorder JSON file instead of sampling");
    mc->add_option("--checkpoint", mf.checkpoint, "checkpoint file written as the run progresses");
    mc->add_option("--checkpoint-every", mf.checkpoint_every, "sweeps between checkpoints");
    mc->add_option("--resume", mf.resume, "resume from a checkpoint");
    mc->add_option("--stop-at", mf.stop_at, "checkpoint and exit once this many sweeps are done");
    mc->add_option("--series", mf.series, "append the R time series as CSV");
    mc->add_flag("--q-br", mf.q_br, "estimate q_br over sizes and disorder samples instead");

    VerifyFlags vf;
    auto* ve = app.add_subcommand("verify", "run a battery of checks and write report.json");
    ve->add_option("--battery", vf.battery, "battery name overriding the config (\"desk\")");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*en) return run_enumerate(g, ef);
        if (*op) return run_orderparams(g, of);
        if (*re) return run_rem(g, rf);
        if (*mc) return run_mc(g, mf);
        if (*ve) return run_verify(g, vf);
    } catch (const report::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
