#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgorder/exact.hpp"
#include "sgorder/mc.hpp"
#include "sgorder/order_params.hpp"
#include "sgorder/quenched.hpp"
#include "sgorder/rem.hpp"
#include "sgorder/transfer.hpp"

namespace sgorder::verify {

/// Ordered from best to worst, so the status of a group is the maximum.
enum class Status { exact_pass, pass_with_tolerance, trend_consistent, fail };

inline std::string to_string(Status s) {
    switch (s) {
        case Status::exact_pass: return "exact-pass";
        case Status::pass_with_tolerance: return "pass-with-tolerance";
        case Status::trend_consistent: return "trend-consistent";
        case Status::fail: return "fail";
    }
    return "?";
}

inline Status worst(Status a, Status b) { return std::max(a, b); }

/// Plain numeric table, written as one CSV per check.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void write_csv(std::ostream& os) const {
        os.precision(17);
        for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
        os << '\n';
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
            os << '\n';
        }
    }
};

/// Outcome of one check. `relation` reads "lhs <relation> rhs"; slack is the
/// margin by which it holds (negative when violated), taken at the worst case.
struct CheckResult {
    std::string check_id;
    Status status = Status::exact_pass;
    std::string relation = "<=";
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    double tolerance = 0.0;
    std::string message;
    nlohmann::json settings = nlohmann::json::object();
    nlohmann::json provenance = nlohmann::json::object();
    nlohmann::json details = nlohmann::json::object();
    Table table;
    std::vector<CheckResult> parts;

    bool failed() const noexcept { return status == Status::fail; }

    nlohmann::json to_json() const {
        nlohmann::json j{{"check_id", check_id}, {"status", to_string(status)}, {"relation", relation},
                         {"lhs", lhs},           {"rhs", rhs},                  {"slack", slack},
                         {"tolerance", tolerance}, {"message", message},        {"settings", settings},
                         {"provenance", provenance}, {"details", details}};
        if (!parts.empty()) {
            j["parts"] = nlohmann::json::array();
            for (const auto& p : parts) j["parts"].push_back(p.to_json());
        }
        return j;
    }
};

namespace detail {

inline double slack_of(const std::string& relation, double lhs, double rhs) {
    return relation == "<=" ? rhs - lhs : lhs - rhs;
}

/// Keeps the worst (smallest slack) comparison seen so far.
struct WorstCase {
    std::string relation;
    double lhs = 0.0, rhs = 0.0, slack = INFINITY;
    std::size_t count = 0;
    std::size_t violations = 0;
    double tol = 0.0;

    explicit WorstCase(std::string rel, double tolerance) : relation(std::move(rel)), tol(tolerance) {}

    double add(double l, double r) {
        const double s = slack_of(relation, l, r);
        ++count;
        if (!(s >= -tol)) ++violations;
        if (!(s >= slack)) {
            slack = s;
            lhs = l;
            rhs = r;
        }
        return s;
    }

    void into(CheckResult& c, Status pass = Status::exact_pass) const {
        c.relation = relation;
        c.lhs = lhs;
        c.rhs = rhs;
        c.slack = count ? slack : 0.0;
        c.tolerance = tol;
        c.status = violations ? Status::fail : pass;
        c.details["comparisons"] = count;
        c.details["violations"] = violations;
    }
};

inline nlohmann::json provenance_of(const EstimatorSettings& s) {
    return {{"seed", s.seed}, {"sizes", s.sizes}, {"n_disorder", s.n_disorder}, {"sample_seeds", "derive_seed(seed, i)"}};
}

inline bool z2_symmetric(const EstimatorSettings& s) {
    return s.h_dist.is_degenerate() && s.h_dist.degenerate_value() == 0.0 && s.boundary.value == 0.0;
}

inline void require_field_free(const EstimatorSettings& s, const char* what) {
    if (!(s.h_dist.is_degenerate() && s.h_dist.degenerate_value() == 0.0))
        throw std::invalid_argument(std::string(what) + " needs h = 0");
}

inline std::uint64_t bits_of(double x) {
    std::uint64_t b;
    std::memcpy(&b, &x, sizeof b);
    return b;
}

/// Sub-result statuses folded into the parent.
inline void fold_parts(CheckResult& c) {
    for (const auto& p : c.parts) c.status = worst(c.status, p.status);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Exact identities

/// Factorization, chain rule, transposition, zero mean overlap (Z2-symmetric
/// inputs only) and histogram normalization on every size and sample.
inline CheckResult check_identities(const EstimatorSettings& s, double lambda = 0.3, double lambda_p = -0.45) {
    require_positive_beta(s.beta);
    if (s.sizes.empty()) throw std::invalid_argument("no lattice sizes given");
    CheckResult c;
    c.check_id = "identities";
    c.settings = s.to_json();
    c.settings["lambda"] = lambda;
    c.settings["lambda_p"] = lambda_p;
    c.provenance = detail::provenance_of(s);
    c.table.columns = {"L", "sample", "factorization_rel", "chain_rel", "transposition_equal", "mean_r_zero",
                       "hist_norm_err", "hist_moment_err"};
    const bool symmetric = detail::z2_symmetric(s);
    struct Row {
        double fac, chain, mean_r, norm, moment;
        bool transposed;
    };
    detail::WorstCase fac("<=", 0.0), chain("<=", 0.0), trans("<=", 0.0), zero("<=", 0.0), hist("<=", 0.0);
    for (int L : s.sizes) {
        const auto lat = build_lattice(s.dim, L);
        require_cap(lat.num_sites(), kMaxReplicaSites, "identity checks");
        const auto bnd = s.boundary.on(lat);
        const auto rows = quenched_map(
            lat, s.j_dist, s.h_dist, s.n_disorder, s.seed,
            [&](const DisorderRealization& d, std::size_t) {
                const auto table = energy_table(lat, d, bnd);
                const ShellTable st(s.beta, table);
                const double z1 = log_z1(s.beta, table).log_z;
                const auto t0 = two_replica_stats(st, 0.0);
                const auto tl = two_replica_stats(st, lambda);
                const double z3l0 = three_replica_stats(st, lambda, 0.0).log_z;
                const double z3a = three_replica_stats(st, lambda, lambda_p).log_z;
                const double z3b = three_replica_stats(st, lambda_p, lambda).log_z;
                const auto h = overlap_histogram(st, 0.0);
                const auto mom = overlap_moments(s.beta, 0.0, lat, d, bnd);
                Row r;
                r.fac = std::abs(t0.log_z - 2.0 * z1) / std::max(1.0, std::abs(z1));
                r.chain = std::abs(z3l0 - z1 - tl.log_z) / std::max(1.0, std::abs(z3l0));
                r.transposed = detail::bits_of(z3a) == detail::bits_of(z3b);
                r.mean_r = std::abs(t0.mean_r);
                r.norm = std::abs(h.normalization - 1.0);
                r.moment = std::max(std::abs(h.moment(1) - mom.mean_r), std::abs(h.moment(2) - mom.mean_r2));
                return r;
            },
            s.threads);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            fac.add(r.fac, 1e-12);
            chain.add(r.chain, 1e-12);
            trans.add(r.transposed ? 0.0 : 1.0, 0.0);
            if (symmetric) zero.add(r.mean_r, 1e-12);
            hist.add(std::max(r.norm, r.moment), 1e-12);
            c.table.rows.push_back({double(L), double(i), r.fac, r.chain, r.transposed ? 1.0 : 0.0, r.mean_r, r.norm,
                                    r.moment});
        }
    }
    auto part = [&](const char* id, const detail::WorstCase& w) {
        CheckResult p;
        p.check_id = id;
        w.into(p);
        c.parts.push_back(std::move(p));
    };
    part("factorization", fac);
    part("chain-rule", chain);
    part("transposition", trans);
    if (symmetric) part("zero-mean-overlap", zero);
    part("histogram", hist);
    detail::fold_parts(c);
    c.message = symmetric ? "all identities" : "zero-mean-overlap skipped: fields or boundary break the symmetry";
    return c;
}

struct DerivativeOptions {
    std::vector<double> lambdas{0.0, 0.1, -0.25, 0.5};
    double first_step = 1e-4;
    double second_step = 1e-3;
    double first_tol = 1e-6;
    double second_tol = 1e-9;
    /// Variance from the Richardson-extrapolated second difference.
    double variance_tol = 1e-6;
    /// Negative control: free energies are evaluated with the cross term's sign flipped.
    bool corrupt_cross_term = false;
};

/// Finite differences of the two- and three-replica free energies against
/// direct expectations, and the sign of second differences (concavity).
inline CheckResult check_derivatives(const EstimatorSettings& s, const DerivativeOptions& o = {}) {
    require_positive_beta(s.beta);
    if (s.sizes.empty()) throw std::invalid_argument("no lattice sizes given");
    CheckResult c;
    c.check_id = o.corrupt_cross_term ? "derivatives-corrupted" : "derivatives";
    c.settings = s.to_json();
    c.settings["lambdas"] = o.lambdas;
    c.settings["first_step"] = o.first_step;
    c.settings["second_step"] = o.second_step;
    c.settings["richardson"] = true;
    c.settings["corrupt_cross_term"] = o.corrupt_cross_term;
    c.provenance = detail::provenance_of(s);
    c.table.columns = {"L", "sample", "lambda", "f2_first_err", "f2_second_diff", "variance_err", "f3_first_err",
                       "f3_second_diff"};
    const double sign = o.corrupt_cross_term ? -1.0 : 1.0;
    // directions (ξ, ξ') for the three-replica checks
    const std::vector<std::pair<double, double>> dirs{{1.0, -1.0}, {0.6, 0.8}};
    detail::WorstCase first("<=", 0.0), second("<=", 0.0), var("<=", 0.0), first3("<=", 0.0), second3("<=", 0.0);
    for (int L : s.sizes) {
        const auto lat = build_lattice(s.dim, L);
        require_cap(lat.num_sites(), kMaxReplicaSites, "derivative checks");
        const auto bnd = s.boundary.on(lat);
        const double bn = s.beta * static_cast<double>(lat.num_sites());
        const auto rows = quenched_map(
            lat, s.j_dist, s.h_dist, s.n_disorder, s.seed,
            [&](const DisorderRealization& d, std::size_t) {
                const ShellTable st(s.beta, energy_table(lat, d, bnd));
                auto f2 = [&](double l) { return -two_replica_stats(st, sign * l).log_z / bn; };
                auto f3 = [&](double l, double lp) { return -three_replica_stats(st, sign * l, sign * lp).log_z / bn; };
                std::vector<std::array<double, 6>> out;
                for (double l : o.lambdas) {
                    const auto ts = two_replica_stats(st, l);
                    const double h1 = o.first_step, h2 = o.second_step;
                    const double d1 = (f2(l + h1) - f2(l - h1)) / (2 * h1);
                    const double c0 = f2(l);
                    const double sd = f2(l + h2) - 2 * c0 + f2(l - h2);
                    const double sd_half = f2(l + h2 / 2) - 2 * c0 + f2(l - h2 / 2);
                    // -f2''/(βN) = Var R; Richardson on the two step sizes
                    const double curv = (4 * sd_half / (h2 * h2 / 4) - sd / (h2 * h2)) / 3;
                    const double var_err = std::abs(-curv / bn - ts.variance_r());
                    double e3 = 0.0, s3 = -INFINITY;
                    for (auto [xi, xp] : dirs) {
                        const double lp = -l;
                        const auto t3 = three_replica_stats(st, l, lp);
                        const double g1 =
                            (f3(l + h1 * xi, lp + h1 * xp) - f3(l - h1 * xi, lp - h1 * xp)) / (2 * h1);
                        e3 = std::max(e3, std::abs(g1 + t3.mean_tilde(xi, xp)));
                        const double g2 =
                            f3(l + h2 * xi, lp + h2 * xp) - 2 * f3(l, lp) + f3(l - h2 * xi, lp - h2 * xp);
                        s3 = std::max(s3, g2);
                    }
                    out.push_back({std::abs(d1 + ts.mean_r), sd, var_err, e3, s3, l});
                }
                return out;
            },
            s.threads);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (const auto& r : rows[i]) {
                first.add(r[0], o.first_tol);
                second.add(r[1], o.second_tol);
                var.add(r[2], o.variance_tol);
                first3.add(r[3], o.first_tol);
                second3.add(r[4], o.second_tol);
                c.table.rows.push_back({double(L), double(i), r[5], r[0], r[1], r[2], r[3], r[4]});
            }
        }
    }
    auto part = [&](const char* id, const detail::WorstCase& w, Status pass) {
        CheckResult p;
        p.check_id = id;
        w.into(p, pass);
        c.parts.push_back(std::move(p));
    };
    part("f2-first-derivative", first, Status::pass_with_tolerance);
    part("f2-concavity", second, Status::exact_pass);
    part("f2-variance", var, Status::pass_with_tolerance);
    part("f3-directional-derivative", first3, Status::pass_with_tolerance);
    part("f3-concavity", second3, Status::exact_pass);
    detail::fold_parts(c);
    return c;
}

// ---------------------------------------------------------------------------
// Block decomposition

struct BlockGeometry {
    int dim = 1;
    int L = 0;
    int ell = 0;
    int per_axis = 0;
    std::size_t K = 0;
    std::vector<std::vector<int>> offsets;  // lower corner of each copy
};

/// K = ⌊(L-1)/(ℓ+1)⌋^d.
inline std::size_t optimal_copy_count(int dim, int L, int ell) {
    const auto m = static_cast<std::size_t>((L - 1) / (ell + 1));
    std::size_t k = 1;
    for (int i = 0; i < dim; ++i) k *= m;
    return k;
}

/// Copies start at coordinate 1 + k(ℓ+1) along every axis: pairwise distance
/// ≥ 2 and distance ≥ 2 from the outer boundary.
inline BlockGeometry block_geometry(int dim, int L, int ell) {
    if (ell < 2) throw std::invalid_argument("block side must be >= 2");
    BlockGeometry g;
    g.dim = dim;
    g.L = L;
    g.ell = ell;
    g.per_axis = (L - 1) / (ell + 1);
    g.K = optimal_copy_count(dim, L, ell);
    if (g.K < 2)
        throw std::invalid_argument("geometry infeasible: K = " + std::to_string(g.K) + " < 2 for L = " +
                                    std::to_string(L) + ", ell = " + std::to_string(ell));
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    for (std::size_t c = 0; c < g.K; ++c) {
        std::vector<int> off(static_cast<std::size_t>(dim));
        for (int a = 0; a < dim; ++a) off[a] = 1 + idx[a] * (ell + 1);
        g.offsets.push_back(off);
        for (int a = dim - 1; a >= 0; --a) {
            if (++idx[a] < g.per_axis) break;
            idx[a] = 0;
        }
    }
    return g;
}

/// A translated copy of Λ_ℓ inside Λ_L as a standalone system: its couplings
/// and fields are those of the big realization and each of its boundary sites
/// is the interior site of Λ_L just outside the copy.
struct EmbeddedCopy {
    Lattice lat;
    DisorderRealization dis;
    std::vector<std::size_t> sites;  // copy site -> big site
    std::vector<std::size_t> outer;  // copy boundary site -> big site
};

inline EmbeddedCopy embedded_copy(const Lattice& big, const DisorderRealization& dis, const BlockGeometry& g,
                                  std::size_t copy) {
    EmbeddedCopy e{Lattice(g.dim, g.ell), {}, {}, {}};
    const auto& off = g.offsets.at(copy);
    auto to_big = [&](std::vector<int> x) {
        for (int a = 0; a < g.dim; ++a) x[a] += off[a];
        return big.index(x);
    };
    e.sites.resize(e.lat.num_sites());
    for (std::size_t s = 0; s < e.sites.size(); ++s) e.sites[s] = to_big(e.lat.coords(s));
    e.dis.dim = g.dim;
    e.dis.side = g.ell;
    e.dis.j_dist = dis.j_dist;
    e.dis.h_dist = dis.h_dist;
    e.dis.seed = dis.seed;
    for (const auto& bond : e.lat.bonds())
        e.dis.J_bonds.push_back(dis.J_bonds[big.bond_between(e.sites[bond.a], e.sites[bond.b])]);
    e.outer.resize(e.lat.num_boundary_sites());
    e.dis.J_boundary.resize(e.lat.num_boundary_sites());
    for (const auto& bb : e.lat.boundary_bonds()) {
        auto x = e.lat.coords(bb.site);
        x[bb.axis] += bb.sign;
        const std::size_t u = to_big(x);
        e.outer[bb.boundary_site] = u;
        e.dis.J_boundary[bb.boundary_site] = dis.J_bonds[big.bond_between(e.sites[bb.site], u)];
    }
    for (auto s : e.sites) e.dis.h.push_back(dis.h[s]);
    return e;
}

/// ⟨σ_x⟩ on a copy for every ±1 boundary pattern; bit i of the pattern is
/// boundary site i (set = +1).
struct CornerTable {
    std::size_t num_boundary = 0;
    std::vector<std::vector<double>> magnetization;
    std::vector<double> sum_sq;  // Σ_x ⟨σ_x⟩² per pattern
    double max_sum_sq = -INFINITY;
};

inline constexpr std::size_t kMaxCornerBoundary = 20;

inline CornerTable corner_table(double beta, const EmbeddedCopy& e) {
    const std::size_t nb = e.lat.num_boundary_sites();
    require_cap(nb, kMaxCornerBoundary, "corner table");
    BoundaryResponse resp(beta, e.lat, e.dis);
    CornerTable t;
    t.num_boundary = nb;
    const std::size_t count = std::size_t{1} << nb;
    t.magnetization.resize(count);
    t.sum_sq.resize(count);
    std::vector<double> b(nb);
    for (std::size_t p = 0; p < count; ++p) {
        for (std::size_t i = 0; i < nb; ++i) b[i] = ((p >> i) & 1u) ? 1.0 : -1.0;
        t.magnetization[p] = resp.magnetization(b);
        double s = 0.0;
        for (double m : t.magnetization[p]) s += m * m;
        t.sum_sq[p] = s;
        t.max_sum_sq = std::max(t.max_sum_sq, s);
    }
    return t;
}

struct BlockOptions {
    double exact_tol = 1e-10;
    double sigmas = 3.0;
    /// Run the conditional decomposition when Λ_L is enumerable.
    bool conditional = true;
    /// Negative control: swap the sides of the conditional inequality.
    bool invert = false;
};

namespace detail {

struct BlockSample {
    double lhs_full = 0.0;
    double mean_copy_max = 0.0;
    double pair_bound_full = 0.0;
    double worst_pair_slack = INFINITY;     // M_a M_b - Σ⟨σxσy⟩²
    double worst_cond_slack = INFINITY;     // min over pairs of both conditional steps
    double worst_identity_err = 0.0;        // ⟨σxσy⟩ vs Σ_τ P(τ)⟨σx⟩⟨σy⟩
    double cond_lhs = 0.0, cond_rhs = 0.0;  // at the worst conditional step
    bool conditional_done = false;
};

inline BlockSample block_sample(double beta, const Lattice& lat, const DisorderRealization& dis,
                                const BoundaryConfig& bnd, const BlockGeometry& g, const BlockOptions& o) {
    BlockSample r;
    const std::size_t n = lat.num_sites();
    const auto corr = exact_correlations(beta, lat, dis, bnd, true);
    for (double v : corr.correlation) r.lhs_full += v * v;

    std::vector<EmbeddedCopy> copies;
    std::vector<CornerTable> tables;
    for (std::size_t k = 0; k < g.K; ++k) {
        copies.push_back(embedded_copy(lat, dis, g, k));
        tables.push_back(corner_table(beta, copies.back()));
        r.mean_copy_max += tables.back().max_sum_sq;
    }
    r.mean_copy_max /= static_cast<double>(g.K);

    double ell_d = 1.0;
    for (int a = 0; a < g.dim; ++a) ell_d *= g.ell;
    const double kk = static_cast<double>(g.K) * static_cast<double>(g.K - 1);
    r.pair_bound_full = static_cast<double>(n) * static_cast<double>(n) - kk * ell_d * ell_d;
    for (std::size_t a = 0; a < g.K; ++a)
        for (std::size_t b = 0; b < g.K; ++b) {
            if (a == b) continue;
            double pair = 0.0;
            for (auto x : copies[a].sites)
                for (auto y : copies[b].sites) pair += corr.corr(x, y) * corr.corr(x, y);
            const double bound = tables[a].max_sum_sq * tables[b].max_sum_sq;
            r.pair_bound_full += bound;
            r.worst_pair_slack = std::min(r.worst_pair_slack, bound - pair);
        }

    if (!o.conditional || n > kMaxCorrelationSites) return r;
    r.conditional_done = true;
    const auto table = energy_table(lat, dis, bnd);
    std::vector<double> w(table.energy.size());
    double z = 0.0;
    for (std::size_t m = 0; m < w.size(); ++m) {
        w[m] = std::exp(-beta * (table.energy[m] - table.min_energy));
        z += w[m];
    }
    auto pattern = [](const EmbeddedCopy& e, std::uint64_t mask) {
        std::size_t p = 0;
        for (std::size_t i = 0; i < e.outer.size(); ++i)
            if ((mask >> e.outer[i]) & 1u) p |= std::size_t{1} << i;
        return p;
    };
    for (std::size_t a = 0; a < g.K; ++a)
        for (std::size_t b = a + 1; b < g.K; ++b) {
            // joint law of the two boundary patterns; P(τ) summed over the rest of τ
            const std::size_t na = tables[a].num_boundary, nbb = tables[b].num_boundary;
            std::vector<double> p(std::size_t{1} << (na + nbb), 0.0);
            for (std::size_t m = 0; m < w.size(); ++m) p[pattern(copies[a], m) | (pattern(copies[b], m) << na)] += w[m];
            for (auto& v : p) v /= z;
            double lhs = 0.0, middle = 0.0;
            double id_err = 0.0;
            for (std::size_t i = 0; i < copies[a].sites.size(); ++i)
                for (std::size_t j = 0; j < copies[b].sites.size(); ++j) {
                    double dec = 0.0;
                    for (std::size_t k = 0; k < p.size(); ++k)
                        dec += p[k] * tables[a].magnetization[k & ((std::size_t{1} << na) - 1)][i] *
                               tables[b].magnetization[k >> na][j];
                    const double c = corr.corr(copies[a].sites[i], copies[b].sites[j]);
                    id_err = std::max(id_err, std::abs(c - dec));
                    lhs += c * c;
                }
            for (std::size_t k = 0; k < p.size(); ++k)
                middle += p[k] * tables[a].sum_sq[k & ((std::size_t{1} << na) - 1)] * tables[b].sum_sq[k >> na];
            const double top = tables[a].max_sum_sq * tables[b].max_sum_sq;
            double s1 = middle - lhs, s2 = top - middle;
            double l1 = lhs, r1 = middle;
            if (o.invert) {
                s1 = -s1;
                s2 = -s2;
                std::swap(l1, r1);
            }
            const double step = std::min(s1, s2);
            if (step < r.worst_cond_slack) {
                r.worst_cond_slack = step;
                r.cond_lhs = s1 <= s2 ? l1 : (o.invert ? top : middle);
                r.cond_rhs = s1 <= s2 ? r1 : (o.invert ? middle : top);
            }
            r.worst_identity_err = std::max(r.worst_identity_err, id_err);
        }
    return r;
}

}  // namespace detail

/// The block-counting inequality at finite L. Parts:
///  - conditional: per realization Σ⟨σxσy⟩² ≤ Σ_τ P(τ) S_a(τ) S_b(τ) ≤ max S_a · max S_b
///    with the P(τ)-decomposition evaluated by enumeration (Λ_L enumerable only);
///  - pair-bound: per realization Σ_{x∈a,y∈b}⟨σxσy⟩² ≤ max S_a · max S_b, any size;
///  - ensemble: E Σ_{x,y}⟨σxσy⟩² ≤ K(K-1) ℓ^{2d} q_EA(ℓ)² + (L^{2d} - K(K-1) ℓ^{2d})
///    within `sigmas` combined standard errors.
/// The maxima are over ±1 boundary corners, enumerated exhaustively.
inline CheckResult check_block_decomposition(const EstimatorSettings& s, int L, int ell, const BlockOptions& o = {}) {
    require_positive_beta(s.beta);
    const auto g = block_geometry(s.dim, L, ell);
    const auto lat = build_lattice(s.dim, L);
    const auto bnd = s.boundary.on(lat);
    if (s.n_disorder < 2) throw std::invalid_argument("block decomposition needs at least two disorder samples");
    const auto samples = quenched_map(
        lat, s.j_dist, s.h_dist, s.n_disorder, s.seed,
        [&](const DisorderRealization& d, std::size_t) { return detail::block_sample(s.beta, lat, d, bnd, g, o); },
        s.threads);

    CheckResult c;
    c.check_id = "block-decomposition";
    c.settings = s.to_json();
    c.settings["L"] = L;
    c.settings["ell"] = ell;
    c.settings["K"] = g.K;
    c.settings["maximizer_gap_allowance"] = 0.0;
    c.settings["invert"] = o.invert;
    c.provenance = detail::provenance_of(s);
    c.details["offsets"] = g.offsets;
    c.details["corner_certified"] = true;
    c.table.columns = {"sample", "lhs_full", "mean_copy_max", "pair_bound_full", "worst_pair_slack",
                       "worst_conditional_slack", "identity_err"};

    detail::WorstCase pair("<=", o.exact_tol), cond("<=", o.exact_tol), ident("<=", 0.0);
    std::vector<double> lhs, mx;
    bool any_cond = false;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& r = samples[i];
        pair.add(0.0, r.worst_pair_slack);
        if (r.conditional_done) {
            any_cond = true;
            cond.add(r.cond_lhs, r.cond_lhs + r.worst_cond_slack);
            ident.add(r.worst_identity_err, 1e-12);
        }
        lhs.push_back(r.lhs_full);
        mx.push_back(r.mean_copy_max);
        c.table.rows.push_back({double(i), r.lhs_full, r.mean_copy_max, r.pair_bound_full, r.worst_pair_slack,
                                r.conditional_done ? r.worst_cond_slack : NAN, r.worst_identity_err});
    }
    if (any_cond) {
        CheckResult p;
        p.check_id = "conditional";
        cond.into(p);
        c.parts.push_back(p);
        CheckResult q;
        q.check_id = "conditional-identity";
        ident.into(q);
        c.parts.push_back(q);
    }
    {
        CheckResult p;
        p.check_id = "pair-bound";
        pair.into(p);
        p.relation = "<=";
        c.parts.push_back(p);
    }
    {
        const auto el = summarize(lhs);
        const auto em = summarize(mx);
        double ell_d = 1.0;
        for (int a = 0; a < g.dim; ++a) ell_d *= ell;
        const double kk = static_cast<double>(g.K) * static_cast<double>(g.K - 1);
        const double rest = static_cast<double>(lat.num_sites()) * static_cast<double>(lat.num_sites()) - kk * ell_d * ell_d;
        const double rhs = kk * em.mean * em.mean + rest;
        const double se = std::hypot(el.stderr_, kk * 2.0 * em.mean * em.stderr_);
        CheckResult p;
        p.check_id = "ensemble";
        p.relation = "<=";
        p.lhs = el.mean;
        p.rhs = rhs;
        p.slack = rhs - el.mean;
        p.tolerance = o.sigmas * se;
        p.status = p.slack >= -p.tolerance ? Status::pass_with_tolerance : Status::fail;
        p.details = {{"q_ea_ell", em.mean / ell_d}, {"q_ea_ell_stderr", em.stderr_ / ell_d}, {"lhs_stderr", el.stderr_},
                     {"combined_stderr", se}};
        c.parts.push_back(p);
    }
    c.status = Status::exact_pass;
    detail::fold_parts(c);
    const auto& worst_part = *std::min_element(c.parts.begin(), c.parts.end(), [](const auto& a, const auto& b) {
        return a.slack + a.tolerance < b.slack + b.tolerance;
    });
    c.lhs = worst_part.lhs;
    c.rhs = worst_part.rhs;
    c.slack = worst_part.slack;
    c.tolerance = worst_part.tolerance;
    c.message = "worst part: " + worst_part.check_id;
    return c;
}

// ---------------------------------------------------------------------------
// Order-parameter inequalities at finite size

namespace detail {

/// Per-size comparison "lhs >= rhs" with standard errors; a violation is a
/// deficit beyond `sigmas` combined errors.
struct TrendRow {
    int L;
    double lhs, lhs_se, rhs, rhs_se;
    double slack() const { return lhs - rhs; }
    double tol(double sigmas) const { return sigmas * std::hypot(lhs_se, rhs_se); }
};

/// trend-consistent unless every size violates (then fail). With
/// `allow_shrinking`, a deficit that shrinks from the smallest to the largest
/// size is still trend-consistent. The reported
/// slack/tolerance are from the size closest to passing.
inline void trend_verdict(CheckResult& c, const std::vector<TrendRow>& rows, double sigmas, bool allow_shrinking = false) {
    c.relation = ">=";
    std::size_t violations = 0;
    double best_margin = -INFINITY;
    double max_sigma = 0.0;
    for (const auto& r : rows) {
        const double tol = r.tol(sigmas);
        if (r.slack() < -tol) ++violations;
        const double se = std::hypot(r.lhs_se, r.rhs_se);
        if (r.slack() < 0.0) max_sigma = std::max(max_sigma, se > 0.0 ? -r.slack() / se : INFINITY);
        if (r.slack() + tol > best_margin) {
            best_margin = r.slack() + tol;
            c.lhs = r.lhs;
            c.rhs = r.rhs;
            c.slack = r.slack();
            c.tolerance = tol;
        }
    }
    c.details["violating_sizes"] = violations;
    c.details["max_violation_sigmas"] = max_sigma;
    // a deficit that shrinks with L is still compatible with the limit statement
    const bool shrinking = allow_shrinking && rows.size() >= 2 && -rows.back().slack() < -rows.front().slack();
    c.details["verdict"] = violations == 0 ? "consistent" : (shrinking ? "deficit-shrinking" : "inconsistent");
    c.details["deficit_shrinking"] = shrinking;
    c.status = (!rows.empty() && violations == rows.size() && !shrinking) ? Status::fail : Status::trend_consistent;
}

}  // namespace detail

/// q_EA(L) against q_br(L) per size (trend only), plus the block-decomposition
/// surrogate at every size where K ≥ 2 copies of side `ell` fit.
inline CheckResult check_qea_vs_qbr(const EstimatorSettings& s, int ell = 2, double sigmas = 3.0) {
    detail::require_field_free(s, "the q_EA comparison");
    const auto qea = q_ea_estimate(s);
    const auto qbr = q_br_estimate(s);
    CheckResult c;
    c.check_id = "qea-vs-qbr";
    c.settings = s.to_json();
    c.settings["ell"] = ell;
    c.provenance = detail::provenance_of(s);
    c.table.columns = {"L", "q_ea", "q_ea_stderr", "q_ea_certified", "q_br", "q_br_stderr"};
    std::vector<detail::TrendRow> rows;
    for (int L : s.sizes) {
        const auto& a = qea.at(L);
        const auto& b = qbr.at(L);
        rows.push_back({L, a.value, a.stderr_, b.value, b.stderr_});
        c.table.rows.push_back({double(L), a.value, a.stderr_, a.certified ? 1.0 : 0.0, b.value, b.stderr_});
    }
    detail::trend_verdict(c, rows, sigmas);
    // the asymptotic statement is never asserted
    c.status = Status::trend_consistent;
    c.details["q_ea"] = qea.to_json();
    c.details["q_br"] = qbr.to_json();
    for (int L : s.sizes) {
        if (optimal_copy_count(s.dim, L, ell) < 2) continue;
        auto p = check_block_decomposition(s, L, ell);
        p.check_id = "surrogate-L" + std::to_string(L);
        c.parts.push_back(std::move(p));
    }
    if (c.parts.empty()) c.message = "no size admits two copies; surrogate not evaluated";
    detail::fold_parts(c);
    return c;
}

/// q_jump(L) ≥ q_br(L)²/4 per size at the resolved coupling, plus the
/// stronger comparison q_jump ≥ q_br reported without assertion.
inline CheckResult check_qjump_bound(const EstimatorSettings& s, double sigmas = 3.0) {
    const auto qj = q_jump_estimate(s);
    const auto qb = q_br_estimate(s);
    CheckResult c;
    c.check_id = "qjump-vs-qbr";
    c.settings = s.to_json();
    c.provenance = detail::provenance_of(s);
    c.table.columns = {"L", "lambda", "q_jump", "q_jump_stderr", "q_br", "q_br_stderr", "q_br_sq_over_4"};
    std::vector<detail::TrendRow> rows;
    std::size_t stronger_holds = 0;
    for (int L : s.sizes) {
        const auto& j = qj.at(L);
        const auto& b = qb.at(L);
        rows.push_back({L, j.value, j.stderr_, b.value * b.value / 4.0, b.value * b.stderr_ / 2.0});
        if (j.value >= b.value) ++stronger_holds;
        c.table.rows.push_back({double(L), j.lambda, j.value, j.stderr_, b.value, b.stderr_, b.value * b.value / 4});
    }
    detail::trend_verdict(c, rows, sigmas);
    c.details["stronger_conjecture_sizes_holding"] = stronger_holds;
    c.details["q_jump"] = qj.to_json();
    c.details["q_br"] = qb.to_json();
    return c;
}

/// The REM instance q_jump ≥ q_br²/4 and q_jump ≥ q_br on a β grid, exactly.
inline CheckResult check_qjump_bound_rem(double beta_lo = 0.2, double beta_hi = 6.0, std::size_t points = 200) {
    CheckResult c;
    c.check_id = "qjump-vs-qbr-rem";
    c.settings = {{"beta_lo", beta_lo}, {"beta_hi", beta_hi}, {"points", points}};
    c.table.columns = {"beta", "q_jump", "q_br"};
    detail::WorstCase weak(">=", 1e-15), strong(">=", 1e-15);
    for (std::size_t i = 0; i < points; ++i) {
        const double b = beta_lo + (beta_hi - beta_lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        const double j = rem::q_jump_rem(b), q = rem::q_br_rem(b);
        weak.add(j, q * q / 4.0);
        strong.add(j, q);
        c.table.rows.push_back({b, j, q});
    }
    CheckResult p1, p2;
    p1.check_id = "griffiths-type";
    weak.into(p1);
    p2.check_id = "stronger";
    strong.into(p2);
    c.parts = {p1, p2};
    detail::fold_parts(c);
    c.relation = ">=";
    c.lhs = p1.lhs;
    c.rhs = p1.rhs;
    c.slack = p1.slack;
    c.tolerance = p1.tolerance;
    return c;
}

struct ConcavityOptions {
    double tol = 1e-9;
    double identity_tol = 1e-12;
    /// Negative control: assert the reverse inequality.
    bool invert = false;
};

/// Finite-L concavity inequality for every sample and grid λ:
///   (log Z3(λ,-λ) - log Z3(0,0)) / (βNλ) ≥ r - l,
/// with r, l the one-sided quotients of -f2 built from f3(λ,0) = f + f2(λ).
/// The quotient form is asserted for Z2-symmetric inputs; otherwise the
/// gradient form (left side ≥ 0) is asserted and the quotient form reported.
inline CheckResult check_replica_concavity(const EstimatorSettings& s, const ConcavityOptions& o = {}) {
    require_positive_beta(s.beta);
    if (s.sizes.empty()) throw std::invalid_argument("no lattice sizes given");
    validate_grid(s.lambda_grid);
    const bool symmetric = detail::z2_symmetric(s);
    CheckResult c;
    c.check_id = o.invert ? "replica-concavity-inverted" : "replica-concavity";
    c.settings = s.to_json();
    c.settings["asserted_form"] = symmetric ? "quotient" : "gradient";
    c.settings["invert"] = o.invert;
    c.provenance = detail::provenance_of(s);
    c.table.columns = {"L", "sample", "lambda", "lhs", "rhs", "slack", "identity_rel"};
    struct Row {
        double lambda, lhs, rhs, ident;
    };
    detail::WorstCase asserted(o.invert ? "<=" : ">=", o.tol), quotient(">=", o.tol), ident("<=", 0.0);
    nlohmann::json seq = nlohmann::json::array();
    for (int L : s.sizes) {
        const auto lat = build_lattice(s.dim, L);
        require_cap(lat.num_sites(), kMaxReplicaSites, "replica concavity");
        const auto bnd = s.boundary.on(lat);
        const double bn = s.beta * static_cast<double>(lat.num_sites());
        const auto per = quenched_map(
            lat, s.j_dist, s.h_dist, s.n_disorder, s.seed,
            [&](const DisorderRealization& d, std::size_t) {
                const auto table = energy_table(lat, d, bnd);
                const ShellTable st(s.beta, table);
                const double z1 = log_z1(s.beta, table).log_z;
                const double z30 = three_replica_stats(st, 0.0, 0.0).log_z;
                std::vector<Row> out;
                for (double l : s.lambda_grid) {
                    const double z3 = three_replica_stats(st, l, -l).log_z;
                    const double z3p = three_replica_stats(st, l, 0.0).log_z;
                    const double z3m = three_replica_stats(st, -l, 0.0).log_z;
                    // log Z2(±λ) = log Z3(±λ, 0) - log Z
                    const double r = (z3p - z1 - (z30 - z1)) / (bn * l);
                    const double lq = ((z30 - z1) - (z3m - z1)) / (bn * l);
                    const double z2p = two_replica_stats(st, l).log_z;
                    out.push_back({l, (z3 - z30) / (bn * l), r - lq,
                                   std::abs(z3p - z1 - z2p) / std::max(1.0, std::abs(z3p))});
                }
                return out;
            },
            s.threads);
        for (std::size_t k = 0; k < s.lambda_grid.size(); ++k) {
            std::vector<double> lv, rv;
            for (std::size_t i = 0; i < per.size(); ++i) {
                const auto& r = per[i][k];
                const double asserted_rhs = symmetric ? r.rhs : 0.0;
                asserted.add(r.lhs, asserted_rhs);
                quotient.add(r.lhs, r.rhs);
                ident.add(r.ident, o.identity_tol);
                lv.push_back(r.lhs);
                rv.push_back(r.rhs);
                c.table.rows.push_back({double(L), double(i), r.lambda, r.lhs, r.rhs, r.lhs - r.rhs, r.ident});
            }
            const auto el = summarize(lv), er = summarize(rv);
            seq.push_back({{"L", L}, {"lambda", s.lambda_grid[k]}, {"lhs_mean", el.mean}, {"lhs_stderr", el.stderr_},
                           {"rhs_mean", er.mean}, {"rhs_stderr", er.stderr_}});
        }
    }
    asserted.into(c);
    CheckResult idp;
    idp.check_id = "chain-rule-identity";
    ident.into(idp);
    c.parts.push_back(idp);
    if (!symmetric) {
        CheckResult q;
        q.check_id = "quotient-form";
        quotient.into(q, Status::trend_consistent);
        // reported, never asserted without the symmetry
        q.details["verdict"] = q.status == Status::fail ? "inconsistent" : "consistent";
        q.status = Status::trend_consistent;
        c.parts.push_back(q);
    }
    detail::fold_parts(c);
    c.details["lambda_sequence"] = seq;
    return c;
}

/// μ_jump(L) ≥ μ_fluc(L)²/4 per size (trend), and μ_jump ≥ μ_fluc reported
/// when h0 = 0 (the symmetric case of the sharpened statement).
inline CheckResult check_mu_pair(const UniformModel& m, double sigmas = 3.0) {
    const auto mu = mu_pair_estimate(m);
    CheckResult c;
    c.check_id = "mu-pair";
    c.settings = m.to_json();
    c.provenance = {{"sizes", m.sizes}, {"deterministic", true}};
    c.table.columns = {"L", "delta", "mu_jump", "mu_fluc", "mu_fluc_sq_over_4"};
    std::vector<detail::TrendRow> rows;
    std::size_t sharpened = 0;
    for (std::size_t i = 0; i < m.sizes.size(); ++i) {
        const auto& j = mu.jump.per_L[i];
        const auto& f = mu.fluc.per_L[i];
        rows.push_back({j.L, j.value, 0.0, f.value * f.value / 4.0, 0.0});
        if (j.value >= f.value) ++sharpened;
        c.table.rows.push_back({double(j.L), j.lambda, j.value, f.value, f.value * f.value / 4.0});
    }
    // deterministic sequences: no error bars, so a decaying deficit is the finite-size signal
    detail::trend_verdict(c, rows, sigmas, true);
    if (m.h0 == 0.0) c.details["sharpened_sizes_holding"] = sharpened;
    c.details["mu_fluc"] = mu.fluc.to_json();
    c.details["mu_jump"] = mu.jump.to_json();
    return c;
}

// ---------------------------------------------------------------------------
// REM

/// Closed forms and one-sided derivatives against their analytic values.
inline CheckResult check_rem_closed_forms() {
    CheckResult c;
    c.check_id = "rem-closed-forms";
    c.relation = "<=";
    detail::WorstCase err("<=", 0.0);
    const double bc = rem::kBetaC;
    const double sl = std::sqrt(std::log(2.0));
    err.add(std::abs(bc - 2.0 * sl), 1e-9);
    for (double b : {1.0, 1.5, 2.0, 2.5, 3.3302184446307908, 5.0}) {
        if (b >= bc) {
            err.add(std::abs(rem::f_rem(b) + sl), 1e-9);
            err.add(std::abs(rem::q_jump_rem(b) - 0.5), 1e-9);
            err.add(std::abs(rem::q_br_rem(b) - std::sqrt(bc / b * (1 - bc / b))), 1e-9);
        } else {
            err.add(std::abs(rem::q_jump_rem(b)), 1e-9);
        }
    }
    err.add(std::abs(rem::q_jump_rem(2 * bc) - rem::q_br_rem(2 * bc)), 1e-9);
    CheckResult a;
    a.check_id = "analytic";
    err.into(a);

    detail::WorstCase der("<=", 0.0);
    const double delta = 1e-6;
    for (double b : {0.6, 1.2, 1.9, 2.5, 3.5, 5.0}) {
        const auto d = rem::f2_rem_one_sided_derivatives(b);
        const double base = -rem::f2_rem(b, 0.0);
        der.add(std::abs((-rem::f2_rem(b, delta) - base) / delta - d.right), 1e-5);
        der.add(std::abs((base + rem::f2_rem(b, -delta)) / delta - d.left), 1e-5);
        der.add(std::abs(0.5 * (d.right - d.left) - rem::q_jump_rem(b)), 0.0);
    }
    CheckResult dp;
    dp.check_id = "one-sided-derivatives";
    der.into(dp, Status::pass_with_tolerance);
    c.parts = {a, dp};
    detail::fold_parts(c);
    c.slack = std::min(a.slack, dp.slack);
    return c;
}

/// f2(β,0) = 2f(β) on a grid and continuity of the a1/a2 branches.
inline CheckResult check_rem_branches(std::size_t points = 100) {
    CheckResult c;
    c.check_id = "rem-branches";
    c.table.columns = {"beta", "f2_zero", "two_f"};
    detail::WorstCase fac("<=", 0.0), cont("<=", 0.0);
    for (std::size_t i = 0; i < points; ++i) {
        const double b = 0.2 + 4.8 * static_cast<double>(i) / static_cast<double>(points - 1);
        const double f2 = rem::f2_rem(b, 0.0), f = rem::f_rem(b);
        fac.add(std::abs(f2 - 2 * f), 1e-10);
        c.table.rows.push_back({b, f2, 2 * f});
    }
    const double eps = 1e-12;
    for (double l : {-0.6, -0.2, -0.05, 0.05, 0.2, 0.6}) {
        for (double edge : {rem::beta_bar_c(l), rem::kBetaC})
            cont.add(std::abs(rem::a2(edge * (1 - eps), l) - rem::a2(edge * (1 + eps), l)), 1e-9);
        const double e1 = rem::kBetaC / 2;
        cont.add(std::abs(rem::a1(e1 * (1 - eps), l) - rem::a1(e1 * (1 + eps), l)), 1e-9);
    }
    CheckResult p1, p2;
    p1.check_id = "uncoupled-factorization";
    fac.into(p1, Status::pass_with_tolerance);
    p2.check_id = "branch-continuity";
    cont.into(p2, Status::pass_with_tolerance);
    c.parts = {p1, p2};
    detail::fold_parts(c);
    c.slack = std::min(p1.slack, p2.slack);
    return c;
}

/// Per-sample finite-N bounds: log Z2(λ) ≥ βλN + log Z(2β) and the Jensen
/// bound log Z2(λ) - log Z2(0) ≥ βλN⟨R⟩₀.
inline CheckResult check_rem_finite_bounds(std::size_t n = 8, double beta = 1.5,
                                           std::vector<double> lambdas = {0.05, 0.2, 0.5}, std::size_t samples = 100,
                                           std::uint64_t seed = 1, unsigned threads = 1) {
    CheckResult c;
    c.check_id = "rem-finite-bounds";
    c.settings = {{"N", n}, {"beta", beta}, {"lambdas", lambdas}, {"samples", samples}, {"seed", seed}};
    c.provenance = {{"seed", seed}, {"sample_seeds", "derive_seed(seed, i)"}};
    c.table.columns = {"sample", "lambda", "diagonal_gap", "jensen_gap"};
    std::vector<std::vector<rem::FiniteNResult>> res(samples);
    parallel_for(samples, threads, [&](std::size_t i) {
        for (double l : lambdas) res[i].push_back(rem::finite_n_sample(n, beta, l, derive_seed(seed, i)));
    });
    detail::WorstCase diag(">=", 0.0), jen(">=", 0.0);
    for (std::size_t i = 0; i < samples; ++i)
        for (const auto& r : res[i]) {
            diag.add(r.diagonal_gap, 0.0);
            jen.add(r.jensen_gap, 0.0);
            c.table.rows.push_back({double(i), r.lambda, r.diagonal_gap, r.jensen_gap});
        }
    CheckResult p1, p2;
    p1.check_id = "diagonal-lower-bound";
    diag.into(p1);
    p2.check_id = "jensen";
    jen.into(p2);
    c.parts = {p1, p2};
    detail::fold_parts(c);
    c.relation = ">=";
    c.slack = std::min(p1.slack, p2.slack);
    return c;
}

/// Mean of -log Z_N / (βN) over samples against -f(β) within a relative tolerance.
inline CheckResult check_rem_convergence(std::size_t n = 20, double beta = 2 * rem::kBetaC, std::size_t samples = 200,
                                         double rel_tol = 0.05, std::uint64_t seed = 1, unsigned threads = 1) {
    CheckResult c;
    c.check_id = "rem-convergence";
    c.settings = {{"N", n}, {"beta", beta}, {"samples", samples}, {"rel_tol", rel_tol}, {"seed", seed}};
    c.provenance = {{"seed", seed}, {"sample_seeds", "derive_seed(seed, i)"}};
    std::vector<double> v(samples);
    parallel_for(samples, threads, [&](std::size_t i) {
        v[i] = -rem::FiniteN::sample(n, derive_seed(seed, i)).log_z(beta) / (beta * static_cast<double>(n));
    });
    const auto e = summarize(v);
    const double target = -rem::f_rem(beta);
    // estimate of -f_N is log Z/(βN), i.e. -v
    c.relation = "<=";
    c.lhs = std::abs(-e.mean - target) / target;
    c.rhs = rel_tol;
    c.slack = c.rhs - c.lhs;
    c.status = c.slack >= 0.0 ? Status::pass_with_tolerance : Status::fail;
    c.details = {{"mean_log_z_over_beta_n", -e.mean}, {"stderr", e.stderr_}, {"target", target}};
    c.table.columns = {"sample", "f_N"};
    for (std::size_t i = 0; i < samples; ++i) c.table.rows.push_back({double(i), v[i]});
    return c;
}

// ---------------------------------------------------------------------------
// Monte Carlo against enumeration

/// For each (β, λ), the disorder average of MC moments minus exact moments
/// within `sigmas` combined MC standard errors, over n_disorder samples.
inline CheckResult check_mc_oracle(const EstimatorSettings& s, const McConfig& mc, std::vector<double> betas,
                                   std::vector<double> lambdas, double sigmas = 3.0) {
    if (s.sizes.size() != 1) throw std::invalid_argument("MC oracle check takes one size");
    const auto lat = build_lattice(s.dim, s.sizes[0]);
    require_cap(lat.num_sites(), kMaxReplicaSites, "MC oracle");
    const auto bnd = s.boundary.on(lat);
    for (double b : betas)
        if (std::find(mc.beta_ladder.begin(), mc.beta_ladder.end(), b) == mc.beta_ladder.end())
            throw std::invalid_argument("oracle beta is not on the ladder");
    struct Cell {
        double mc_r, se_r, ex_r, mc_r2, se_r2, ex_r2;
        bool eq;
    };
    CheckResult c;
    c.check_id = "mc-oracle";
    c.settings = s.to_json();
    c.settings["mc"] = mc.to_json();
    c.settings["betas"] = betas;
    c.settings["lambdas"] = lambdas;
    c.provenance = detail::provenance_of(s);
    c.table.columns = {"beta", "lambda", "moment", "mc_mean", "exact_mean", "diff", "combined_stderr"};
    detail::WorstCase w("<=", 0.0);
    bool all_eq = true;
    for (double lam : lambdas) {
        McConfig cfg = mc;
        cfg.lambda = lam;
        const auto per = quenched_map(
            lat, s.j_dist, s.h_dist, s.n_disorder, s.seed,
            [&](const DisorderRealization& d, std::size_t i) {
                McConfig ci = cfg;
                ci.seed = mc_sample_seed(mc.seed, i);
                const auto run = parallel_tempering_run(ci, lat, d, bnd);
                std::vector<Cell> out;
                for (double b : betas) {
                    const auto ex = two_replica_stats(ShellTable(b, energy_table(lat, d, bnd)), lam);
                    const auto& e = run.at_beta(b);
                    out.push_back({e.mean_R, e.stderr_R, ex.mean_r, e.mean_R2, e.stderr_R2, ex.mean_r2, e.equilibrated});
                }
                return out;
            },
            s.threads);
        for (std::size_t k = 0; k < betas.size(); ++k) {
            double d1 = 0, v1 = 0, d2 = 0, v2 = 0, m1 = 0, x1 = 0, m2 = 0, x2 = 0;
            for (const auto& p : per) {
                const auto& cell = p[k];
                d1 += cell.mc_r - cell.ex_r;
                v1 += cell.se_r * cell.se_r;
                d2 += cell.mc_r2 - cell.ex_r2;
                v2 += cell.se_r2 * cell.se_r2;
                m1 += cell.mc_r;
                x1 += cell.ex_r;
                m2 += cell.mc_r2;
                x2 += cell.ex_r2;
                all_eq = all_eq && cell.eq;
            }
            const double n = static_cast<double>(per.size());
            const double se1 = std::sqrt(v1) / n, se2 = std::sqrt(v2) / n;
            w.tol = 0.0;
            const double s1 = sigmas * se1 - std::abs(d1 / n);
            const double s2 = sigmas * se2 - std::abs(d2 / n);
            w.add(std::abs(d1 / n), sigmas * se1);
            w.add(std::abs(d2 / n), sigmas * se2);
            c.table.rows.push_back({betas[k], lam, 1, m1 / n, x1 / n, d1 / n, se1});
            c.table.rows.push_back({betas[k], lam, 2, m2 / n, x2 / n, d2 / n, se2});
            (void)s1;
            (void)s2;
        }
    }
    w.into(c, Status::pass_with_tolerance);
    c.details["all_equilibrated"] = all_eq;
    if (!all_eq) c.message = "some chains flagged as not equilibrated";
    return c;
}

}  // namespace sgorder::verify
