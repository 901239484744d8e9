#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sgorder/exact.hpp"
#include "sgorder/quenched.hpp"
#include "sgorder/transfer.hpp"

namespace sgorder {

// ---------------------------------------------------------------------------
// Boundary specifications and estimator settings

/// Uniform boundary value: 0 is the open condition, +1 the plus condition.
struct BoundarySpec {
    double value = 0.0;
    BoundaryConfig on(const Lattice& lat) const { return BoundaryConfig::filled(lat, value); }
};

enum class BoundaryStrategy { corner_enum, coord_ascent, hybrid };

inline std::string to_string(BoundaryStrategy s) {
    switch (s) {
        case BoundaryStrategy::corner_enum: return "corner-enum";
        case BoundaryStrategy::coord_ascent: return "coord-ascent";
        case BoundaryStrategy::hybrid: return "hybrid";
    }
    return "?";
}

inline BoundaryStrategy boundary_strategy_from_string(const std::string& s) {
    if (s == "corner-enum") return BoundaryStrategy::corner_enum;
    if (s == "coord-ascent") return BoundaryStrategy::coord_ascent;
    if (s == "hybrid") return BoundaryStrategy::hybrid;
    throw std::invalid_argument("unknown boundary strategy: " + s);
}

struct BoundaryMaxOptions {
    BoundaryStrategy strategy = BoundaryStrategy::hybrid;
    std::size_t n_restarts = 8;
    /// Largest boundary enumerated exhaustively; larger boundaries sample corners.
    std::size_t max_exhaustive = 16;
    std::size_t sampled_corners = 256;
    std::size_t max_iter = 400;
    double grad_tol = 1e-8;
    /// An ascent result exceeding the corner maximum by more than this voids certification.
    double corner_gap_tol = 1e-10;
    std::uint64_t seed = 0x5eedb0;
};

/// Common inputs of the disorder-averaged estimators.
struct EstimatorSettings {
    int dim = 1;
    std::vector<int> sizes;
    double beta = 1.0;
    Distribution j_dist = Distribution::pm_j(0.5);
    Distribution h_dist = Distribution::constant(0.0);
    BoundarySpec boundary;
    std::size_t n_disorder = 100;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    /// Positive coupling magnitudes; the estimators use ±λ for each.
    std::vector<double> lambda_grid;
    /// The reported per-size value uses the smallest grid λ with β λ N >= floor.
    double resolution_floor = 0.0;
    bool extrapolate = false;
    BoundaryMaxOptions boundary_max;

    nlohmann::json to_json() const {
        return {{"d", dim},
                {"sizes", sizes},
                {"beta", beta},
                {"j_dist", j_dist.to_json()},
                {"h_dist", h_dist.to_json()},
                {"boundary", boundary.value},
                {"n_disorder", n_disorder},
                {"seed", seed},
                {"lambda_grid", lambda_grid},
                {"resolution_floor", resolution_floor},
                {"boundary_strategy", to_string(boundary_max.strategy)},
                {"n_restarts", boundary_max.n_restarts}};
    }
};

/// ±{δ r^k}, k = 0..count-1, returned as the positive magnitudes in increasing order.
inline std::vector<double> geometric_grid(double delta, double ratio, std::size_t count) {
    if (!(delta > 0.0) || !(ratio > 1.0) || count == 0)
        throw std::invalid_argument("geometric grid needs delta > 0, ratio > 1, count >= 1");
    std::vector<double> g(count);
    for (std::size_t k = 0; k < count; ++k) g[k] = delta * std::pow(ratio, static_cast<double>(k));
    return g;
}

inline void validate_grid(std::span<const double> grid) {
    if (grid.empty()) throw std::invalid_argument("coupling grid is empty");
    for (double l : grid)
        if (!(l > 0.0) || !std::isfinite(l))
            throw std::invalid_argument("coupling grid magnitudes must be positive (the grid may not touch 0)");
    if (!std::is_sorted(grid.begin(), grid.end())) throw std::invalid_argument("coupling grid must be increasing");
}

/// Index of the grid point used for the per-size value.
inline std::size_t resolved_index(std::span<const double> grid, double beta, std::size_t n_sites, double floor) {
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (beta * grid[i] * static_cast<double>(n_sites) >= floor) return i;
    return grid.size() - 1;
}

// ---------------------------------------------------------------------------
// Results

struct SizeValue {
    int L = 0;
    double lambda = 0.0;  // 0 when the estimator has no coupling
    double value = 0.0;
    double stderr_ = 0.0;
    bool certified = true;
    std::size_t n = 0;
};

struct Extrapolation {
    double value = 0.0;
    std::string method;
};

struct OrderParamEstimate {
    std::string name;
    std::vector<SizeValue> per_L;  // one row per size: the primary value
    std::vector<SizeValue> curve;  // every (L, λ) evaluated
    std::optional<Extrapolation> extrapolated;
    nlohmann::json settings;

    const SizeValue& at(int L) const {
        for (const auto& r : per_L)
            if (r.L == L) return r;
        throw std::out_of_range("no estimate for L = " + std::to_string(L));
    }

    static void write_csv_header(std::ostream& os) { os << "name,L,lambda,value,stderr,certified,seed\n"; }

    void write_csv(std::ostream& os, bool full_curve = true) const {
        const auto seed = settings.contains("seed") ? settings["seed"].get<std::uint64_t>() : 0;
        os.precision(17);
        for (const auto& r : full_curve && !curve.empty() ? curve : per_L)
            os << name << ',' << r.L << ',' << r.lambda << ',' << r.value << ',' << r.stderr_ << ','
               << (r.certified ? 1 : 0) << ',' << seed << '\n';
    }

    nlohmann::json to_json() const {
        auto rows = [](const std::vector<SizeValue>& v) {
            nlohmann::json a = nlohmann::json::array();
            for (const auto& r : v)
                a.push_back({{"L", r.L}, {"lambda", r.lambda}, {"value", r.value}, {"stderr", r.stderr_},
                             {"certified", r.certified}, {"n", r.n}});
            return a;
        };
        nlohmann::json j{{"name", name}, {"per_L", rows(per_L)}, {"curve", rows(curve)}, {"settings", settings}};
        if (extrapolated) j["extrapolated"] = {{"value", extrapolated->value}, {"method", extrapolated->method}};
        return j;
    }
};

/// Least-squares fit value = a + c / L, reporting a. Heuristic only.
inline std::optional<Extrapolation> inverse_size_fit(const std::vector<SizeValue>& rows) {
    if (rows.size() < 2) return std::nullopt;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(rows.size());
    for (const auto& r : rows) {
        const double x = 1.0 / r.L;
        sx += x;
        sy += r.value;
        sxx += x * x;
        sxy += x * r.value;
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) return std::nullopt;
    const double slope = (n * sxy - sx * sy) / den;
    return Extrapolation{(sy - slope * sx) / n, "heuristic-linear-in-1/L"};
}

// ---------------------------------------------------------------------------
// Single-replica magnetizations under a variable boundary

/// Boundary effective fields Σ_u J_xu b_u for each site.
inline std::vector<double> boundary_fields(const Lattice& lat, const DisorderRealization& dis,
                                           std::span<const double> b) {
    std::vector<double> f(lat.num_sites(), 0.0);
    for (const auto& bb : lat.boundary_bonds()) f[bb.site] += dis.J_boundary[bb.boundary_site] * b[bb.boundary_site];
    return f;
}

/// Evaluates ⟨σ_x⟩ (and optionally ⟨σ_x σ_y⟩) for many boundary vectors on a
/// fixed realization: transfer matrices for d <= 2, enumeration otherwise.
class BoundaryResponse {
public:
    BoundaryResponse(double beta, const Lattice& lat, const DisorderRealization& dis)
        : beta_(beta), lat_(lat), dis_(dis), open_(BoundaryConfig::open(lat)) {
        require_positive_beta(beta);
        if (lat.dim() <= 2 && static_cast<std::size_t>(lat.side()) <= kMaxTransferWidth) {
            chain_ = std::make_unique<TransferChain>(beta, lat, dis, open_);
        } else {
            require_cap(lat.num_sites(), kMaxCorrelationSites, "boundary response");
            auto lc = compile_couplings(lat, dis, open_);
            std::fill(lc.field.begin(), lc.field.end(), 0.0);
            bond_table_ = energy_table(lc).energy;
        }
    }

    /// Site fields h_x + Σ_u J_xu b_u.
    std::vector<double> fields(std::span<const double> b) const {
        auto f = boundary_fields(lat_, dis_, b);
        for (std::size_t x = 0; x < f.size(); ++x) f[x] += dis_.h[x];
        return f;
    }

    Correlations evaluate(std::span<const double> b, bool with_pairs) {
        const auto f = fields(b);
        if (chain_) {
            chain_->solve(f);
            return chain_->correlations(with_pairs);
        }
        return enumerate(f, with_pairs);
    }

    std::vector<double> magnetization(std::span<const double> b) {
        const auto f = fields(b);
        if (chain_) {
            chain_->solve(f);
            return chain_->magnetization();
        }
        return enumerate(f, false).magnetization;
    }

private:
    Correlations enumerate(const std::vector<double>& f, bool with_pairs) const {
        const std::size_t n = lat_.num_sites();
        Correlations c;
        c.num_sites = n;
        c.magnetization.assign(n, 0.0);
        if (with_pairs) c.correlation.assign(n * n, 0.0);
        std::vector<double> e(bond_table_.size());
        double emin = INFINITY;
        for (std::size_t m = 0; m < e.size(); ++m) {
            double v = bond_table_[m];
            for (std::size_t x = 0; x < n; ++x) v -= f[x] * (((m >> x) & 1u) ? 1.0 : -1.0);
            e[m] = v;
            emin = std::min(emin, v);
        }
        double z = 0.0;
        std::vector<double> s(n);
        for (std::size_t m = 0; m < e.size(); ++m) {
            const double w = std::exp(-beta_ * (e[m] - emin));
            z += w;
            for (std::size_t x = 0; x < n; ++x) {
                s[x] = ((m >> x) & 1u) ? 1.0 : -1.0;
                c.magnetization[x] += w * s[x];
            }
            if (with_pairs)
                for (std::size_t x = 0; x < n; ++x)
                    for (std::size_t y = 0; y < n; ++y) c.correlation[x * n + y] += w * s[x] * s[y];
        }
        for (auto& v : c.magnetization) v /= z;
        for (auto& v : c.correlation) v /= z;
        c.log_z = -beta_ * emin + std::log(z);
        return c;
    }

    double beta_;
    const Lattice& lat_;
    const DisorderRealization& dis_;
    BoundaryConfig open_;
    std::unique_ptr<TransferChain> chain_;
    std::vector<double> bond_table_;
};

// ---------------------------------------------------------------------------
// Boundary maximization

struct BoundaryMaxResult {
    BoundaryConfig best_b;
    double value = 0.0;  // (1/N) Σ_x ⟨σ_x⟩² at best_b
    BoundaryStrategy strategy = BoundaryStrategy::hybrid;
    std::size_t n_restarts = 0;
    bool certified = false;
    bool exhaustive_corners = false;
    double corner_value = -INFINITY;  // best corner found
    double ascent_value = -INFINITY;  // best ascent end point
    bool ascent_converged = true;
};

namespace detail {

inline double mean_square(std::span<const double> m) {
    double s = 0.0;
    for (double v : m) s += v * v;
    return s / static_cast<double>(m.size());
}

/// Corner b for mask: b_i = +1 iff bit (nb-1-i) is set, so increasing masks
/// visit corners in lexicographic order with -1 < +1.
inline void corner_from_mask(std::uint64_t mask, std::vector<double>& b) {
    const std::size_t nb = b.size();
    for (std::size_t i = 0; i < nb; ++i) b[i] = ((mask >> (nb - 1 - i)) & 1u) ? 1.0 : -1.0;
}

inline bool better(double candidate, double best) {
    if (!std::isfinite(best)) return !std::isnan(candidate);
    return candidate > best + 1e-12 * std::max(std::abs(best), 1e-300);
}

/// Value and gradient of (1/N) Σ_x ⟨σ_x⟩² with respect to the boundary values.
inline double value_and_gradient(BoundaryResponse& resp, const Lattice& lat, const DisorderRealization& dis,
                                 double beta, std::span<const double> b, std::vector<double>& grad) {
    const auto c = resp.evaluate(b, true);
    const std::size_t n = lat.num_sites();
    grad.assign(b.size(), 0.0);
    for (const auto& bb : lat.boundary_bonds()) {
        const std::size_t y = bb.site;
        double acc = 0.0;
        for (std::size_t x = 0; x < n; ++x)
            acc += c.magnetization[x] * (c.corr(x, y) - c.magnetization[x] * c.magnetization[y]);
        grad[bb.boundary_site] = 2.0 / static_cast<double>(n) * beta * dis.J_boundary[bb.boundary_site] * acc;
    }
    return mean_square(c.magnetization);
}

struct AscentResult {
    std::vector<double> b;
    double value;
    bool converged;
};

/// Projected gradient ascent on the box [-1, 1]^nb with Armijo backtracking.
inline AscentResult projected_ascent(BoundaryResponse& resp, const Lattice& lat, const DisorderRealization& dis,
                                     double beta, std::vector<double> b, const BoundaryMaxOptions& opt) {
    std::vector<double> g, g_new, trial(b.size());
    double v = value_and_gradient(resp, lat, dis, beta, b, g);
    double step = 1.0;
    for (std::size_t it = 0; it < opt.max_iter; ++it) {
        double pg2 = 0.0;
        for (std::size_t u = 0; u < b.size(); ++u) {
            const bool blocked = (b[u] >= 1.0 && g[u] > 0.0) || (b[u] <= -1.0 && g[u] < 0.0);
            if (!blocked) pg2 += g[u] * g[u];
        }
        if (std::sqrt(pg2) < opt.grad_tol) return {std::move(b), v, true};
        bool accepted = false;
        while (step > 1e-14) {
            double predicted = 0.0;
            for (std::size_t u = 0; u < b.size(); ++u) {
                trial[u] = std::clamp(b[u] + step * g[u], -1.0, 1.0);
                predicted += g[u] * (trial[u] - b[u]);
            }
            const double v_new = value_and_gradient(resp, lat, dis, beta, trial, g_new);
            if (v_new >= v + 1e-4 * predicted && predicted > 0.0) {
                b = trial;
                v = v_new;
                g.swap(g_new);
                step = std::min(step * 2.0, 1e6);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) return {std::move(b), v, false};
    }
    return {std::move(b), v, false};
}

}  // namespace detail

/// Maximizes (1/N) Σ_x ⟨σ_x⟩² over b in [-1, 1]^{∂Λ}. Corners are enumerated
/// exhaustively up to options.max_exhaustive boundary sites; projected ascent
/// runs from random interior starts. The result is always a lower bound on the
/// maximum; it is certified only when the corner search was exhaustive, every
/// ascent converged, and no ascent beat the best corner.
inline BoundaryMaxResult maximize_boundary(double beta, const Lattice& lat, const DisorderRealization& dis,
                                           const BoundaryMaxOptions& opt = {}) {
    dis.check_matches(lat);
    BoundaryResponse resp(beta, lat, dis);
    const std::size_t nb = lat.num_boundary_sites();
    BoundaryMaxResult res;
    res.strategy = opt.strategy;
    std::vector<double> best_b(nb, 0.0);
    double best = -INFINITY;

    const bool corners = opt.strategy != BoundaryStrategy::coord_ascent;
    const bool ascent = opt.strategy != BoundaryStrategy::corner_enum;
    CounterRng rng(derive_seed(opt.seed, dis.seed), 0);

    if (corners) {
        std::vector<double> b(nb);
        auto consider = [&](std::uint64_t mask) {
            detail::corner_from_mask(mask, b);
            const double v = detail::mean_square(resp.magnetization(b));
            if (detail::better(v, best)) {
                best = v;
                best_b = b;
            }
        };
        if (nb <= opt.max_exhaustive) {
            for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << nb); ++mask) consider(mask);
            res.exhaustive_corners = true;
        } else {
            consider(0);
            consider(nb >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << nb) - 1);
            for (std::size_t i = 0; i < opt.sampled_corners; ++i) {
                for (auto& v : b) v = rng.bernoulli(0.5) ? 1.0 : -1.0;
                const double val = detail::mean_square(resp.magnetization(b));
                if (detail::better(val, best)) {
                    best = val;
                    best_b = b;
                }
            }
        }
        res.corner_value = best;
    }

    if (ascent) {
        const std::size_t starts = std::max<std::size_t>(opt.n_restarts, 8);
        for (std::size_t r = 0; r < starts; ++r) {
            std::vector<double> b0(nb);
            for (auto& v : b0) v = rng.uniform(-1.0, 1.0);
            auto a = detail::projected_ascent(resp, lat, dis, beta, std::move(b0), opt);
            res.ascent_converged = res.ascent_converged && a.converged;
            res.ascent_value = std::max(res.ascent_value, a.value);
            if (detail::better(a.value, best)) {
                best = a.value;
                best_b = a.b;
            }
        }
        res.n_restarts = starts;
        if (corners) {
            // polish the best corner too; this can only raise the value
            auto a = detail::projected_ascent(resp, lat, dis, beta, best_b, opt);
            res.ascent_converged = res.ascent_converged && a.converged;
            if (detail::better(a.value, best)) {
                best = a.value;
                best_b = a.b;
            }
        }
    }

    res.best_b = BoundaryConfig{best_b};
    res.value = best;
    res.certified = corners && ascent && res.exhaustive_corners && res.ascent_converged &&
                    res.ascent_value <= res.corner_value + opt.corner_gap_tol;
    return res;
}

// ---------------------------------------------------------------------------
// Estimators

namespace detail {

inline void require_sizes(const EstimatorSettings& s) {
    if (s.sizes.empty()) throw std::invalid_argument("no lattice sizes given");
    require_positive_beta(s.beta);
}

/// √(E A - (E B)²) with a delta-method standard error.
inline SizeValue sqrt_variance_estimate(int L, std::span<const double> a, std::span<const double> bv) {
    const auto ea = summarize(a);
    const auto eb = summarize(bv);
    const double var = ea.mean - eb.mean * eb.mean;
    SizeValue r;
    r.L = L;
    r.n = a.size();
    r.value = std::sqrt(std::max(var, 0.0));
    const double n = static_cast<double>(a.size());
    if (r.value > 0.0) {
        const double ga = 0.5 / r.value;
        const double gb = -eb.mean / r.value;
        const double va = sample_covariance(a, a), vb = sample_covariance(bv, bv), cab = sample_covariance(a, bv);
        r.stderr_ = std::sqrt(std::max(0.0, (ga * ga * va + gb * gb * vb + 2 * ga * gb * cab) / n));
    } else {
        r.stderr_ = std::sqrt(ea.stderr_);
    }
    return r;
}

inline OrderParamEstimate finish(std::string name, const EstimatorSettings& s, std::vector<SizeValue> per_L,
                                 std::vector<SizeValue> curve) {
    OrderParamEstimate e;
    e.name = std::move(name);
    e.per_L = std::move(per_L);
    e.curve = std::move(curve);
    e.settings = s.to_json();
    if (s.extrapolate) e.extrapolated = inverse_size_fit(e.per_L);
    return e;
}

}  // namespace detail

/// Per-sample thermal moments (⟨R⟩, ⟨R²⟩) of the decoupled replicas.
inline std::pair<double, double> zero_coupling_moments(double beta, const Lattice& lat, const DisorderRealization& dis,
                                                       const BoundaryConfig& bnd) {
    const auto c = exact_correlations(beta, lat, dis, bnd, true);
    return {c.two_replica_mean_r(), c.two_replica_mean_r2()};
}

/// q_br(L) = √(E⟨R²⟩ - (E⟨R⟩)²) at λ = 0.
inline OrderParamEstimate q_br_estimate(const EstimatorSettings& s) {
    detail::require_sizes(s);
    if (s.n_disorder < 2) throw std::invalid_argument("q_br needs at least two disorder samples");
    std::vector<SizeValue> rows;
    for (int L : s.sizes) {
        const auto lat = build_lattice(s.dim, L);
        const auto bnd = s.boundary.on(lat);
        const auto m = quenched_map(
            lat, s.j_dist, s.h_dist, s.n_disorder, s.seed,
            [&](const DisorderRealization& d, std::size_t) { return zero_coupling_moments(s.beta, lat, d, bnd); },
            s.threads);
        std::vector<double> r1, r2;
        for (auto [a, b] : m) {
            r1.push_back(a);
            r2.push_back(b);
        }
        rows.push_back(detail::sqrt_variance_estimate(L, r2, r1));
    }
    return detail::finish("q_br", s, rows, {});
}

/// q_EA(L) = E max_b (1/N) Σ_x ⟨σ_x⟩²_b.
inline OrderParamEstimate q_ea_estimate(const EstimatorSettings& s) {
    detail::require_sizes(s);
    std::vector<SizeValue> rows;
    for (int L : s.sizes) {
        const auto lat = build_lattice(s.dim, L);
        const auto res = quenched_map(
            lat, s.j_dist, s.h_dist, s.n_disorder, s.seed,
            [&](const DisorderRealization& d, std::size_t) { return maximize_boundary(s.beta, lat, d, s.boundary_max); },
            s.threads);
        std::vector<double> v;
        bool cert = true;
        for (const auto& r : res) {
            v.push_back(r.value);
            cert = cert && r.certified;
        }
        const auto est = summarize(v);
        rows.push_back({L, 0.0, est.mean, est.stderr_, cert, est.n});
    }
    return detail::finish("q_ea", s, rows, {});
}

/// Per-sample ⟨R⟩ at +λ and -λ for each grid magnitude.
inline std::vector<std::pair<double, double>> coupled_mean_overlaps(double beta, const Lattice& lat,
                                                                    const DisorderRealization& dis,
                                                                    const BoundaryConfig& bnd,
                                                                    std::span<const double> grid) {
    const ShellTable st(beta, energy_table(lat, dis, bnd));
    std::vector<std::pair<double, double>> out;
    for (double l : grid) out.emplace_back(two_replica_stats(st, l).mean_r, two_replica_stats(st, -l).mean_r);
    return out;
}

/// q_jump(L, λ) = ½ [E⟨R⟩(+λ) - E⟨R⟩(-λ)] on the grid; the per-size value is
/// taken at the resolved grid point (L first, then λ → 0).
inline OrderParamEstimate q_jump_estimate(const EstimatorSettings& s) {
    detail::require_sizes(s);
    validate_grid(s.lambda_grid);
    std::vector<SizeValue> rows, curve;
    for (int L : s.sizes) {
        const auto lat = build_lattice(s.dim, L);
        const auto bnd = s.boundary.on(lat);
        const auto per = quenched_map(
            lat, s.j_dist, s.h_dist, s.n_disorder, s.seed,
            [&](const DisorderRealization& d, std::size_t) {
                return coupled_mean_overlaps(s.beta, lat, d, bnd, s.lambda_grid);
            },
            s.threads);
        const std::size_t sel = resolved_index(s.lambda_grid, s.beta, lat.num_sites(), s.resolution_floor);
        for (std::size_t k = 0; k < s.lambda_grid.size(); ++k) {
            std::vector<double> jumps;
            for (const auto& p : per) jumps.push_back(0.5 * (p[k].first - p[k].second));
            const auto est = summarize(jumps);
            curve.push_back({L, s.lambda_grid[k], est.mean, est.stderr_, true, est.n});
            if (k == sel) rows.push_back(curve.back());
        }
    }
    return detail::finish("q_jump", s, rows, curve);
}

/// Per-sample three-replica quotient (log Z3(λ,-λ) - log Z3(0,0)) / (β N λ) and
/// the direct form ⟨R12⟩ - ⟨R13⟩ at (λ, -λ).
inline std::vector<std::pair<double, double>> lrsb_quotients(double beta, const Lattice& lat,
                                                             const DisorderRealization& dis, const BoundaryConfig& bnd,
                                                             std::span<const double> grid) {
    const ShellTable st(beta, energy_table(lat, dis, bnd));
    const double z0 = three_replica_stats(st, 0.0, 0.0).log_z;
    const double bn = beta * static_cast<double>(lat.num_sites());
    std::vector<std::pair<double, double>> out;
    for (double l : grid) {
        const auto t = three_replica_stats(st, l, -l);
        out.emplace_back((t.log_z - z0) / (bn * l), t.mean_r12 - t.mean_r13);
    }
    return out;
}

/// q_lrsb(L, λ) = -[f3(λ,-λ) - f3(0,0)] / λ. The curve rows carry the
/// difference quotient; `direct` (if given) receives E[⟨R12⟩ - ⟨R13⟩] at (λ,-λ).
inline OrderParamEstimate q_lrsb_estimate(const EstimatorSettings& s, OrderParamEstimate* direct = nullptr) {
    detail::require_sizes(s);
    validate_grid(s.lambda_grid);
    std::vector<SizeValue> rows, curve, drows, dcurve;
    for (int L : s.sizes) {
        const auto lat = build_lattice(s.dim, L);
        require_cap(lat.num_sites(), kMaxReplicaSites, "q_lrsb");
        const auto bnd = s.boundary.on(lat);
        const auto per = quenched_map(
            lat, s.j_dist, s.h_dist, s.n_disorder, s.seed,
            [&](const DisorderRealization& d, std::size_t) { return lrsb_quotients(s.beta, lat, d, bnd, s.lambda_grid); },
            s.threads);
        const std::size_t sel = resolved_index(s.lambda_grid, s.beta, lat.num_sites(), s.resolution_floor);
        for (std::size_t k = 0; k < s.lambda_grid.size(); ++k) {
            std::vector<double> q, dq;
            for (const auto& p : per) {
                q.push_back(p[k].first);
                dq.push_back(p[k].second);
            }
            const auto e = summarize(q), de = summarize(dq);
            curve.push_back({L, s.lambda_grid[k], e.mean, e.stderr_, true, e.n});
            dcurve.push_back({L, s.lambda_grid[k], de.mean, de.stderr_, true, de.n});
            if (k == sel) {
                rows.push_back(curve.back());
                drows.push_back(dcurve.back());
            }
        }
    }
    if (direct) *direct = detail::finish("q_lrsb_direct", s, drows, dcurve);
    return detail::finish("q_lrsb", s, rows, curve);
}

// ---------------------------------------------------------------------------
// Non-random models: fluctuation and jump of the total magnetization

struct UniformModel {
    int dim = 2;
    std::vector<int> sizes;
    double beta = 1.0;
    double coupling = 1.0;  // translation-invariant nearest-neighbour coupling
    double h0 = 0.0;
    std::vector<double> h_grid;  // positive offsets δ around h0
    BoundarySpec boundary;
    double resolution_floor = 0.0;

    nlohmann::json to_json() const {
        return {{"d", dim}, {"sizes", sizes}, {"beta", beta}, {"coupling", coupling}, {"h0", h0},
                {"h_grid", h_grid}, {"boundary", boundary.value}, {"resolution_floor", resolution_floor}};
    }
};

/// log Z of the uniform model at field h.
inline double uniform_log_z(const UniformModel& m, const Lattice& lat, double h) {
    const auto dis = uniform_disorder(lat, m.coupling, h);
    const auto bnd = m.boundary.on(lat);
    if (lat.dim() <= 2 && static_cast<std::size_t>(lat.side()) <= kMaxTransferWidth)
        return TransferChain(m.beta, lat, dis, bnd).log_z();
    return log_z1(m.beta, lat, dis, bnd).log_z;
}

struct MuPair {
    OrderParamEstimate fluc;
    OrderParamEstimate jump;
};

/// μ_fluc(L) = √(⟨M²⟩ - ⟨M⟩²) / N at h0 and μ_jump(L, δ) = ½ (r - l) with the
/// one-sided quotients r = [g(h0+δ) - g(h0)]/δ, l = [g(h0) - g(h0-δ)]/δ of
/// g = log Z / (β N).
inline MuPair mu_pair_estimate(const UniformModel& m) {
    if (m.sizes.empty()) throw std::invalid_argument("no lattice sizes given");
    require_positive_beta(m.beta);
    validate_grid(m.h_grid);
    std::vector<SizeValue> frows, jrows, jcurve;
    for (int L : m.sizes) {
        const auto lat = build_lattice(m.dim, L);
        const double n = static_cast<double>(lat.num_sites());
        const auto c = exact_correlations(m.beta, lat, uniform_disorder(lat, m.coupling, m.h0), m.boundary.on(lat), true);
        double mean = 0.0, second = 0.0;
        for (double v : c.magnetization) mean += v;
        for (double v : c.correlation) second += v;
        frows.push_back({L, 0.0, std::sqrt(std::max(0.0, second - mean * mean)) / n, 0.0, true, 1});

        const double g0 = uniform_log_z(m, lat, m.h0) / (m.beta * n);
        const std::size_t sel = resolved_index(m.h_grid, m.beta, lat.num_sites(), m.resolution_floor);
        for (std::size_t k = 0; k < m.h_grid.size(); ++k) {
            const double d = m.h_grid[k];
            const double r = (uniform_log_z(m, lat, m.h0 + d) / (m.beta * n) - g0) / d;
            const double l = (g0 - uniform_log_z(m, lat, m.h0 - d) / (m.beta * n)) / d;
            jcurve.push_back({L, d, 0.5 * (r - l), 0.0, true, 1});
            if (k == sel) jrows.push_back(jcurve.back());
        }
    }
    MuPair out;
    out.fluc.name = "mu_fluc";
    out.fluc.per_L = frows;
    out.fluc.settings = m.to_json();
    out.jump.name = "mu_jump";
    out.jump.per_L = jrows;
    out.jump.curve = jcurve;
    out.jump.settings = m.to_json();
    return out;
}

}  // namespace sgorder
