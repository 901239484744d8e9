#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "sgorder/hamiltonian.hpp"
#include "sgorder/numeric.hpp"
#include "sgorder/order_params.hpp"
#include "sgorder/quenched.hpp"
#include "sgorder/rng.hpp"

namespace sgorder {

struct McConfig {
    std::vector<double> beta_ladder;
    std::size_t n_sweeps = 10000;
    std::size_t n_therm = 1000;
    std::size_t measure_every = 1;
    double lambda = 0.0;
    std::uint64_t seed = 1;
    /// Sweeps between replica-exchange phases; 0 disables exchanges.
    std::size_t swap_every = 1;

    void validate() const {
        if (beta_ladder.empty()) throw std::invalid_argument("beta ladder is empty");
        for (std::size_t i = 0; i < beta_ladder.size(); ++i) {
            if (!(beta_ladder[i] >= 0.0) || !std::isfinite(beta_ladder[i]))
                throw std::invalid_argument("beta ladder entries must be finite and >= 0");
            if (i > 0 && !(beta_ladder[i] > beta_ladder[i - 1]))
                throw std::invalid_argument("beta ladder must be strictly increasing");
        }
        if (!(n_therm < n_sweeps)) throw std::invalid_argument("n_therm must be smaller than n_sweeps");
        if (measure_every < 1) throw std::invalid_argument("measure_every must be >= 1");
        if (!std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite");
    }

    nlohmann::json to_json() const {
        return {{"beta_ladder", beta_ladder}, {"n_sweeps", n_sweeps},     {"n_therm", n_therm},
                {"measure_every", measure_every}, {"lambda", lambda}, {"seed", seed},
                {"swap_every", swap_every}};
    }
};

/// Metropolis acceptance probability min(1, e^{-βΔE}).
inline double acceptance_probability(double beta, double delta_e) {
    return delta_e <= 0.0 ? 1.0 : std::exp(-beta * delta_e);
}

/// Two replicas on one disorder realization, with the coupled energy
/// H(σ¹) + H(σ²) - λ Σ σ¹σ² and the overlap sum kept current.
struct CoupledState {
    std::vector<std::int8_t> s1, s2;
    double energy = 0.0;
    std::int64_t overlap = 0;

    std::size_t num_sites() const noexcept { return s1.size(); }
    double overlap_density() const noexcept {
        return static_cast<double>(overlap) / static_cast<double>(s1.size());
    }
};

inline double single_energy(const LocalCouplings& lc, const std::vector<std::int8_t>& s) {
    double e = 0.0;
    for (std::size_t x = 0; x < lc.num_sites; ++x) {
        double bond = 0.0;
        for (std::size_t k = lc.start[x]; k < lc.start[x + 1]; ++k)
            if (lc.nbr[k] > x) bond += lc.coupling[k] * s[lc.nbr[k]];
        e -= s[x] * (bond + lc.field[x]);
    }
    return e;
}

inline std::int64_t overlap_sum(const std::vector<std::int8_t>& a, const std::vector<std::int8_t>& b) {
    std::int64_t q = 0;
    for (std::size_t i = 0; i < a.size(); ++i) q += a[i] * b[i];
    return q;
}

inline double coupled_energy(const LocalCouplings& lc, double lambda, const CoupledState& st) {
    return single_energy(lc, st.s1) + single_energy(lc, st.s2) - lambda * static_cast<double>(overlap_sum(st.s1, st.s2));
}

/// Recomputes energy and overlap from the spins.
inline void refresh(CoupledState& st, const LocalCouplings& lc, double lambda) {
    st.overlap = overlap_sum(st.s1, st.s2);
    st.energy = coupled_energy(lc, lambda, st);
}

inline CoupledState random_state(const LocalCouplings& lc, double lambda, CounterRng& rng) {
    CoupledState st;
    st.s1.resize(lc.num_sites);
    st.s2.resize(lc.num_sites);
    for (auto& s : st.s1) s = (rng.next_u64() >> 63) ? 1 : -1;
    for (auto& s : st.s2) s = (rng.next_u64() >> 63) ? 1 : -1;
    refresh(st, lc, lambda);
    return st;
}

/// Energy change of flipping spin x in replica `replica` (0 or 1).
inline double flip_delta(const CoupledState& st, const LocalCouplings& lc, double lambda, int replica, std::size_t x) {
    const auto& s = replica == 0 ? st.s1 : st.s2;
    double f = lc.field[x];
    for (std::size_t k = lc.start[x]; k < lc.start[x + 1]; ++k) f += lc.coupling[k] * s[lc.nbr[k]];
    return 2.0 * s[x] * f + 2.0 * lambda * st.s1[x] * st.s2[x];
}

/// One proposal: a uniformly chosen site of the given replica. Two draws per
/// call whatever the outcome, so the stream position depends only on the
/// number of proposals.
inline bool metropolis_step(CoupledState& st, double beta, double lambda, const LocalCouplings& lc, CounterRng& rng,
                            int replica) {
    const std::size_t x = rng.below(lc.num_sites);
    const double u = rng.uniform();
    const double de = flip_delta(st, lc, lambda, replica, x);
    if (!(de <= 0.0 || u < std::exp(-beta * de))) return false;
    auto& s = replica == 0 ? st.s1 : st.s2;
    s[x] = static_cast<std::int8_t>(-s[x]);
    st.overlap += 2 * st.s1[x] * st.s2[x];
    st.energy += de;
    return true;
}

/// Streaming logarithmic binning: level k holds means of blocks of 2^k
/// measurements. Values are shifted by the first measurement before summing
/// to avoid cancellation in the variance.
class LogBinning {
public:
    static constexpr int kLevels = 48;

    void add(double x) {
        if (count_[0] == 0 && !has_shift_) {
            shift_ = x;
            has_shift_ = true;
        }
        double v = x - shift_;
        for (int k = 0; k < kLevels; ++k) {
            sum_[k].add(v);
            sum_sq_[k].add(v * v);
            ++count_[k];
            if (!has_pending_[k]) {
                pending_[k] = v;
                has_pending_[k] = 1;
                return;
            }
            v = 0.5 * (pending_[k] + v);
            has_pending_[k] = 0;
        }
    }

    std::uint64_t count() const noexcept { return count_[0]; }
    double mean() const noexcept {
        return count_[0] == 0 ? 0.0 : shift_ + sum_[0].value() / static_cast<double>(count_[0]);
    }

    /// Squared standard error of the mean from level-k blocks, treated as independent.
    double level_error_sq(int k) const noexcept {
        const auto n = static_cast<double>(count_[k]);
        if (count_[k] < 2) return 0.0;
        const double m = sum_[k].value() / n;
        return std::max(0.0, (sum_sq_[k].value() / n - m * m) / (n - 1.0));
    }

    struct Summary {
        double mean = 0.0;
        double stderr_ = 0.0;
        double tau_int = 0.5;
    };

    /// Error from the largest level error among levels with at least
    /// `min_blocks` blocks; τ_int = ½ σ²_plateau / σ²_0.
    Summary summary(std::uint64_t min_blocks = 32) const {
        Summary s;
        s.mean = mean();
        const double e0 = level_error_sq(0);
        double plateau = e0;
        for (int k = 1; k < kLevels && count_[k] >= min_blocks; ++k) plateau = std::max(plateau, level_error_sq(k));
        s.stderr_ = std::sqrt(plateau);
        s.tau_int = e0 > 0.0 ? std::max(0.5, 0.5 * plateau / e0) : 0.5;
        return s;
    }

    template <class W>
    void write(W& w) const {
        w.put(shift_);
        w.put(static_cast<std::uint8_t>(has_shift_));
        for (int k = 0; k < kLevels; ++k) {
            w.put(sum_[k].raw_sum());
            w.put(sum_[k].compensation());
            w.put(sum_sq_[k].raw_sum());
            w.put(sum_sq_[k].compensation());
            w.put(count_[k]);
            w.put(pending_[k]);
            w.put(has_pending_[k]);
        }
    }

    template <class R>
    void read(R& r) {
        shift_ = r.template get<double>();
        has_shift_ = r.template get<std::uint8_t>() != 0;
        for (int k = 0; k < kLevels; ++k) {
            const double a = r.template get<double>(), b = r.template get<double>();
            sum_[k].restore(a, b);
            const double c = r.template get<double>(), d = r.template get<double>();
            sum_sq_[k].restore(c, d);
            count_[k] = r.template get<std::uint64_t>();
            pending_[k] = r.template get<double>();
            has_pending_[k] = r.template get<std::uint8_t>();
        }
    }

private:
    double shift_ = 0.0;
    bool has_shift_ = false;
    std::array<KahanSum, kLevels> sum_{};
    std::array<KahanSum, kLevels> sum_sq_{};
    std::array<std::uint64_t, kLevels> count_{};
    std::array<double, kLevels> pending_{};
    std::array<std::uint8_t, kLevels> has_pending_{};
};

struct McEstimate {
    double beta = 0.0;
    double mean_R = 0.0;
    double mean_R2 = 0.0;
    double stderr_R = 0.0;
    double stderr_R2 = 0.0;
    double tau_int = 0.5;  // the larger of the two observables
    double acceptance_rate = 0.0;
    std::uint64_t n_measurements = 0;
    bool equilibrated = true;

    nlohmann::json to_json() const {
        return {{"beta", beta},         {"mean_R", mean_R},       {"mean_R2", mean_R2},
                {"stderr_R", stderr_R}, {"stderr_R2", stderr_R2}, {"tau_int", tau_int},
                {"acceptance_rate", acceptance_rate}, {"n_measurements", n_measurements},
                {"equilibrated", equilibrated}};
    }
};

struct McRunResult {
    std::vector<McEstimate> per_beta;
    /// Exchange acceptance between ladder slots i and i+1.
    std::vector<double> swap_acceptance;
    std::vector<std::string> warnings;

    const McEstimate& at_beta(double beta) const {
        for (const auto& e : per_beta)
            if (e.beta == beta) return e;
        throw std::out_of_range("beta not on the ladder");
    }
};

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

static_assert(std::endian::native == std::endian::little, "checkpoint layout assumes a little-endian host");

struct BinWriter {
    std::ostream& os;
    template <class T>
    void put(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        os.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
};

struct BinReader {
    std::istream& is;
    template <class T>
    T get() {
        static_assert(std::is_trivially_copyable_v<T>);
        T v;
        if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw CheckpointError("checkpoint truncated");
        return v;
    }
};

inline void put_rng(BinWriter& w, const CounterRng::State& s) {
    w.put(s.seed);
    w.put(s.stream);
    w.put(s.block);
    w.put(s.buffer[0]);
    w.put(s.buffer[1]);
    w.put(s.buffered);
    w.put(s.spare);
    w.put(static_cast<std::uint8_t>(s.has_spare));
}

inline CounterRng::State get_rng(BinReader& r) {
    CounterRng::State s;
    s.seed = r.get<std::uint64_t>();
    s.stream = r.get<std::uint64_t>();
    s.block = r.get<std::uint64_t>();
    s.buffer[0] = r.get<std::uint64_t>();
    s.buffer[1] = r.get<std::uint64_t>();
    s.buffered = r.get<std::int32_t>();
    s.spare = r.get<double>();
    s.has_spare = r.get<std::uint8_t>() != 0;
    return s;
}

inline void put_spins(BinWriter& w, const std::vector<std::int8_t>& s) {
    for (std::size_t base = 0; base < s.size(); base += 64) {
        std::uint64_t word = 0;
        for (std::size_t i = base; i < std::min(s.size(), base + 64); ++i)
            if (s[i] > 0) word |= std::uint64_t{1} << (i - base);
        w.put(word);
    }
}

inline std::vector<std::int8_t> get_spins(BinReader& r, std::size_t n) {
    std::vector<std::int8_t> s(n);
    for (std::size_t base = 0; base < n; base += 64) {
        const auto word = r.get<std::uint64_t>();
        for (std::size_t i = base; i < std::min(n, base + 64); ++i) s[i] = ((word >> (i - base)) & 1u) ? 1 : -1;
    }
    return s;
}

/// FNV-1a over the compiled couplings, to refuse resuming on other disorder.
inline std::uint64_t couplings_fingerprint(const LocalCouplings& lc) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) h = (h ^ b[i]) * 1099511628211ull;
    };
    mix(&lc.num_sites, sizeof lc.num_sites);
    mix(lc.nbr.data(), lc.nbr.size() * sizeof(std::size_t));
    mix(lc.coupling.data(), lc.coupling.size() * sizeof(double));
    mix(lc.field.data(), lc.field.size() * sizeof(double));
    return h;
}

}  // namespace detail

/// Replica-exchange simulation of the coupled two-replica system, one chain
/// per ladder temperature. Chains own their random streams, so results are
/// independent of the number of worker threads.
///
/// Checkpoint layout (little-endian):
///   char[8] "SGMCCKPT", u32 version, u64 seed, u64 sweeps_done,
///   u64 fingerprint, u64 num_sites, u64 num_chains,
///   config: f64 lambda, u64 n_sweeps, n_therm, measure_every, swap_every, f64 β × num_chains,
///   swap rng state, u64 swap_phase, u64 attempts × (num_chains-1), u64 accepts × (num_chains-1),
///   per chain: f64 β, packed σ¹ and σ² (u64 words, bit set = +1), f64 energy, i64 overlap,
///              rng state, u64 proposals, u64 accepted, binning(R), binning(R²).
/// An rng state is u64 seed, stream, block, buffer[2], i32 buffered, f64 spare, u8 has_spare.
class ParallelTempering {
public:
    static constexpr std::uint32_t kCheckpointVersion = 1;
    static constexpr std::uint64_t kMinMeasurements = 64;

    ParallelTempering(McConfig cfg, const LocalCouplings& lc) : cfg_(std::move(cfg)), lc_(&lc) {
        cfg_.validate();
        if (lc.num_sites == 0) throw std::invalid_argument("empty lattice");
        swap_rng_ = CounterRng(cfg_.seed, 0);
        for (std::size_t c = 0; c < cfg_.beta_ladder.size(); ++c) {
            Chain ch;
            ch.beta = cfg_.beta_ladder[c];
            ch.rng = CounterRng(cfg_.seed, c + 1);
            ch.state = random_state(lc, cfg_.lambda, ch.rng);
            chains_.push_back(std::move(ch));
        }
        swap_attempts_.assign(chains_.size() > 0 ? chains_.size() - 1 : 0, 0);
        swap_accepts_ = swap_attempts_;
    }

    const McConfig& config() const noexcept { return cfg_; }
    std::size_t sweeps_done() const noexcept { return sweeps_; }
    bool finished() const noexcept { return sweeps_ >= cfg_.n_sweeps; }
    const CoupledState& state(std::size_t chain) const { return chains_.at(chain).state; }

    /// Runs until `target` sweeps in total (capped at n_sweeps). When `series`
    /// is given, each measurement appends "sweep,beta,R" rows in chain order.
    void advance_to(std::size_t target, unsigned threads = 1, std::ostream* series = nullptr) {
        target = std::min(target, cfg_.n_sweeps);
        while (sweeps_ < target) {
            std::size_t seg_end = target;
            if (cfg_.swap_every > 0 && chains_.size() > 1) {
                const std::size_t next_swap = (sweeps_ / cfg_.swap_every + 1) * cfg_.swap_every;
                seg_end = std::min(seg_end, next_swap);
            }
            std::vector<std::string> rows(chains_.size());
            // short segments are cheaper serially; the result is the same either way
            const std::size_t work = (seg_end - sweeps_) * lc_->num_sites * chains_.size();
            parallel_for(chains_.size(), work >= (1u << 16) ? threads : 1u, [&](std::size_t c) {
                std::ostringstream buf;
                run_chain(chains_[c], sweeps_, seg_end, series ? &buf : nullptr);
                if (series) rows[c] = buf.str();
            });
            if (series)
                for (const auto& r : rows) *series << r;
            sweeps_ = seg_end;
            if (cfg_.swap_every > 0 && chains_.size() > 1 && sweeps_ % cfg_.swap_every == 0) exchange();
        }
    }

    void run(unsigned threads = 1, std::ostream* series = nullptr) { advance_to(cfg_.n_sweeps, threads, series); }

    McRunResult result() const {
        McRunResult r;
        for (const auto& ch : chains_) {
            const auto a = ch.acc_r.summary();
            const auto b = ch.acc_r2.summary();
            McEstimate e;
            e.beta = ch.beta;
            e.mean_R = a.mean;
            e.mean_R2 = b.mean;
            e.stderr_R = a.stderr_;
            e.stderr_R2 = b.stderr_;
            e.tau_int = std::max(a.tau_int, b.tau_int);
            e.acceptance_rate =
                ch.proposals == 0 ? 0.0 : static_cast<double>(ch.accepted) / static_cast<double>(ch.proposals);
            e.n_measurements = ch.acc_r.count();
            // below kMinMeasurements no binning level resolves τ_int, so the run is flagged too
            e.equilibrated = e.n_measurements >= kMinMeasurements &&
                             20.0 * e.tau_int <= static_cast<double>(e.n_measurements);
            if (!e.equilibrated)
                r.warnings.push_back("beta=" + std::to_string(ch.beta) + ": tau_int " + std::to_string(e.tau_int) +
                                     " too large for " + std::to_string(e.n_measurements) + " measurements");
            r.per_beta.push_back(e);
        }
        for (std::size_t i = 0; i < swap_attempts_.size(); ++i) {
            const double acc = swap_attempts_[i] == 0 ? 0.0
                                                      : static_cast<double>(swap_accepts_[i]) /
                                                            static_cast<double>(swap_attempts_[i]);
            r.swap_acceptance.push_back(acc);
            if (swap_attempts_[i] > 0 && (acc < 0.1 || acc > 0.9))
                r.warnings.push_back("swap acceptance " + std::to_string(acc) + " between beta=" +
                                     std::to_string(chains_[i].beta) + " and " + std::to_string(chains_[i + 1].beta) +
                                     " outside [0.1, 0.9]");
        }
        return r;
    }

    void save(std::ostream& os) const {
        detail::BinWriter w{os};
        os.write("SGMCCKPT", 8);
        w.put(kCheckpointVersion);
        w.put(cfg_.seed);
        w.put(static_cast<std::uint64_t>(sweeps_));
        w.put(detail::couplings_fingerprint(*lc_));
        w.put(static_cast<std::uint64_t>(lc_->num_sites));
        w.put(static_cast<std::uint64_t>(chains_.size()));
        w.put(cfg_.lambda);
        w.put(static_cast<std::uint64_t>(cfg_.n_sweeps));
        w.put(static_cast<std::uint64_t>(cfg_.n_therm));
        w.put(static_cast<std::uint64_t>(cfg_.measure_every));
        w.put(static_cast<std::uint64_t>(cfg_.swap_every));
        for (double b : cfg_.beta_ladder) w.put(b);
        detail::put_rng(w, swap_rng_.state());
        w.put(swap_phase_);
        for (auto a : swap_attempts_) w.put(a);
        for (auto a : swap_accepts_) w.put(a);
        for (const auto& ch : chains_) {
            w.put(ch.beta);
            detail::put_spins(w, ch.state.s1);
            detail::put_spins(w, ch.state.s2);
            w.put(ch.state.energy);
            w.put(ch.state.overlap);
            detail::put_rng(w, ch.rng.state());
            w.put(ch.proposals);
            w.put(ch.accepted);
            ch.acc_r.write(w);
            ch.acc_r2.write(w);
        }
        if (!os) throw CheckpointError("checkpoint write failed");
    }

    /// Restores a saved run; the couplings must be the ones it was saved with.
    static ParallelTempering load(std::istream& is, const LocalCouplings& lc) {
        char magic[8];
        if (!is.read(magic, 8) || std::memcmp(magic, "SGMCCKPT", 8) != 0) throw CheckpointError("not a checkpoint");
        detail::BinReader r{is};
        if (r.get<std::uint32_t>() != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version");
        McConfig cfg;
        cfg.seed = r.get<std::uint64_t>();
        const auto sweeps = r.get<std::uint64_t>();
        if (r.get<std::uint64_t>() != detail::couplings_fingerprint(lc))
            throw CheckpointError("checkpoint was written for different couplings");
        if (r.get<std::uint64_t>() != lc.num_sites) throw CheckpointError("site count mismatch");
        const auto n_chains = r.get<std::uint64_t>();
        cfg.lambda = r.get<double>();
        cfg.n_sweeps = r.get<std::uint64_t>();
        cfg.n_therm = r.get<std::uint64_t>();
        cfg.measure_every = r.get<std::uint64_t>();
        cfg.swap_every = r.get<std::uint64_t>();
        for (std::uint64_t c = 0; c < n_chains; ++c) cfg.beta_ladder.push_back(r.get<double>());
        ParallelTempering pt(cfg, lc);
        pt.sweeps_ = sweeps;
        pt.swap_rng_ = CounterRng::from_state(detail::get_rng(r));
        pt.swap_phase_ = r.get<std::uint64_t>();
        for (auto& a : pt.swap_attempts_) a = r.get<std::uint64_t>();
        for (auto& a : pt.swap_accepts_) a = r.get<std::uint64_t>();
        for (auto& ch : pt.chains_) {
            ch.beta = r.get<double>();
            ch.state.s1 = detail::get_spins(r, lc.num_sites);
            ch.state.s2 = detail::get_spins(r, lc.num_sites);
            ch.state.energy = r.get<double>();
            ch.state.overlap = r.get<std::int64_t>();
            ch.rng = CounterRng::from_state(detail::get_rng(r));
            ch.proposals = r.get<std::uint64_t>();
            ch.accepted = r.get<std::uint64_t>();
            ch.acc_r.read(r);
            ch.acc_r2.read(r);
        }
        return pt;
    }

private:
    struct Chain {
        double beta = 0.0;
        CoupledState state;
        CounterRng rng{0};
        std::uint64_t proposals = 0;
        std::uint64_t accepted = 0;
        LogBinning acc_r, acc_r2;
    };

    /// Sweeps (from, to]; a sweep is N proposals alternating between replicas.
    void run_chain(Chain& ch, std::size_t from, std::size_t to, std::ostream* series) const {
        const std::size_t n = lc_->num_sites;
        for (std::size_t t = from + 1; t <= to; ++t) {
            for (std::size_t p = 0; p < n; ++p) {
                ch.accepted += metropolis_step(ch.state, ch.beta, cfg_.lambda, *lc_, ch.rng, static_cast<int>(p & 1u));
                ++ch.proposals;
            }
            if (t > cfg_.n_therm && (t - cfg_.n_therm) % cfg_.measure_every == 0) {
                const double r = ch.state.overlap_density();
                ch.acc_r.add(r);
                ch.acc_r2.add(r * r);
                if (series) *series << t << ',' << ch.beta << ',' << r << '\n';
            }
        }
    }

    /// Attempts exchanges between all adjacent slots of one parity, alternating
    /// parity between phases. Configurations move; temperatures stay.
    void exchange() {
        const std::size_t parity = swap_phase_ % 2;
        ++swap_phase_;
        for (std::size_t i = parity; i + 1 < chains_.size(); i += 2) {
            auto& a = chains_[i];
            auto& b = chains_[i + 1];
            const double u = swap_rng_.uniform();
            const double log_acc = (a.beta - b.beta) * (a.state.energy - b.state.energy);
            ++swap_attempts_[i];
            if (log_acc >= 0.0 || u < std::exp(log_acc)) {
                std::swap(a.state, b.state);
                ++swap_accepts_[i];
            }
        }
    }

    McConfig cfg_;
    const LocalCouplings* lc_;
    std::vector<Chain> chains_;
    CounterRng swap_rng_{0};
    std::uint64_t swap_phase_ = 0;
    std::vector<std::uint64_t> swap_attempts_, swap_accepts_;
    std::size_t sweeps_ = 0;
};

inline McRunResult parallel_tempering_run(const McConfig& cfg, const Lattice& lat, const DisorderRealization& dis,
                                          const BoundaryConfig& bnd, unsigned threads = 1) {
    const auto lc = compile_couplings(lat, dis, bnd);
    ParallelTempering pt(cfg, lc);
    pt.run(threads);
    return pt.result();
}

/// Seed of the Monte Carlo chains for disorder sample i.
inline std::uint64_t mc_sample_seed(std::uint64_t mc_seed, std::size_t i) { return derive_seed(mc_seed ^ 0x6d63ull, i); }

/// q_br(L) from Monte Carlo moments at s.beta, which must lie on the ladder.
/// Disorder draws match the exact estimators for the same s.seed. A size row
/// is flagged (certified = false) if any sample failed the equilibration test.
inline OrderParamEstimate q_br_mc(const EstimatorSettings& s, const McConfig& mc) {
    detail::require_sizes(s);
    mc.validate();
    if (s.n_disorder < 2) throw std::invalid_argument("q_br needs at least two disorder samples");
    if (std::find(mc.beta_ladder.begin(), mc.beta_ladder.end(), s.beta) == mc.beta_ladder.end())
        throw std::invalid_argument("beta is not on the Monte Carlo ladder");
    std::vector<SizeValue> rows;
    for (int L : s.sizes) {
        const auto lat = build_lattice(s.dim, L);
        const auto bnd = s.boundary.on(lat);
        const auto est = quenched_map(
            lat, s.j_dist, s.h_dist, s.n_disorder, s.seed,
            [&](const DisorderRealization& d, std::size_t i) {
                McConfig c = mc;
                c.seed = mc_sample_seed(mc.seed, i);
                return parallel_tempering_run(c, lat, d, bnd).at_beta(s.beta);
            },
            s.threads);
        std::vector<double> r1, r2;
        bool ok = true;
        for (const auto& e : est) {
            r1.push_back(e.mean_R);
            r2.push_back(e.mean_R2);
            ok = ok && e.equilibrated;
        }
        auto row = detail::sqrt_variance_estimate(L, r2, r1);
        row.certified = ok;
        rows.push_back(row);
    }
    auto settings = s;
    auto e = detail::finish("q_br_mc", settings, rows, {});
    e.settings["mc"] = mc.to_json();
    return e;
}

}  // namespace sgorder
