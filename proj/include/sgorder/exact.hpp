#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgorder/hamiltonian.hpp"
#include "sgorder/numeric.hpp"

namespace sgorder {

/// Largest system enumerated for single-replica sums.
inline constexpr std::size_t kMaxEnumSites = 24;
/// Largest system for two- and three-replica sums.
inline constexpr std::size_t kMaxReplicaSites = 12;
/// Largest system for enumerated correlation matrices (cost 2^N N^2).
inline constexpr std::size_t kMaxCorrelationSites = 20;

class CapError : public std::length_error {
public:
    using std::length_error::length_error;
};

inline void require_cap(std::size_t n, std::size_t cap, const char* what) {
    if (n > cap)
        throw CapError(std::string(what) + ": " + std::to_string(n) + " sites exceeds the enumeration cap of " +
                       std::to_string(cap));
}

inline void require_positive_beta(double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be positive and finite");
}

/// Energies of all 2^N configurations; entry m is the configuration whose
/// bit x is set iff σ_x = +1.
struct EnergyTable {
    std::size_t num_sites = 0;
    std::vector<double> energy;
    double min_energy = 0.0;

    static EnergyTable from_values(std::vector<double> values) {
        if (values.empty() || !std::has_single_bit(values.size())) throw ShapeError("energy table size must be 2^N");
        EnergyTable t;
        t.num_sites = static_cast<std::size_t>(std::countr_zero(values.size()));
        t.energy = std::move(values);
        t.min_energy = std::numeric_limits<double>::infinity();
        for (double e : t.energy) t.min_energy = std::min(t.min_energy, e);
        return t;
    }
};

/// Visits every configuration in Gray-code order, updating the energy by the
/// single-flip difference. fn(mask, energy).
template <class Fn>
void for_each_energy(const LocalCouplings& lc, Fn&& fn) {
    const std::size_t n = lc.num_sites;
    require_cap(n, kMaxEnumSites, "enumeration");
    std::uint64_t mask = 0;
    double e = lc.energy_mask(0);
    fn(mask, e);
    const std::uint64_t count = std::uint64_t{1} << n;
    for (std::uint64_t i = 1; i < count; ++i) {
        const auto x = static_cast<std::size_t>(std::countr_zero(i));
        const double s = ((mask >> x) & 1u) ? 1.0 : -1.0;
        // H = -σ_x (Σ J σ_y + field_x) + rest, so flipping σ_x adds 2 σ_x (Σ J σ_y + field_x).
        e += 2.0 * s * lc.local_field_mask(x, mask);
        mask ^= std::uint64_t{1} << x;
        fn(mask, e);
    }
}

/// Builds the table as bond part plus field part. The bond part is walked in
/// Gray-code order over half the configurations and copied to the complements,
/// so without fields E(σ) and E(-σ) are bitwise equal and every spin-flip
/// symmetric quantity derived from the table is symmetric to the last bit.
inline EnergyTable energy_table(const LocalCouplings& lc) {
    const std::size_t n = lc.num_sites;
    require_cap(n, kMaxEnumSites, "enumeration");
    const std::uint64_t count = std::uint64_t{1} << n;
    const std::uint64_t all = count - 1;
    std::vector<double> values(count);
    std::uint64_t mask = 0;
    double e = 0.0;
    for (std::size_t x = 0; x < n; ++x) e -= 0.5 * lc.bond_field_mask(x, 0) * -1.0;
    values[0] = values[all] = e;
    for (std::uint64_t i = 1; i < count / 2; ++i) {
        const auto x = static_cast<std::size_t>(std::countr_zero(i));
        const double sx = ((mask >> x) & 1u) ? 1.0 : -1.0;
        e += 2.0 * sx * lc.bond_field_mask(x, mask);
        mask ^= std::uint64_t{1} << x;
        values[mask] = values[mask ^ all] = e;
    }
    if (lc.has_field()) {
        mask = 0;
        double g = 0.0;  // Σ field_x σ_x
        for (std::size_t x = 0; x < n; ++x) g -= lc.field[x];
        values[0] -= g;
        for (std::uint64_t i = 1; i < count; ++i) {
            const auto x = static_cast<std::size_t>(std::countr_zero(i));
            const double sx = ((mask >> x) & 1u) ? 1.0 : -1.0;
            g -= 2.0 * sx * lc.field[x];
            mask ^= std::uint64_t{1} << x;
            values[mask] -= g;
        }
    }
    return EnergyTable::from_values(std::move(values));
}

inline EnergyTable energy_table(const Lattice& lat, const DisorderRealization& dis, const BoundaryConfig& bnd) {
    return energy_table(compile_couplings(lat, dis, bnd));
}

struct LogPartition {
    double log_z = 0.0;
    double beta = 0.0;
    int n_replicas = 1;
    ReplicaCoupling coupling;
};

inline LogPartition log_z1(double beta, const EnergyTable& t) {
    require_positive_beta(beta);
    double s = 0.0;
    for (double e : t.energy) s += std::exp(-beta * (e - t.min_energy));
    return {-beta * t.min_energy + std::log(s), beta, 1, {}};
}

inline LogPartition log_z1(double beta, const Lattice& lat, const DisorderRealization& dis, const BoundaryConfig& bnd) {
    require_positive_beta(beta);
    return log_z1(beta, energy_table(lat, dis, bnd));
}

/// Hamming-shell sums of the single-replica Boltzmann weights:
///   W_k(σ) = Σ_{σ' : d(σ,σ') = k} exp(-β (E(σ') - E_min)).
/// Built by a butterfly over the N bit positions in O(N^2 2^N). Because the
/// replica coupling depends on σ¹·σ² = N - 2 d(σ¹,σ²) only, every
/// λ-dependent inner sum A(σ;λ) = Σ_σ' e^{-βE(σ') + βλ σ·σ'} is a
/// polynomial evaluation over these shells.
class ShellTable {
public:
    ShellTable(double beta, const EnergyTable& t) : n_(t.num_sites), beta_(beta) {
        require_positive_beta(beta);
        require_cap(n_, kMaxReplicaSites, "replica enumeration");
        const std::size_t count = std::size_t{1} << n_;
        const std::size_t width = n_ + 1;
        log_scale_ = -beta * t.min_energy;
        weights_.resize(count);
        energy_ = t.energy;
        shells_.assign(count * width, 0.0);
        for (std::size_t m = 0; m < count; ++m) {
            weights_[m] = std::exp(-beta * (t.energy[m] - t.min_energy));
            shells_[m * width] = weights_[m];
        }
        std::vector<double> tmp(width);
        for (std::size_t bit = 0; bit < n_; ++bit) {
            const std::size_t step = std::size_t{1} << bit;
            for (std::size_t m = 0; m < count; ++m) {
                if (m & step) continue;
                double* lo = &shells_[m * width];
                double* hi = &shells_[(m | step) * width];
                // lo(z) <- lo(z) + z hi(z), hi(z) <- hi(z) + z lo(z); degrees stay <= bit + 1.
                for (std::size_t j = 0; j <= bit + 1; ++j) tmp[j] = lo[j];
                for (std::size_t j = bit + 1; j >= 1; --j) lo[j] += hi[j - 1];
                for (std::size_t j = bit + 1; j >= 1; --j) hi[j] += tmp[j - 1];
            }
        }
    }

    std::size_t num_sites() const noexcept { return n_; }
    std::size_t num_configs() const noexcept { return weights_.size(); }
    double beta() const noexcept { return beta_; }
    /// Boltzmann weights are exp(log_scale) * weights()[m].
    double log_scale() const noexcept { return log_scale_; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::span<const double> energies() const noexcept { return energy_; }
    std::span<const double> shells(std::size_t config) const noexcept {
        return {shells_.data() + config * (n_ + 1), n_ + 1};
    }

    /// Per-shell factors exp(βλ(N - 2k) - c) with c = β|λ|N, so all are <= 1.
    std::vector<double> shell_factors(double lambda, double* log_c) const {
        const double c = beta_ * std::abs(lambda) * static_cast<double>(n_);
        std::vector<double> f(n_ + 1);
        for (std::size_t k = 0; k <= n_; ++k)
            f[k] = std::exp(beta_ * lambda * (static_cast<double>(n_) - 2.0 * static_cast<double>(k)) - c);
        *log_c = c;
        return f;
    }

    /// log A(σ;λ).
    double log_inner_sum(std::size_t config, double lambda) const {
        double c = 0.0;
        const auto f = shell_factors(lambda, &c);
        return log_inner_sum(config, f, c);
    }

    double log_inner_sum(std::size_t config, std::span<const double> factors, double log_c) const {
        const auto w = shells(config);
        double s = 0.0;
        for (std::size_t k = 0; k <= n_; ++k) s += w[k] * factors[k];
        return log_scale_ + log_c + std::log(s);
    }

private:
    std::size_t n_;
    double beta_;
    double log_scale_ = 0.0;
    std::vector<double> weights_;
    std::vector<double> energy_;
    std::vector<double> shells_;
};

/// Table of log A(σ¹;λ) over all configurations σ¹.
inline std::vector<double> inner_sum_table(const ShellTable& st, double lambda) {
    double c = 0.0;
    const auto f = st.shell_factors(lambda, &c);
    std::vector<double> out(st.num_configs());
    for (std::size_t m = 0; m < out.size(); ++m) out[m] = st.log_inner_sum(m, f, c);
    return out;
}

inline std::vector<double> inner_sum_table(double beta, double lambda, const Lattice& lat, const DisorderRealization& dis,
                                           const BoundaryConfig& bnd) {
    require_cap(lat.num_sites(), kMaxReplicaSites, "inner_sum_table");
    return inner_sum_table(ShellTable(beta, energy_table(lat, dis, bnd)), lambda);
}

/// Exact two-replica quantities at coupling λ.
struct TwoReplicaStats {
    double log_z = 0.0;
    double mean_r = 0.0;
    double mean_r2 = 0.0;
    /// Probability of Hamming distance k between the replicas (overlap (N-2k)/N).
    std::vector<double> distance_weights;

    double variance_r() const noexcept { return mean_r2 - mean_r * mean_r; }
};

inline TwoReplicaStats two_replica_stats(const ShellTable& st, double lambda) {
    const std::size_t n = st.num_sites();
    const double nd = static_cast<double>(n);
    double c = 0.0;
    const auto f = st.shell_factors(lambda, &c);
    const std::size_t count = st.num_configs();
    const auto w1 = st.weights();

    // log of the σ¹ marginal (unnormalised) relative to the common scale.
    std::vector<double> log_marg(count);
    std::vector<double> cond_r(count), cond_r2(count);
    std::vector<double> cond(n + 1);
    for (std::size_t m = 0; m < count; ++m) {
        const auto w = st.shells(m);
        double a = 0.0, r1 = 0.0, r2 = 0.0;
        for (std::size_t k = 0; k <= n; ++k) {
            const double t = w[k] * f[k];
            const double r = (nd - 2.0 * static_cast<double>(k)) / nd;
            a += t;
            r1 += t * r;
            r2 += t * r * r;
        }
        log_marg[m] = std::log(w1[m]) + std::log(a);
        cond_r[m] = r1 / a;
        cond_r2[m] = r2 / a;
    }
    TwoReplicaStats out;
    const double lse = log_sum_exp(log_marg);
    out.log_z = 2.0 * st.log_scale() + c + lse;
    out.distance_weights.assign(n + 1, 0.0);
    std::vector<double> p(count);
    for (std::size_t m = 0; m < count; ++m) p[m] = std::exp(log_marg[m] - lse);
    std::vector<double> t1(count), t2(count);
    for (std::size_t m = 0; m < count; ++m) {
        t1[m] = p[m] * cond_r[m];
        t2[m] = p[m] * cond_r2[m];
    }
    out.mean_r = pairwise_sum(t1);
    out.mean_r2 = pairwise_sum(t2);
    for (std::size_t m = 0; m < count; ++m) {
        const auto w = st.shells(m);
        double a = 0.0;
        for (std::size_t k = 0; k <= n; ++k) a += w[k] * f[k];
        for (std::size_t k = 0; k <= n; ++k) out.distance_weights[k] += p[m] * w[k] * f[k] / a;
    }
    return out;
}

/// Exact three-replica quantities at couplings (λ, λ'). Replicas 2 and 3 are
/// conditionally independent given replica 1.
struct ThreeReplicaStats {
    double log_z = 0.0;
    double mean_r12 = 0.0;
    double mean_r13 = 0.0;
    double mean_r12_sq = 0.0;
    double mean_r13_sq = 0.0;
    double mean_r12_r13 = 0.0;

    /// ⟨ξ R12 + ξ' R13⟩
    double mean_tilde(double xi, double xi_p) const noexcept { return xi * mean_r12 + xi_p * mean_r13; }
    /// Var(ξ R12 + ξ' R13)
    double var_tilde(double xi, double xi_p) const noexcept {
        const double m = mean_tilde(xi, xi_p);
        return xi * xi * mean_r12_sq + xi_p * xi_p * mean_r13_sq + 2.0 * xi * xi_p * mean_r12_r13 - m * m;
    }
};

inline ThreeReplicaStats three_replica_stats(const ShellTable& st, double lambda, double lambda_p) {
    const std::size_t n = st.num_sites();
    const double nd = static_cast<double>(n);
    double c = 0.0, cp = 0.0;
    const auto f = st.shell_factors(lambda, &c);
    const auto fp = st.shell_factors(lambda_p, &cp);
    const std::size_t count = st.num_configs();
    const auto w1 = st.weights();

    std::vector<double> log_marg(count), m2(count), m3(count), q2(count), q3(count);
    for (std::size_t m = 0; m < count; ++m) {
        const auto w = st.shells(m);
        double a = 0.0, ar = 0.0, ar2 = 0.0, b = 0.0, br = 0.0, br2 = 0.0;
        for (std::size_t k = 0; k <= n; ++k) {
            const double r = (nd - 2.0 * static_cast<double>(k)) / nd;
            const double ta = w[k] * f[k];
            const double tb = w[k] * fp[k];
            a += ta;
            ar += ta * r;
            ar2 += ta * r * r;
            b += tb;
            br += tb * r;
            br2 += tb * r * r;
        }
        // The two inner sums are added first so (λ, λ') and (λ', λ) round identically.
        log_marg[m] = std::log(w1[m]) + (std::log(a) + std::log(b));
        m2[m] = ar / a;
        q2[m] = ar2 / a;
        m3[m] = br / b;
        q3[m] = br2 / b;
    }
    ThreeReplicaStats out;
    const double lse = log_sum_exp(log_marg);
    out.log_z = 3.0 * st.log_scale() + (c + cp) + lse;
    std::vector<double> t(count);
    auto expect = [&](auto&& g) {
        for (std::size_t m = 0; m < count; ++m) t[m] = std::exp(log_marg[m] - lse) * g(m);
        return pairwise_sum(t);
    };
    out.mean_r12 = expect([&](std::size_t m) { return m2[m]; });
    out.mean_r13 = expect([&](std::size_t m) { return m3[m]; });
    out.mean_r12_sq = expect([&](std::size_t m) { return q2[m]; });
    out.mean_r13_sq = expect([&](std::size_t m) { return q3[m]; });
    out.mean_r12_r13 = expect([&](std::size_t m) { return m2[m] * m3[m]; });
    return out;
}

inline LogPartition log_z2(double beta, double lambda, const Lattice& lat, const DisorderRealization& dis,
                           const BoundaryConfig& bnd) {
    require_cap(lat.num_sites(), kMaxReplicaSites, "log_z2");
    const ShellTable st(beta, energy_table(lat, dis, bnd));
    return {two_replica_stats(st, lambda).log_z, beta, 2, {lambda, 0.0}};
}

inline LogPartition log_z3(double beta, double lambda, double lambda_p, const Lattice& lat,
                           const DisorderRealization& dis, const BoundaryConfig& bnd) {
    require_cap(lat.num_sites(), kMaxReplicaSites, "log_z3");
    const ShellTable st(beta, energy_table(lat, dis, bnd));
    return {three_replica_stats(st, lambda, lambda_p).log_z, beta, 3, {lambda, lambda_p}};
}

struct OverlapMoments {
    double mean_r = 0.0;
    double mean_r2 = 0.0;
};

inline OverlapMoments overlap_moments(double beta, double lambda, const Lattice& lat, const DisorderRealization& dis,
                                      const BoundaryConfig& bnd) {
    require_cap(lat.num_sites(), kMaxReplicaSites, "overlap_moments");
    const auto s = two_replica_stats(ShellTable(beta, energy_table(lat, dis, bnd)), lambda);
    return {s.mean_r, s.mean_r2};
}

/// Weights of the discrete overlap values q_k = (2k - N)/N, k = number of
/// sites where the replicas agree.
struct OverlapHistogram {
    std::size_t num_sites = 0;
    double beta = 0.0;
    double lambda = 0.0;
    std::vector<double> weight;  // indexed by k = 0..N
    double normalization = 0.0;

    double q(std::size_t k) const noexcept {
        return (2.0 * static_cast<double>(k) - static_cast<double>(num_sites)) / static_cast<double>(num_sites);
    }
    double moment(int power) const noexcept {
        double s = 0.0;
        for (std::size_t k = 0; k < weight.size(); ++k) s += weight[k] * std::pow(q(k), power);
        return s;
    }
    /// Adds another histogram with a weight (used for disorder averages).
    void accumulate(const OverlapHistogram& other, double w) {
        if (weight.empty()) weight.assign(other.weight.size(), 0.0);
        for (std::size_t k = 0; k < weight.size(); ++k) weight[k] += w * other.weight[k];
        normalization += w * other.normalization;
    }
};

inline OverlapHistogram overlap_histogram(const ShellTable& st, double lambda = 0.0) {
    const auto s = two_replica_stats(st, lambda);
    OverlapHistogram h;
    h.num_sites = st.num_sites();
    h.beta = st.beta();
    h.lambda = lambda;
    h.weight.assign(h.num_sites + 1, 0.0);
    // agreement count k = N - distance
    for (std::size_t d = 0; d <= h.num_sites; ++d) h.weight[h.num_sites - d] = s.distance_weights[d];
    h.normalization = pairwise_sum(h.weight);
    return h;
}

inline OverlapHistogram overlap_histogram(double beta, const Lattice& lat, const DisorderRealization& dis,
                                          const BoundaryConfig& bnd, double lambda = 0.0) {
    require_cap(lat.num_sites(), kMaxReplicaSites, "overlap_histogram");
    return overlap_histogram(ShellTable(beta, energy_table(lat, dis, bnd)), lambda);
}

/// Single-replica thermal averages: log Z, ⟨σ_x⟩ and ⟨σ_x σ_y⟩ (row-major N×N).
struct Correlations {
    std::size_t num_sites = 0;
    double log_z = 0.0;
    std::vector<double> magnetization;
    std::vector<double> correlation;

    double corr(std::size_t x, std::size_t y) const noexcept { return correlation[x * num_sites + y]; }

    /// ⟨R⟩ at λ = 0: (1/N) Σ_x ⟨σ_x⟩².
    double two_replica_mean_r() const noexcept {
        double s = 0.0;
        for (double m : magnetization) s += m * m;
        return s / static_cast<double>(num_sites);
    }
    /// ⟨R²⟩ at λ = 0: (1/N²) Σ_{x,y} ⟨σ_x σ_y⟩².
    double two_replica_mean_r2() const noexcept {
        double s = 0.0;
        for (double c : correlation) s += c * c;
        return s / (static_cast<double>(num_sites) * static_cast<double>(num_sites));
    }
    /// Σ_x ⟨σ_x⟩² over a subset of sites.
    double sum_sq_magnetization(std::span<const std::size_t> sites) const noexcept {
        double s = 0.0;
        for (auto x : sites) s += magnetization[x] * magnetization[x];
        return s;
    }
};

/// Enumerates all configurations and accumulates one- and two-point functions.
inline Correlations enumerate_correlations(double beta, const LocalCouplings& lc) {
    require_positive_beta(beta);
    const std::size_t n = lc.num_sites;
    require_cap(n, kMaxCorrelationSites, "correlation enumeration");
    const auto table = energy_table(lc);
    Correlations c;
    c.num_sites = n;
    c.magnetization.assign(n, 0.0);
    c.correlation.assign(n * n, 0.0);
    double z = 0.0;
    std::vector<double> s(n);
    for (std::uint64_t m = 0; m < table.energy.size(); ++m) {
        const double w = std::exp(-beta * (table.energy[m] - table.min_energy));
        z += w;
        for (std::size_t x = 0; x < n; ++x) s[x] = ((m >> x) & 1u) ? 1.0 : -1.0;
        for (std::size_t x = 0; x < n; ++x) {
            c.magnetization[x] += w * s[x];
            const double ws = w * s[x];
            for (std::size_t y = x + 1; y < n; ++y) c.correlation[x * n + y] += ws * s[y];
        }
    }
    for (std::size_t x = 0; x < n; ++x) {
        c.magnetization[x] /= z;
        c.correlation[x * n + x] = 1.0;
        for (std::size_t y = x + 1; y < n; ++y) {
            c.correlation[x * n + y] /= z;
            c.correlation[y * n + x] = c.correlation[x * n + y];
        }
    }
    c.log_z = -beta * table.min_energy + std::log(z);
    return c;
}

}  // namespace sgorder
