#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgorder/exact.hpp"
#include "sgorder/rng.hpp"

namespace sgorder::rem {

/// Raised when a fixed-point or root solver fails to reach its tolerance.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SolverOptions {
    double tol = 1e-12;
    int max_iter = 10000;
};

inline const double kLog2 = std::numbers::ln2;
/// Critical inverse temperature 2 √(log 2).
inline const double kBetaC = 2.0 * std::sqrt(std::numbers::ln2);

/// Binary entropy -½[(1+r) log((1+r)/2) + (1-r) log((1-r)/2)], 0 at r = ±1.
inline double s0(double r) {
    if (!(std::abs(r) <= 1.0)) throw std::domain_error("s0 needs |r| <= 1");
    auto term = [](double u, double log1p_part) { return u == 0.0 ? 0.0 : u * (log1p_part - kLog2); };
    return -0.5 * (term(1.0 + r, std::log1p(r)) + term(1.0 - r, std::log1p(-r)));
}

/// Unique solution of ρ = tanh(2λ √s0(ρ)); odd in λ. Damped fixed-point
/// iteration first, bracketed bisection on the residual if that stalls.
inline double rho(double lambda, const SolverOptions& opt = {}) {
    if (lambda == 0.0) return 0.0;
    const double a = std::abs(lambda);
    auto map = [&](double x) { return std::tanh(2.0 * a * std::sqrt(s0(x))); };
    double x = std::min(map(0.0), 1.0 - 1e-16);
    for (int it = 0; it < opt.max_iter / 2; ++it) {
        const double next = 0.5 * x + 0.5 * map(x);
        if (std::abs(next - map(next)) < opt.tol) return std::copysign(next, lambda);
        x = next;
    }
    // residual x - map(x) is negative at 0 and positive at 1
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < opt.max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double res = mid - map(mid);
        if (std::abs(res) < opt.tol || hi - lo < 1e-17) return std::copysign(mid, lambda);
        (res < 0.0 ? lo : hi) = mid;
    }
    throw SolverError("rho: no convergence for lambda = " + std::to_string(lambda));
}

/// Unique positive root of β = 2 √(s0(tanh βλ)), by bisection on [1e-9, 4].
inline double beta_bar_c(double lambda, const SolverOptions& opt = {}) {
    auto g = [&](double b) { return b - 2.0 * std::sqrt(s0(std::tanh(b * lambda))); };
    double lo = 1e-9, hi = 4.0;
    if (!(g(lo) < 0.0 && g(hi) > 0.0)) throw SolverError("beta_bar_c: bracket does not enclose a root");
    for (int it = 0; it < opt.max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double v = g(mid);
        if (std::abs(v) < opt.tol || hi - lo < 1e-15) return mid;
        (v < 0.0 ? lo : hi) = mid;
    }
    throw SolverError("beta_bar_c: no convergence for lambda = " + std::to_string(lambda));
}

/// Contribution of the diagonal σ¹ = σ² to -β f2.
inline double a1(double beta, double lambda) {
    if (beta <= kBetaC / 2.0) return beta * beta + kLog2 + beta * lambda;
    return 2.0 * beta * std::sqrt(kLog2) + beta * lambda;
}

/// Contribution of the off-diagonal pairs to -β f2.
inline double a2(double beta, double lambda, const SolverOptions& opt = {}) {
    const double bbc = beta_bar_c(lambda, opt);
    if (beta <= bbc) {
        const double t = std::tanh(beta * lambda);
        return beta * beta / 2.0 + kLog2 + s0(t) + beta * lambda * t;
    }
    const double r = rho(lambda, opt);
    const double tail = beta * std::sqrt(s0(r)) + beta * lambda * r;
    if (beta < kBetaC) return beta * beta / 4.0 + kLog2 + tail;
    return beta * std::sqrt(kLog2) + tail;
}

/// Single-replica free energy.
inline double f_rem(double beta) {
    require_positive_beta(beta);
    if (beta <= kBetaC) return -kLog2 / beta - beta / 4.0;
    return -std::sqrt(kLog2);
}

/// Two-replica free energy -max{a1, a2} / β.
inline double f2_rem(double beta, double lambda, const SolverOptions& opt = {}) {
    require_positive_beta(beta);
    return -std::max(a1(beta, lambda), a2(beta, lambda, opt)) / beta;
}

/// Which term attains the maximum: "a1", or "a2" with its temperature branch.
inline std::string active_branch(double beta, double lambda, const SolverOptions& opt = {}) {
    if (a1(beta, lambda) >= a2(beta, lambda, opt)) return "a1";
    if (beta <= beta_bar_c(lambda, opt)) return "a2-high";
    return beta < kBetaC ? "a2-mid" : "a2-low";
}

/// Limit of E⟨R⟩ at zero coupling.
inline double mean_overlap_rem(double beta) {
    require_positive_beta(beta);
    return beta <= kBetaC ? 0.0 : 1.0 - kBetaC / beta;
}

inline double q_br_rem(double beta) {
    require_positive_beta(beta);
    if (beta <= kBetaC) return 0.0;
    const double w = kBetaC / beta;
    return std::sqrt(w * (1.0 - w));
}

/// One-sided λ-derivatives of -f2 at λ = 0.
struct OneSided {
    double right = 0.0;  // -lim_{λ↓0} ∂f2/∂λ
    double left = 0.0;   // -lim_{λ↑0} ∂f2/∂λ
};

inline OneSided f2_rem_one_sided_derivatives(double beta) {
    require_positive_beta(beta);
    return {beta >= kBetaC ? 1.0 : 0.0, 0.0};
}

inline double q_jump_rem(double beta) {
    const auto d = f2_rem_one_sided_derivatives(beta);
    return 0.5 * (d.right - d.left);
}

struct Atom {
    double q;
    double weight;
};

/// Limiting overlap distribution as a list of point masses.
inline std::vector<Atom> p_q_rem(double beta) {
    require_positive_beta(beta);
    if (beta <= kBetaC) return {{0.0, 1.0}};
    return {{0.0, kBetaC / beta}, {1.0, 1.0 - kBetaC / beta}};
}

// ---------------------------------------------------------------------------
// Finite N

inline constexpr std::size_t kMaxSingleSites = 24;
inline constexpr std::size_t kMaxPairSites = 10;

/// One REM sample: 2^N independent Gaussian energies with variance N/2.
struct FiniteN {
    std::size_t N = 0;
    std::uint64_t seed = 0;
    EnergyTable table;

    static FiniteN sample(std::size_t n, std::uint64_t seed) {
        if (n == 0) throw std::invalid_argument("REM needs N >= 1");
        require_cap(n, kMaxSingleSites, "REM sample");
        CounterRng rng(seed, 0);
        const double sd = std::sqrt(static_cast<double>(n) / 2.0);
        std::vector<double> e(std::size_t{1} << n);
        for (auto& v : e) v = sd * rng.normal();
        return {n, seed, EnergyTable::from_values(std::move(e))};
    }

    double log_z(double beta) const { return log_z1(beta, table).log_z; }
};

struct FiniteNResult {
    std::size_t N = 0;
    double beta = 0.0;
    double lambda = 0.0;
    double log_z1 = 0.0;
    double log_z1_2beta = 0.0;
    double log_z2 = 0.0;
    double log_z2_zero = 0.0;
    double mean_r_zero = 0.0;
    /// log Z2(λ) - (βλN + log Z(2β)); nonnegative by keeping only σ¹ = σ².
    double diagonal_gap = 0.0;
    /// log[Z2(λ)/Z2(0)] - βλN⟨R⟩₀; nonnegative by Jensen's inequality.
    double jensen_gap = 0.0;
};

inline FiniteNResult finite_n_sample(std::size_t n, double beta, double lambda, std::uint64_t seed) {
    require_positive_beta(beta);
    require_cap(n, kMaxPairSites, "REM two-replica sums");
    const auto s = FiniteN::sample(n, seed);
    const ShellTable st(beta, s.table);
    const auto z2 = two_replica_stats(st, lambda);
    const auto z20 = two_replica_stats(st, 0.0);
    FiniteNResult r;
    r.N = n;
    r.beta = beta;
    r.lambda = lambda;
    r.log_z1 = s.log_z(beta);
    r.log_z1_2beta = s.log_z(2.0 * beta);
    r.log_z2 = z2.log_z;
    r.log_z2_zero = z20.log_z;
    r.mean_r_zero = z20.mean_r;
    const double bln = beta * lambda * static_cast<double>(n);
    r.diagonal_gap = r.log_z2 - (bln + r.log_z1_2beta);
    r.jensen_gap = (r.log_z2 - r.log_z2_zero) - bln * r.mean_r_zero;
    return r;
}

/// Finite-N three-replica log partition function with couplings (λ, λ').
inline ThreeReplicaStats finite_n_three_replica(std::size_t n, double beta, double lambda, double lambda_p,
                                                std::uint64_t seed) {
    require_cap(n, kMaxPairSites, "REM three-replica sums");
    const auto s = FiniteN::sample(n, seed);
    return three_replica_stats(ShellTable(beta, s.table), lambda, lambda_p);
}

}  // namespace sgorder::rem
