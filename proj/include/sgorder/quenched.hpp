#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "sgorder/disorder.hpp"
#include "sgorder/exact.hpp"
#include "sgorder/numeric.hpp"
#include "sgorder/rng.hpp"

namespace sgorder {

/// Seed of the i-th disorder sample of a run.
inline std::uint64_t sample_seed(std::uint64_t run_seed, std::size_t index) { return derive_seed(run_seed, index); }

/// Evaluates fn(realization, index) on n independent disorder draws. Sample i
/// always uses sample_seed(seed, i), so the output does not depend on the
/// number of workers.
template <class Fn>
auto quenched_map(const Lattice& lat, const Distribution& j_dist, const Distribution& h_dist, std::size_t n,
                  std::uint64_t seed, Fn&& fn, unsigned threads = 1) {
    using T = decltype(fn(std::declval<const DisorderRealization&>(), std::size_t{}));
    std::vector<T> out(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const auto dis = sample_disorder(lat, j_dist, h_dist, sample_seed(seed, i));
        out[i] = fn(dis, i);
    });
    return out;
}

/// Mean and standard error of a scalar observable over n disorder draws.
template <class Fn>
ObservableEstimate quenched_average(const Lattice& lat, const Distribution& j_dist, const Distribution& h_dist,
                                    std::size_t n, std::uint64_t seed, Fn&& fn, unsigned threads = 1) {
    if (n == 0) throw std::invalid_argument("quenched_average needs at least one disorder sample");
    const auto xs = quenched_map(
        lat, j_dist, h_dist, n, seed, [&](const DisorderRealization& d, std::size_t) { return static_cast<double>(fn(d)); },
        threads);
    return summarize(xs);
}

/// Largest number of ±J couplings averaged by exhaustive enumeration.
inline constexpr std::size_t kMaxEnumBonds = 20;

/// Exact disorder average for ±J couplings: every sign pattern of the bulk
/// and boundary couplings weighted by p^{#plus} (1-p)^{#minus}. Fields must be
/// non-random.
template <class Fn>
double exact_pm_j_average(const Lattice& lat, const Distribution& j_dist, const Distribution& h_dist, Fn&& fn,
                          unsigned threads = 1) {
    if (j_dist.kind != DistKind::pm_j) throw std::invalid_argument("exact disorder averages need pm_j couplings");
    if (!h_dist.is_degenerate()) throw std::invalid_argument("exact disorder averages need a non-random field");
    const std::size_t nb = lat.bonds().size();
    const std::size_t nbb = lat.boundary_bonds().size();
    const std::size_t bits = nb + nbb;
    if (bits > kMaxEnumBonds)
        throw CapError("exact disorder average: " + std::to_string(bits) + " couplings exceeds the cap of " +
                       std::to_string(kMaxEnumBonds));
    const double p = j_dist.p0;
    const double mag = j_dist.p1;
    const std::size_t count = std::size_t{1} << bits;
    std::vector<double> terms(count);
    parallel_for(count, threads, [&](std::size_t pattern) {
        DisorderRealization d;
        d.dim = lat.dim();
        d.side = lat.side();
        d.j_dist = j_dist;
        d.h_dist = h_dist;
        d.J_bonds.resize(nb);
        d.J_boundary.resize(nbb);
        d.h.assign(lat.num_sites(), h_dist.degenerate_value());
        double w = 1.0;
        for (std::size_t k = 0; k < bits; ++k) {
            const bool plus = (pattern >> k) & 1u;
            const double v = plus ? mag : -mag;
            w *= plus ? p : 1.0 - p;
            if (k < nb)
                d.J_bonds[k] = v;
            else
                d.J_boundary[k - nb] = v;
        }
        terms[pattern] = w == 0.0 ? 0.0 : w * static_cast<double>(fn(d));
    });
    return pairwise_sum(terms);
}

/// Disorder-averaged free energy per site, -(1/(βN)) E log Z, at one coupling point.
struct FreeEnergySample {
    double beta = 0.0;
    double lambda = 0.0;
    double lambda_prime = 0.0;
    int n_replicas = 1;
    double log_z = 0.0;  // E log Z
    double f_value = 0.0;
    double stderr_ = 0.0;
    std::size_t n_disorder = 0;
    std::uint64_t seed = 0;

    static void write_csv_header(std::ostream& os) {
        os << "beta,lambda,lambda_prime,log_z,f,stderr,n_disorder,seed\n";
    }
    void write_csv_row(std::ostream& os) const {
        os.precision(17);
        os << beta << ',' << lambda << ',' << lambda_prime << ',' << log_z << ',' << f_value << ',' << stderr_ << ','
           << n_disorder << ',' << seed << '\n';
    }
};

/// Quenched free energy of the 1-, 2- or 3-replica system (caps as for enumeration).
inline FreeEnergySample quenched_free_energy(const Lattice& lat, const Distribution& j_dist, const Distribution& h_dist,
                                             const BoundaryConfig& bnd, double beta, int n_replicas,
                                             ReplicaCoupling k, std::size_t n, std::uint64_t seed,
                                             unsigned threads = 1) {
    if (n_replicas < 1 || n_replicas > 3) throw std::invalid_argument("n_replicas must be 1, 2 or 3");
    const auto est = quenched_average(
        lat, j_dist, h_dist, n, seed,
        [&](const DisorderRealization& d) {
            switch (n_replicas) {
                case 1: return log_z1(beta, lat, d, bnd).log_z;
                case 2: return log_z2(beta, k.lambda, lat, d, bnd).log_z;
                default: return log_z3(beta, k.lambda, k.lambda_prime, lat, d, bnd).log_z;
            }
        },
        threads);
    const double scale = -1.0 / (beta * static_cast<double>(lat.num_sites()));
    FreeEnergySample s;
    s.beta = beta;
    s.lambda = n_replicas >= 2 ? k.lambda : 0.0;
    s.lambda_prime = n_replicas == 3 ? k.lambda_prime : 0.0;
    s.n_replicas = n_replicas;
    s.log_z = est.mean;
    s.f_value = scale * est.mean;
    s.stderr_ = std::abs(scale) * est.stderr_;
    s.n_disorder = est.n;
    s.seed = seed;
    return s;
}

}  // namespace sgorder
