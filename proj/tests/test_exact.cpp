#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sgorder/exact.hpp"
#include "sgorder/quenched.hpp"
#include "sgorder/transfer.hpp"

using namespace sgorder;

namespace {

BoundaryConfig random_boundary(const Lattice& lat, std::uint64_t seed) {
    BoundaryConfig b{std::vector<double>(lat.num_boundary_sites())};
    CounterRng r(seed);
    for (auto& v : b.b) v = r.uniform(-1, 1);
    return b;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(LogZ1, ClosedForms) {
    const auto lat = build_lattice(1, 2);
    const auto open = BoundaryConfig::open(lat);
    auto field_only = uniform_disorder(lat, 0.0, 0.0);
    field_only.h[0] = 0.7;
    for (double beta : {0.1, 1.0, 5.0})
        EXPECT_NEAR(log_z1(beta, lat, field_only, open).log_z, std::log(2 * std::cosh(beta * 0.7)) + std::log(2.0), 1e-14);
    const auto chain = uniform_disorder(lat, 1.0, 0.0);
    for (double beta : {0.1, 1.0, 5.0})
        EXPECT_NEAR(log_z1(beta, lat, chain, open).log_z, std::log(4 * std::cosh(beta)), 1e-14);
}

TEST(LogZ1, MatchesExtendedPrecisionOracle) {
    const auto lat = build_lattice(2, 2);
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto dis = sample_disorder(lat, Distribution::pm_j(0.5), Distribution::constant(0), s);
        const auto bnd = BoundaryConfig::open(lat);
        const double ref = oracle::log_z1(1.0, lat, dis, bnd);
        EXPECT_LE(rel(log_z1(1.0, lat, dis, bnd).log_z, ref), 1e-13);
    }
    const auto lat3 = build_lattice(2, 3);
    const auto dis = sample_disorder(lat3, Distribution::gaussian(0, 1), Distribution::gaussian(0, 1), 3);
    const auto bnd = random_boundary(lat3, 1);
    EXPECT_LE(rel(log_z1(2.0, lat3, dis, bnd).log_z, oracle::log_z1(2.0, lat3, dis, bnd)), 1e-13);
}

TEST(LogZ1, LargeBetaDoesNotOverflow) {
    const auto lat = build_lattice(2, 3);
    const auto dis = sample_disorder(lat, Distribution::gaussian(0, 3), Distribution::constant(0), 1);
    const auto open = BoundaryConfig::open(lat);
    const double lz = log_z1(50.0, lat, dis, open).log_z;
    EXPECT_TRUE(std::isfinite(lz));
    EXPECT_LE(rel(lz, oracle::log_z1(50.0, lat, dis, open)), 1e-13);
}

TEST(LogZ1, RejectsBadInput) {
    const auto lat = build_lattice(1, 25);
    const auto dis = uniform_disorder(lat, 1, 0);
    EXPECT_THROW(log_z1(1.0, lat, dis, BoundaryConfig::open(lat)), CapError);
    const auto small = build_lattice(1, 3);
    EXPECT_THROW(log_z1(0.0, small, uniform_disorder(small, 1, 0), BoundaryConfig::open(small)), std::invalid_argument);
    const auto l13 = build_lattice(1, 13);
    EXPECT_THROW(log_z2(1.0, 0.1, l13, uniform_disorder(l13, 1, 0), BoundaryConfig::open(l13)), CapError);
}

TEST(EnergyTable, GrayCodeMatchesDirectEnergies) {
    const auto lat = build_lattice(2, 3);
    const auto dis = sample_disorder(lat, Distribution::gaussian(0, 1), Distribution::gaussian(0, 1), 21);
    const auto bnd = random_boundary(lat, 2);
    const auto t = energy_table(lat, dis, bnd);
    const auto ref = oracle::all_energies(lat, dis, bnd);
    for (std::size_t m = 0; m < ref.size(); ++m) EXPECT_NEAR(t.energy[m], ref[m], 1e-12);
}

TEST(InnerSums, DecoupledAndDirect) {
    const auto lat = build_lattice(1, 2);
    const auto dis = sample_disorder(lat, Distribution::pm_j(0.5), Distribution::gaussian(0, 1), 4);
    const auto open = BoundaryConfig::open(lat);
    const double beta = 1.3;
    const double lz = log_z1(beta, lat, dis, open).log_z;
    for (double a : inner_sum_table(beta, 0.0, lat, dis, open)) EXPECT_NEAR(a, lz, 1e-14);
    const double lambda = 0.37;
    const auto table = inner_sum_table(beta, lambda, lat, dis, open);
    for (std::uint64_t s1 = 0; s1 < 4; ++s1) {
        double direct = 0.0;
        for (std::uint64_t s2 = 0; s2 < 4; ++s2) {
            const auto c1 = SpinConfig::from_mask(s1, 2), c2 = SpinConfig::from_mask(s2, 2);
            direct += std::exp(-beta * energy1(lat, c2, dis, open) + beta * lambda * spin_dot(c1, c2));
        }
        EXPECT_NEAR(table[s1], std::log(direct), 1e-14);
    }
    // strong coupling: the aligned replica dominates the inner sum
    const ShellTable st(beta, energy_table(lat, dis, open));
    EXPECT_GT(st.shells(0)[0] * std::exp(2 * beta * 20.0), st.shells(0)[1] * 1e10);
}

TEST(TwoReplica, MatchesDirectPairSum) {
    for (auto [d, L] : {std::pair{1, 2}, std::pair{1, 4}, std::pair{2, 2}}) {
        const auto lat = build_lattice(d, L);
        const auto dis = sample_disorder(lat, Distribution::pm_j(0.5), Distribution::gaussian(0, 0.5), 30 + L);
        const auto bnd = random_boundary(lat, 7);
        for (double lambda : {-0.4, 0.0, 0.3}) {
            const double beta = 1.0;
            const auto ref = oracle::two_replica(beta, lambda, lat, dis, bnd);
            const auto s = two_replica_stats(ShellTable(beta, energy_table(lat, dis, bnd)), lambda);
            EXPECT_LE(rel(s.log_z, ref.log_z), 1e-13);
            EXPECT_NEAR(s.mean_r, ref.mean_r, 1e-13);
            EXPECT_NEAR(s.mean_r2, ref.mean_r2, 1e-13);
            const auto h = overlap_histogram(beta, lat, dis, bnd, lambda);
            for (std::size_t k = 0; k < h.weight.size(); ++k) EXPECT_NEAR(h.weight[k], ref.agree_weight[k], 1e-13);
        }
    }
}

TEST(ThreeReplica, MatchesDirectTripleSum) {
    const auto lat = build_lattice(1, 4);
    const auto dis = sample_disorder(lat, Distribution::gaussian(0, 1), Distribution::gaussian(0, 0.5), 8);
    const auto bnd = random_boundary(lat, 3);
    for (auto [l, lp] : {std::pair{0.2, -0.3}, std::pair{0.5, 0.1}}) {
        const auto ref = oracle::three_replica(1.2, l, lp, lat, dis, bnd);
        const auto s = three_replica_stats(ShellTable(1.2, energy_table(lat, dis, bnd)), l, lp);
        EXPECT_LE(rel(s.log_z, ref.log_z), 1e-13);
        EXPECT_NEAR(s.mean_r12, ref.mean_r12, 1e-13);
        EXPECT_NEAR(s.mean_r13, ref.mean_r13, 1e-13);
        EXPECT_NEAR(s.mean_r12_r13, ref.mean_r12_r13, 1e-13);
    }
}

TEST(ReplicaIdentities, FactorizationChainRuleTransposition) {
    for (auto [d, L] : {std::pair{2, 3}, std::pair{1, 8}}) {
        const auto lat = build_lattice(d, L);
        const auto open = BoundaryConfig::open(lat);
        for (std::uint64_t s = 0; s < 20; ++s) {
            const auto dis = sample_disorder(lat, Distribution::pm_j(0.5), Distribution::constant(0), s);
            const double beta = 0.7;
            const double z1 = log_z1(beta, lat, dis, open).log_z;
            EXPECT_LE(rel(log_z2(beta, 0.0, lat, dis, open).log_z, 2 * z1), 1e-12);
            EXPECT_LE(rel(log_z3(beta, 0.2, 0.0, lat, dis, open).log_z, z1 + log_z2(beta, 0.2, lat, dis, open).log_z),
                      1e-12);
            EXPECT_EQ(log_z3(beta, 0.2, -0.15, lat, dis, open).log_z, log_z3(beta, -0.15, 0.2, lat, dis, open).log_z);
            EXPECT_NEAR(overlap_moments(beta, 0.0, lat, dis, open).mean_r, 0.0, 1e-12);
        }
    }
}

TEST(OverlapMoments, InfiniteTemperatureLimit) {
    const auto lat = build_lattice(2, 3);
    const auto dis = sample_disorder(lat, Distribution::gaussian(0, 1), Distribution::constant(0), 1);
    const auto m = overlap_moments(1e-6, 0.0, lat, dis, BoundaryConfig::open(lat));
    EXPECT_NEAR(m.mean_r2, 1.0 / 9.0, 1e-5);
}

TEST(OverlapHistogram, InfiniteTemperatureIsBinomial) {
    const auto lat = build_lattice(1, 6);
    const auto h = overlap_histogram(1e-9, lat, sample_disorder(lat, Distribution::pm_j(0.5), Distribution::constant(0), 2),
                                     BoundaryConfig::open(lat));
    double binom = 1.0;
    for (std::size_t k = 0; k <= 6; ++k) {
        EXPECT_NEAR(h.weight[k], binom / 64.0, 1e-8);
        binom = binom * static_cast<double>(6 - k) / static_cast<double>(k + 1);
    }
    EXPECT_NEAR(h.normalization, 1.0, 1e-12);
}

TEST(OverlapHistogram, FerromagnetTwoPeaksAndSymmetry) {
    const auto lat = build_lattice(1, 3);
    const auto h = overlap_histogram(10.0, lat, uniform_disorder(lat, 1, 0), BoundaryConfig::open(lat));
    EXPECT_GT(h.weight[0] + h.weight[3], 0.999);
    EXPECT_EQ(h.weight[0], h.weight[3]);
}

TEST(OverlapHistogram, ZeroFieldSymmetryAndMoments) {
    const auto lat = build_lattice(2, 3);
    const auto open = BoundaryConfig::open(lat);
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto dis = sample_disorder(lat, Distribution::gaussian(0, 1), Distribution::constant(0), s);
        const auto h = overlap_histogram(1.5, lat, dis, open);
        EXPECT_NEAR(h.normalization, 1.0, 1e-12);
        for (std::size_t k = 0; k <= 9; ++k) EXPECT_EQ(h.weight[k], h.weight[9 - k]);
        const auto m = overlap_moments(1.5, 0.0, lat, dis, open);
        EXPECT_NEAR(h.moment(1), m.mean_r, 1e-12);
        EXPECT_NEAR(h.moment(2), m.mean_r2, 1e-12);
    }
}

TEST(Correlations, EnumerationMatchesOracle) {
    const auto lat = build_lattice(2, 3);
    const auto dis = sample_disorder(lat, Distribution::gaussian(0, 1), Distribution::gaussian(0, 0.3), 5);
    const auto bnd = random_boundary(lat, 9);
    const auto ref = oracle::correlations(0.9, lat, dis, bnd);
    const auto c = enumerate_correlations(0.9, compile_couplings(lat, dis, bnd));
    EXPECT_LE(rel(c.log_z, ref.log_z), 1e-13);
    for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(c.magnetization[i], ref.m[i], 1e-13);
    for (std::size_t i = 0; i < 81; ++i) EXPECT_NEAR(c.correlation[i], ref.c[i], 1e-13);
    // λ = 0 replica moments follow from one- and two-point functions
    const auto m = overlap_moments(0.9, 0.0, lat, dis, bnd);
    EXPECT_NEAR(c.two_replica_mean_r(), m.mean_r, 1e-13);
    EXPECT_NEAR(c.two_replica_mean_r2(), m.mean_r2, 1e-13);
}

TEST(Transfer, MatchesEnumeration) {
    for (auto [d, L] : {std::pair{1, 7}, std::pair{2, 2}, std::pair{2, 3}, std::pair{2, 4}}) {
        const auto lat = build_lattice(d, L);
        const auto dis = sample_disorder(lat, Distribution::gaussian(0, 1), Distribution::gaussian(0, 0.4), 40 + L);
        const auto bnd = random_boundary(lat, 11);
        for (double beta : {0.3, 1.7, 8.0}) {
            const auto ref = enumerate_correlations(beta, compile_couplings(lat, dis, bnd));
            const auto c = TransferChain(beta, lat, dis, bnd).correlations();
            EXPECT_LE(rel(c.log_z, ref.log_z), 1e-12) << d << ' ' << L << ' ' << beta;
            for (std::size_t i = 0; i < ref.magnetization.size(); ++i)
                EXPECT_NEAR(c.magnetization[i], ref.magnetization[i], 1e-11);
            for (std::size_t i = 0; i < ref.correlation.size(); ++i)
                EXPECT_NEAR(c.correlation[i], ref.correlation[i], 1e-11);
        }
    }
}

TEST(Transfer, OneDimensionalClosedForm) {
    // open chain: Z = 2 (2 cosh βJ)^(L-1), ⟨σ_i σ_j⟩ = tanh(βJ)^|i-j|
    const auto lat = build_lattice(1, 30);
    const double beta = 0.8;
    const TransferChain tc(beta, lat, uniform_disorder(lat, 1.0, 0.0), BoundaryConfig::open(lat));
    EXPECT_NEAR(tc.log_z(), std::log(2.0) + 29 * std::log(2 * std::cosh(beta)), 1e-12);
    const auto c = tc.correlations();
    EXPECT_NEAR(c.corr(3, 17), std::pow(std::tanh(beta), 14), 1e-13);
}

TEST(Quenched, ConstantObservableHasZeroError) {
    const auto lat = build_lattice(1, 4);
    const auto est = quenched_average(lat, Distribution::pm_j(0.5), Distribution::constant(0), 10, 1,
                                      [](const DisorderRealization&) { return 3.0; });
    EXPECT_EQ(est.mean, 3.0);
    EXPECT_EQ(est.stderr_, 0.0);
}

TEST(Quenched, BondMeanAndThreadIndependence) {
    const auto lat = build_lattice(1, 4);
    auto bond = [](const DisorderRealization& d) { return d.J_bonds[1]; };
    const auto a = quenched_average(lat, Distribution::pm_j(0.5), Distribution::constant(0), 4000, 5, bond, 1);
    const auto b = quenched_average(lat, Distribution::pm_j(0.5), Distribution::constant(0), 4000, 5, bond, 3);
    EXPECT_NEAR(a.mean, 0.0, 5 / std::sqrt(4000.0));
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.stderr_, b.stderr_);
}

TEST(Quenched, ExactEnumerationAgreesWithSampling) {
    const auto lat = build_lattice(1, 5);  // 4 bulk + 2 boundary couplings
    const auto bnd = BoundaryConfig::plus(lat);
    auto obs = [&](const DisorderRealization& d) { return log_z1(1.0, lat, d, bnd).log_z; };
    const auto jd = Distribution::pm_j(0.7);
    const auto hd = Distribution::constant(0.2);
    const double exact = exact_pm_j_average(lat, jd, hd, obs);
    const auto est = quenched_average(lat, jd, hd, 2000, 17, obs);
    EXPECT_NEAR(est.mean, exact, 3 * est.stderr_);
    EXPECT_THROW(exact_pm_j_average(build_lattice(2, 4), jd, hd, obs), CapError);
}

TEST(Quenched, FreeEnergySampleFactorization) {
    const auto lat = build_lattice(1, 6);
    const auto open = BoundaryConfig::open(lat);
    const auto f1 = quenched_free_energy(lat, Distribution::pm_j(0.5), Distribution::constant(0), open, 1.0, 1, {}, 20, 3);
    const auto f2 =
        quenched_free_energy(lat, Distribution::pm_j(0.5), Distribution::constant(0), open, 1.0, 2, {0.0, 0.0}, 20, 3);
    EXPECT_NEAR(f2.f_value, 2 * f1.f_value, 1e-12);
    EXPECT_EQ(f1.n_disorder, 20u);
    EXPECT_GE(f1.stderr_, 0.0);
}
