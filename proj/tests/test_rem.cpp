#include <gtest/gtest.h>

#include <cmath>

#include "sgorder/rem.hpp"

namespace rem = sgorder::rem;

TEST(RemSolvers, BinaryEntropyValues) {
    EXPECT_NEAR(rem::s0(0.0), std::log(2.0), 1e-15);
    EXPECT_EQ(rem::s0(1.0), 0.0);
    EXPECT_EQ(rem::s0(-1.0), 0.0);
    EXPECT_NEAR(rem::s0(0.5), 0.5623351446188083, 1e-12);
    EXPECT_DOUBLE_EQ(rem::s0(0.3), rem::s0(-0.3));
    EXPECT_THROW(rem::s0(1.5), std::domain_error);
}

TEST(RemSolvers, RhoSolvesFixedPoint) {
    for (double lam : {1e-4, 0.01, 0.1, 0.5, 1.0, 3.0}) {
        const double r = rem::rho(lam);
        EXPECT_NEAR(r, std::tanh(2 * lam * std::sqrt(rem::s0(r))), 1e-11) << lam;
        EXPECT_GT(r, 0.0);
        EXPECT_LT(r, 1.0);
        EXPECT_EQ(rem::rho(-lam), -r);
    }
    EXPECT_EQ(rem::rho(0.0), 0.0);
    // small coupling: ρ ≈ 2λ√log2
    EXPECT_NEAR(rem::rho(1e-4) / 1e-4, 2 * std::sqrt(std::log(2.0)), 1e-6);
}

TEST(RemSolvers, BetaBarCriticalPoint) {
    EXPECT_NEAR(rem::beta_bar_c(0.0), rem::kBetaC, 1e-12);
    EXPECT_NEAR(rem::kBetaC, 1.6651092223153954, 1e-15);
    double prev = rem::beta_bar_c(0.0);
    for (double lam : {0.05, 0.1, 0.3, 0.6, 1.0}) {
        const double b = rem::beta_bar_c(lam);
        EXPECT_LT(b, prev) << lam;
        EXPECT_NEAR(b, rem::beta_bar_c(-lam), 1e-12);
        // on the boundary the fixed point is tanh(β̄λ)
        EXPECT_NEAR(rem::rho(lam), std::tanh(b * lam), 1e-9) << lam;
        prev = b;
    }
}

TEST(RemFreeEnergy, BranchesAreContinuous) {
    for (double lam : {-0.4, -0.1, 0.05, 0.2, 0.7}) {
        const double bb = rem::beta_bar_c(lam);
        EXPECT_NEAR(rem::a2(bb * (1 - 1e-12), lam), rem::a2(bb * (1 + 1e-12), lam), 1e-9) << lam;
        const double bc = rem::kBetaC;
        EXPECT_NEAR(rem::a2(bc * (1 - 1e-12), lam), rem::a2(bc * (1 + 1e-12), lam), 1e-9) << lam;
        EXPECT_NEAR(rem::a1(bc / 2 * (1 - 1e-12), lam), rem::a1(bc / 2 * (1 + 1e-12), lam), 1e-9);
    }
}

TEST(RemFreeEnergy, UncoupledIsTwiceSingle) {
    for (int i = 0; i < 100; ++i) {
        const double beta = 0.2 + 4.8 * i / 99.0;
        EXPECT_NEAR(rem::f2_rem(beta, 0.0), 2 * rem::f_rem(beta), 1e-10) << beta;
    }
}

TEST(RemFreeEnergy, SingleReplicaContinuousAtCritical) {
    EXPECT_NEAR(rem::f_rem(rem::kBetaC * (1 - 1e-12)), rem::f_rem(rem::kBetaC * (1 + 1e-12)), 1e-10);
    EXPECT_THROW(rem::f_rem(0.0), std::invalid_argument);
}

TEST(RemFreeEnergy, SmallCouplingForms) {
    const double lam = 1e-3;
    // high temperature: quadratic in λ, no linear term
    for (double beta : {0.5, 1.2}) {
        const double d = -(rem::f2_rem(beta, lam) - rem::f2_rem(beta, 0.0));
        EXPECT_NEAR(d, 0.0, 10 * lam * lam) << beta;
    }
    // low temperature: slope one for λ > 0
    for (double beta : {2.0, 3.0}) {
        const double d = -(rem::f2_rem(beta, lam) - rem::f2_rem(beta, 0.0));
        EXPECT_NEAR(d / lam, 1.0, 1e-9) << beta;
        const double dl = -(rem::f2_rem(beta, -lam) - rem::f2_rem(beta, 0.0));
        EXPECT_NEAR(dl / lam, 0.0, 10 * lam) << beta;
    }
}

TEST(RemFreeEnergy, MinusF2ConvexInCoupling) {
    for (double beta : {0.7, 1.4, 2.2, 3.5}) {
        for (double lam = -1.0; lam <= 1.0; lam += 0.05) {
            const double h = 0.03;
            const double mid = -rem::f2_rem(beta, lam);
            const double avg = -0.5 * (rem::f2_rem(beta, lam - h) + rem::f2_rem(beta, lam + h));
            EXPECT_GE(avg, mid - 1e-12) << beta << " " << lam;
        }
    }
}

TEST(RemFreeEnergy, AsymmetricBelowCritical) {
    const double beta = 2.5, lam = 0.05;
    EXPECT_GT(rem::f2_rem(beta, -lam) - rem::f2_rem(beta, lam), 0.01);
    EXPECT_EQ(rem::active_branch(beta, lam), "a1");
    EXPECT_EQ(rem::active_branch(beta, -lam), "a2-low");
    EXPECT_EQ(rem::active_branch(0.5, 0.1), "a2-high");
}

TEST(RemOrderParams, OneSidedDerivativesMatchNumerics) {
    const double delta = 1e-6;
    for (double beta : {0.6, 1.3, 1.9, 2.7, 4.0}) {
        const auto d = rem::f2_rem_one_sided_derivatives(beta);
        const double base = -rem::f2_rem(beta, 0.0);
        EXPECT_NEAR((-rem::f2_rem(beta, delta) - base) / delta, d.right, 1e-5) << beta;
        EXPECT_NEAR((base + rem::f2_rem(beta, -delta)) / delta, d.left, 1e-5) << beta;
    }
}

TEST(RemOrderParams, JumpDominatesBreaking) {
    for (double beta = 0.2; beta <= 6.0; beta += 0.1) {
        const double qb = rem::q_br_rem(beta);
        const double qj = rem::q_jump_rem(beta);
        EXPECT_GE(qj, qb * qb / 4 - 1e-15) << beta;
        EXPECT_GE(qj, qb - 1e-15) << beta;
        EXPECT_GE(qb, 0.0);
        EXPECT_LE(qb, 0.5 + 1e-15);
    }
    EXPECT_EQ(rem::q_jump_rem(1.0), 0.0);
    EXPECT_EQ(rem::q_jump_rem(2.0), 0.5);
    // equality case of the conjectured bound
    EXPECT_NEAR(rem::q_br_rem(2 * rem::kBetaC), rem::q_jump_rem(2 * rem::kBetaC), 1e-15);
}

TEST(RemOrderParams, OverlapDistribution) {
    for (double beta : {1.0, 2.0, 5.0}) {
        const auto atoms = rem::p_q_rem(beta);
        double mass = 0, m1 = 0, m2 = 0;
        for (const auto& a : atoms) {
            mass += a.weight;
            m1 += a.weight * a.q;
            m2 += a.weight * a.q * a.q;
        }
        EXPECT_NEAR(mass, 1.0, 1e-15);
        EXPECT_NEAR(m1, rem::mean_overlap_rem(beta), 1e-15);
        // both atoms are 0 or 1, so the spread is the breaking parameter
        EXPECT_NEAR(std::sqrt(m2 - m1 * m1), rem::q_br_rem(beta), 1e-12);
    }
}

TEST(RemFiniteN, SampleIsDeterministic) {
    const auto a = rem::FiniteN::sample(8, 42);
    const auto b = rem::FiniteN::sample(8, 42);
    const auto c = rem::FiniteN::sample(8, 43);
    EXPECT_EQ(a.table.energy, b.table.energy);
    EXPECT_NE(a.table.energy, c.table.energy);
    EXPECT_EQ(a.table.energy.size(), 256u);
    EXPECT_THROW(rem::FiniteN::sample(25, 1), sgorder::CapError);
    EXPECT_THROW(rem::finite_n_sample(11, 1.0, 0.1, 1), sgorder::CapError);
}

TEST(RemFiniteN, EnergyVarianceIsHalfN) {
    const std::size_t n = 16;
    const auto s = rem::FiniteN::sample(n, 7);
    double m = 0, v = 0;
    for (double e : s.table.energy) m += e;
    m /= s.table.energy.size();
    for (double e : s.table.energy) v += (e - m) * (e - m);
    v /= s.table.energy.size() - 1;
    EXPECT_NEAR(v / (n / 2.0), 1.0, 0.03);
    EXPECT_NEAR(m, 0.0, 0.1);
}

TEST(RemFiniteN, PairBoundsHold) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        for (double beta : {0.5, 1.5, 3.0}) {
            for (double lam : {-0.3, 0.05, 0.4}) {
                const auto r = rem::finite_n_sample(8, beta, lam, seed);
                EXPECT_GE(r.diagonal_gap, -1e-10);
                EXPECT_GE(r.jensen_gap, -1e-10);
            }
        }
    }
}

TEST(RemFiniteN, ThreeReplicaDirectionalBound) {
    // log Z3 is convex in (λ, λ') with zero gradient along (1,-1) at the origin
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const double z0 = rem::finite_n_three_replica(6, 2.0, 0.0, 0.0, seed).log_z;
        const double z = rem::finite_n_three_replica(6, 2.0, 0.2, -0.2, seed).log_z;
        const auto s0 = rem::finite_n_three_replica(6, 2.0, 0.0, 0.0, seed);
        EXPECT_NEAR(s0.mean_r12, s0.mean_r13, 1e-12);
        EXPECT_GE(z - z0, -1e-10);
    }
}
