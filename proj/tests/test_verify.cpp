#include <gtest/gtest.h>

#include <cmath>

#include "sgorder/verify.hpp"

using namespace sgorder;
using namespace sgorder::verify;

namespace {

EstimatorSettings glass(int dim, std::vector<int> sizes, double beta, std::size_t n, std::uint64_t seed = 7) {
    EstimatorSettings s;
    s.dim = dim;
    s.sizes = std::move(sizes);
    s.beta = beta;
    s.n_disorder = n;
    s.seed = seed;
    s.lambda_grid = {0.02, 0.1, 0.3};
    return s;
}

}  // namespace

TEST(Status, WorstOrdering) {
    EXPECT_EQ(worst(Status::exact_pass, Status::trend_consistent), Status::trend_consistent);
    EXPECT_EQ(worst(Status::fail, Status::pass_with_tolerance), Status::fail);
    EXPECT_EQ(to_string(Status::pass_with_tolerance), "pass-with-tolerance");
}

TEST(BlockGeometry, CopyCounts) {
    EXPECT_EQ(optimal_copy_count(2, 9, 3), 4u);
    EXPECT_EQ(optimal_copy_count(1, 9, 2), 2u);
    EXPECT_EQ(optimal_copy_count(2, 4, 2), 1u);
    EXPECT_THROW(block_geometry(2, 4, 2), std::invalid_argument);
    EXPECT_THROW(block_geometry(1, 20, 1), std::invalid_argument);
    const auto g = block_geometry(2, 9, 3);
    ASSERT_EQ(g.offsets.size(), 4u);
    EXPECT_EQ(g.offsets[0], (std::vector<int>{1, 1}));
    EXPECT_EQ(g.offsets[3], (std::vector<int>{5, 5}));
    // copies fit inside with a gap to the boundary
    for (const auto& o : g.offsets)
        for (int x : o) EXPECT_LE(x + g.ell, g.L - 1);
}

TEST(BlockGeometry, EmbeddedCopyCarriesBigCouplings) {
    const auto lat = build_lattice(2, 9);
    const auto dis = sample_disorder(lat, Distribution::gaussian(0, 1), Distribution::gaussian(0.1, 0.5), 3);
    const auto g = block_geometry(2, 9, 3);
    const auto e = embedded_copy(lat, dis, g, 3);
    ASSERT_EQ(e.sites.size(), 9u);
    const std::vector<int> corner{5, 5};
    EXPECT_EQ(e.sites[0], lat.index(corner));
    for (std::size_t i = 0; i < e.lat.bonds().size(); ++i) {
        const auto& b = e.lat.bonds()[i];
        EXPECT_EQ(e.dis.J_bonds[i], dis.J_bonds[lat.bond_between(e.sites[b.a], e.sites[b.b])]);
    }
    for (const auto& bb : e.lat.boundary_bonds()) {
        const auto u = e.outer[bb.boundary_site];
        auto x = lat.coords(u), y = lat.coords(e.sites[bb.site]);
        int dist = 0;
        for (int a = 0; a < 2; ++a) dist += std::abs(x[a] - y[a]);
        EXPECT_EQ(dist, 1);
        EXPECT_EQ(e.dis.J_boundary[bb.boundary_site], dis.J_bonds[lat.bond_between(e.sites[bb.site], u)]);
    }
    for (std::size_t s = 0; s < e.sites.size(); ++s) EXPECT_EQ(e.dis.h[s], dis.h[e.sites[s]]);
}

TEST(BlockGeometry, CornerTableMatchesConditionalEnumeration) {
    // conditional magnetization of the copy given its frozen surroundings, by brute force
    const auto lat = build_lattice(1, 8);
    const auto dis = sample_disorder(lat, Distribution::gaussian(0, 1), Distribution::gaussian(0, 0.3), 11);
    const auto g = block_geometry(1, 8, 2);
    const auto e = embedded_copy(lat, dis, g, 1);
    const double beta = 0.9;
    const auto t = corner_table(beta, e);
    const auto bnd = BoundaryConfig::open(lat);
    const auto table = energy_table(lat, dis, bnd);
    for (std::size_t p = 0; p < 4; ++p) {
        std::vector<double> num(e.sites.size(), 0.0);
        double z = 0.0;
        for (std::size_t m = 0; m < table.energy.size(); ++m) {
            bool match = true;
            for (std::size_t i = 0; i < e.outer.size(); ++i)
                match = match && (((m >> e.outer[i]) & 1u) == ((p >> i) & 1u));
            if (!match) continue;
            const double w = std::exp(-beta * (table.energy[m] - table.min_energy));
            z += w;
            for (std::size_t i = 0; i < e.sites.size(); ++i) num[i] += w * (((m >> e.sites[i]) & 1u) ? 1.0 : -1.0);
        }
        for (std::size_t i = 0; i < e.sites.size(); ++i) EXPECT_NEAR(t.magnetization[p][i], num[i] / z, 1e-12);
    }
}

TEST(BlockDecomposition, ConditionalAndEnsembleHold) {
    for (double beta : {0.4, 1.5}) {
        auto s = glass(1, {8}, beta, 12);
        const auto r = check_block_decomposition(s, 8, 2);
        EXPECT_NE(r.status, Status::fail) << r.to_json().dump(2);
        ASSERT_GE(r.parts.size(), 4u);
        EXPECT_EQ(r.parts[0].check_id, "conditional");
        EXPECT_EQ(r.parts[0].status, Status::exact_pass);
        EXPECT_EQ(r.parts[1].status, Status::exact_pass);
        EXPECT_GE(r.parts[0].slack, -1e-10);
    }
}

TEST(BlockDecomposition, FieldsAndTwoDimensions) {
    auto s = glass(2, {4}, 0.8, 3);
    s.h_dist = Distribution::gaussian(0.2, 0.4);
    s.boundary.value = 1.0;
    // L = 4 only fits one copy of side 2
    EXPECT_THROW(check_block_decomposition(s, 4, 2), std::invalid_argument);
    auto s1 = glass(1, {11}, 1.1, 6);
    s1.h_dist = Distribution::gaussian(0.2, 0.4);
    s1.boundary.value = -1.0;
    const auto r = check_block_decomposition(s1, 11, 2);
    EXPECT_EQ(optimal_copy_count(1, 11, 2), 3u);
    EXPECT_NE(r.status, Status::fail);
}

TEST(BlockDecomposition, InvertedControlFails) {
    auto s = glass(1, {8}, 1.0, 6);
    BlockOptions o;
    o.invert = true;
    const auto r = check_block_decomposition(s, 8, 2, o);
    EXPECT_EQ(r.parts[0].status, Status::fail);
    EXPECT_EQ(r.status, Status::fail);
    EXPECT_LT(r.parts[0].slack, -r.parts[0].tolerance);
}

TEST(Identities, ExactPassOnSymmetricAndBrokenInputs) {
    auto s = glass(2, {3}, 1.3, 4);
    auto r = check_identities(s);
    EXPECT_EQ(r.status, Status::exact_pass) << r.to_json().dump(2);
    EXPECT_EQ(r.parts.size(), 5u);
    s.h_dist = Distribution::gaussian(0.0, 1.0);
    r = check_identities(s);
    EXPECT_EQ(r.status, Status::exact_pass);
    EXPECT_EQ(r.parts.size(), 4u);
}

TEST(Derivatives, PassAndCorruptedControlFails) {
    auto s = glass(1, {6}, 1.2, 3);
    s.h_dist = Distribution::gaussian(0.1, 0.5);
    const auto r = check_derivatives(s);
    EXPECT_NE(r.status, Status::fail) << r.to_json().dump(2);
    DerivativeOptions bad;
    bad.corrupt_cross_term = true;
    const auto c = check_derivatives(s, bad);
    EXPECT_EQ(c.status, Status::fail);
    EXPECT_EQ(c.parts[0].status, Status::fail);
}

TEST(ReplicaConcavity, HoldsPerSampleAndFerromagnetHasSlack) {
    auto s = glass(2, {3}, 1.4, 5);
    const auto r = check_replica_concavity(s);
    EXPECT_EQ(r.status, Status::exact_pass) << r.to_json().dump(2);

    EstimatorSettings f;
    f.dim = 1;
    f.sizes = {6};
    f.beta = 3.0;
    f.j_dist = Distribution::constant(1.0);
    f.n_disorder = 1;
    f.lambda_grid = {0.05};
    const auto rf = check_replica_concavity(f);
    EXPECT_EQ(rf.status, Status::exact_pass);
    EXPECT_GT(rf.slack, 1e-5);
}

TEST(ReplicaConcavity, GradientFormWithFields) {
    auto s = glass(1, {7}, 1.0, 4);
    s.h_dist = Distribution::gaussian(0.3, 0.5);
    const auto r = check_replica_concavity(s);
    EXPECT_NE(r.status, Status::fail);
    EXPECT_EQ(r.settings["asserted_form"], "gradient");
    EXPECT_EQ(r.parts.back().check_id, "quotient-form");
}

TEST(ReplicaConcavity, InvertedControlFails) {
    auto s = glass(2, {3}, 1.4, 3);
    ConcavityOptions o;
    o.invert = true;
    EXPECT_EQ(check_replica_concavity(s, o).status, Status::fail);
}

TEST(QeaVsQbr, TrendAndSurrogate) {
    auto s = glass(1, {4, 8}, 1.0, 6);
    const auto r = check_qea_vs_qbr(s, 2);
    EXPECT_NE(r.status, Status::fail) << r.to_json().dump(2);
    // the limit statement is never more than trend-consistent
    EXPECT_EQ(r.status, Status::trend_consistent);
    ASSERT_EQ(r.parts.size(), 1u);
    EXPECT_EQ(r.parts[0].check_id, "surrogate-L8");
    s.h_dist = Distribution::constant(0.5);
    EXPECT_THROW(check_qea_vs_qbr(s, 2), std::invalid_argument);
}

TEST(QjumpVsQbr, TrendConsistentOnSmallGlass) {
    auto s = glass(2, {2, 3}, 1.5, 8);
    s.resolution_floor = 1.0;
    const auto r = check_qjump_bound(s);
    EXPECT_EQ(r.status, Status::trend_consistent) << r.to_json().dump(2);
    EXPECT_EQ(r.table.rows.size(), 2u);
}

TEST(QjumpVsQbr, RemInstanceExact) {
    const auto r = check_qjump_bound_rem();
    EXPECT_EQ(r.status, Status::exact_pass);
    EXPECT_GE(r.slack, 0.0);
}

TEST(MuPair, TwoDimensionalIsingOrdered) {
    UniformModel m;
    m.dim = 2;
    m.sizes = {3, 4};
    m.beta = 1.0;
    m.h_grid = geometric_grid(0.005, 2.0, 8);
    m.resolution_floor = 1.0;
    const auto r = check_mu_pair(m);
    EXPECT_NE(r.status, Status::fail) << r.details.dump();
    for (const auto& row : r.table.rows) EXPECT_GT(row[2], 0.0);
    EXPECT_TRUE(r.details.contains("sharpened_sizes_holding"));
}

TEST(MuPair, OneDimensionalDeficitShrinks) {
    UniformModel m;
    m.dim = 1;
    m.sizes = {6, 10, 14};
    m.beta = 2.0;
    m.h_grid = {0.01};
    const auto r = check_mu_pair(m);
    EXPECT_EQ(r.status, Status::trend_consistent) << r.details.dump();
    // both sides decay in 1D
    EXPECT_LT(r.table.rows.back()[3], r.table.rows.front()[3]);
}

TEST(TrendVerdict, PersistentDeficitFails) {
    CheckResult c;
    verify::detail::trend_verdict(c, {{4, 0.1, 0.0, 0.3, 0.0}, {6, 0.1, 0.0, 0.35, 0.0}}, 3.0);
    EXPECT_EQ(c.status, Status::fail);
    verify::detail::trend_verdict(c, {{4, 0.1, 0.0, 0.3, 0.0}, {6, 0.2, 0.0, 0.25, 0.0}}, 3.0);
    EXPECT_EQ(c.status, Status::fail);
    verify::detail::trend_verdict(c, {{4, 0.1, 0.0, 0.3, 0.0}, {6, 0.2, 0.0, 0.25, 0.0}}, 3.0, true);
    EXPECT_EQ(c.status, Status::trend_consistent);
    verify::detail::trend_verdict(c, {{4, 0.1, 0.0, 0.3, 0.0}, {6, 0.3, 0.0, 0.25, 0.0}}, 3.0);
    EXPECT_EQ(c.status, Status::trend_consistent);
}

TEST(Rem, Checks) {
    EXPECT_NE(check_rem_closed_forms().status, Status::fail);
    EXPECT_NE(check_rem_branches().status, Status::fail);
    EXPECT_EQ(check_rem_finite_bounds(8, 1.5, {0.05, 0.3}, 20).status, Status::exact_pass);
}

TEST(McOracle, SmallLattice) {
    auto s = glass(1, {4}, 1.0, 4);
    McConfig mc;
    mc.beta_ladder = {0.5, 1.0};
    mc.n_sweeps = 20000;
    mc.n_therm = 1000;
    mc.seed = 5;
    const auto r = check_mc_oracle(s, mc, {0.5, 1.0}, {0.0, 0.2});
    EXPECT_NE(r.status, Status::fail) << r.to_json().dump(2);
    EXPECT_EQ(r.table.rows.size(), 8u);
}

TEST(CheckResult, JsonShape) {
    const auto r = check_qjump_bound_rem(0.5, 3.0, 10);
    const auto j = r.to_json();
    for (const char* k : {"check_id", "status", "relation", "lhs", "rhs", "slack", "tolerance", "settings", "provenance"})
        EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_EQ(j["parts"].size(), 2u);
}
