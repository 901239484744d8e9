#include <gtest/gtest.h>

#include <cmath>

#include "sgorder/order_params.hpp"

using namespace sgorder;

namespace {

EstimatorSettings ferro(int dim, std::vector<int> sizes, double beta) {
    EstimatorSettings s;
    s.dim = dim;
    s.sizes = std::move(sizes);
    s.beta = beta;
    s.j_dist = Distribution::constant(1.0);
    s.h_dist = Distribution::constant(0.0);
    s.n_disorder = 2;
    return s;
}

EstimatorSettings spin_glass(int dim, std::vector<int> sizes, double beta, std::size_t n) {
    EstimatorSettings s;
    s.dim = dim;
    s.sizes = std::move(sizes);
    s.beta = beta;
    s.n_disorder = n;
    s.seed = 99;
    return s;
}

}  // namespace

TEST(Grid, GeometricAndResolution) {
    const auto g = geometric_grid(0.01, 2.0, 4);
    EXPECT_DOUBLE_EQ(g[3], 0.08);
    EXPECT_THROW(geometric_grid(0.0, 2.0, 3), std::invalid_argument);
    EXPECT_THROW(validate_grid(std::vector<double>{0.0, 0.1}), std::invalid_argument);
    EXPECT_EQ(resolved_index(g, 1.0, 10, 0.0), 0u);
    EXPECT_EQ(resolved_index(g, 1.0, 10, 0.35), 2u);
}

TEST(QBr, ZeroFieldOpenEqualsRootMeanSquare) {
    auto s = spin_glass(2, {3}, 1.2, 30);
    const auto e = q_br_estimate(s);
    const auto lat = build_lattice(2, 3);
    const auto bnd = BoundaryConfig::open(lat);
    const auto m = quenched_average(lat, s.j_dist, s.h_dist, s.n_disorder, s.seed,
                                    [&](const DisorderRealization& d) { return zero_coupling_moments(1.2, lat, d, bnd).second; });
    EXPECT_NEAR(e.at(3).value, std::sqrt(m.mean), 1e-12);
    EXPECT_GT(e.at(3).stderr_, 0.0);
    EXPECT_EQ(e.at(3).n, 30u);
}

TEST(QBr, InfiniteTemperature) {
    auto s = spin_glass(2, {2, 3}, 1e-7, 5);
    const auto e = q_br_estimate(s);
    EXPECT_NEAR(e.at(2).value, 0.5, 1e-5);
    EXPECT_NEAR(e.at(3).value, 1.0 / 3.0, 1e-5);
}

TEST(QBr, FerromagnetMatchesHistogram) {
    const auto e = q_br_estimate(ferro(1, {6}, 3.0));
    const auto lat = build_lattice(1, 6);
    const auto h = overlap_histogram(3.0, lat, uniform_disorder(lat, 1, 0), BoundaryConfig::open(lat));
    EXPECT_NEAR(e.at(6).value, std::sqrt(h.moment(2) - h.moment(1) * h.moment(1)), 1e-12);
    EXPECT_THROW(q_br_estimate(spin_glass(1, {4}, 1.0, 1)), std::invalid_argument);
}

TEST(BoundaryMax, FerromagnetAttainsSaturation) {
    const auto lat = build_lattice(1, 4);
    const auto r = maximize_boundary(10.0, lat, uniform_disorder(lat, 1, 0));
    EXPECT_NEAR(r.value, 1.0, 1e-6);
    // ties between b = -1 and b = +1 resolve to the lexicographically smallest
    EXPECT_EQ(r.best_b.b, std::vector<double>(2, -1.0));
    EXPECT_TRUE(r.exhaustive_corners);
    EXPECT_TRUE(r.certified);
}

TEST(BoundaryMax, InfiniteTemperatureIsSmall) {
    const auto lat = build_lattice(2, 3);
    const auto r = maximize_boundary(1e-6, lat, sample_disorder(lat, Distribution::pm_j(0.5), Distribution::constant(0), 1));
    EXPECT_LT(r.value, 1e-10);
}

TEST(BoundaryMax, CornersDominateAscent) {
    const auto lat = build_lattice(1, 3);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto dis = sample_disorder(lat, Distribution::pm_j(0.5), Distribution::constant(0), seed);
        BoundaryMaxOptions corner, ascent;
        corner.strategy = BoundaryStrategy::corner_enum;
        ascent.strategy = BoundaryStrategy::coord_ascent;
        const auto c = maximize_boundary(1.5, lat, dis, corner);
        const auto a = maximize_boundary(1.5, lat, dis, ascent);
        const auto h = maximize_boundary(1.5, lat, dis);
        EXPECT_GE(c.value, a.value - 1e-10);
        EXPECT_GE(h.value, a.value);
        EXPECT_GE(h.value, c.value);
        EXPECT_TRUE(h.certified);
        EXPECT_FALSE(a.certified);
        EXPECT_FALSE(c.certified);
    }
}

TEST(BoundaryMax, GradientMatchesFiniteDifference) {
    const auto lat = build_lattice(2, 3);
    const auto dis = sample_disorder(lat, Distribution::gaussian(0, 1), Distribution::gaussian(0, 0.3), 4);
    BoundaryResponse resp(1.1, lat, dis);
    std::vector<double> b(lat.num_boundary_sites());
    CounterRng r(3);
    for (auto& v : b) v = r.uniform(-0.9, 0.9);
    std::vector<double> g;
    detail::value_and_gradient(resp, lat, dis, 1.1, b, g);
    const double h = 1e-6;
    for (std::size_t u = 0; u < b.size(); ++u) {
        auto bp = b, bm = b;
        bp[u] += h;
        bm[u] -= h;
        const double fd = (detail::mean_square(resp.magnetization(bp)) - detail::mean_square(resp.magnetization(bm))) / (2 * h);
        EXPECT_NEAR(g[u], fd, 1e-8);
    }
}

TEST(BoundaryMax, EnumerationBackendAgreesWithTransfer) {
    const auto lat3 = build_lattice(3, 2);  // d = 3 uses enumeration
    const auto dis = sample_disorder(lat3, Distribution::gaussian(0, 1), Distribution::constant(0), 2);
    BoundaryResponse resp(0.8, lat3, dis);
    const auto b = std::vector<double>(lat3.num_boundary_sites(), 0.5);
    const auto c = resp.evaluate(b, true);
    const auto ref = enumerate_correlations(0.8, compile_couplings(lat3, dis, BoundaryConfig{b}));
    for (std::size_t x = 0; x < 8; ++x) EXPECT_NEAR(c.magnetization[x], ref.magnetization[x], 1e-13);
    const auto r = maximize_boundary(0.8, lat3, dis);
    EXPECT_FALSE(r.certified);  // 24 boundary sites: heuristic mode
    EXPECT_GE(r.value, 0.0);
    EXPECT_LE(r.value, 1.0);
}

TEST(QEa, FerromagnetAndHighTemperature) {
    auto s = ferro(1, {4}, 10.0);
    EXPECT_NEAR(q_ea_estimate(s).at(4).value, 1.0, 1e-6);
    auto hot = spin_glass(1, {3, 4, 5}, 1e-6, 4);
    const auto e = q_ea_estimate(hot);
    for (const auto& r : e.per_L) EXPECT_LT(r.value, 1e-9);
    auto sg = spin_glass(1, {3, 4, 5}, 2.0, 10);
    const auto q = q_ea_estimate(sg);
    ASSERT_EQ(q.per_L.size(), 3u);
    for (const auto& r : q.per_L) {
        EXPECT_TRUE(r.certified);
        EXPECT_GT(r.value, 0.0);
        EXPECT_LE(r.value, 1.0);
    }
}

TEST(QJump, HighTemperatureAndFerromagnet) {
    auto hot = spin_glass(1, {4}, 1e-6, 3);
    hot.lambda_grid = geometric_grid(0.05, 2.0, 3);
    EXPECT_NEAR(q_jump_estimate(hot).at(4).value, 0.0, 1e-6);  // O(βλ)
    auto s = ferro(1, {6}, 3.0);
    s.lambda_grid = {0.05};
    const auto e = q_jump_estimate(s);
    EXPECT_GT(e.at(6).value, 0.1);
    EXPECT_THROW(
        [&] {
            auto bad = s;
            bad.lambda_grid = {0.0};
            q_jump_estimate(bad);
        }(),
        std::invalid_argument);
}

TEST(QJump, MeanOverlapIsNondecreasingInCoupling) {
    const auto lat = build_lattice(2, 3);
    const auto dis = sample_disorder(lat, Distribution::gaussian(0, 1), Distribution::gaussian(0, 0.5), 6);
    const ShellTable st(1.5, energy_table(lat, dis, BoundaryConfig::open(lat)));
    double prev = -INFINITY;
    for (double l = -1.0; l <= 1.0; l += 0.05) {
        const double r = two_replica_stats(st, l).mean_r;
        EXPECT_GE(r, prev - 1e-9);
        prev = r;
    }
}

TEST(QLrsb, HighTemperatureFerromagnetAndDirectForm) {
    auto hot = spin_glass(1, {4}, 1e-6, 3);
    hot.lambda_grid = {0.05};
    EXPECT_NEAR(q_lrsb_estimate(hot).at(4).value, 0.0, 1e-6);  // O(βλ)
    auto s = ferro(1, {6}, 3.0);
    s.lambda_grid = {0.05};
    EXPECT_GT(q_lrsb_estimate(s).at(6).value, 0.0);

    // the quotient is the mean of the directional derivative over [0, λ]; at
    // small λ it matches the direct overlap difference at the midpoint
    const auto lat = build_lattice(1, 6);
    const auto dis = sample_disorder(lat, Distribution::pm_j(0.5), Distribution::gaussian(0, 0.5), 3);
    const auto bnd = BoundaryConfig::open(lat);
    const double l = 1e-3;
    const auto q = lrsb_quotients(2.0, lat, dis, bnd, std::vector<double>{l});
    const auto mid = lrsb_quotients(2.0, lat, dis, bnd, std::vector<double>{l / 2});
    EXPECT_NEAR(q[0].first, mid[0].second, 1e-6);
}

TEST(MuPair, HighTemperature) {
    UniformModel m;
    m.dim = 2;
    m.sizes = {3};
    m.beta = 1e-7;
    m.h_grid = {0.01};
    const auto p = mu_pair_estimate(m);
    EXPECT_NEAR(p.fluc.at(3).value, 1.0 / 3.0, 1e-6);
    EXPECT_NEAR(p.jump.at(3).value, 0.0, 1e-6);
}

TEST(MuPair, TwoDimensionalOrderedPhase) {
    UniformModel m;
    m.dim = 2;
    m.sizes = {3, 4};
    m.beta = 1.0;
    m.h_grid = {0.01};
    const auto p = mu_pair_estimate(m);
    for (int L : {3, 4}) {
        EXPECT_GT(p.fluc.at(L).value, 0.5);
        EXPECT_GT(p.jump.at(L).value, 0.0);
    }
}

TEST(Estimate, CsvAndJson) {
    auto s = ferro(1, {4, 5}, 1.0);
    s.extrapolate = true;
    const auto e = q_br_estimate(s);
    std::ostringstream os;
    OrderParamEstimate::write_csv_header(os);
    e.write_csv(os);
    EXPECT_NE(os.str().find("q_br,4,"), std::string::npos);
    ASSERT_TRUE(e.extrapolated.has_value());
    EXPECT_EQ(e.to_json()["extrapolated"]["method"], "heuristic-linear-in-1/L");
}
