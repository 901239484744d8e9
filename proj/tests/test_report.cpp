#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "sgorder/report.hpp"

using namespace sgorder;
using namespace sgorder::report;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("sgorder_report_" + name);
    std::filesystem::remove_all(p);
    return p;
}

std::string first_line(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::string s;
    std::getline(in, s);
    return s;
}

}  // namespace

TEST(Config, SyntaxErrorCarriesLineAndColumn) {
    const std::string text = "{\n  \"model\": {\n    \"beta\": 1.0,,\n  }\n}";
    try {
        parse_config_text(text, "bad.json");
        FAIL() << "expected a parse error";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.where(), "bad.json:3:17") << e.what();
    }
}

TEST(Config, FieldErrorsCarryPaths) {
    auto expect_where = [](const json& j, const std::string& where) {
        try {
            parse_config(j);
            FAIL() << "expected " << where;
        } catch (const ConfigError& e) {
            EXPECT_EQ(e.where(), where) << e.what();
        }
    };
    expect_where(json{{"model", {{"beta", "hot"}}}}, "$.model.beta");
    expect_where(json{{"model", {{"betta", 1.0}}}}, "$.model.betta");
    expect_where(json{{"model", {{"j_dist", {{"kind", "cauchy"}}}}}}, "$.model.j_dist");
    expect_where(json{{"schema_version", 7}}, "$.schema_version");
    expect_where(json{{"battery", json::array({json{{"sizes", {3}}}})}}, "$.battery[0].check");
    expect_where(json{{"battery", "nightly"}}, "$.battery");

    const auto bad_param = parse_config(json{{"battery", json::array({json{{"check", "replica-concavity"}, {"sizes", {3}}, {"inverse", true}}})}});
    try {
        run_report(bad_param);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.where(), "$.battery[0].inverse");
    }
    const auto infeasible =
        parse_config(json{{"battery", json::array({json{{"check", "block-decomposition"}, {"L", 4}, {"ell", 2}, {"d", 2}}})}});
    EXPECT_THROW(run_report(infeasible), ConfigError);
}

TEST(Report, EmptyBatteryIsEmptyAndExitsZero) {
    const auto r = run_report(parse_config(json::object()));
    EXPECT_TRUE(r.checks.empty());
    EXPECT_EQ(r.exit_code(), 0);
    EXPECT_EQ(r.to_json()["schema_version"], kReportSchemaVersion);
    EXPECT_EQ(r.to_json()["checks"].size(), 0u);
}

TEST(Report, DeskBatteryIdentitiesExactPass) {
    const auto r = run_report(parse_config(json{{"battery", "desk"}}));
    EXPECT_EQ(r.exit_code(), 0) << r.to_json().dump(1);
    std::size_t identities = 0;
    for (const auto& c : r.checks) {
        EXPECT_FALSE(c.failed()) << c.check_id;
        if (c.check_id == "identities") {
            ++identities;
            EXPECT_EQ(c.status, verify::Status::exact_pass);
        }
    }
    EXPECT_EQ(identities, 2u);
}

TEST(Report, InvertedInequalityExitsNonzero) {
    const json cfg{{"model", {{"d", 2}, {"beta", 1.4}, {"n_disorder", 3}}},
                   {"sizes", {3}},
                   {"battery", json::array({json{{"check", "identities"}}, json{{"check", "replica-concavity"}, {"invert", true}}})}};
    const auto r = run_report(parse_config(cfg));
    ASSERT_EQ(r.checks.size(), 2u);
    EXPECT_EQ(r.checks[0].status, verify::Status::exact_pass);
    EXPECT_TRUE(r.checks[1].failed());
    EXPECT_NE(r.exit_code(), 0);
}

TEST(Report, SeedOverrideAndThreadsDoNotChangeResults) {
    // gaussian couplings: a 1D ±J chain is gauge-equivalent to a ferromagnet
    const json cfg{{"model", {{"d", 1}, {"beta", 1.0}, {"n_disorder", 6}, {"seed", 5},
                              {"j_dist", {{"kind", "gaussian"}, {"mean", 0.0}, {"sd", 1.0}}}}},
                   {"sizes", {6}},
                   {"battery", json::array({json{{"check", "replica-concavity"}}})}};
    const auto c = parse_config(cfg);
    const auto a = run_report(c, 1).to_json();
    const auto b = run_report(c, 4).to_json();
    EXPECT_EQ(a.dump(), b.dump());
    const auto d = run_report(c, 1, 99);
    EXPECT_EQ(d.checks[0].provenance["seed"], 99);
    EXPECT_NE(d.to_json()["checks"][0]["lhs"], a["checks"][0]["lhs"]);
}

TEST(Report, WritesFiles) {
    const auto dir = scratch_dir("files");
    const json cfg{{"battery", json::array({json{{"check", "rem-closed-forms"}}, json{{"check", "qjump-vs-qbr-rem"}, {"id", "rem-t2"}}})}};
    const auto r = run_report(parse_config(cfg), 1, 11);
    write_report(dir, r, 1);
    for (const char* f : {"report.json", "meta.json", "summary.csv", "00_rem-closed-forms.csv", "01_rem-t2.csv"})
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    std::ifstream m(dir / "meta.json");
    const auto meta = json::parse(m);
    EXPECT_EQ(meta["prng"], "Philox4x32-10");
    EXPECT_EQ(meta["seed"], 11);
    EXPECT_EQ(meta["toolkit_version"], kToolkitVersion);
    const auto head = first_line(dir / "01_rem-t2.csv");
    ASSERT_EQ(head.rfind("# ", 0), 0u);
    EXPECT_EQ(json::parse(head.substr(2))["check_id"], "rem-t2");
    std::ifstream rep(dir / "report.json");
    EXPECT_EQ(json::parse(rep)["checks"][1]["check_id"], "rem-t2");
}
