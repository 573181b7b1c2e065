#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "mdr/errors.hpp"
#include "mdr/runner.hpp"

namespace mdr {
namespace {

std::string usage_message(const RunConfig& c)
{
    try {
        validate(c);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

TEST(Parsing, ListsRangesAndEisenstein)
{
    EXPECT_EQ(parse_int_list("2,1,0"), (std::vector<int>{2, 1, 0}));
    EXPECT_EQ(parse_int_list(" 3 , 4 "), (std::vector<int>{3, 4}));
    EXPECT_THROW(parse_int_list("1,x"), ConfigError);
    EXPECT_EQ(parse_range("2"), (std::pair<int, int>{2, 2}));
    EXPECT_EQ(parse_range("0-3"), (std::pair<int, int>{0, 3}));
    auto e = parse_eisenstein("e=2;a=1,2");
    EXPECT_EQ(e.e, 2);
    EXPECT_EQ(e.a, (std::vector<Scalar>{1, 2}));
    EXPECT_EQ(parse_eisenstein("e=3").a, (std::vector<Scalar>{1, 1, 1}));
    EXPECT_THROW(parse_eisenstein("a=1"), ConfigError);
    EXPECT_EQ(multiplicity_grid({0, 1}, 2), (std::vector<std::vector<int>>{{0, 0}, {0, 1}, {1, 0}, {1, 1}}));
}

TEST(Config, UsageErrorsNameTheField)
{
    RunConfig c;
    c.p = 4;
    EXPECT_EQ(usage_message(c), "p must be an odd prime");
    c.p = 2;
    EXPECT_EQ(usage_message(c), "p must be an odd prime");
    c = RunConfig{};
    c.window = 2;
    EXPECT_NE(usage_message(c).find("window"), std::string::npos);
    c = RunConfig{};
    c.r_hi = 2;
    EXPECT_NE(usage_message(c).find("p-2"), std::string::npos);
    c = RunConfig{};
    c.suites = {"nonsense"};
    EXPECT_NE(usage_message(c).find("suite"), std::string::npos);
    c = RunConfig{};
    c.mults = {{1, 2}};
    EXPECT_NE(usage_message(c).find("mult"), std::string::npos);
    c = RunConfig{};
    c.eisenstein = {EisensteinData{2, {1}}};
    EXPECT_NE(usage_message(c).find("eisenstein"), std::string::npos);
    EXPECT_EQ(usage_message(RunConfig{}), "");
}

TEST(Config, JsonRoundTripAndGrid)
{
    Json j = Json::parse(R"({"p": 5, "dim": 2, "window": 25, "mult_grid": [0, 1], "eisenstein": ["e=2;a=1,3"],
                             "q": "0-1", "r": [1, 2], "suites": ["cartier"], "jobs": 2})");
    RunConfig c = config_from_json(j);
    EXPECT_EQ(c.p, 5);
    EXPECT_EQ(c.mults.size(), 4u);
    EXPECT_EQ(c.eisenstein[0].a, (std::vector<Scalar>{1, 3}));
    EXPECT_EQ(*c.q_hi, 1);
    EXPECT_EQ(*c.r_lo, 1);
    RunConfig back = config_from_json(config_to_json(c));
    EXPECT_EQ(config_to_json(back), config_to_json(c));
    EXPECT_THROW(config_from_json(Json::parse(R"({"colour": 1})")), ConfigError);
}

TEST(Run, CartierOnALine)
{
    RunConfig c;
    c.p = 3;
    c.d = 1;
    c.window = 9;
    c.mults = {{1}};
    c.suites = {"cartier"};
    auto rep = run(c);
    ASSERT_GT(rep.checks.size(), 0u);
    for (auto& o : rep.checks)
        EXPECT_EQ(o.status, Status::pass) << o.note;
    EXPECT_EQ(exit_code(rep, false), 0);
}

TEST(Run, EmptySuites)
{
    RunConfig c;
    auto rep = run(c);
    EXPECT_TRUE(rep.checks.empty());
    EXPECT_EQ(rep.summary.total(), 0);
    EXPECT_EQ(exit_code(rep, true), 0);
}

TEST(Run, InvalidConfigThrows)
{
    RunConfig c;
    c.p = 4;
    c.suites = {"cartier"};
    EXPECT_THROW(run(c), ConfigError);
}

RunConfig mixed_config(int jobs)
{
    RunConfig c;
    c.p = 3;
    c.d = 2;
    c.window = 9;
    c.mults = {{1, 0}, {3, 2}};
    c.eisenstein = {EisensteinData{1, {1}}, EisensteinData{2, {1, 1}}};
    c.suites = {"cartier", "connecting", "ml_transition", "gr_structure", "symbols", "product", "base_change"};
    c.random_symbols = 10;
    c.jobs = jobs;
    return c;
}

TEST(Run, SummaryMatchesTallies)
{
    auto rep = run(mixed_config(1));
    SuiteSummary s;
    for (auto& o : rep.checks)
        s.count(o.status);
    EXPECT_EQ(s, rep.summary);
    EXPECT_EQ(rep.summary.fail, 0);
    EXPECT_GT(rep.summary.hypothesis_not_met, 0);
}

TEST(Run, DeterministicAcrossThreadCounts)
{
    auto a = report_fingerprint(run(mixed_config(1)));
    auto b = report_fingerprint(run(mixed_config(4)));
    // The config echo carries no thread count.
    EXPECT_EQ(a.dump(), b.dump());
}

TEST(Report, EmitThenParse)
{
    auto rep = run(mixed_config(1));
    auto path = (std::filesystem::temp_directory_path() / "mdr_runner_roundtrip.json").string();
    std::ostringstream table;
    emit_report(rep, path, table);
    EXPECT_NE(table.str().find("all"), std::string::npos);
    std::ifstream f(path);
    auto back = report_from_json(Json::parse(f));
    EXPECT_EQ(report_fingerprint(back).dump(), report_fingerprint(rep).dump());
    EXPECT_EQ(back.checks, rep.checks);
    std::remove(path.c_str());
    EXPECT_THROW(emit_report(rep, "/nonexistent-dir/x.json", table), std::runtime_error);
}

TEST(Report, FailedWitnessSurvivesSerialization)
{
    // A nonzero class recorded as a violation: the witness must re-evaluate
    // after a round trip through the report.
    auto chart = make_chart(3, 1, 1, 9);
    GradedComplex C(chart, Divisor({0}), FormMode::full);
    auto w = LogForm::term(chart.ring, C.form_window(), FormMode::full, MultiIndex{0, 0}, Mask{2}, 1);
    CheckOutcome o;
    o.name = "cartier";
    o.params = Json{{"chart", chart_to_json(chart)}};
    o.fail("class expected to vanish", witness_nonzero_class(C, w));
    ASSERT_TRUE(witness_violates(o.witness));
    SuiteReport rep;
    rep.checks.push_back(o);
    rep.summary.count(o.status);
    auto back = report_from_json(Json::parse(report_to_json(rep).dump()));
    ASSERT_EQ(back.checks.size(), 1u);
    EXPECT_EQ(back.checks[0].witness, o.witness);
    EXPECT_TRUE(witness_violates(back.checks[0].witness));
    EXPECT_EQ(exit_code(back, false), 1);
}

TEST(Report, StrictCountsInconclusive)
{
    SuiteReport rep;
    CheckOutcome o;
    o.name = "symbols";
    o.inconclusive("not decided");
    rep.checks.push_back(o);
    rep.summary.count(o.status);
    EXPECT_EQ(exit_code(rep, false), 0);
    EXPECT_EQ(exit_code(rep, true), 1);
}

}  // namespace
}  // namespace mdr
