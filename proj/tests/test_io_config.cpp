#include <sstream>

#include <gtest/gtest.h>

#include "ssepwalk/config.hpp"
#include "ssepwalk/report_io.hpp"

using namespace ssepwalk;

TEST(Config, DefaultRoundTrip) {
    const RunConfig c;
    EXPECT_EQ(parse_config(render_config(c)), c);
}

TEST(Config, FullRoundTrip) {
    RunConfig c;
    c.command = "rate-probe";
    c.rho = 0.1 + 0.2;  // not representable in short decimal
    c.lambda = 1.0 / 3.0;
    c.T = 2000.0;
    c.L = 4096;
    c.replicas = 400;
    c.seed = 0xC0FFEE;
    c.environments = 20;
    c.walks_per_env = 100;
    c.replica = 7;
    c.threads = 3;
    c.t_grid = {250.0, 1000.0, 4000.0};
    c.epsilon = 0.05;
    c.H = 64;
    c.separations = {0, 13, 40};
    c.n_max = 3;
    c.ell_max = 2;
    c.window = 7;
    c.exact = true;
    c.strict = true;
    c.no_log = true;
    c.out = "out dir/occ.csv";
    c.log_out = "env.log";
    c.log_in = "in.log";
    const auto text = render_config(c);
    EXPECT_EQ(parse_config(text), c);
    EXPECT_NE(text.find("seed = 0xc0ffee"), std::string::npos);
}

TEST(Config, CommentsBlankLinesAndDecimalSeed) {
    const auto c = parse_config("# header\n\nrho = 0.5   # trailing\n  seed = 42\nt-grid = 1, 2 ,3\n");
    EXPECT_EQ(c.rho, 0.5);
    EXPECT_EQ(c.seed, 42u);
    EXPECT_EQ(c.t_grid, (std::vector<double>{1, 2, 3}));
    EXPECT_FALSE(c.lambda.has_value());
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(parse_config("rho 0.5\n"), Error);
    EXPECT_THROW(parse_config("rh0 = 0.5\n"), Error);
    EXPECT_THROW(parse_config("rho = half\n"), Error);
    EXPECT_THROW(parse_config("exact = yes\n"), Error);
    EXPECT_THROW(parse_config("t-grid = 1,,2\n"), Error);
    EXPECT_THROW(parse_config("replicas = -3\n"), Error);
    try {
        parse_config("rho = 0.5\nbogus = 1\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(Config, ParseList) {
    EXPECT_EQ(parse_list<std::int64_t>("3,5,8"), (std::vector<std::int64_t>{3, 5, 8}));
    EXPECT_TRUE(parse_list<double>("").empty());
    EXPECT_THROW(parse_list<double>("1,x"), Error);
}

namespace {

std::vector<RunRecord> sample_runs() {
    ExperimentPlan plan;
    plan.params = {0.3, 0.7};
    plan.lattice = LatticeSpec{64};
    plan.T = 17.3;
    plan.replicas = 12;
    plan.master_seed = 99;
    return run_annealed(plan).runs;
}

}  // namespace

TEST(RunCsv, RoundTripIsExact) {
    const auto runs = sample_runs();
    std::ostringstream os;
    write_run_csv(os, param_echo({0.3, 0.7}, LatticeSpec{64}, 17.3, 99), runs);
    std::istringstream is(os.str());
    EXPECT_EQ(read_run_csv(is), runs);
    // Rewriting the parsed rows gives the same bytes.
    std::istringstream is2(os.str());
    std::ostringstream again;
    write_run_csv(again, param_echo({0.3, 0.7}, LatticeSpec{64}, 17.3, 99), read_run_csv(is2));
    EXPECT_EQ(again.str(), os.str());
}

TEST(RunCsv, PreambleCarriesSchemaAndEcho) {
    std::ostringstream os;
    write_run_csv(os, param_echo({0.5, 1.0}, LatticeSpec{4096}, 2000.0, 0xC0FFEE), {});
    EXPECT_EQ(os.str(), "# ssepwalk-csv v1 rho=0.5 lambda=1 T=2000 L=4096 seed=0xc0ffee\n" + std::string(kRunColumns) +
                            "\n");
}

TEST(RunCsv, RowFormat) {
    RunRecord r;
    r.replica_id = 3;
    r.env_id = 1;
    r.T = 10.0;
    r.x_final = -4;
    r.jump_count = 12;
    r.max_abs_x = 5;
    r.occ_integral = 0.1;
    r.qv_integral = 18.0;
    r.y_integral = -0.25;
    r.winding = false;
    EXPECT_EQ(format_run_row(r), "3,1,10,-4,12,5,0.10000000000000001,18,-0.25,0");
}

TEST(RunCsv, RejectsBadRows) {
    std::istringstream short_row(std::string(kRunColumns) + "\n1,2,3\n");
    EXPECT_THROW(read_run_csv(short_row), Error);
    std::istringstream bad_flag("0,0,1,0,0,0,0,0,0,2\n");
    EXPECT_THROW(read_run_csv(bad_flag), Error);
}

TEST(ReportJson, EntryFields) {
    const auto q = make_estimate("occupation_fraction", 0.66, 0.002, 2.0 / 3.0);
    const auto j = to_json(q);
    EXPECT_EQ(j["quantity"], "occupation_fraction");
    EXPECT_EQ(j["estimate"], 0.66);
    EXPECT_EQ(j["se"], 0.002);
    ASSERT_EQ(j["ci99"].size(), 2u);
    EXPECT_DOUBLE_EQ(j["ci99"][0].get<double>(), 0.66 - stats::kZ99 * 0.002);
    EXPECT_EQ(j["target"], 2.0 / 3.0);
    EXPECT_EQ(j["verdict"], "FAIL");
    EXPECT_TRUE(to_json(make_estimate("s", 1.0, 0.1, std::nullopt))["target"].is_null());
}

TEST(ReportJson, AnnealedReport) {
    ExperimentPlan plan;
    plan.params = {0.5, 1.0};
    plan.lattice = LatticeSpec{128};
    plan.T = 30.0;
    plan.replicas = 25;
    plan.master_seed = 0xC0FFEE;
    const auto j = to_json(run_annealed(plan));
    EXPECT_EQ(j["mode"], "annealed");
    EXPECT_EQ(j["params"]["master_seed"], "0xc0ffee");
    EXPECT_EQ(j["replicas"], 25);
    EXPECT_EQ(j["entries"].size(), 6u);
    EXPECT_NEAR(j["targets"]["occ_limit"].get<double>(), 2.0 / 3.0, 1e-15);
    EXPECT_EQ(j["ks"]["n"], 25);
    // Same plan, same serialized report.
    EXPECT_EQ(to_json(run_annealed(plan)).dump(), j.dump());
}
