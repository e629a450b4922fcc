#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "adaptrial/error.hpp"
#include "adaptrial/harness.hpp"

using namespace adaptrial;
using namespace adaptrial::harness;

namespace {

TrialResult fixed_result(int stop, bool stopped, int nA)
{
    TrialResult r;
    r.stop_time = stop;
    r.stopped = stopped;
    r.nA = nA;
    r.nB = stop - nA;
    r.weight_trajectory.assign(static_cast<std::size_t>(stop), 0.25);
    return r;
}

std::vector<Scenario> small_grid()
{
    std::vector<Scenario> grid;
    for (double d : {0.0, 1.0, 3.0}) {
        Scenario s;
        s.label = "d" + std::to_string(static_cast<int>(d));
        s.config.mu_B = d;
        s.config.budget = 40;
        s.config.c_A = 1;
        s.config.c_B = 1;
        s.replications = 37;
        grid.push_back(s);
    }
    grid[1].config.rule = Rule::SqrtRatio;
    grid[1].config.mu_A = 5;
    grid[1].config.mu_B = 6;
    return grid;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("quantile examples")
{
    std::vector<double> v(1000);
    std::iota(v.begin(), v.end(), 1.0);
    CHECK(quantile(v, 0.975) == doctest::Approx(975.025).epsilon(1e-13));
    CHECK(quantile(std::vector<double>{3, 1, 2}, 0.5) == 2.0);
    const std::vector<double> w{4, -1, 9, 2.5};
    CHECK(quantile(w, 0.0) == -1.0);
    CHECK(quantile(w, 1.0) == 9.0);
    CHECK(quantile(std::vector<double>{7}, 0.3) == 7.0);
    CHECK_THROWS_AS(quantile(std::vector<double>{}, 0.5), ArgumentError);
    CHECK_THROWS_AS(quantile(w, 1.5), ArgumentError);
}

TEST_CASE("quantile is bounded and monotone")
{
    std::mt19937_64 gen(4);
    std::uniform_int_distribution<int> len(1, 60);
    std::normal_distribution<double> z(0, 10);
    for (int rep = 0; rep < 300; ++rep) {
        std::vector<double> v(static_cast<std::size_t>(len(gen)));
        for (double& x : v) x = std::round(z(gen));
        const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
        double prev = -1e300;
        for (int i = 0; i <= 200; ++i) {
            const double q = quantile(v, i / 200.0);
            REQUIRE(q >= *mn);
            REQUIRE(q <= *mx);
            REQUIRE(q >= prev);
            prev = q;
        }
    }
}

TEST_CASE("aggregate toy cases")
{
    std::vector<TrialResult> all50(10, fixed_result(50, true, 20));
    const auto a = aggregate(all50, 100);
    CHECK(a.stop_q025 == 50);
    CHECK(a.stop_median == 50);
    CHECK(a.stop_q975 == 50);
    CHECK(a.p_exhaust == 0.0);
    CHECK(a.mean_nA == 20);
    CHECK(a.mean_propA == doctest::Approx(0.4));
    CHECK(a.mean_propA + a.mean_propB == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.mean_wA_by_t.size() == 50);
    CHECK(a.mean_wA_by_t[0].mean == 0.25);
    CHECK(a.mean_wA_by_t[0].se == 0.0);

    std::vector<TrialResult> none(8, fixed_result(100, false, 60));
    const auto b = aggregate(none, 100);
    CHECK(b.p_exhaust == 1.0);
    CHECK((b.stop_q025 == 100 && b.stop_median == 100 && b.stop_q975 == 100));
    CHECK_FALSE(b.mean_switch);
    CHECK(b.switch_absent == 8);
}

TEST_CASE("switch mean covers only present switches")
{
    std::vector<TrialResult> rs(4, fixed_result(10, false, 5));
    rs[0].switch_point = 3;
    rs[2].switch_point = 7;
    const auto a = aggregate(rs, 10);
    REQUIRE(a.mean_switch);
    CHECK(*a.mean_switch == 5.0);
    CHECK(a.switch_present == 2);
    CHECK(a.switch_absent == 2);
}

TEST_CASE("merge equals pooled aggregation")
{
    std::vector<TrialResult> rs;
    TrialConfig cfg;
    cfg.budget = 50;
    cfg.mu_B = 2;
    for (int r = 0; r < 60; ++r) {
        cfg.seed = replication_seed(9, 0, r);
        rs.push_back(run_trial(cfg));
    }
    Accumulator left(50), right(50);
    for (int r = 0; r < 60; ++r) (r < 23 ? left : right).add(rs[r]);
    left.merge(right);
    const auto m = left.finish();
    const auto p = aggregate(rs, 50);
    CHECK(m.replications == 60);
    CHECK(m.mean_nA == doctest::Approx(p.mean_nA).epsilon(1e-12));
    CHECK(m.mean_propA == doctest::Approx(p.mean_propA).epsilon(1e-12));
    CHECK(m.stop_q025 == p.stop_q025);
    CHECK(m.stop_median == p.stop_median);
    CHECK(m.stop_q975 == p.stop_q975);
    CHECK(m.p_exhaust == p.p_exhaust);
    CHECK(m.mean_switch.has_value() == p.mean_switch.has_value());
    REQUIRE(m.mean_wA_by_t.size() == p.mean_wA_by_t.size());
    for (std::size_t i = 0; i < m.mean_wA_by_t.size(); ++i) {
        CHECK(m.mean_wA_by_t[i].n == p.mean_wA_by_t[i].n);
        CHECK(m.mean_wA_by_t[i].mean == doctest::Approx(p.mean_wA_by_t[i].mean).epsilon(1e-12));
    }
}

TEST_CASE("single replication with budget one")
{
    Scenario s;
    s.label = "tiny";
    s.config.budget = 1;
    s.replications = 1;
    const auto out = run_grid({s}, 5, 1);
    REQUIRE(out.size() == 1);
    CHECK_FALSE(out[0].error);
    const auto& a = out[0].result;
    CHECK(a.replications == 1);
    CHECK(a.mean_nA + a.mean_nB == 1.0);
    CHECK(a.stop_median == 1.0);
    CHECK(a.p_exhaust == 1.0);
    CHECK(a.mean_wA_by_t.size() == 1);
    CHECK(a.mean_wA_by_t[0].mean == 0.5);
}

TEST_CASE("output does not depend on parallelism")
{
    const auto grid = small_grid();
    const std::string ref = to_json_text(run_grid(grid, 123, 1), 123);
    for (int p : {4, 8}) {
        CHECK(to_json_text(run_grid(grid, 123, p), 123) == ref);
    }
    CHECK(to_json_text(run_grid(grid, 124, 4), 124) != ref);
}

TEST_CASE("replication seeds are distinct")
{
    std::set<std::uint64_t> seen;
    for (std::size_t s = 0; s < 20; ++s)
        for (std::size_t r = 0; r < 500; ++r) seen.insert(replication_seed(1, s, r));
    CHECK(seen.size() == 10000);
}

TEST_CASE("report files")
{
    const auto dir = std::filesystem::temp_directory_path() / "adaptrial_report_test";
    std::filesystem::remove_all(dir);

    const auto empty = emit_report({}, 1, dir, Csv | Json);
    CHECK(slurp(dir / "report.csv") == csv_header() + "\n");
    const auto ej = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(ej["schema_version"] == 1);
    CHECK(ej["scenarios"].empty());

    const auto outcomes = run_grid(small_grid(), 77, 2);
    emit_report(outcomes, 77, dir, Csv | Json);
    const std::string csv = slurp(dir / "report.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(csv.rfind(csv_header(), 0) == 0);
    CHECK(csv.find("wall") == std::string::npos);
    const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(j["schema_version"] == 1);
    CHECK(j["master_seed"] == 77);
    REQUIRE(j["scenarios"].size() == 3);
    for (const auto& s : j["scenarios"]) {
        CHECK(s["aggregate"]["mean_wA_by_t"].size() == 40);
        CHECK(s["replications"] == 37);
    }
    CHECK(j["scenarios"][1]["config"]["rule"] == "sqrt_ratio");
    const auto timing = nlohmann::json::parse(slurp(dir / "timing.json"));
    CHECK(timing.dump().find("wall_time_seconds") != std::string::npos);

    emit_report(outcomes, 77, dir, Csv);
    CHECK(slurp(dir / "report.csv") == csv);
    std::filesystem::remove_all(dir);
}

TEST_CASE("failures name scenario, replication and patient")
{
    auto grid = small_grid();
    grid[2].config.mu_A = grid[2].config.mu_B = 1e308;
    grid[2].config.sd = 1e308;
    const auto out = run_grid(grid, 1, 2);
    CHECK_FALSE(out[0].error);
    CHECK_FALSE(out[1].error);
    REQUIRE(out[2].error);
    const std::string& msg = *out[2].error;
    CHECK(msg.find("scenario 'd3'") != std::string::npos);
    CHECK(msg.find("replication ") != std::string::npos);
    CHECK(msg.find("patient ") != std::string::npos);
    CHECK(csv_row(out[2]).find("scenario 'd3'") != std::string::npos);
    // the reported replication is the same for any worker count
    CHECK(*run_grid(grid, 1, 1)[2].error == msg);
}

TEST_CASE("grid rejects invalid scenarios up front")
{
    auto grid = small_grid();
    grid[0].replications = 0;
    CHECK_THROWS_AS(run_grid(grid, 1, 1), ConfigError);
    grid = small_grid();
    grid[1].config.omega = -1;
    CHECK_THROWS_AS(run_grid(grid, 1, 1), ConfigError);
}

TEST_CASE("number formatting round trips")
{
    for (double v : {0.1, 1.0 / 3.0, 63.542, 1e-300, 123456789.0}) {
        CHECK(std::stod(format_number(v)) == v);
    }
    CHECK(format_number(47) == "47");
}

}
