#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "adaptrial/config.hpp"
#include "adaptrial/service.hpp"
#include "parity.hpp"

using namespace adaptrial;
using namespace adaptrial::service;
using nlohmann::json;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name)
    {
        std::filesystem::remove_all(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

int status_of_call(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const ServiceError& e) {
        return e.http_status();
    }
    return 0;
}

std::string read_all(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("create with defaults and with an invalid field")
{
    TempDir dir("adaptrial_svc_create");
    TrialService svc(dir.path);
    const auto r = svc.create_trial(json::object());
    CHECK(r.at("status") == "ENROLLING");
    CHECK(r.at("trial_id").get<std::string>().size() == 16);
    CHECK(r.at("config").contains("seed"));
    CHECK(std::filesystem::exists(svc.log_path(r.at("trial_id"))));

    try {
        svc.create_trial({{"sd", -1}});
        FAIL("expected 422");
    } catch (const ServiceError& e) {
        CHECK(e.http_status() == 422);
        CHECK(e.field() == "sd");
        CHECK(e.to_json().at("field") == "sd");
        CHECK(e.to_json().contains("code"));
    }
    CHECK(status_of_call([&] { svc.create_trial({{"bogus", 1}}); }) == 422);
    CHECK(status_of_call([&] { svc.create_trial({{"rule", "phi"}}); }) == 422);
    CHECK(svc.trial_ids().size() == 1);
}

TEST_CASE("first forecasts match a fresh engine")
{
    TempDir dir("adaptrial_svc_fresh");
    TrialService svc(dir.path);
    const json cfg{{"budget", 100}, {"omega", 0.1}, {"c_B", 1e-6}, {"seed", 3}};
    const std::string id = svc.create_trial(cfg).at("trial_id");
    const auto e = svc.enroll(id, 0.4);
    TrialSession fresh(config::from_json(cfg));
    const auto p = fresh.propose(0.4);
    CHECK(e.at("t") == 1);
    CHECK(e.at("wA") == 0.5);
    CHECK(e.at("rule") == "normal_cdf");
    CHECK(e.at("forecast_A").at("f").get<double>() == p.forecast_A.f);
    CHECK(e.at("forecast_A").at("Q").get<double>() == p.forecast_A.Q);
    CHECK(e.at("forecast_B").at("Q").get<double>() == p.forecast_B.Q);
    CHECK_FALSE(e.contains("u"));
    CHECK(e.at("status") == "AWAITING_OUTCOME");
    CHECK(e.at("arm") == (live_uniform(3, 1) < 0.5 ? "A" : "B"));
}

TEST_CASE("status transitions and conflicts")
{
    TempDir dir("adaptrial_svc_status");
    TrialService svc(dir.path);
    const std::string id = svc.create_trial({{"budget", 3}, {"seed", 9}}).at("trial_id");

    CHECK(status_of_call([&] { svc.record_outcome(id, 1, 0.0); }) == 409);
    CHECK(status_of_call([&] { svc.enroll(id, 1.5); }) == 422);
    CHECK(status_of_call([&] { svc.enroll(id, -0.1); }) == 422);
    CHECK(status_of_call([&] { svc.enroll("nope", 0.5); }) == 404);
    CHECK(status_of_call([&] { svc.get_trial("nope"); }) == 404);

    CHECK(svc.get_trial(id).at("records").empty());
    svc.enroll(id, 0.5);
    CHECK(svc.get_trial(id).at("awaiting_t") == 1);
    CHECK(status_of_call([&] { svc.enroll(id, 0.5); }) == 409);
    CHECK(status_of_call([&] { svc.record_outcome(id, 2, 0.0); }) == 409);
    CHECK(status_of_call([&] { svc.record_outcome(id, 1, std::nan("")); }) == 422);
    const auto o = svc.record_outcome(id, 1, 0.3);
    CHECK(o.at("status") == "ENROLLING");
    CHECK(o.at("bf").is_null());
    CHECK_FALSE(o.at("decisive").get<bool>());
    // duplicate outcome for a consumed t: rejected, state unchanged
    const std::string before = svc.get_trial(id).dump();
    const auto log_before = read_all(svc.log_path(id));
    CHECK(status_of_call([&] { svc.record_outcome(id, 1, 0.3); }) == 409);
    CHECK(svc.get_trial(id).dump() == before);
    CHECK(read_all(svc.log_path(id)) == log_before);

    svc.enroll(id, 0.1);
    svc.record_outcome(id, 2, 1.0);
    svc.enroll(id, 0.9);
    const auto last = svc.record_outcome(id, 3, -1.0);
    CHECK(last.at("status") == "BUDGET_EXHAUSTED");
    CHECK(status_of_call([&] { svc.enroll(id, 0.5); }) == 409);
    const auto view = svc.get_trial(id);
    CHECK(view.at("records").size() == 3);
    CHECK(view.at("weight_trajectory").size() == 3);
    CHECK(view.at("bf_trajectory").size() == 3);
    CHECK(read_all(svc.log_path(id)).find("\"STOPPED\"") != std::string::npos);
}

TEST_CASE("outcome moves the posterior along the chosen arm")
{
    TempDir dir("adaptrial_svc_move");
    TrialService svc(dir.path);
    const std::string id = svc.create_trial({{"seed", 1}, {"c_A", 1}, {"c_B", 1}}).at("trial_id");
    const auto e = svc.enroll(id, 0.5);
    const auto o = svc.record_outcome(id, 1, 4.0);
    const auto m = o.at("posterior_summary").at("m");
    CHECK(m[0].get<double>() > 0.0);
    if (e.at("arm") == "B") {
        CHECK(m[1].get<double>() > 0.0);
    } else {
        CHECK(m[1].get<double>() == 0.0);
    }
}

TEST_CASE("decisive sequence stops the trial")
{
    TempDir dir("adaptrial_svc_decisive");
    TrialService svc(dir.path);
    const std::string id =
        svc.create_trial({{"seed", 4}, {"budget", 200}, {"rule", "sqrt_ratio"}, {"bf.sigma_delta_sq", 1}})
            .at("trial_id");
    json last;
    for (int t = 1; t <= 200; ++t) {
        const auto e = svc.enroll(id, 0.5);
        // negative forecasts keep the sqrt-ratio weight at 1/2, so both arms fill up
        last = svc.record_outcome(id, t, e.at("arm") == "A" ? -2.0 + 0.01 * (t % 5) : -6.0 + 0.01 * (t % 7));
        if (last.at("status") != "ENROLLING") break;
    }
    CHECK(last.at("status") == "STOPPED_DECISIVE");
    CHECK(last.at("decisive").get<bool>());
    CHECK(last.at("bf").get<double>() < 0.01);
    CHECK(status_of_call([&] { svc.enroll(id, 0.5); }) == 409);
}

TEST_CASE("restart replays every trial")
{
    TempDir dir("adaptrial_svc_replay");
    std::string a, b, view_a, view_b;
    {
        TrialService svc(dir.path);
        a = svc.create_trial({{"seed", 10}, {"budget", 20}}).at("trial_id");
        b = svc.create_trial({{"seed", 11}, {"rule", "sqrt_ratio"}, {"mu_A", 5}}).at("trial_id");
        for (int t = 1; t <= 7; ++t) {
            svc.enroll(a, t / 10.0);
            svc.record_outcome(a, t, t * 0.3 - 1);
        }
        svc.enroll(b, 0.2);
        view_a = svc.get_trial(a).dump();
        view_b = svc.get_trial(b).dump();
    }
    TrialService again(dir.path);
    CHECK(again.recovery_notes().empty());
    CHECK(again.get_trial(a).dump() == view_a);
    CHECK(again.get_trial(b).dump() == view_b);
    CHECK(again.record_outcome(b, 1, 1.0).at("status") == "ENROLLING");
}

TEST_CASE("torn final line is dropped and truncated")
{
    TempDir dir("adaptrial_svc_torn");
    std::string id, view;
    std::filesystem::path log;
    {
        TrialService svc(dir.path);
        id = svc.create_trial({{"seed", 12}}).at("trial_id");
        svc.enroll(id, 0.3);
        svc.record_outcome(id, 1, 0.5);
        view = svc.get_trial(id).dump();
        log = svc.log_path(id);
    }
    const auto good = read_all(log);
    std::ofstream(log, std::ios::app) << R"({"seq":4,"kind":"ENROL)";
    TrialService again(dir.path);
    REQUIRE(again.recovery_notes().size() == 1);
    CHECK(again.recovery_notes()[0].find("torn") != std::string::npos);
    CHECK(again.get_trial(id).dump() == view);
    CHECK(read_all(log) == good);
    again.enroll(id, 0.6);
    TrialService third(dir.path);
    CHECK(third.recovery_notes().empty());
    CHECK(third.get_trial(id).at("awaiting_t") == 2);
}

TEST_CASE("corrupt logs are skipped")
{
    TempDir dir("adaptrial_svc_corrupt");
    std::string good, bad;
    {
        TrialService svc(dir.path);
        good = svc.create_trial({{"seed", 1}}).at("trial_id");
        bad = svc.create_trial({{"seed", 2}}).at("trial_id");
        svc.enroll(bad, 0.5);
    }
    {
        // flip the logged arm: replay must notice the mismatch
        auto text = read_all(dir.path / (bad + ".jsonl"));
        const auto pos = text.find("\"arm\":\"");
        REQUIRE(pos != std::string::npos);
        char& c = text[pos + 7];
        c = c == 'A' ? 'B' : 'A';
        std::ofstream(dir.path / (bad + ".jsonl"), std::ios::trunc) << text;
    }
    TrialService again(dir.path);
    CHECK(again.trial_ids() == std::vector<std::string>{good});
    REQUIRE(again.recovery_notes().size() == 1);
    CHECK(again.recovery_notes()[0].find("arm") != std::string::npos);
}

TEST_CASE("long scripted run matches the engine")
{
    const auto r = parity::run(std::filesystem::temp_directory_path() / "adaptrial_svc_parity", 200, -1);
    CHECK_MESSAGE(r.ok, r.message);
}

TEST_CASE("kill and restart mid sequence matches the engine")
{
    const auto r = parity::run(std::filesystem::temp_directory_path() / "adaptrial_svc_parity_kill", 200, 100);
    CHECK_MESSAGE(r.ok, r.message);
}

}
