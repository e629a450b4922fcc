#include <csignal>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "adaptrial/config.hpp"
#include "adaptrial/error.hpp"
#include "adaptrial/harness.hpp"
#include "adaptrial/http_api.hpp"
#include "adaptrial/reference.hpp"
#include "adaptrial/service.hpp"

namespace fs = std::filesystem;
using namespace adaptrial;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

struct GridOptions {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> parallelism;
    std::vector<std::string> sets;
    std::string format = "csv,json";
};

void add_grid_flags(CLI::App* cmd, GridOptions& o, bool config_required)
{
    auto* c = cmd->add_option("--config", o.config, "Config file ([run], [defaults], [scenario.<label>] sections)");
    if (config_required) c->required();
    cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "Master seed (overrides run.seed)");
    cmd->add_option("--parallelism", o.parallelism, "Worker threads; 0 = all cores (overrides run.parallelism)");
    cmd->add_option("--set", o.sets, "Override key=value (repeatable): <field>, run.<key>, scenario.<label>.<field>");
    cmd->add_option("--format", o.format, "Comma-separated report formats: csv, json")->capture_default_str();
}

unsigned parse_formats(const std::string& text)
{
    unsigned f = 0;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "csv") {
            f |= harness::Csv;
        } else if (item == "json") {
            f |= harness::Json;
        } else {
            throw ConfigError("--format: unknown format '" + item + "' (expected csv or json)");
        }
    }
    if (!f) throw ConfigError("--format: no format given");
    return f;
}

// Shipped configs live in ./configs or, failing that, the source tree.
fs::path default_config(const std::string& name)
{
    const fs::path local = fs::path("configs") / name;
    if (fs::exists(local)) return local;
#ifdef ADAPTRIAL_SOURCE_DIR
    const fs::path src = fs::path(ADAPTRIAL_SOURCE_DIR) / "configs" / name;
    if (fs::exists(src)) return src;
#endif
    return local;
}

config::ConfigFile load_with_overrides(const GridOptions& o, const fs::path& path)
{
    config::ConfigFile file = config::load(path);
    for (const auto& s : o.sets) config::apply_override(file, s);
    if (o.seed) file.run.seed = *o.seed;
    if (o.parallelism) file.run.parallelism = *o.parallelism;
    return file;
}

// Runs and writes the report; returns false when any scenario failed.
bool run_and_report(const config::ConfigFile& file, const fs::path& out, unsigned formats,
                    std::vector<harness::ScenarioOutcome>& outcomes)
{
    outcomes = harness::run_grid(file.scenarios, file.run.seed, file.run.parallelism);
    harness::emit_report(outcomes, file.run.seed, out, formats);
    bool ok = true;
    double total = 0.0;
    for (const auto& o : outcomes) {
        total += o.wall_time_seconds;
        if (o.error) {
            std::cerr << "error: " << *o.error << "\n";
            ok = false;
        }
    }
    std::cerr << outcomes.size() << " scenario(s), " << harness::format_number(std::round(total * 1000) / 1000)
              << " s scenario time; report in " << out.string() << "\n";
    return ok;
}

bool same(double a, double b) { return std::fabs(a - b) <= 1e-12 * std::max(1.0, std::fabs(b)); }

struct Cells {
    std::string header;
    std::vector<std::string> rows;
};

std::string dev_cols(double reported, std::optional<double> got)
{
    using harness::format_number;
    if (!got) return format_number(reported) + ",,,";
    const double abs_dev = *got - reported;
    const std::string rel = reported != 0.0 ? format_number(abs_dev / std::fabs(reported)) : "";
    return format_number(reported) + "," + format_number(*got) + "," + format_number(abs_dev) + "," + rel;
}

const harness::ScenarioOutcome* match(const std::vector<harness::ScenarioOutcome>& outcomes, auto&& pred)
{
    for (const auto& o : outcomes) {
        if (!o.error && pred(o.scenario.config)) return &o;
    }
    return nullptr;
}

Cells compare_allocation(const std::vector<harness::ScenarioOutcome>& outcomes)
{
    Cells c;
    c.header = "difference,sd,budget,sqrt_ratio_nA_reported,sqrt_ratio_nA_reproduced,sqrt_ratio_abs_dev,sqrt_ratio_rel_dev,"
               "normal_cdf_nB_reported,normal_cdf_nB_reproduced,normal_cdf_abs_dev,normal_cdf_rel_dev";
    for (const auto& row : reference::allocation_table()) {
        auto cell = [&](Rule rule) {
            return match(outcomes, [&](const TrialConfig& k) {
                return k.rule == rule && same(std::fabs(k.mu_A - k.mu_B), row.difference) && same(k.sd, row.sd) &&
                       k.budget == row.budget;
            });
        };
        const auto* sqrt_cell = cell(Rule::SqrtRatio);
        const auto* cdf_cell = cell(Rule::NormalCdf);
        c.rows.push_back(harness::format_number(row.difference) + "," + harness::format_number(row.sd) + "," +
                         std::to_string(row.budget) + "," +
                         dev_cols(row.sqrt_ratio_mean_nA, sqrt_cell ? std::optional(sqrt_cell->result.mean_nA) : std::nullopt) + "," +
                         dev_cols(row.normal_cdf_mean_nB, cdf_cell ? std::optional(cdf_cell->result.mean_nB) : std::nullopt));
    }
    return c;
}

Cells compare_sensitivity(const std::vector<harness::ScenarioOutcome>& outcomes)
{
    Cells c;
    c.header = "delta,omega,propA_reported,propA_reproduced,propA_abs_dev,propA_rel_dev,"
               "switch_reported,switch_reproduced,switch_abs_dev,switch_rel_dev";
    for (const auto& p : reference::sensitivity()) {
        const auto* o = match(outcomes, [&](const TrialConfig& k) {
            return same(std::fabs(k.mu_B - k.mu_A), p.delta) && same(k.omega, p.omega) && same(k.c_B, 1e-6) &&
                   same(k.beta, 1.0);
        });
        std::optional<double> prop, sw;
        if (o) {
            prop = o->result.mean_propA;
            sw = o->result.mean_switch;
        }
        c.rows.push_back(harness::format_number(p.delta) + "," + harness::format_number(p.omega) + "," +
                         dev_cols(p.prop_A, prop) + "," + dev_cols(p.switch_point, sw));
    }
    return c;
}

Cells compare_stopping(int id, const std::vector<harness::ScenarioOutcome>& outcomes)
{
    Cells c;
    c.header = "c_B,omega,delta,beta";
    for (const char* m : {"q025", "median", "q975", "p_exhaust"}) {
        const std::string s = m;
        c.header += "," + s + "_reported," + s + "_reproduced," + s + "_abs_dev," + s + "_rel_dev";
    }
    c.header += ",note";
    for (const auto& cell : reference::stopping_table(id)) {
        const auto* o = match(outcomes, [&](const TrialConfig& k) {
            return same(k.c_B, cell.c_B) && same(k.omega, cell.omega) && same(std::fabs(k.mu_B - k.mu_A), cell.delta) &&
                   same(k.beta, cell.beta);
        });
        auto got = [&](double harness::AggregateResult::*f) {
            return o ? std::optional(o->result.*f) : std::nullopt;
        };
        using harness::format_number;
        c.rows.push_back(format_number(cell.c_B) + "," + format_number(cell.omega) + "," + format_number(cell.delta) +
                         "," + format_number(cell.beta) + "," +
                         dev_cols(cell.q025, got(&harness::AggregateResult::stop_q025)) + "," +
                         dev_cols(cell.median, got(&harness::AggregateResult::stop_median)) + "," +
                         dev_cols(cell.q975, got(&harness::AggregateResult::stop_q975)) + "," +
                         dev_cols(cell.p_exhaust, got(&harness::AggregateResult::p_exhaust)) + "," +
                         std::string(cell.note));
    }
    return c;
}

void write_cells(const fs::path& path, const Cells& c)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << c.header << "\n";
    for (const auto& r : c.rows) out << r << "\n";
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

int serve(const std::string& bind, const std::string& state_dir)
{
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw ConfigError("--bind must be host:port");
    const std::string host = bind.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(bind.substr(colon + 1));
    } catch (const std::exception&) {
        throw ConfigError("--bind: bad port in '" + bind + "'");
    }
    if (port < 0 || port > 65535) throw ConfigError("--bind: port out of range");

    // Block the stop signals before any thread exists so only the waiter sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    service::TrialService svc(state_dir);
    for (const auto& note : svc.recovery_notes()) std::cerr << "recovery: " << note << "\n";
    std::cerr << "recovered " << svc.trial_ids().size() << " trial(s) from " << svc.state_dir().string() << "\n";

    httplib::Server server;
    http_api::register_routes(server, svc);
    if (!server.bind_to_port(host, port)) {
        std::cerr << "error: cannot bind " << bind << "\n";
        return kRuntime;
    }
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
    });
    std::cerr << "listening on " << bind << "\n";
    std::cout.flush();
    server.listen_after_bind();
    // listen returned on its own (not via signal): wake the waiter
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Covariate-adjusted response-adaptive two-arm trial engine"};
    app.require_subcommand(1);

    GridOptions sim;
    sim.out = "out/simulate";
    auto* simulate = app.add_subcommand("simulate", "Run every scenario of a config file and write report.csv/json");
    add_grid_flags(simulate, sim, true);

    GridOptions sens;
    sens.out = "out/sensitivity";
    auto* sensitivity = app.add_subcommand(
        "sensitivity", "Run the delta x omega allocation grid and compare with the reported proportions/switch points");
    add_grid_flags(sensitivity, sens, false);

    GridOptions rep;
    int table_id = 0;
    auto* reproduce = app.add_subcommand("reproduce-table", "Run the grid of table 2, 3, 4 or 5 and write comparison.csv");
    reproduce->add_option("table", table_id, "Table id")->required()->check(CLI::IsMember({2, 3, 4, 5}));
    add_grid_flags(reproduce, rep, false);

    std::string bind = "127.0.0.1:8080";
    std::string state_dir = "trial_state";
    auto* serve_cmd = app.add_subcommand("serve", "Serve the live-trial HTTP API");
    serve_cmd->add_option("--bind", bind, "host:port")->capture_default_str();
    serve_cmd->add_option("--state-dir", state_dir, "Directory of per-trial event logs")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        std::vector<harness::ScenarioOutcome> outcomes;
        if (*simulate) {
            const auto file = load_with_overrides(sim, sim.config);
            return run_and_report(file, sim.out, parse_formats(sim.format), outcomes) ? kOk : kRuntime;
        }
        if (*sensitivity) {
            const fs::path cfg = sens.config.empty() ? default_config("sensitivity.conf") : fs::path(sens.config);
            const auto file = load_with_overrides(sens, cfg);
            const bool ok = run_and_report(file, sens.out, parse_formats(sens.format), outcomes);
            write_cells(fs::path(sens.out) / "comparison.csv", compare_sensitivity(outcomes));
            return ok ? kOk : kRuntime;
        }
        if (*reproduce) {
            const std::string name = "table" + std::to_string(table_id) + ".conf";
            const fs::path cfg = rep.config.empty() ? default_config(name) : fs::path(rep.config);
            if (rep.out.empty()) rep.out = "out/table" + std::to_string(table_id);
            const auto file = load_with_overrides(rep, cfg);
            const bool ok = run_and_report(file, rep.out, parse_formats(rep.format), outcomes);
            const Cells cells = table_id == 2 ? compare_allocation(outcomes) : compare_stopping(table_id, outcomes);
            write_cells(fs::path(rep.out) / "comparison.csv", cells);
            std::cout << cells.header << "\n";
            for (const auto& r : cells.rows) std::cout << r << "\n";
            return ok ? kOk : kRuntime;
        }
        if (*serve_cmd) return serve(bind, state_dir);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kUsage;
}
