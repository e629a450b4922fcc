#include "adaptrial/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "adaptrial/config.hpp"
#include "adaptrial/error.hpp"
#include "adaptrial/rng.hpp"

namespace adaptrial::harness {

std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double quantile(std::span<const double> samples, double q)
{
    if (samples.empty()) throw ArgumentError("quantile: empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("quantile: q must lie in [0, 1]");
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    // 0-based position of 1 + q (n - 1)
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return s[lo] + frac * (s[hi] - s[lo]);
}

Accumulator::Accumulator(int budget) : budget_(budget), slots_(static_cast<std::size_t>(std::max(budget, 0)))
{
}

void Accumulator::add(const TrialResult& r)
{
    ++n_;
    sum_nA_ += r.nA;
    sum_nB_ += r.nB;
    const int total = r.nA + r.nB;
    sum_propA_ += total > 0 ? static_cast<double>(r.nA) / total : 0.5;
    if (r.switch_point) {
        sum_switch_ += *r.switch_point;
        ++switch_present_;
    }
    if (!r.stopped) ++exhausted_;
    stop_times_.push_back(static_cast<double>(r.stop_time));
    if (r.weight_trajectory.size() > slots_.size()) slots_.resize(r.weight_trajectory.size());
    for (std::size_t i = 0; i < r.weight_trajectory.size(); ++i) {
        const double w = r.weight_trajectory[i];
        slots_[i].sum += w;
        slots_[i].sum_sq += w * w;
        slots_[i].n += 1;
    }
}

void Accumulator::merge(const Accumulator& o)
{
    n_ += o.n_;
    sum_nA_ += o.sum_nA_;
    sum_nB_ += o.sum_nB_;
    sum_propA_ += o.sum_propA_;
    sum_switch_ += o.sum_switch_;
    switch_present_ += o.switch_present_;
    exhausted_ += o.exhausted_;
    stop_times_.insert(stop_times_.end(), o.stop_times_.begin(), o.stop_times_.end());
    if (o.slots_.size() > slots_.size()) slots_.resize(o.slots_.size());
    for (std::size_t i = 0; i < o.slots_.size(); ++i) {
        slots_[i].sum += o.slots_[i].sum;
        slots_[i].sum_sq += o.slots_[i].sum_sq;
        slots_[i].n += o.slots_[i].n;
    }
}

AggregateResult Accumulator::finish() const
{
    AggregateResult a;
    a.replications = n_;
    a.budget = budget_;
    if (n_ == 0) return a;
    const double n = n_;
    a.mean_nA = sum_nA_ / n;
    a.mean_nB = sum_nB_ / n;
    a.mean_propA = sum_propA_ / n;
    a.mean_propB = 1.0 - a.mean_propA;
    a.switch_present = switch_present_;
    a.switch_absent = n_ - switch_present_;
    if (switch_present_ > 0) a.mean_switch = sum_switch_ / switch_present_;
    a.stop_q025 = quantile(stop_times_, 0.025);
    a.stop_median = quantile(stop_times_, 0.5);
    a.stop_q975 = quantile(stop_times_, 0.975);
    a.p_exhaust = exhausted_ / n;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        const auto& s = slots_[i];
        if (s.n == 0) continue;
        SeriesPoint p;
        p.t = static_cast<int>(i) + 1;
        p.n = s.n;
        p.mean = s.sum / s.n;
        if (s.n > 1) {
            const double var = std::max(0.0, (s.sum_sq - s.n * p.mean * p.mean) / (s.n - 1));
            p.se = std::sqrt(var / s.n);
        }
        a.mean_wA_by_t.push_back(p);
    }
    return a;
}

AggregateResult aggregate(std::span<const TrialResult> results, int budget)
{
    Accumulator acc(budget);
    for (const auto& r : results) acc.add(r);
    return acc.finish();
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t index, std::size_t rep)
{
    return rng::derive_key(rng::derive_key(master_seed, index), rep);
}

namespace {

// Only what aggregation needs; keeps memory flat for long grids.
TrialResult slim(TrialResult r)
{
    r.records.clear();
    r.records.shrink_to_fit();
    r.proportion_trajectory.clear();
    r.proportion_trajectory.shrink_to_fit();
    return r;
}

}  // namespace

std::vector<ScenarioOutcome> run_grid(const std::vector<Scenario>& scenarios,
                                      std::uint64_t master_seed, int max_parallelism)
{
    struct Job {
        std::size_t scenario;
        std::size_t rep;
    };
    std::vector<Job> jobs;
    std::vector<std::vector<TrialResult>> slots(scenarios.size());
    std::vector<std::string> errors(scenarios.size());
    std::vector<std::size_t> failed_rep(scenarios.size(), 0);
    std::vector<std::atomic<bool>> failed(scenarios.size());
    std::vector<double> started(scenarios.size(), -1.0), finished_at(scenarios.size(), 0.0);

    for (std::size_t s = 0; s < scenarios.size(); ++s) {
        if (scenarios[s].replications < 1) {
            throw FieldConfigError("replications", "scenario '" + scenarios[s].label + "' needs at least 1");
        }
        validate(scenarios[s].config);
        slots[s].resize(static_cast<std::size_t>(scenarios[s].replications));
        for (std::size_t r = 0; r < slots[s].size(); ++r) jobs.push_back({s, r});
    }

    const auto t0 = std::chrono::steady_clock::now();
    auto now = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    std::vector<std::atomic<std::size_t>> remaining(scenarios.size());
    for (std::size_t s = 0; s < scenarios.size(); ++s) remaining[s] = slots[s].size();
    std::mutex time_mutex;

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs.size()) return;
            const auto [s, r] = jobs[j];
            if (r == 0) {
                std::lock_guard lock(time_mutex);
                started[s] = now();
            }
            TrialConfig cfg = scenarios[s].config;
            cfg.seed = replication_seed(master_seed, s, r);
            try {
                slots[s][r] = slim(run_trial(cfg));
            } catch (const std::exception& e) {
                // report the lowest failing replication so the message does not depend on scheduling
                std::lock_guard lock(time_mutex);
                if (!failed[s] || r < failed_rep[s]) {
                    errors[s] = "scenario '" + scenarios[s].label + "' replication " + std::to_string(r) +
                                ": " + e.what();
                    failed_rep[s] = r;
                    failed[s] = true;
                }
            }
            if (--remaining[s] == 0) {
                std::lock_guard lock(time_mutex);
                finished_at[s] = now();
            }
        }
    };

    unsigned threads = max_parallelism > 0 ? static_cast<unsigned>(max_parallelism)
                                           : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, std::max<std::size_t>(jobs.size(), 1));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }

    std::vector<ScenarioOutcome> out;
    out.reserve(scenarios.size());
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
        ScenarioOutcome o;
        o.scenario = scenarios[s];
        o.wall_time_seconds = started[s] >= 0.0 ? finished_at[s] - started[s] : 0.0;
        if (failed[s]) {
            o.error = errors[s];
        } else {
            Accumulator acc(scenarios[s].config.budget);
            for (const auto& r : slots[s]) acc.add(r);  // ordered reduce
            o.result = acc.finish();
        }
        out.push_back(std::move(o));
    }
    return out;
}

std::string csv_header()
{
    return "label,replications,budget,mean_nA,mean_nB,mean_propA,mean_propB,mean_switch,switch_absent,"
           "stop_q025,stop_median,stop_q975,p_exhaust,error";
}

std::string csv_row(const ScenarioOutcome& o)
{
    const auto& a = o.result;
    std::string label = o.scenario.label;
    if (label.find_first_of(",\"\n") != std::string::npos) {
        std::string q = "\"";
        for (char c : label) {
            if (c == '"') q += '"';
            q += c;
        }
        label = q + "\"";
    }
    auto num = [](double v) { return format_number(v); };
    std::string row = label + "," + std::to_string(o.scenario.replications) + "," +
                      std::to_string(o.scenario.config.budget) + ",";
    if (o.error) {
        std::string err = *o.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        return row + ",,,,,,,,,," + err;
    }
    row += num(a.mean_nA) + "," + num(a.mean_nB) + "," + num(a.mean_propA) + "," + num(a.mean_propB) + ",";
    row += (a.mean_switch ? num(*a.mean_switch) : "") + "," + std::to_string(a.switch_absent) + ",";
    row += num(a.stop_q025) + "," + num(a.stop_median) + "," + num(a.stop_q975) + "," + num(a.p_exhaust) + ",";
    return row;
}

std::string to_json_text(const std::vector<ScenarioOutcome>& outcomes, std::uint64_t master_seed)
{
    nlohmann::ordered_json root;
    root["schema_version"] = 1;
    root["master_seed"] = master_seed;
    root["scenarios"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        nlohmann::ordered_json s;
        s["label"] = o.scenario.label;
        s["index"] = i;
        s["replications"] = o.scenario.replications;
        s["config"] = config::to_json(o.scenario.config);
        if (o.error) {
            s["error"] = *o.error;
        } else {
            const auto& a = o.result;
            nlohmann::ordered_json r;
            r["mean_nA"] = a.mean_nA;
            r["mean_nB"] = a.mean_nB;
            r["mean_propA"] = a.mean_propA;
            r["mean_propB"] = a.mean_propB;
            r["mean_switch"] = a.mean_switch ? nlohmann::ordered_json(*a.mean_switch) : nlohmann::ordered_json();
            r["switch_present"] = a.switch_present;
            r["switch_absent"] = a.switch_absent;
            r["stop_q025"] = a.stop_q025;
            r["stop_median"] = a.stop_median;
            r["stop_q975"] = a.stop_q975;
            r["p_exhaust"] = a.p_exhaust;
            auto series = nlohmann::ordered_json::array();
            for (const auto& p : a.mean_wA_by_t) {
                series.push_back({{"t", p.t}, {"mean", p.mean}, {"se", p.se}, {"n", p.n}});
            }
            r["mean_wA_by_t"] = std::move(series);
            s["aggregate"] = std::move(r);
        }
        root["scenarios"].push_back(std::move(s));
    }
    return root.dump(2) + "\n";
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::vector<std::filesystem::path> emit_report(const std::vector<ScenarioOutcome>& outcomes,
                                               std::uint64_t master_seed,
                                               const std::filesystem::path& out_dir, unsigned formats)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

    std::vector<std::filesystem::path> written;
    if (formats & Csv) {
        std::string text = csv_header() + "\n";
        for (const auto& o : outcomes) text += csv_row(o) + "\n";
        const auto p = out_dir / "report.csv";
        write_file(p, text);
        written.push_back(p);
    }
    if (formats & Json) {
        const auto p = out_dir / "report.json";
        write_file(p, to_json_text(outcomes, master_seed));
        written.push_back(p);
    }
    nlohmann::ordered_json timing = nlohmann::ordered_json::array();
    for (const auto& o : outcomes) {
        timing.push_back({{"label", o.scenario.label}, {"wall_time_seconds", o.wall_time_seconds}});
    }
    const auto p = out_dir / "timing.json";
    write_file(p, timing.dump(2) + "\n");
    written.push_back(p);
    return written;
}

}  // namespace adaptrial::harness
