#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptrial/trial.hpp"

namespace adaptrial::harness {

struct Scenario {
    std::string label;
    TrialConfig config;
    int replications = 1000;
};

struct SeriesPoint {
    int t = 0;
    double mean = 0.0;
    double se = 0.0;  // across-replication standard error; 0 when n < 2
    int n = 0;        // replications still running at t
};

struct AggregateResult {
    int replications = 0;
    int budget = 0;
    double mean_nA = 0.0;
    double mean_nB = 0.0;
    double mean_propA = 0.0;
    double mean_propB = 0.0;
    // averaged over replications that have a sustained crossing
    std::optional<double> mean_switch;
    int switch_present = 0;
    int switch_absent = 0;
    double stop_q025 = 0.0;
    double stop_median = 0.0;
    double stop_q975 = 0.0;
    double p_exhaust = 0.0;
    std::vector<SeriesPoint> mean_wA_by_t;
};

/// Linear interpolation between order statistics at position 1 + q (n - 1).
double quantile(std::span<const double> samples, double q);

/// Running reduction over replications. merge() of two disjoint sets equals
/// adding all of them to one accumulator (up to summation order).
class Accumulator {
public:
    explicit Accumulator(int budget);
    void add(const TrialResult& r);
    void merge(const Accumulator& other);
    int count() const { return n_; }
    AggregateResult finish() const;

private:
    struct Slot {
        double sum = 0.0;
        double sum_sq = 0.0;
        int n = 0;
    };
    int budget_;
    int n_ = 0;
    double sum_nA_ = 0.0, sum_nB_ = 0.0, sum_propA_ = 0.0;
    double sum_switch_ = 0.0;
    int switch_present_ = 0;
    int exhausted_ = 0;
    std::vector<double> stop_times_;
    std::vector<Slot> slots_;
};

AggregateResult aggregate(std::span<const TrialResult> results, int budget);

/// Seed of replication `rep` in scenario `index` under `master_seed`.
std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t index, std::size_t rep);

struct ScenarioOutcome {
    Scenario scenario;
    AggregateResult result;
    std::optional<std::string> error;  // set when a replication failed
    double wall_time_seconds = 0.0;
};

/// max_parallelism <= 0 uses the hardware concurrency. Output does not depend on it.
std::vector<ScenarioOutcome> run_grid(const std::vector<Scenario>& scenarios,
                                      std::uint64_t master_seed, int max_parallelism);

enum Format : unsigned {
    Csv = 1u,
    Json = 2u,
};

std::string csv_header();
std::string csv_row(const ScenarioOutcome& o);
std::string to_json_text(const std::vector<ScenarioOutcome>& outcomes, std::uint64_t master_seed);

/// Writes report.csv / report.json (per formats) plus timing.json into out_dir.
/// The report files carry no timing so repeated runs are byte-identical.
std::vector<std::filesystem::path> emit_report(const std::vector<ScenarioOutcome>& outcomes,
                                               std::uint64_t master_seed,
                                               const std::filesystem::path& out_dir,
                                               unsigned formats);

/// Shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace adaptrial::harness
