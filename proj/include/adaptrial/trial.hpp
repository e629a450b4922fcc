#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptrial/allocation.hpp"
#include "adaptrial/dlm.hpp"
#include "adaptrial/rng.hpp"
#include "adaptrial/stopping.hpp"

namespace adaptrial {

/// Which two samples feed the stopping test.
enum class Evidence {
    Outcomes,   ///< raw observed responses per arm
    Forecasts,  ///< one-step forecast f_t of the assigned arm, grouped by arm
};

std::string_view to_string(Evidence e);
Evidence parse_evidence(std::string_view text);

/// Trajectory the switch point is detected on.
enum class SwitchBasis {
    Proportion,  ///< running share of patients on A, n_A(t) / t
    Weight,      ///< per-patient wA
};

std::string_view to_string(SwitchBasis b);
SwitchBasis parse_switch_basis(std::string_view text);

/// Every knob of one simulated (or live) trial. Smaller responses are better.
struct TrialConfig {
    double mu_A = 0.0;
    double mu_B = 1.0;
    double beta = 1.0;
    // false: beta * x enters arm B's mean only; true: both arms share it.
    bool shared_covariate = false;
    double sd = 1.0;
    int budget = 100;
    double omega = 0.1;
    double c_A = 0.1;
    double c_B = 1e-6;
    double c_beta = 0.1;
    std::array<double, 3> m0{0.0, 0.0, 0.0};
    double V = 1.0;
    Rule rule = Rule::NormalCdf;
    QScale q_scale = QScale::Sd;
    stopping::BFPriors bf{};
    Evidence evidence = Evidence::Outcomes;
    SwitchBasis switch_basis = SwitchBasis::Proportion;
    bool stopping_enabled = true;
    std::uint64_t seed = 1;
};

struct FieldError {
    std::string field;
    std::string message;
};

/// Empty when the config is valid.
std::vector<FieldError> check(const TrialConfig& cfg);
/// Throws ConfigError naming the first invalid field.
void validate(const TrialConfig& cfg);

dlm::ModelSpec model_spec(const TrialConfig& cfg);
dlm::StateEstimate initial_state(const TrialConfig& cfg);

struct PatientRecord {
    int t = 0;
    double x = 0.0;
    double wA = 0.5;
    double u = 0.0;
    Arm arm = Arm::A;
    double y = 0.0;
    std::optional<double> bf;
};

/// Everything computed for the next patient before the uniform draw.
struct Proposal {
    int t = 0;
    double x = 0.0;
    dlm::PriorState prior;
    dlm::Forecast forecast_A;
    dlm::Forecast forecast_B;
    allocation::AllocationWeight weight;
};

struct OutcomeResult {
    std::optional<double> bf;
    bool decisive = false;
    bool budget_exhausted = false;
};

/// One trial as a sequential state machine: propose(x) -> allocate(u) -> observe(y).
/// run_trial and the live service both drive this class, which makes them agree
/// bit for bit on identical (x, u, y) sequences.
class TrialSession {
public:
    explicit TrialSession(TrialConfig cfg);

    const TrialConfig& config() const { return cfg_; }
    const dlm::StateEstimate& state() const { return state_; }
    const std::vector<PatientRecord>& records() const { return records_; }
    const stopping::RunningMoments& moments(Arm arm) const
    {
        return arm == Arm::A ? moments_A_ : moments_B_;
    }
    const stopping::RunningMoments& forecast_moments(Arm arm) const
    {
        return arm == Arm::A ? fmoments_A_ : fmoments_B_;
    }
    int next_index() const { return static_cast<int>(records_.size()) + 1; }
    bool awaiting_outcome() const { return pending_.has_value(); }
    const std::optional<Proposal>& pending() const { return pending_; }
    bool stopped() const { return stopped_; }
    bool finished() const;
    std::optional<double> last_bf() const { return last_bf_; }
    /// Forecasts and weight for a patient with covariate x; does not change state.
    Proposal propose(double x) const;

    /// Commits the allocation for covariate x using uniform draw u.
    Arm allocate(double x, double u);
    Arm pending_arm() const { return pending_arm_; }
    double pending_u() const { return pending_u_; }

    /// Applies the outcome of the pending patient: DLM update, test statistic, stop check.
    OutcomeResult observe(double y);

private:
    TrialConfig cfg_;
    dlm::ModelSpec spec_;
    dlm::StateEstimate state_;
    std::vector<PatientRecord> records_;
    std::optional<Proposal> pending_;
    double pending_u_ = 0.0;
    Arm pending_arm_ = Arm::A;
    stopping::RunningMoments moments_A_;
    stopping::RunningMoments moments_B_;
    stopping::RunningMoments fmoments_A_;
    stopping::RunningMoments fmoments_B_;
    std::optional<double> last_bf_;
    bool stopped_ = false;
};

/// Source of the three random inputs per patient.
class DrawSource {
public:
    virtual ~DrawSource() = default;
    virtual double covariate() = 0;
    virtual double uniform() = 0;
    virtual double outcome(Arm arm, double x, const TrialConfig& cfg) = 0;
};

/// Counter-based stream keyed by cfg.seed: x, u, then one normal per patient.
class StreamDraws final : public DrawSource {
public:
    explicit StreamDraws(std::uint64_t seed) : stream_(rng::derive_key(seed, 0)) {}
    double covariate() override { return stream_.uniform(); }
    double uniform() override { return stream_.uniform(); }
    double outcome(Arm arm, double x, const TrialConfig& cfg) override;

private:
    rng::CounterStream stream_;
};

/// Replays fixed (x_t, u_t, y_t) sequences.
class ScriptedDraws final : public DrawSource {
public:
    ScriptedDraws(std::vector<double> xs, std::vector<double> us, std::vector<double> ys);
    double covariate() override;
    double uniform() override;
    double outcome(Arm arm, double x, const TrialConfig& cfg) override;

private:
    std::vector<double> xs_, us_, ys_;
    std::size_t ix_ = 0, iu_ = 0, iy_ = 0;
};

double gen_covariate(rng::CounterStream& stream);
/// mu_A for arm A, mu_B + beta * x for arm B (beta * x added to A too when
/// cfg.shared_covariate), plus N(0, sd^2) noise.
double gen_outcome(Arm arm, double x, const TrialConfig& cfg, rng::CounterStream& stream);

struct TrialResult {
    std::vector<PatientRecord> records;
    int nA = 0;
    int nB = 0;
    int stop_time = 0;
    bool stopped = false;
    std::optional<int> switch_point;
    std::vector<double> weight_trajectory;
    // n_A(t) / t
    std::vector<double> proportion_trajectory;
};

TrialResult run_trial(const TrialConfig& cfg);
TrialResult run_trial(const TrialConfig& cfg, DrawSource& draws);

/// Smallest 1-based t with traj(s) > 0.5 for every s >= t.
std::optional<int> switch_point(std::span<const double> trajectory);

}  // namespace adaptrial
