#include "adaptrial/trial.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "adaptrial/error.hpp"

namespace adaptrial {

std::string_view to_string(Evidence e)
{
    return e == Evidence::Outcomes ? "outcomes" : "forecasts";
}

Evidence parse_evidence(std::string_view text)
{
    if (text == "outcomes") return Evidence::Outcomes;
    if (text == "forecasts") return Evidence::Forecasts;
    throw ConfigError("unknown evidence '" + std::string(text) + "' (expected outcomes or forecasts)");
}

std::string_view to_string(SwitchBasis b)
{
    return b == SwitchBasis::Proportion ? "proportion" : "weight";
}

SwitchBasis parse_switch_basis(std::string_view text)
{
    if (text == "proportion") return SwitchBasis::Proportion;
    if (text == "weight") return SwitchBasis::Weight;
    throw ConfigError("unknown switch basis '" + std::string(text) + "' (expected proportion or weight)");
}

std::vector<FieldError> check(const TrialConfig& cfg)
{
    std::vector<FieldError> errors;
    auto require = [&](bool ok, const char* field, const char* message) {
        if (!ok) errors.push_back({field, message});
    };
    auto finite = [](double v) { return std::isfinite(v); };
    require(finite(cfg.mu_A), "mu_A", "must be finite");
    require(finite(cfg.mu_B), "mu_B", "must be finite");
    require(finite(cfg.beta), "beta", "must be finite");
    require(cfg.sd > 0.0 && finite(cfg.sd), "sd", "must be positive");
    require(cfg.budget >= 1, "budget", "must be at least 1");
    require(cfg.omega >= 0.0 && finite(cfg.omega), "omega", "must be >= 0");
    require(cfg.c_A >= 0.0 && finite(cfg.c_A), "c_A", "must be >= 0");
    require(cfg.c_B >= 0.0 && finite(cfg.c_B), "c_B", "must be >= 0");
    require(cfg.c_beta >= 0.0 && finite(cfg.c_beta), "c_beta", "must be >= 0");
    require(finite(cfg.m0[0]) && finite(cfg.m0[1]) && finite(cfg.m0[2]), "m0", "must be finite");
    require(cfg.V > 0.0 && finite(cfg.V), "V", "must be positive");
    require(finite(cfg.bf.lambda), "bf.lambda", "must be finite");
    require(cfg.bf.sigma_delta_sq >= 0.0 && finite(cfg.bf.sigma_delta_sq), "bf.sigma_delta_sq",
            "must be >= 0");
    require(cfg.bf.threshold > 0.0 && cfg.bf.threshold < 1.0, "bf.threshold", "must lie in (0, 1)");
    return errors;
}

void validate(const TrialConfig& cfg)
{
    const auto errors = check(cfg);
    if (!errors.empty()) {
        throw FieldConfigError(errors.front().field, errors.front().message);
    }
}

dlm::ModelSpec model_spec(const TrialConfig& cfg)
{
    return dlm::ModelSpec::random_walk(3, cfg.omega, cfg.V);
}

dlm::StateEstimate initial_state(const TrialConfig& cfg)
{
    dlm::StateEstimate s{dlm::Vector(3), dlm::Matrix::Zero(3, 3)};
    s.m << cfg.m0[0], cfg.m0[1], cfg.m0[2];
    s.C.diagonal() << cfg.c_A, cfg.c_B, cfg.c_beta;
    return s;
}

// ---------------------------------------------------------------------------

TrialSession::TrialSession(TrialConfig cfg)
    : cfg_(std::move(cfg)), spec_(model_spec(cfg_)), state_(initial_state(cfg_))
{
    validate(cfg_);
    records_.reserve(static_cast<std::size_t>(cfg_.budget));
}

bool TrialSession::finished() const
{
    return stopped_ || static_cast<int>(records_.size()) >= cfg_.budget;
}

Proposal TrialSession::propose(double x) const
{
    Proposal p;
    p.t = next_index();
    p.x = x;
    p.prior = dlm::predict_state(spec_, state_);
    p.forecast_A = dlm::forecast_obs(allocation::design_vector(Arm::A, x), p.prior, spec_.V);
    p.forecast_B = dlm::forecast_obs(allocation::design_vector(Arm::B, x), p.prior, spec_.V);
    p.weight = allocation::compute_weight(
        cfg_.rule, allocation::arm_forecasts(p.forecast_A, p.forecast_B, cfg_.q_scale));
    return p;
}

Arm TrialSession::allocate(double x, double u)
{
    if (pending_) {
        throw ArgumentError("allocate: patient " + std::to_string(pending_->t) +
                            " is still awaiting an outcome");
    }
    if (finished()) {
        throw ArgumentError("allocate: trial has finished");
    }
    Proposal p = propose(x);
    pending_arm_ = allocation::assign(p.weight, u);
    pending_u_ = u;
    pending_ = std::move(p);
    return pending_arm_;
}

OutcomeResult TrialSession::observe(double y)
{
    if (!pending_) {
        throw ArgumentError("observe: no patient is awaiting an outcome");
    }
    if (!std::isfinite(y)) {
        throw ArgumentError("observe: outcome must be finite");
    }
    const Proposal& p = *pending_;
    const Arm arm = pending_arm_;
    const dlm::Vector F = allocation::design_vector(arm, p.x);
    const dlm::Forecast& fc = arm == Arm::A ? p.forecast_A : p.forecast_B;
    state_ = dlm::update(p.prior, F, fc, y);

    (arm == Arm::A ? moments_A_ : moments_B_).add(y);
    (arm == Arm::A ? fmoments_A_ : fmoments_B_).add(fc.f);

    PatientRecord rec;
    rec.t = p.t;
    rec.x = p.x;
    rec.wA = p.weight.wA;
    rec.u = pending_u_;
    rec.arm = arm;
    rec.y = y;
    records_.push_back(rec);
    pending_.reset();

    OutcomeResult out;
    const auto summary = cfg_.evidence == Evidence::Outcomes
                             ? stopping::two_sample_summary(moments_A_, moments_B_)
                             : stopping::two_sample_summary(fmoments_A_, fmoments_B_);
    if (summary.ready()) {
        const double bf = stopping::bayes_factor_01(summary.summary, cfg_.bf).value;
        out.bf = bf;
        last_bf_ = bf;
        records_.back().bf = bf;
        out.decisive = stopping::is_decisive(bf, cfg_.bf);
        if (out.decisive && cfg_.stopping_enabled) {
            stopped_ = true;
        }
    }
    out.budget_exhausted = !stopped_ && static_cast<int>(records_.size()) >= cfg_.budget;
    return out;
}

// ---------------------------------------------------------------------------

double gen_covariate(rng::CounterStream& stream)
{
    return stream.uniform();
}

double gen_outcome(Arm arm, double x, const TrialConfig& cfg, rng::CounterStream& stream)
{
    const double shift = cfg.beta * x;
    const double mean = arm == Arm::A ? cfg.mu_A + (cfg.shared_covariate ? shift : 0.0) : cfg.mu_B + shift;
    return mean + cfg.sd * stream.normal();
}

double StreamDraws::outcome(Arm arm, double x, const TrialConfig& cfg)
{
    return gen_outcome(arm, x, cfg, stream_);
}

ScriptedDraws::ScriptedDraws(std::vector<double> xs, std::vector<double> us, std::vector<double> ys)
    : xs_(std::move(xs)), us_(std::move(us)), ys_(std::move(ys))
{
}

double ScriptedDraws::covariate()
{
    if (ix_ >= xs_.size()) throw ArgumentError("scripted covariates exhausted");
    return xs_[ix_++];
}

double ScriptedDraws::uniform()
{
    if (iu_ >= us_.size()) throw ArgumentError("scripted uniforms exhausted");
    return us_[iu_++];
}

double ScriptedDraws::outcome(Arm, double, const TrialConfig&)
{
    if (iy_ >= ys_.size()) throw ArgumentError("scripted outcomes exhausted");
    return ys_[iy_++];
}

// ---------------------------------------------------------------------------

std::optional<int> switch_point(std::span<const double> trajectory)
{
    std::optional<int> point;
    for (std::size_t i = trajectory.size(); i-- > 0;) {
        if (!(trajectory[i] > 0.5)) break;
        point = static_cast<int>(i) + 1;
    }
    return point;
}

TrialResult run_trial(const TrialConfig& cfg, DrawSource& draws)
{
    TrialResult result;
    if (cfg.budget == 0) {
        return result;
    }
    validate(cfg);
    TrialSession session(cfg);
    while (!session.finished()) {
        const std::string where = "patient " + std::to_string(session.next_index()) + ": ";
        try {
            const double x = draws.covariate();
            const double u = draws.uniform();
            const Arm arm = session.allocate(x, u);
            session.observe(draws.outcome(arm, x, cfg));
        } catch (const NumericError& e) {
            throw NumericError(where + e.what());
        } catch (const ArgumentError& e) {
            throw ArgumentError(where + e.what());
        }
    }
    result.records = session.records();
    result.weight_trajectory.reserve(result.records.size());
    result.proportion_trajectory.reserve(result.records.size());
    for (const auto& r : result.records) {
        (r.arm == Arm::A ? result.nA : result.nB) += 1;
        result.weight_trajectory.push_back(r.wA);
        result.proportion_trajectory.push_back(static_cast<double>(result.nA) / r.t);
    }
    result.stopped = session.stopped();
    result.stop_time = static_cast<int>(result.records.size());
    result.switch_point = switch_point(cfg.switch_basis == SwitchBasis::Proportion
                                           ? result.proportion_trajectory
                                           : result.weight_trajectory);
    return result;
}

TrialResult run_trial(const TrialConfig& cfg)
{
    StreamDraws draws(cfg.seed);
    return run_trial(cfg, draws);
}

}  // namespace adaptrial
