#include "adaptrial/stopping.hpp"

#include <cmath>
#include <limits>

#include "adaptrial/error.hpp"
#include "adaptrial/special.hpp"

namespace adaptrial::stopping {

void validate(const BFPriors& p)
{
    if (!std::isfinite(p.lambda)) {
        throw ConfigError("bf.lambda must be finite");
    }
    if (!(p.sigma_delta_sq >= 0.0) || !std::isfinite(p.sigma_delta_sq)) {
        throw ConfigError("bf.sigma_delta_sq must be finite and >= 0");
    }
    if (!(p.threshold > 0.0 && p.threshold < 1.0)) {
        throw ConfigError("bf.threshold must lie in (0, 1)");
    }
}

void RunningMoments::add(double y)
{
    ++n_;
    const double delta = y - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (y - mean_);
}

SummaryResult two_sample_summary(const RunningMoments& a, const RunningMoments& b)
{
    SummaryResult out{SummaryStatus::NotReady, {}};
    out.summary.nA = a.count();
    out.summary.nB = b.count();
    if (a.count() < 2 || b.count() < 2) {
        return out;
    }
    const double nA = static_cast<double>(a.count());
    const double nB = static_cast<double>(b.count());
    const double nu = nA + nB - 2.0;
    const double pooled = (a.sum_sq_dev() + b.sum_sq_dev()) / nu;
    out.summary.nu = nu;
    out.summary.n_delta = 1.0 / (1.0 / nA + 1.0 / nB);
    if (!(pooled > 0.0)) {
        out.status = SummaryStatus::Degenerate;
        return out;
    }
    out.summary.t = (a.mean() - b.mean()) / (std::sqrt(pooled) * std::sqrt(1.0 / nA + 1.0 / nB));
    out.status = SummaryStatus::Ready;
    return out;
}

SummaryResult two_sample_summary(std::span<const double> ysA, std::span<const double> ysB)
{
    RunningMoments a;
    RunningMoments b;
    for (double y : ysA) a.add(y);
    for (double y : ysB) b.add(y);
    return two_sample_summary(a, b);
}

double t_density_ls(double t, double nu, double mu, double sigma_sq)
{
    return std::exp(special::log_t_density(t, nu, mu, sigma_sq));
}

BayesFactor bayes_factor_01(const TwoSampleSummary& s, const BFPriors& p)
{
    if (!(s.nu > 0.0) || !(s.n_delta > 0.0)) {
        throw ArgumentError("bayes_factor_01: summary is not ready");
    }
    const double log_h0 = special::log_t_density(s.t, s.nu, 0.0, 1.0);
    const double log_h1 = special::log_t_density(s.t, s.nu, std::sqrt(s.n_delta) * p.lambda,
                                                 1.0 + s.n_delta * p.sigma_delta_sq);
    const double log_bf = log_h0 - log_h1;
    constexpr double log_limit = 708.0;
    if (!(log_bf < log_limit)) {
        return {std::numeric_limits<double>::max(), true};
    }
    if (log_bf < -log_limit) {
        return {std::numeric_limits<double>::min(), true};
    }
    return {std::exp(log_bf), false};
}

bool is_decisive(double bf, const BFPriors& p)
{
    return bf < p.threshold;
}

}  // namespace adaptrial::stopping
