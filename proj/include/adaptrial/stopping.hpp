#pragma once

#include <cstddef>
#include <span>

namespace adaptrial::stopping {

/// Effect-size prior of the two-sample Bayesian t-test and the decisive cutoff on BF01.
struct BFPriors {
    double lambda = 0.0;
    double sigma_delta_sq = 1.0;
    double threshold = 0.01;
};

/// Throws ConfigError unless sigma_delta_sq >= 0 and 0 < threshold < 1.
void validate(const BFPriors& p);

/// Welford accumulator for one arm's outcomes.
class RunningMoments {
public:
    void add(double y);

    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    /// Sum of squared deviations from the mean.
    double sum_sq_dev() const { return m2_; }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct TwoSampleSummary {
    std::size_t nA = 0;
    std::size_t nB = 0;
    double t = 0.0;
    double nu = 0.0;
    double n_delta = 0.0;
};

enum class SummaryStatus {
    Ready,
    NotReady,    ///< fewer than two outcomes in one arm
    Degenerate,  ///< pooled variance is zero
};

struct SummaryResult {
    SummaryStatus status;
    TwoSampleSummary summary;

    bool ready() const { return status == SummaryStatus::Ready; }
};

/// Pooled-variance t statistic for mean(A) - mean(B).
SummaryResult two_sample_summary(std::span<const double> ysA, std::span<const double> ysB);
SummaryResult two_sample_summary(const RunningMoments& a, const RunningMoments& b);

/// Location-scale Student-t density; `sigma_sq` is the squared scale.
double t_density_ls(double t, double nu, double mu, double sigma_sq);

struct BayesFactor {
    double value;
    /// Set when the log ratio left the double range; `value` then holds DBL_MAX or DBL_MIN.
    bool capped = false;
};

/// BF01 = T_nu(t | 0, 1) / T_nu(t | sqrt(n_delta) lambda, 1 + n_delta sigma_delta^2).
BayesFactor bayes_factor_01(const TwoSampleSummary& s, const BFPriors& p);

/// Strict: bf < threshold.
bool is_decisive(double bf, const BFPriors& p);

}  // namespace adaptrial::stopping
