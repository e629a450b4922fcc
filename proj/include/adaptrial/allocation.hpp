#pragma once

#include <string_view>

#include "adaptrial/dlm.hpp"

namespace adaptrial {

enum class Arm { A, B };

/// SqrtRatio weights by Q_A sqrt(f_B) against Q_B sqrt(f_A); NormalCdf by Phi of the
/// standardized forecast gap.
enum class Rule { SqrtRatio, NormalCdf };

/// How DLM forecast variances are fed into the weight formulas.
enum class QScale { Sd, Var };

std::string_view to_string(Arm arm);
std::string_view to_string(Rule rule);
std::string_view to_string(QScale scale);
Rule parse_rule(std::string_view text);
QScale parse_q_scale(std::string_view text);
Arm parse_arm(std::string_view text);

namespace allocation {

/// Predictive means and spread terms for both arms, on the scale the rules consume.
struct ArmForecasts {
    double fA;
    double fB;
    double QA;
    double QB;
};

struct AllocationWeight {
    double wA;
    double wB;
    Rule rule;
};

/// Arm A -> [1, 0, 0], arm B -> [1, 1, x].
dlm::Vector design_vector(Arm arm, double x);

/// Converts DLM forecasts to rule inputs; `Sd` feeds sqrt(Q).
ArmForecasts arm_forecasts(const dlm::Forecast& a, const dlm::Forecast& b, QScale scale);

AllocationWeight weight_sqrt_ratio(const ArmForecasts& af);
AllocationWeight weight_normal_cdf(const ArmForecasts& af);
AllocationWeight compute_weight(Rule rule, const ArmForecasts& af);

/// Arm A iff u < wA. Throws ArgumentError unless 0 <= u < 1.
Arm assign(const AllocationWeight& w, double u);

}  // namespace allocation
}  // namespace adaptrial
