#include "adaptrial/allocation.hpp"

#include <cmath>
#include <string>

#include "adaptrial/error.hpp"
#include "adaptrial/special.hpp"

namespace adaptrial {

std::string_view to_string(Arm arm)
{
    return arm == Arm::A ? "A" : "B";
}

std::string_view to_string(Rule rule)
{
    return rule == Rule::SqrtRatio ? "sqrt_ratio" : "normal_cdf";
}

std::string_view to_string(QScale scale)
{
    return scale == QScale::Sd ? "sd" : "var";
}

Rule parse_rule(std::string_view text)
{
    if (text == "sqrt_ratio") return Rule::SqrtRatio;
    if (text == "normal_cdf") return Rule::NormalCdf;
    throw ConfigError("unknown rule '" + std::string(text) + "' (expected sqrt_ratio or normal_cdf)");
}

QScale parse_q_scale(std::string_view text)
{
    if (text == "sd") return QScale::Sd;
    if (text == "var") return QScale::Var;
    throw ConfigError("unknown q_scale '" + std::string(text) + "' (expected sd or var)");
}

Arm parse_arm(std::string_view text)
{
    if (text == "A") return Arm::A;
    if (text == "B") return Arm::B;
    throw ConfigError("unknown arm '" + std::string(text) + "'");
}

namespace allocation {

dlm::Vector design_vector(Arm arm, double x)
{
    dlm::Vector F(3);
    if (arm == Arm::A) {
        F << 1.0, 0.0, 0.0;
    } else {
        F << 1.0, 1.0, x;
    }
    return F;
}

ArmForecasts arm_forecasts(const dlm::Forecast& a, const dlm::Forecast& b, QScale scale)
{
    if (scale == QScale::Sd) {
        return {a.f, b.f, std::sqrt(a.Q), std::sqrt(b.Q)};
    }
    return {a.f, b.f, a.Q, b.Q};
}

AllocationWeight weight_sqrt_ratio(const ArmForecasts& af)
{
    AllocationWeight w{0.5, 0.5, Rule::SqrtRatio};
    // Undefined for non-positive forecast means; fall back to equal allocation.
    if (!(af.fA > 0.0) || !(af.fB > 0.0) || af.fA == af.fB) {
        return w;
    }
    const double num = af.QA * std::sqrt(af.fB);
    const double other = af.QB * std::sqrt(af.fA);
    const double ratio = num / other;
    const bool fires = (af.fA < af.fB && ratio > 1.0) || (af.fA > af.fB && ratio < 1.0);
    if (fires && std::isfinite(ratio)) {
        w.wA = num / (num + other);
        w.wB = other / (num + other);
    }
    return w;
}

AllocationWeight weight_normal_cdf(const ArmForecasts& af)
{
    AllocationWeight w{0.5, 0.5, Rule::NormalCdf};
    if (af.fA == af.fB) {
        return w;
    }
    const double z = (af.fB - af.fA) / std::hypot(af.QA, af.QB);
    // Evaluate the small tail once so swapping the arms mirrors the weights exactly.
    const double tail = special::std_normal_cdf(-std::fabs(z));
    w.wA = z < 0.0 ? tail : 1.0 - tail;
    w.wB = z < 0.0 ? 1.0 - tail : tail;
    return w;
}

AllocationWeight compute_weight(Rule rule, const ArmForecasts& af)
{
    return rule == Rule::SqrtRatio ? weight_sqrt_ratio(af) : weight_normal_cdf(af);
}

Arm assign(const AllocationWeight& w, double u)
{
    if (!(u >= 0.0 && u < 1.0)) {
        throw ArgumentError("assign: uniform draw must lie in [0, 1), got " + std::to_string(u));
    }
    return u < w.wA ? Arm::A : Arm::B;
}

}  // namespace allocation
}  // namespace adaptrial
