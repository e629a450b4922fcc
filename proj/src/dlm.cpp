#include "adaptrial/dlm.hpp"

#include <cmath>
#include <string>

#include "adaptrial/error.hpp"

namespace adaptrial::dlm {

namespace {

void require_finite(const Matrix& M, const char* what)
{
    if (!M.allFinite()) {
        throw NumericError(std::string(what) + " has non-finite entries");
    }
}

}  // namespace

ModelSpec ModelSpec::random_walk(Eigen::Index p, double omega, double V)
{
    return ModelSpec{Matrix::Identity(p, p), omega * Matrix::Identity(p, p), V};
}

Matrix symmetrize(const Matrix& M)
{
    return 0.5 * (M + M.transpose());
}

void validate(const ModelSpec& spec)
{
    const auto p = spec.G.rows();
    if (p < 1 || spec.G.cols() != p) {
        throw ConfigError("G must be a non-empty square matrix");
    }
    if (spec.W.rows() != p || spec.W.cols() != p) {
        throw ConfigError("W must be " + std::to_string(p) + "x" + std::to_string(p));
    }
    if (!spec.G.allFinite() || !spec.W.allFinite() || !std::isfinite(spec.V)) {
        throw ConfigError("model spec has non-finite entries");
    }
    if (!(spec.V > 0.0)) {
        throw ConfigError("observational variance V must be positive");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(spec.W), Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10) {
        throw ConfigError("evolution covariance W is not positive semi-definite");
    }
}

PriorState predict_state(const ModelSpec& spec, const StateEstimate& state)
{
    const auto p = spec.state_dim();
    if (state.m.size() != p || state.C.rows() != p || state.C.cols() != p) {
        throw ConfigError("state dimension does not match model spec (p=" + std::to_string(p) + ")");
    }
    PriorState prior{spec.G * state.m,
                     symmetrize(spec.G * state.C * spec.G.transpose() + spec.W)};
    require_finite(prior.a, "prior mean");
    require_finite(prior.R, "prior covariance");
    return prior;
}

Forecast forecast_obs(const Vector& F, const PriorState& prior, double V)
{
    if (F.size() != prior.a.size()) {
        throw ConfigError("design vector length does not match state dimension");
    }
    const double f = F.dot(prior.a);
    const double Q = F.dot(prior.R * F) + V;
    if (!std::isfinite(f) || !std::isfinite(Q)) {
        throw NumericError("non-finite forecast");
    }
    if (!(Q > 0.0)) {
        throw NumericError("non-positive forecast variance Q=" + std::to_string(Q));
    }
    return {f, Q};
}

StateEstimate update(const PriorState& prior, const Vector& F, const Forecast& fc, double y)
{
    if (!(fc.Q > 0.0)) {
        throw NumericError("non-positive forecast variance Q=" + std::to_string(fc.Q));
    }
    const double e = y - fc.f;
    const Vector A = prior.R * F / fc.Q;
    StateEstimate post{prior.a + A * e, symmetrize(prior.R - fc.Q * A * A.transpose())};
    require_finite(post.m, "posterior mean");
    require_finite(post.C, "posterior covariance");
    return post;
}

StateEstimate update_joseph(const PriorState& prior, const Vector& F, double V,
                            const Forecast& fc, double y)
{
    if (!(fc.Q > 0.0)) {
        throw NumericError("non-positive forecast variance Q=" + std::to_string(fc.Q));
    }
    const auto p = prior.a.size();
    const double e = y - fc.f;
    const Vector A = prior.R * F / fc.Q;
    const Matrix K = Matrix::Identity(p, p) - A * F.transpose();
    StateEstimate post{prior.a + A * e,
                       symmetrize(K * prior.R * K.transpose() + V * A * A.transpose())};
    require_finite(post.m, "posterior mean");
    require_finite(post.C, "posterior covariance");
    return post;
}

std::pair<StateEstimate, Forecast> step(const ModelSpec& spec, const StateEstimate& state,
                                        const Vector& F, double y)
{
    const PriorState prior = predict_state(spec, state);
    const Forecast fc = forecast_obs(F, prior, spec.V);
    return {update(prior, F, fc, y), fc};
}

}  // namespace adaptrial::dlm
