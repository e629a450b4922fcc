#pragma once

#include <Eigen/Dense>
#include <utility>

namespace adaptrial::dlm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Univariate-observation DLM: y_t = F' theta_t + v_t, theta_t = G theta_{t-1} + w_t.
struct ModelSpec {
    Matrix G;   ///< p x p evolution matrix
    Matrix W;   ///< p x p evolution covariance
    double V;   ///< observational variance

    Eigen::Index state_dim() const { return G.rows(); }

    /// G = I, W = omega * I.
    static ModelSpec random_walk(Eigen::Index p, double omega, double V);
};

/// Posterior (m_t, C_t).
struct StateEstimate {
    Vector m;
    Matrix C;
};

/// Prior for the next state (a_t, R_t).
struct PriorState {
    Vector a;
    Matrix R;
};

/// One-step-ahead predictive N(f, Q).
struct Forecast {
    double f;
    double Q;
};

/// Throws ConfigError on a bad model (shape, W not PSD, V <= 0, non-finite).
void validate(const ModelSpec& spec);

PriorState predict_state(const ModelSpec& spec, const StateEstimate& state);

Forecast forecast_obs(const Vector& F, const PriorState& prior, double V);

/// Kalman update with C = R - Q A A'. `fc` must be the forecast built from (F, prior, V).
StateEstimate update(const PriorState& prior, const Vector& F, const Forecast& fc, double y);

/// Same posterior computed in Joseph form, (I - A F') R (I - A F')' + V A A'.
StateEstimate update_joseph(const PriorState& prior, const Vector& F, double V,
                            const Forecast& fc, double y);

/// predict_state -> forecast_obs -> update. The forecast is the one made before seeing y.
std::pair<StateEstimate, Forecast> step(const ModelSpec& spec, const StateEstimate& state,
                                        const Vector& F, double y);

/// (M + M') / 2
Matrix symmetrize(const Matrix& M);

}  // namespace adaptrial::dlm
