#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lindiff/covariance.hpp"
#include "lindiff/schedule.hpp"

namespace lindiff {

enum class Objective { NoisePrediction, DataPrediction };

// Per-timestep affine map, diagonal in its eigenbasis by representation:
// noise prediction   eps(x, t) = E diag(w_t) E^T (x - sqrt(abar_t) mean)
// data prediction    f(x, t)   = E diag(v_t) E^T x + r_t,
//                    r_t = mean - sqrt(abar_t) E diag(v_t) E^T mean
// weights is T x d (row t-1 holds the step-t diagonal).
struct LinearDenoiser {
    Objective objective = Objective::NoisePrediction;
    NoiseSchedule schedule;
    Eigen::MatrixXd basis;
    Eigen::MatrixXd weights;
    Eigen::VectorXd mean;

    Eigen::Index dim() const { return basis.rows(); }

    // Prediction for one input at noising step t (1-based).
    Eigen::VectorXd apply(const Eigen::VectorXd& x, int t) const;

    // Same, with x already expressed in the denoiser basis.
    Eigen::VectorXd apply_in_basis(const Eigen::VectorXd& x_coords, int t) const;
};

// b* = mu0, w*_{nu,t} = sqrt(1-abar)/(abar lam0 + 1 - abar + gamma).
LinearDenoiser optimal_noise_denoiser(const EmpiricalStats& stats,
                                      const NoiseSchedule& schedule);

// v*_{nu,t} = sqrt(abar) lam0/(abar lam0 + 1 - abar + gamma); gamma enters as
// the analogous ridge on V_t (zero gamma reproduces the unregularized form).
LinearDenoiser optimal_data_denoiser(const EmpiricalStats& stats,
                                     const NoiseSchedule& schedule);

// Minimal training loss of the affine family, 1/(dT) normalized.
double residual_loss(const EmpiricalStats& stats, const NoiseSchedule& schedule,
                     Objective objective);

// Training objective (including the gamma ||W||^2 term) of an arbitrary
// denoiser on the given statistics; exact quadratic expansion, no sampling.
double train_loss(const LinearDenoiser& denoiser, const EmpiricalStats& stats);

// Expected loss on fresh data from the ground truth, same regularization
// convention as train_loss, evaluable at any weights.
double test_loss(const LinearDenoiser& denoiser, const SpectralCovariance& truth);

struct TrainingState {
    double tau = 0.0;
    double learning_rate = 1.0;
    std::optional<Eigen::MatrixXd> init_weights; // T x d, default zeros

    // Exponential relaxation rate of mode nu at step t.
    static double rate(double eta, int d, int steps, double abar, double lam0,
                       double gamma) {
        return 2.0 * eta / (static_cast<double>(d) * steps) *
               (abar * lam0 + 1.0 - abar + gamma);
    }
};

// Full-batch gradient-flow weights w(tau) = w* + exp(-rate tau) (w(0) - w*).
// Requires centered statistics (mu0 = 0); both objectives relax at the same
// per-mode rates.
LinearDenoiser gradient_flow_weights(const EmpiricalStats& stats,
                                     const NoiseSchedule& schedule,
                                     const TrainingState& state, Objective objective);

// Exact d/dtau of test_loss(w(tau)) - train_loss(w(tau)) for the noise
// objective under gradient flow from the given state (centered data).
double loss_gap_derivative(const EmpiricalStats& stats, const SpectralCovariance& truth,
                           const NoiseSchedule& schedule, const TrainingState& state);

// Train/test losses along a whole tau grid (zero-init gradient flow, centered
// data); the cross-basis energies are computed once, so a grid evaluation is
// O(T d) per point. per_t_test, when given, receives one column per requested
// timestep slice of the test loss (its per-mode average at that t).
struct LossCurves {
    Eigen::VectorXd train;
    Eigen::VectorXd test;
};

LossCurves gradient_flow_loss_curves(const EmpiricalStats& stats,
                                     const SpectralCovariance& truth,
                                     const NoiseSchedule& schedule, double eta,
                                     const std::vector<double>& taus,
                                     Objective objective,
                                     const std::vector<int>& t_slices = {},
                                     Eigen::MatrixXd* per_t_test = nullptr);

} // namespace lindiff
