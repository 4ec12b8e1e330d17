#pragma once

#include <Eigen/Dense>

namespace lindiff {

// How the per-timestep ridge strength couples to the schedule. AlphaBar
// (gamma_t = c abar_t) turns the optimal denoiser into the unregularized one
// for Sigma_0 + c Id exactly; SqrtAlphaBar (gamma_t = c sqrt(abar_t)) is the
// alternative coupling stated elsewhere in the derivations.
enum class GammaCoupling { AlphaBar, SqrtAlphaBar };

// Discrete noising schedule abar_t = exp(-zeta(t/T)), t = 1..T, with abar_0 = 1.
// beta, sigma, gamma are stored per step; sigma defaults to sqrt(beta) and is
// configurable post hoc.
struct NoiseSchedule {
    Eigen::VectorXd alpha_bar;
    Eigen::VectorXd beta;
    Eigen::VectorXd sigma;
    Eigen::VectorXd gamma;
    double reg_scale = 0.0;
    GammaCoupling coupling = GammaCoupling::AlphaBar;
    // Knots of zeta(u) = -ln abar(u) at u = t/T; zeta(0) = 0. Used for the
    // continuous-time view.
    Eigen::VectorXd zeta_knots;

    int steps() const { return static_cast<int>(alpha_bar.size()); }

    // Effective SNR alphahat_t = abar_t / (1 - abar_t + gamma_t).
    Eigen::VectorXd alpha_hat() const;

    // Continuous-time abar(u), u in [0,1]; linear interpolation of zeta between
    // knots, exact at the endpoints and at the grid.
    double alpha_bar_at(double u) const;

    // Hard invariants: strict decrease, ranges, product consistency
    // abar_t = prod(1 - beta_s) within 1e-12. Closeness of the endpoints to
    // 1 and 0 is a property of default construction, not enforced here.
    void validate() const;

    void set_sigma_zero() { sigma.setZero(); }
    void set_sigma_match_beta() { sigma = beta.cwiseSqrt(); }
};

// Wrapper for the alphahat view.
struct EffectiveSNR {
    Eigen::VectorXd alpha_hat;
};

EffectiveSNR effective_snr(const NoiseSchedule& schedule);

// Linear beta-hat profile b0 + (b1 - b0) u with integral zeta_total, b1/b0
// fixed at 200 (the usual DDPM-style ramp). gamma_t = c abar_t by default.
NoiseSchedule make_schedule(int steps, double zeta_total, double c,
                            GammaCoupling coupling = GammaCoupling::AlphaBar);

// Hook for a custom abar vector (strictly decreasing, in (0,1)).
NoiseSchedule schedule_from_alpha_bar(const Eigen::VectorXd& alpha_bar, double c,
                                      GammaCoupling coupling = GammaCoupling::AlphaBar);

} // namespace lindiff
