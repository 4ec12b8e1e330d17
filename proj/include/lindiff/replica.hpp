#pragma once

#include <Eigen/Dense>

#include "lindiff/covariance.hpp"
#include "lindiff/schedule.hpp"

namespace lindiff {

// Inputs of the self-consistency problem: spectrum of the ground truth Sigma,
// training-set size N, and the ridge c (equivalently alphahat = 1/c).
struct ReplicaInput {
    Eigen::VectorXd eigenvalues; // lambda of Sigma, sorted descending
    long sample_count = 0;       // N
    double ridge = 0.0;          // c = 1/alphahat

    Eigen::Index dim() const { return eigenvalues.size(); }
    double alpha_hat() const { return 1.0 / ridge; }
    void validate() const;
};

struct ReplicaSolution {
    double q = 0.0;
    double g_bar = 0.0;   // s(q), the averaged resolvent trace
    double residual = 0.0;
    bool unique_ok = true; // false if the dual-start check disagreed beyond 1e-8
};

struct SolveOptions {
    double tol = 1e-12;
    int max_iterations = 100000;
    bool check_uniqueness = false;
};

// Damped fixed-point iteration of q = (1/d) sum lambda / (1 + lambda N/(dq + Nc))
// from q0 = mean(lambda), omega = 0.5. Throws solver_error on non-convergence.
ReplicaSolution solve_q(const ReplicaInput& input, const SolveOptions& options = {});

// s(q) = ((d/N - 1) q + c) / ((d/N) q + c); equals the resolvent trace g_bar
// independent of the spectrum.
double s_of_q(double q, Eigen::Index d, long sample_count, double ridge);

// Upper-bound series q_0 = mean(lambda),
// q_{m+1} = ((d/N) q_m + c) (1/d) Tr[Sigma/(Sigma + ((d/N) q_m + c) Id)];
// non-increasing, q <= q_n for all n.
double q_bound_series(const ReplicaInput& input, int n);

// Training-set averaged (1/d) DKL(rho_N || rho) in closed form; requires a
// full-rank spectrum and c > 0.
double predict_dkl(const ReplicaInput& input);

// DKL(N(mu0, Sigma0 + c Id) || N(mu, Sigma)) for one draw (not 1/d normalized).
double empirical_dkl(const SpectralCovariance& truth, const EmpiricalStats& stats,
                     double c);

// Resolvent moments at one effective SNR. psi11 = (1/d)<Tr A^2> and
// psi12 = (1/d)<Tr Sigma A^2> with A = (Id + alphahat Sigma0)^-1; psi2 = s(q).
struct PsiFunctions {
    double q = 0.0;
    double psi11 = 0.0;
    double psi12 = 0.0;
    double psi2 = 0.0;
    double r0 = 0.0, r1 = 0.0, r32 = 0.0, r2 = 0.0;
};

PsiFunctions psi_functions(const ReplicaInput& input, const SolveOptions& options = {});

struct LossPrediction {
    double residual = 0.0;
    double test = 0.0;
};

// Training-set averaged residual and test loss of the optimal regularized
// denoiser, assembled from per-timestep resolvent solves.
LossPrediction predict_losses(const Eigen::VectorXd& truth_spectrum, long sample_count,
                              const NoiseSchedule& schedule);

// Averaged squared mapping difference to the infinite-data reference,
// Delta eps_N = L_test - 1 + (1/T) sum_t (1-abar)/(1-abar+gamma)
//               (1/d) Tr (Id + alphahat_t Sigma)^-1.
double predict_delta_epsilon(const Eigen::VectorXd& truth_spectrum, long sample_count,
                             const NoiseSchedule& schedule);

} // namespace lindiff
