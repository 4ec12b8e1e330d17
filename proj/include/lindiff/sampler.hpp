#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "lindiff/covariance.hpp"
#include "lindiff/denoiser.hpp"
#include "lindiff/schedule.hpp"

namespace lindiff {

enum class SigmaChoice { Zero, MatchBeta };

// Closed-form mean and per-mode variance of the reverse process at denoising
// time s in [0,1]; cov_eigenvalues are reported in the e0 basis, aligned with
// the stats ordering (not re-sorted).
struct SampleStatistics {
    Eigen::VectorXd mean;
    Eigen::VectorXd cov_eigenvalues;
    double s = 0.0;
};

// Reverse iteration u_{s+1} = mu_theta(u_s, T - s) + sigma_{T-s} xi from
// u_0 ~ N(0, Id), with mu_theta the predict-x0-then-renoise map. MatchBeta uses
// sigma_t = sqrt(beta_t) except at the final step, which adds no noise.
// Trajectories are seeded independently, so any split over samples reproduces
// the serial fill.
Eigen::MatrixXd sample_iterative(const LinearDenoiser& denoiser, Eigen::Index count,
                                 std::uint64_t seed, SigmaChoice sigma_choice);

// Exact Gaussian generator u = mu0 + sqrt(Sigma0) z with the same limiting
// statistics as the iterative process.
Eigen::MatrixXd sample_one_step(const EmpiricalStats& stats, Eigen::Index count,
                                std::uint64_t seed);

// Continuous-time solution of the sampling SDE per mode; with regularization c
// every lambda0 is replaced by lambda0 + c.
SampleStatistics predicted_sample_stats(const EmpiricalStats& stats,
                                        const NoiseSchedule& schedule, double s,
                                        SigmaChoice sigma_choice);

} // namespace lindiff
