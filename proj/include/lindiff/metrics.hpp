#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "lindiff/denoiser.hpp"

namespace lindiff {

struct MonteCarloEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

// Unbiased estimate of the training objective (Eq.-3 style, including the
// gamma ||W||^2 term) over the given data with fresh noise. Each draw picks a
// uniformly random row and averages the per-step squared error over all t.
MonteCarloEstimate monte_carlo_loss(const LinearDenoiser& denoiser,
                                    const Eigen::MatrixXd& data, long noise_draws,
                                    std::uint64_t seed);

// (1/T) sum_t <|eps_a(x_t) - eps_b(x_t)|^2>/d over noised test rows; the same
// x_t is fed to both denoisers. std_error is over test rows.
MonteCarloEstimate delta_epsilon_empirical(const LinearDenoiser& a,
                                           const LinearDenoiser& b,
                                           const Eigen::MatrixXd& test_data,
                                           std::uint64_t seed);

// d_{t,nu}: per-step, per-direction relative squared difference between two
// denoisers, components taken in the supplied basis, averaged over noised test
// rows; eta keeps the denominator away from zero.
Eigen::MatrixXd mode_resolved_difference(const LinearDenoiser& a,
                                         const LinearDenoiser& b,
                                         const Eigen::MatrixXd& basis,
                                         const Eigen::MatrixXd& test_data, double eta,
                                         std::uint64_t seed);

// Cosine similarity after projecting out the drop_leading leading basis
// directions. Throws if either projection has zero norm.
double detail_similarity(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                         const Eigen::MatrixXd& basis, int drop_leading);

// For each generated row, the maximum detail similarity over training rows.
Eigen::VectorXd nearest_training_similarity(const Eigen::MatrixXd& generated,
                                            const Eigen::MatrixXd& training,
                                            const Eigen::MatrixXd& basis,
                                            int drop_leading);

} // namespace lindiff
