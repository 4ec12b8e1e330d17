#include "lindiff/denoiser.hpp"

#include <cmath>

#include "lindiff/errors.hpp"

namespace lindiff {

namespace {

void check_shared_dim(Eigen::Index a, Eigen::Index b, const char* what) {
    if (a != b) throw domain_error(std::string(what) + ": dimension mismatch");
}

// (e_nu)^T M2 e_nu for the denoiser basis, where M2 is the second moment of
// the evaluation distribution about the denoiser bias: Lambda-part plus the
// squared mean offset, both expressed through the basis change.
Eigen::VectorXd mode_energies(const Eigen::MatrixXd& denoiser_basis,
                              const Eigen::VectorXd& lambda,
                              const Eigen::MatrixXd& lambda_basis,
                              const Eigen::VectorXd& mean_offset) {
    const Eigen::MatrixXd overlap = denoiser_basis.transpose() * lambda_basis;
    Eigen::VectorXd energy =
        overlap.array().square().matrix() * lambda;
    const Eigen::VectorXd offset_coords = denoiser_basis.transpose() * mean_offset;
    energy.array() += offset_coords.array().square();
    return energy;
}

double quadratic_loss(const LinearDenoiser& den, const Eigen::VectorXd& lambda,
                      const Eigen::MatrixXd& lambda_basis,
                      const Eigen::VectorXd& dist_mean) {
    const Eigen::Index d = den.dim();
    const int T = den.schedule.steps();
    check_shared_dim(d, lambda.size(), "loss");
    const Eigen::VectorXd energy =
        mode_energies(den.basis, lambda, lambda_basis, dist_mean - den.mean);
    KahanSum total;
    for (int t = 0; t < T; ++t) {
        const double abar = den.schedule.alpha_bar[t];
        const double gamma = den.schedule.gamma[t];
        for (Eigen::Index nu = 0; nu < d; ++nu) {
            const double w = den.weights(t, nu);
            double term;
            if (den.objective == Objective::NoisePrediction) {
                const double fit = 1.0 - std::sqrt(1.0 - abar) * w;
                term = fit * fit + (abar * energy[nu] + gamma) * w * w;
            } else {
                const double fit = 1.0 - std::sqrt(abar) * w;
                term = fit * fit * energy[nu] + (1.0 - abar + gamma) * w * w;
            }
            total.add(term);
        }
    }
    return total.value() / (static_cast<double>(d) * T);
}

void require_centered(const EmpiricalStats& stats) {
    const double scale = 1.0 + std::sqrt(std::max(0.0, stats.cov_eigenvalues[0]));
    if (stats.mean.cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw domain_error("gradient-flow dynamics are derived for centered data "
                           "(mu0 = 0)");
}

} // namespace

Eigen::VectorXd LinearDenoiser::apply_in_basis(const Eigen::VectorXd& x_coords,
                                               int t) const {
    const double abar = schedule.alpha_bar[t - 1];
    const Eigen::VectorXd w = weights.row(t - 1);
    const Eigen::VectorXd mean_coords = basis.transpose() * mean;
    if (objective == Objective::NoisePrediction)
        return w.cwiseProduct(x_coords - std::sqrt(abar) * mean_coords);
    return w.cwiseProduct(x_coords) + mean_coords -
           std::sqrt(abar) * w.cwiseProduct(mean_coords);
}

Eigen::VectorXd LinearDenoiser::apply(const Eigen::VectorXd& x, int t) const {
    if (t < 1 || t > schedule.steps()) throw domain_error("timestep out of range");
    check_shared_dim(x.size(), dim(), "apply");
    return basis * apply_in_basis(basis.transpose() * x, t);
}

LinearDenoiser optimal_noise_denoiser(const EmpiricalStats& stats,
                                      const NoiseSchedule& schedule) {
    const Eigen::Index d = stats.dim();
    const int T = schedule.steps();
    LinearDenoiser den;
    den.objective = Objective::NoisePrediction;
    den.schedule = schedule;
    den.basis = stats.cov_basis;
    den.mean = stats.mean;
    den.weights.resize(T, d);
    for (int t = 0; t < T; ++t) {
        const double abar = schedule.alpha_bar[t];
        const double gamma = schedule.gamma[t];
        for (Eigen::Index nu = 0; nu < d; ++nu)
            den.weights(t, nu) = std::sqrt(1.0 - abar) /
                                 (abar * stats.cov_eigenvalues[nu] + 1.0 - abar + gamma);
    }
    return den;
}

LinearDenoiser optimal_data_denoiser(const EmpiricalStats& stats,
                                     const NoiseSchedule& schedule) {
    const Eigen::Index d = stats.dim();
    const int T = schedule.steps();
    LinearDenoiser den;
    den.objective = Objective::DataPrediction;
    den.schedule = schedule;
    den.basis = stats.cov_basis;
    den.mean = stats.mean;
    den.weights.resize(T, d);
    for (int t = 0; t < T; ++t) {
        const double abar = schedule.alpha_bar[t];
        const double gamma = schedule.gamma[t];
        for (Eigen::Index nu = 0; nu < d; ++nu) {
            const double lam = stats.cov_eigenvalues[nu];
            den.weights(t, nu) =
                std::sqrt(abar) * lam / (abar * lam + 1.0 - abar + gamma);
        }
    }
    return den;
}

double residual_loss(const EmpiricalStats& stats, const NoiseSchedule& schedule,
                     Objective objective) {
    const Eigen::Index d = stats.dim();
    const int T = schedule.steps();
    KahanSum total;
    for (int t = 0; t < T; ++t) {
        const double abar = schedule.alpha_bar[t];
        const double gamma = schedule.gamma[t];
        for (Eigen::Index nu = 0; nu < d; ++nu) {
            const double lam = stats.cov_eigenvalues[nu];
            const double denom = abar * lam + 1.0 - abar + gamma;
            if (objective == Objective::NoisePrediction)
                total.add((abar * lam + gamma) / denom);
            else
                total.add(lam * (1.0 - abar + gamma) / denom);
        }
    }
    return total.value() / (static_cast<double>(d) * T);
}

double train_loss(const LinearDenoiser& denoiser, const EmpiricalStats& stats) {
    return quadratic_loss(denoiser, stats.cov_eigenvalues, stats.cov_basis, stats.mean);
}

double test_loss(const LinearDenoiser& denoiser, const SpectralCovariance& truth) {
    return quadratic_loss(denoiser, truth.eigenvalues, truth.basis, truth.mean);
}

LinearDenoiser gradient_flow_weights(const EmpiricalStats& stats,
                                     const NoiseSchedule& schedule,
                                     const TrainingState& state, Objective objective) {
    require_centered(stats);
    if (state.tau < 0.0) throw domain_error("training time must be non-negative");
    const Eigen::Index d = stats.dim();
    const int T = schedule.steps();
    LinearDenoiser den = (objective == Objective::NoisePrediction)
                             ? optimal_noise_denoiser(stats, schedule)
                             : optimal_data_denoiser(stats, schedule);
    den.mean.setZero();
    if (state.init_weights &&
        (state.init_weights->rows() != T || state.init_weights->cols() != d))
        throw domain_error("init_weights must be T x d");
    for (int t = 0; t < T; ++t) {
        const double abar = schedule.alpha_bar[t];
        const double gamma = schedule.gamma[t];
        for (Eigen::Index nu = 0; nu < d; ++nu) {
            const double rate =
                TrainingState::rate(state.learning_rate, static_cast<int>(d), T, abar,
                                    stats.cov_eigenvalues[nu], gamma);
            const double w0 = state.init_weights ? (*state.init_weights)(t, nu) : 0.0;
            const double w_star = den.weights(t, nu);
            den.weights(t, nu) = w_star + std::exp(-rate * state.tau) * (w0 - w_star);
        }
    }
    return den;
}

LossCurves gradient_flow_loss_curves(const EmpiricalStats& stats,
                                     const SpectralCovariance& truth,
                                     const NoiseSchedule& schedule, double eta,
                                     const std::vector<double>& taus,
                                     Objective objective,
                                     const std::vector<int>& t_slices,
                                     Eigen::MatrixXd* per_t_test) {
    require_centered(stats);
    const Eigen::Index d = stats.dim();
    const int T = schedule.steps();
    check_shared_dim(d, truth.dim(), "loss curves");
    const Eigen::VectorXd energy =
        mode_energies(stats.cov_basis, truth.eigenvalues, truth.basis, truth.mean);
    const auto n_tau = static_cast<Eigen::Index>(taus.size());
    LossCurves curves;
    curves.train.setZero(n_tau);
    curves.test.setZero(n_tau);
    if (per_t_test)
        per_t_test->setZero(n_tau, static_cast<Eigen::Index>(t_slices.size()));
    for (int t = 0; t < T; ++t) {
        const double abar = schedule.alpha_bar[t];
        const double gamma = schedule.gamma[t];
        const double sqrt_signal =
            (objective == Objective::NoisePrediction) ? std::sqrt(1.0 - abar)
                                                      : std::sqrt(abar);
        Eigen::Index slice = -1;
        for (std::size_t j = 0; j < t_slices.size(); ++j)
            if (t_slices[j] == t + 1) slice = static_cast<Eigen::Index>(j);
        for (Eigen::Index nu = 0; nu < d; ++nu) {
            const double lam = stats.cov_eigenvalues[nu];
            const double denom = abar * lam + 1.0 - abar + gamma;
            const double w_star = (objective == Objective::NoisePrediction)
                                      ? std::sqrt(1.0 - abar) / denom
                                      : std::sqrt(abar) * lam / denom;
            const double rate = TrainingState::rate(eta, static_cast<int>(d), T, abar,
                                                    lam, gamma);
            for (Eigen::Index i = 0; i < n_tau; ++i) {
                const double w = w_star * (1.0 - std::exp(-rate * taus[i]));
                double train_term, test_term;
                if (objective == Objective::NoisePrediction) {
                    const double fit = 1.0 - sqrt_signal * w;
                    train_term = fit * fit + (abar * lam + gamma) * w * w;
                    test_term = fit * fit + (abar * energy[nu] + gamma) * w * w;
                } else {
                    const double fit = 1.0 - sqrt_signal * w;
                    train_term = fit * fit * lam + (1.0 - abar + gamma) * w * w;
                    test_term = fit * fit * energy[nu] + (1.0 - abar + gamma) * w * w;
                }
                curves.train[i] += train_term;
                curves.test[i] += test_term;
                if (slice >= 0 && per_t_test) (*per_t_test)(i, slice) += test_term;
            }
        }
    }
    const double norm = static_cast<double>(d) * T;
    curves.train /= norm;
    curves.test /= norm;
    if (per_t_test) *per_t_test /= static_cast<double>(d);
    return curves;
}

double loss_gap_derivative(const EmpiricalStats& stats, const SpectralCovariance& truth,
                           const NoiseSchedule& schedule, const TrainingState& state) {
    require_centered(stats);
    const Eigen::Index d = stats.dim();
    const int T = schedule.steps();
    check_shared_dim(d, truth.dim(), "loss_gap_derivative");
    const Eigen::VectorXd energy =
        mode_energies(stats.cov_basis, truth.eigenvalues, truth.basis, truth.mean);
    KahanSum total;
    for (int t = 0; t < T; ++t) {
        const double abar = schedule.alpha_bar[t];
        const double gamma = schedule.gamma[t];
        for (Eigen::Index nu = 0; nu < d; ++nu) {
            const double lam = stats.cov_eigenvalues[nu];
            const double w_star =
                std::sqrt(1.0 - abar) / (abar * lam + 1.0 - abar + gamma);
            const double rate = TrainingState::rate(
                state.learning_rate, static_cast<int>(d), T, abar, lam, gamma);
            const double w0 = state.init_weights ? (*state.init_weights)(t, nu) : 0.0;
            const double decay = std::exp(-rate * state.tau);
            const double w = w_star + decay * (w0 - w_star);
            // gap(tau) = (1/dT) sum abar (S - lam0) w^2, so
            // d gap/dtau = (1/dT) sum abar (S - lam0) 2 w rate (w* - w).
            total.add(abar * (energy[nu] - lam) * 2.0 * w * rate * (w_star - w));
        }
    }
    return total.value() / (static_cast<double>(d) * T);
}

} // namespace lindiff
