#include "lindiff/lindiff.h"

#include <cstdlib>
#include <cstring>
#include <optional>
#include <string>

#include "lindiff/covariance.hpp"
#include "lindiff/csv.hpp"
#include "lindiff/denoiser.hpp"
#include "lindiff/errors.hpp"
#include "lindiff/experiments.hpp"
#include "lindiff/metrics.hpp"
#include "lindiff/replica.hpp"
#include "lindiff/sampler.hpp"
#include "lindiff/schedule.hpp"

using namespace lindiff;

struct ld_covariance {
    SpectralCovariance model;
};
struct ld_stats {
    EmpiricalStats stats;
};
struct ld_schedule {
    NoiseSchedule schedule;
};
struct ld_denoiser {
    LinearDenoiser denoiser;
};

namespace {

thread_local std::string g_last_error;

int record(const std::exception& error, int code) {
    g_last_error = error.what();
    return code;
}

// Translate the C++ error taxonomy into C codes; unexpected exceptions map to
// LD_ERR_DOMAIN with their message preserved.
template <typename Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return LD_OK;
    } catch (const config_error& e) {
        return record(e, LD_ERR_CONFIG);
    } catch (const solver_error& e) {
        return record(e, LD_ERR_SOLVER);
    } catch (const parse_error& e) {
        g_last_error = std::string(e.what()) + " (row " + std::to_string(e.row) +
                       ", column " + std::to_string(e.col) + ")";
        return LD_ERR_PARSE;
    } catch (const io_error& e) {
        return record(e, LD_ERR_IO);
    } catch (const std::exception& e) {
        return record(e, LD_ERR_DOMAIN);
    }
}

template <typename Handle, typename Fn>
Handle* guarded_create(Fn&& fn) {
    try {
        auto* handle = fn();
        g_last_error.clear();
        return handle;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return nullptr;
    }
}

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
map_matrix(const double* data, long rows, long cols) {
    return {data, rows, cols};
}

void copy_out(const Eigen::MatrixXd& m, double* out) {
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        out, m.rows(), m.cols()) = m;
}

Objective to_objective(int objective) {
    if (objective == LD_OBJECTIVE_NOISE) return Objective::NoisePrediction;
    if (objective == LD_OBJECTIVE_DATA) return Objective::DataPrediction;
    throw domain_error("invalid objective code");
}

GammaCoupling to_coupling(int coupling) {
    if (coupling == LD_COUPLING_ALPHABAR) return GammaCoupling::AlphaBar;
    if (coupling == LD_COUPLING_SQRT_ALPHABAR) return GammaCoupling::SqrtAlphaBar;
    throw domain_error("invalid coupling code");
}

SigmaChoice to_sigma(int sigma_choice) {
    if (sigma_choice == LD_SIGMA_ZERO) return SigmaChoice::Zero;
    if (sigma_choice == LD_SIGMA_MATCH_BETA) return SigmaChoice::MatchBeta;
    throw domain_error("invalid sigma choice");
}

Eigen::VectorXd spectrum_vector(const double* eigenvalues, int d) {
    if (!eigenvalues || d < 1) throw domain_error("null or empty spectrum");
    return Eigen::Map<const Eigen::VectorXd>(eigenvalues, d);
}

} // namespace

extern "C" {

const char* ld_version(void) { return "lindiff 1.0.0"; }

const char* ld_last_error(void) { return g_last_error.c_str(); }

int ld_powerlaw_spectrum(int d, double k, double* out) {
    return guarded([&] {
        if (!out) throw domain_error("null output buffer");
        Eigen::Map<Eigen::VectorXd>(out, d) = make_powerlaw_spectrum(d, k);
    });
}

ld_covariance* ld_covariance_create(int d, const double* eigenvalues,
                                    const double* basis, const double* mean) {
    return guarded_create<ld_covariance>([&] {
        SpectralCovariance model;
        model.eigenvalues = spectrum_vector(eigenvalues, d);
        model.basis = basis ? Eigen::MatrixXd(map_matrix(basis, d, d))
                            : Eigen::MatrixXd(Eigen::MatrixXd::Identity(d, d));
        model.mean = mean ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(mean, d))
                          : Eigen::VectorXd(Eigen::VectorXd::Zero(d));
        model.validate();
        return new ld_covariance{std::move(model)};
    });
}

ld_covariance* ld_covariance_powerlaw(int d, double k) {
    return guarded_create<ld_covariance>(
        [&] { return new ld_covariance{make_powerlaw_covariance(d, k)}; });
}

void ld_covariance_free(ld_covariance* model) { delete model; }

int ld_covariance_dim(const ld_covariance* model) {
    return model ? static_cast<int>(model->model.dim()) : 0;
}

int ld_sample_gaussian(const ld_covariance* model, long n, uint64_t seed,
                       double* out) {
    return guarded([&] {
        if (!model || !out) throw domain_error("null argument");
        copy_out(sample_gaussian(model->model, n, seed), out);
    });
}

ld_stats* ld_stats_from_data(const double* data, long n, int d, int centered) {
    return guarded_create<ld_stats>([&] {
        if (!data || n < 1 || d < 1) throw domain_error("invalid data matrix");
        const Eigen::MatrixXd m = map_matrix(data, n, d);
        return new ld_stats{centered ? empirical_stats(m) : moment_stats(m)};
    });
}

ld_stats* ld_stats_create(int d, long sample_count, const double* eigenvalues,
                          const double* basis, const double* mean) {
    return guarded_create<ld_stats>([&] {
        EmpiricalStats stats;
        stats.sample_count = sample_count;
        stats.cov_eigenvalues = spectrum_vector(eigenvalues, d);
        stats.cov_basis = basis ? Eigen::MatrixXd(map_matrix(basis, d, d))
                                : Eigen::MatrixXd(Eigen::MatrixXd::Identity(d, d));
        stats.mean = mean ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(mean, d))
                          : Eigen::VectorXd(Eigen::VectorXd::Zero(d));
        return new ld_stats{std::move(stats)};
    });
}

void ld_stats_free(ld_stats* stats) { delete stats; }

int ld_stats_dim(const ld_stats* stats) {
    return stats ? static_cast<int>(stats->stats.dim()) : 0;
}

int ld_stats_eigenvalues(const ld_stats* stats, double* out) {
    return guarded([&] {
        if (!stats || !out) throw domain_error("null argument");
        Eigen::Map<Eigen::VectorXd>(out, stats->stats.dim()) =
            stats->stats.cov_eigenvalues;
    });
}

int ld_stats_mean(const ld_stats* stats, double* out) {
    return guarded([&] {
        if (!stats || !out) throw domain_error("null argument");
        Eigen::Map<Eigen::VectorXd>(out, stats->stats.dim()) = stats->stats.mean;
    });
}

ld_schedule* ld_make_schedule(int steps, double zeta_total, double c, int coupling) {
    return guarded_create<ld_schedule>([&] {
        return new ld_schedule{make_schedule(steps, zeta_total, c, to_coupling(coupling))};
    });
}

ld_schedule* ld_schedule_from_alpha_bar(const double* alpha_bar, int steps, double c,
                                        int coupling) {
    return guarded_create<ld_schedule>([&] {
        if (!alpha_bar || steps < 2) throw domain_error("invalid alpha_bar vector");
        return new ld_schedule{schedule_from_alpha_bar(
            Eigen::Map<const Eigen::VectorXd>(alpha_bar, steps), c,
            to_coupling(coupling))};
    });
}

void ld_schedule_free(ld_schedule* schedule) { delete schedule; }

int ld_schedule_steps(const ld_schedule* schedule) {
    return schedule ? schedule->schedule.steps() : 0;
}

int ld_schedule_alpha_bar(const ld_schedule* schedule, double* out) {
    return guarded([&] {
        if (!schedule || !out) throw domain_error("null argument");
        Eigen::Map<Eigen::VectorXd>(out, schedule->schedule.steps()) =
            schedule->schedule.alpha_bar;
    });
}

int ld_schedule_gamma(const ld_schedule* schedule, double* out) {
    return guarded([&] {
        if (!schedule || !out) throw domain_error("null argument");
        Eigen::Map<Eigen::VectorXd>(out, schedule->schedule.steps()) =
            schedule->schedule.gamma;
    });
}

ld_denoiser* ld_optimal_denoiser(const ld_stats* stats, const ld_schedule* schedule,
                                 int objective) {
    return guarded_create<ld_denoiser>([&] {
        if (!stats || !schedule) throw domain_error("null argument");
        return new ld_denoiser{
            to_objective(objective) == Objective::NoisePrediction
                ? optimal_noise_denoiser(stats->stats, schedule->schedule)
                : optimal_data_denoiser(stats->stats, schedule->schedule)};
    });
}

void ld_denoiser_free(ld_denoiser* denoiser) { delete denoiser; }

int ld_denoiser_weights(const ld_denoiser* denoiser, double* out) {
    return guarded([&] {
        if (!denoiser || !out) throw domain_error("null argument");
        copy_out(denoiser->denoiser.weights, out);
    });
}

int ld_residual_loss(const ld_stats* stats, const ld_schedule* schedule,
                     int objective, double* out) {
    return guarded([&] {
        if (!stats || !schedule || !out) throw domain_error("null argument");
        *out = residual_loss(stats->stats, schedule->schedule, to_objective(objective));
    });
}

int ld_test_loss(const ld_denoiser* denoiser, const ld_covariance* truth,
                 double* out) {
    return guarded([&] {
        if (!denoiser || !truth || !out) throw domain_error("null argument");
        *out = test_loss(denoiser->denoiser, truth->model);
    });
}

ld_denoiser* ld_gradient_flow_denoiser(const ld_stats* stats,
                                       const ld_schedule* schedule, double tau,
                                       double learning_rate, int objective) {
    return guarded_create<ld_denoiser>([&] {
        if (!stats || !schedule) throw domain_error("null argument");
        TrainingState state;
        state.tau = tau;
        state.learning_rate = learning_rate;
        return new ld_denoiser{gradient_flow_weights(
            stats->stats, schedule->schedule, state, to_objective(objective))};
    });
}

int ld_sample_iterative(const ld_denoiser* denoiser, long count, uint64_t seed,
                        int sigma_choice, double* out) {
    return guarded([&] {
        if (!denoiser || !out) throw domain_error("null argument");
        copy_out(sample_iterative(denoiser->denoiser, count, seed,
                                  to_sigma(sigma_choice)),
                 out);
    });
}

int ld_sample_one_step(const ld_stats* stats, long count, uint64_t seed, double* out) {
    return guarded([&] {
        if (!stats || !out) throw domain_error("null argument");
        copy_out(sample_one_step(stats->stats, count, seed), out);
    });
}

int ld_predicted_sample_stats(const ld_stats* stats, const ld_schedule* schedule,
                              double s, int sigma_choice, double* variances_out,
                              double* mean_out) {
    return guarded([&] {
        if (!stats || !schedule) throw domain_error("null argument");
        const SampleStatistics pred = predicted_sample_stats(
            stats->stats, schedule->schedule, s, to_sigma(sigma_choice));
        if (variances_out)
            Eigen::Map<Eigen::VectorXd>(variances_out, pred.cov_eigenvalues.size()) =
                pred.cov_eigenvalues;
        if (mean_out)
            Eigen::Map<Eigen::VectorXd>(mean_out, pred.mean.size()) = pred.mean;
    });
}

int ld_solve_q(const double* eigenvalues, int d, long sample_count, double c,
               double tol, double* q_out, double* g_bar_out) {
    return guarded([&] {
        SolveOptions options;
        if (tol > 0.0) options.tol = tol;
        const ReplicaSolution sol =
            solve_q(ReplicaInput{spectrum_vector(eigenvalues, d), sample_count, c},
                    options);
        if (q_out) *q_out = sol.q;
        if (g_bar_out) *g_bar_out = sol.g_bar;
    });
}

int ld_q_bound_series(const double* eigenvalues, int d, long sample_count, double c,
                      int n, double* out) {
    return guarded([&] {
        if (!out) throw domain_error("null output");
        *out = q_bound_series(
            ReplicaInput{spectrum_vector(eigenvalues, d), sample_count, c}, n);
    });
}

int ld_predict_dkl(const double* eigenvalues, int d, long sample_count, double c,
                   double* out) {
    return guarded([&] {
        if (!out) throw domain_error("null output");
        *out = predict_dkl(
            ReplicaInput{spectrum_vector(eigenvalues, d), sample_count, c});
    });
}

int ld_empirical_dkl(const ld_covariance* truth, const ld_stats* stats, double c,
                     double* out) {
    return guarded([&] {
        if (!truth || !stats || !out) throw domain_error("null argument");
        *out = empirical_dkl(truth->model, stats->stats, c);
    });
}

int ld_predict_losses(const double* eigenvalues, int d, long sample_count,
                      const ld_schedule* schedule, double* residual_out,
                      double* test_out) {
    return guarded([&] {
        if (!schedule) throw domain_error("null schedule");
        const LossPrediction pred = predict_losses(spectrum_vector(eigenvalues, d),
                                                   sample_count, schedule->schedule);
        if (residual_out) *residual_out = pred.residual;
        if (test_out) *test_out = pred.test;
    });
}

int ld_predict_delta_epsilon(const double* eigenvalues, int d, long sample_count,
                             const ld_schedule* schedule, double* out) {
    return guarded([&] {
        if (!schedule || !out) throw domain_error("null argument");
        *out = predict_delta_epsilon(spectrum_vector(eigenvalues, d), sample_count,
                                     schedule->schedule);
    });
}

int ld_load_data_matrix(const char* path, double** out, long* n_out, int* d_out) {
    return guarded([&] {
        if (!path || !out || !n_out || !d_out) throw domain_error("null argument");
        const Eigen::MatrixXd m = load_data_matrix(path);
        auto* buffer = static_cast<double*>(
            std::malloc(sizeof(double) * static_cast<std::size_t>(m.size())));
        if (!buffer) throw io_error("allocation failed");
        copy_out(m, buffer);
        *out = buffer;
        *n_out = static_cast<long>(m.rows());
        *d_out = static_cast<int>(m.cols());
    });
}

int ld_write_data_matrix(const char* path, const double* data, long n, int d) {
    return guarded([&] {
        if (!path || !data || n < 1 || d < 1) throw domain_error("invalid matrix");
        write_data_matrix(path, map_matrix(data, n, d));
    });
}

void ld_buffer_free(double* buffer) { std::free(buffer); }

int ld_run_experiment(const char* subcommand, const char* config_path,
                      int has_seed, uint64_t seed, const char* out_path,
                      int threads) {
    return guarded([&] {
        if (!subcommand || !config_path) throw config_error("missing subcommand or config");
        run_experiment(subcommand, config_path,
                       has_seed ? std::optional<uint64_t>(seed) : std::nullopt,
                       out_path ? std::optional<std::string>(out_path) : std::nullopt,
                       threads > 0 ? std::optional<int>(threads) : std::nullopt);
    });
}

} // extern "C"
