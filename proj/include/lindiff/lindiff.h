/* C interface to the linear-diffusion library. All functions return LD_OK or
 * an error code; ld_last_error() describes the most recent failure on the
 * calling thread. Handles are opaque and freed with their ld_*_free function.
 * Matrices are row-major doubles; callers own all buffers they pass. */

#ifndef LINDIFF_H
#define LINDIFF_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define LD_OK 0
#define LD_ERR_DOMAIN 1  /* invalid arguments, rank defects, bad dimensions */
#define LD_ERR_CONFIG 2  /* config files, unknown subcommands */
#define LD_ERR_SOLVER 3  /* fixed point or susceptibility failures */
#define LD_ERR_PARSE 4   /* malformed data files */
#define LD_ERR_IO 5      /* filesystem failures */

#define LD_OBJECTIVE_NOISE 0
#define LD_OBJECTIVE_DATA 1

#define LD_SIGMA_ZERO 0
#define LD_SIGMA_MATCH_BETA 1

#define LD_COUPLING_ALPHABAR 0
#define LD_COUPLING_SQRT_ALPHABAR 1

typedef struct ld_covariance ld_covariance;
typedef struct ld_stats ld_stats;
typedef struct ld_schedule ld_schedule;
typedef struct ld_denoiser ld_denoiser;

const char* ld_version(void);
const char* ld_last_error(void);

/* ---- covariance models ------------------------------------------------- */

/* out: d eigenvalues of the normalized power law, sorted descending. */
int ld_powerlaw_spectrum(int d, double k, double* out);

/* basis (d*d col-per-eigenvector, row-major) and mean may be NULL for the
 * identity basis / zero mean. */
ld_covariance* ld_covariance_create(int d, const double* eigenvalues,
                                    const double* basis, const double* mean);
ld_covariance* ld_covariance_powerlaw(int d, double k);
void ld_covariance_free(ld_covariance* model);
int ld_covariance_dim(const ld_covariance* model);

/* out holds n*d row-major samples. */
int ld_sample_gaussian(const ld_covariance* model, long n, uint64_t seed,
                       double* out);

/* ---- sample statistics -------------------------------------------------- */

/* centered != 0: mean-centered covariance (1/N); centered == 0: second moment
 * about the origin (the ensemble the replica theory averages over). */
ld_stats* ld_stats_from_data(const double* data, long n, int d, int centered);
ld_stats* ld_stats_create(int d, long sample_count, const double* eigenvalues,
                          const double* basis, const double* mean);
void ld_stats_free(ld_stats* stats);
int ld_stats_dim(const ld_stats* stats);
int ld_stats_eigenvalues(const ld_stats* stats, double* out);
int ld_stats_mean(const ld_stats* stats, double* out);

/* ---- noise schedule ------------------------------------------------------ */

ld_schedule* ld_make_schedule(int steps, double zeta_total, double c, int coupling);
ld_schedule* ld_schedule_from_alpha_bar(const double* alpha_bar, int steps, double c,
                                        int coupling);
void ld_schedule_free(ld_schedule* schedule);
int ld_schedule_steps(const ld_schedule* schedule);
int ld_schedule_alpha_bar(const ld_schedule* schedule, double* out);
int ld_schedule_gamma(const ld_schedule* schedule, double* out);

/* ---- denoisers and losses ------------------------------------------------ */

ld_denoiser* ld_optimal_denoiser(const ld_stats* stats, const ld_schedule* schedule,
                                 int objective);
void ld_denoiser_free(ld_denoiser* denoiser);
/* out holds steps*d weights, row-major over (t, mode). */
int ld_denoiser_weights(const ld_denoiser* denoiser, double* out);
int ld_residual_loss(const ld_stats* stats, const ld_schedule* schedule,
                     int objective, double* out);
int ld_test_loss(const ld_denoiser* denoiser, const ld_covariance* truth,
                 double* out);

/* Gradient-flow weights at training time tau (centered statistics only). */
ld_denoiser* ld_gradient_flow_denoiser(const ld_stats* stats,
                                       const ld_schedule* schedule, double tau,
                                       double learning_rate, int objective);

/* ---- sampling ------------------------------------------------------------ */

int ld_sample_iterative(const ld_denoiser* denoiser, long count, uint64_t seed,
                        int sigma_choice, double* out);
int ld_sample_one_step(const ld_stats* stats, long count, uint64_t seed, double* out);
/* Per-mode predicted variance at denoising time s, plus the predicted mean. */
int ld_predicted_sample_stats(const ld_stats* stats, const ld_schedule* schedule,
                              double s, int sigma_choice, double* variances_out,
                              double* mean_out);

/* ---- replica predictions -------------------------------------------------- */

int ld_solve_q(const double* eigenvalues, int d, long sample_count, double c,
               double tol, double* q_out, double* g_bar_out);
int ld_q_bound_series(const double* eigenvalues, int d, long sample_count, double c,
                      int n, double* out);
/* (1/d) averaged DKL, Eq.-7 style closed form. */
int ld_predict_dkl(const double* eigenvalues, int d, long sample_count, double c,
                   double* out);
/* Single-draw Gaussian DKL (not 1/d normalized). */
int ld_empirical_dkl(const ld_covariance* truth, const ld_stats* stats, double c,
                     double* out);
int ld_predict_losses(const double* eigenvalues, int d, long sample_count,
                      const ld_schedule* schedule, double* residual_out,
                      double* test_out);
int ld_predict_delta_epsilon(const double* eigenvalues, int d, long sample_count,
                             const ld_schedule* schedule, double* out);

/* ---- data files and experiments ------------------------------------------- */

/* On success *out is malloc'd (n*d row-major) and owned by the caller via
 * ld_buffer_free. */
int ld_load_data_matrix(const char* path, double** out, long* n_out, int* d_out);
int ld_write_data_matrix(const char* path, const double* data, long n, int d);
void ld_buffer_free(double* buffer);

/* Subcommands: sweep-dkl, loss-curves, compare-objectives, spectrum.
 * seed/out/threads override the config when has_* is non-zero. The returned
 * code doubles as the CLI exit code (0, 2 = config, 3 = solver). */
int ld_run_experiment(const char* subcommand, const char* config_path,
                      int has_seed, uint64_t seed, const char* out_path,
                      int threads);

#ifdef __cplusplus
}
#endif

#endif /* LINDIFF_H */
