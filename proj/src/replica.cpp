#include "lindiff/replica.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "lindiff/errors.hpp"

namespace lindiff {

void ReplicaInput::validate() const {
    if (dim() < 1) throw domain_error("replica input needs a non-empty spectrum");
    if (sample_count < 1) throw domain_error("replica input needs N >= 1");
    if (ridge < 0.0) throw domain_error("ridge must be non-negative");
    bool any_positive = false;
    for (Eigen::Index i = 0; i < dim(); ++i) {
        if (!(eigenvalues[i] >= 0.0))
            throw domain_error("spectrum entries must be non-negative");
        any_positive |= eigenvalues[i] > 0.0;
    }
    if (!any_positive) throw domain_error("spectrum must not be all zero");
}

namespace {

double rhs_of_q(const ReplicaInput& in, double q) {
    const double d = static_cast<double>(in.dim());
    const double n = static_cast<double>(in.sample_count);
    const double denom_base = d * q + n * in.ridge;
    KahanSum sum;
    for (Eigen::Index i = 0; i < in.dim(); ++i) {
        const double lam = in.eigenvalues[i];
        if (lam == 0.0) continue;
        // lambda / (1 + lambda n / (dq + nc)); the dq + nc = 0 limit is 0.
        sum.add(denom_base > 0.0 ? lam / (1.0 + lam * n / denom_base) : 0.0);
    }
    return sum.value() / d;
}

double damped_solve(const ReplicaInput& in, double q0, double tol, int max_iterations,
                    double* residual_out) {
    double q = q0;
    double residual = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
        const double rhs = rhs_of_q(in, q);
        residual = q - rhs;
        q = 0.5 * q + 0.5 * rhs;
        if (std::abs(residual) < tol) {
            if (residual_out) *residual_out = residual;
            return q;
        }
    }
    throw solver_error("q fixed point did not converge; last residual " +
                           std::to_string(residual),
                       residual);
}

} // namespace

double s_of_q(double q, Eigen::Index d, long sample_count, double ridge) {
    const double ratio = static_cast<double>(d) / static_cast<double>(sample_count);
    return ((ratio - 1.0) * q + ridge) / (ratio * q + ridge);
}

ReplicaSolution solve_q(const ReplicaInput& input, const SolveOptions& options) {
    input.validate();
    if (!(options.tol > 0.0)) throw domain_error("solver tolerance must be positive");
    const double lambda_mean = input.eigenvalues.mean();
    ReplicaSolution sol;
    sol.q = damped_solve(input, lambda_mean, options.tol, options.max_iterations,
                         &sol.residual);
    sol.g_bar = s_of_q(sol.q, input.dim(), input.sample_count, input.ridge);
    if (options.check_uniqueness) {
        const double q_low = damped_solve(input, lambda_mean / 10.0, options.tol,
                                          options.max_iterations, nullptr);
        const double q_high = damped_solve(input, lambda_mean * 10.0, options.tol,
                                           options.max_iterations, nullptr);
        sol.unique_ok =
            std::abs(q_low - sol.q) <= 1e-8 && std::abs(q_high - sol.q) <= 1e-8;
    }
    return sol;
}

double q_bound_series(const ReplicaInput& input, int n) {
    input.validate();
    if (n < 0) throw domain_error("series index must be non-negative");
    const double d = static_cast<double>(input.dim());
    const double ratio = d / static_cast<double>(input.sample_count);
    double q = input.eigenvalues.mean();
    for (int m = 0; m < n; ++m) {
        const double shift = ratio * q + input.ridge;
        KahanSum trace;
        for (Eigen::Index i = 0; i < input.dim(); ++i)
            trace.add(input.eigenvalues[i] / (input.eigenvalues[i] + shift));
        q = shift * trace.value() / d;
    }
    return q;
}

double predict_dkl(const ReplicaInput& input) {
    input.validate();
    if (!(input.ridge > 0.0))
        throw domain_error("predict_dkl requires c > 0 (log-determinant branch)");
    const Eigen::Index d = input.dim();
    for (Eigen::Index i = 0; i < d; ++i)
        if (input.eigenvalues[i] <= 0.0)
            throw domain_error("predict_dkl requires a full-rank ground truth");
    const double n = static_cast<double>(input.sample_count);
    const double dd = static_cast<double>(d);
    const double c = input.ridge;
    const double q = solve_q(input).q;

    KahanSum log_term, inv_sqrt, inv;
    const double resolvent_shift = 1.0 / ((dd / (n * c)) * q + 1.0);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double lam = input.eigenvalues[i];
        log_term.add(std::log(std::abs(c / lam + resolvent_shift)));
        inv_sqrt.add(1.0 / std::sqrt(lam));
        inv.add(1.0 / lam);
    }
    if (c * inv.value() > dd)
        std::fprintf(stderr,
                     "lindiff warning: c Tr Sigma^-1 = %g exceeds d = %g; the "
                     "averaged DKL mean terms may dominate\n",
                     c * inv.value(), dd);

    const double t1 = 0.5 * q / ((dd / n) * q + c);
    const double t2 = -log_term.value() / (2.0 * dd);
    const double t3 = -(n / (2.0 * dd)) * std::log((dd / (n * c)) * q + 1.0);
    const double t4 = (dd + 2.0 * std::sqrt(c) * inv_sqrt.value() +
                       c * (n + 1.0) * inv.value()) /
                      (2.0 * n * dd);
    return t1 + t2 + t3 + t4;
}

double empirical_dkl(const SpectralCovariance& truth, const EmpiricalStats& stats,
                     double c) {
    truth.validate();
    const Eigen::Index d = truth.dim();
    if (stats.dim() != d) throw domain_error("empirical_dkl: dimension mismatch");
    if (c < 0.0) throw domain_error("c must be non-negative");
    for (Eigen::Index i = 0; i < d; ++i)
        if (truth.eigenvalues[i] <= 0.0)
            throw domain_error("empirical_dkl requires a full-rank ground truth");

    KahanSum log_truth, log_model, inv;
    for (Eigen::Index i = 0; i < d; ++i) {
        log_truth.add(std::log(truth.eigenvalues[i]));
        inv.add(1.0 / truth.eigenvalues[i]);
        const double eff = stats.cov_eigenvalues[i] + c;
        if (!(eff > 0.0))
            throw domain_error("model covariance Sigma0 + c Id is singular");
        log_model.add(std::log(eff));
    }
    const Eigen::VectorXd offset = truth.basis.transpose() * (truth.mean - stats.mean);
    KahanSum quad;
    for (Eigen::Index i = 0; i < d; ++i)
        quad.add(offset[i] * offset[i] / truth.eigenvalues[i]);
    // Tr Sigma^-1 Sigma0 through the basis overlap.
    const Eigen::MatrixXd overlap = truth.basis.transpose() * stats.cov_basis;
    KahanSum trace;
    for (Eigen::Index i = 0; i < d; ++i) {
        KahanSum row;
        for (Eigen::Index j = 0; j < d; ++j)
            row.add(overlap(i, j) * overlap(i, j) * stats.cov_eigenvalues[j]);
        trace.add(row.value() / truth.eigenvalues[i]);
    }
    const double tr_total = trace.value() + c * inv.value();
    return 0.5 * (log_truth.value() - log_model.value() + quad.value() + tr_total -
                  static_cast<double>(d));
}

PsiFunctions psi_functions(const ReplicaInput& input, const SolveOptions& options) {
    const ReplicaSolution sol = solve_q(input, options);
    const Eigen::Index d = input.dim();
    const double dd = static_cast<double>(d);
    const double n = static_cast<double>(input.sample_count);
    const double f = n / dd;
    const double shift = sol.q + f * input.ridge; // q + N/(d alphahat)

    PsiFunctions psi;
    psi.q = sol.q;
    KahanSum r0, r1, r32, r2, p2;
    for (Eigen::Index i = 0; i < d; ++i) {
        const double lam = input.eigenvalues[i];
        const double den = shift + f * lam;
        const double den2 = den * den;
        r0.add(1.0 / den2);
        r1.add(lam / den2);
        r32.add(lam * std::sqrt(lam) / den2);
        r2.add(lam * lam / den2);
        p2.add(1.0 / (1.0 + lam * f / shift));
    }
    psi.r0 = r0.value() / dd;
    psi.r1 = r1.value() / dd;
    psi.r32 = r32.value() / dd;
    psi.r2 = r2.value() / dd;
    psi.psi2 = p2.value() / dd;
    const double susceptibility = 1.0 - f * psi.r2;
    if (susceptibility <= 0.0)
        throw solver_error("singular susceptibility: (N/d) R_2 = " +
                               std::to_string(f * psi.r2),
                           susceptibility);
    const double shift2 = shift * shift;
    psi.psi11 = shift2 * (psi.r0 + f * psi.r1 * psi.r1 / susceptibility);
    psi.psi12 = shift2 * psi.r1 / susceptibility;
    return psi;
}

LossPrediction predict_losses(const Eigen::VectorXd& truth_spectrum, long sample_count,
                              const NoiseSchedule& schedule) {
    const Eigen::Index d = truth_spectrum.size();
    const int T = schedule.steps();
    const double dd = static_cast<double>(d);
    const double n = static_cast<double>(sample_count);
    KahanSum residual, test;
    for (int t = 0; t < T; ++t) {
        const double abar = schedule.alpha_bar[t];
        const double gamma = schedule.gamma[t];
        const double kappa = 1.0 - abar + gamma;
        ReplicaInput in{truth_spectrum, sample_count, kappa / abar};
        const PsiFunctions psi = psi_functions(in);
        const double resolvent = 1.0 / ((dd / (n * in.ridge)) * psi.q + 1.0);
        residual.add(abar / kappa * psi.q * resolvent + gamma / kappa * psi.psi2);
        // weighted combination (1-abar) psi11 + abar psi12 restores the
        // t-dependent traces entering the test loss
        test.add((1.0 - abar) / kappa *
                 (((1.0 - abar) * psi.psi11 + abar * psi.psi12) / kappa -
                  2.0 * psi.psi2));
    }
    LossPrediction out;
    out.residual = residual.value() / T;
    out.test = 1.0 + test.value() / T;
    return out;
}

double predict_delta_epsilon(const Eigen::VectorXd& truth_spectrum, long sample_count,
                             const NoiseSchedule& schedule) {
    const Eigen::Index d = truth_spectrum.size();
    const int T = schedule.steps();
    const LossPrediction losses = predict_losses(truth_spectrum, sample_count, schedule);
    KahanSum reference;
    for (int t = 0; t < T; ++t) {
        const double abar = schedule.alpha_bar[t];
        const double kappa = 1.0 - abar + schedule.gamma[t];
        const double ahat = abar / kappa;
        KahanSum trace;
        for (Eigen::Index i = 0; i < d; ++i)
            trace.add(1.0 / (1.0 + ahat * truth_spectrum[i]));
        reference.add((1.0 - abar) / kappa * trace.value() / static_cast<double>(d));
    }
    return losses.test - 1.0 + reference.value() / T;
}

} // namespace lindiff
