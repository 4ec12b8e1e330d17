#include "lindiff/sampler.hpp"

#include <cmath>

#include "lindiff/errors.hpp"
#include "lindiff/rng.hpp"

namespace lindiff {

Eigen::MatrixXd sample_iterative(const LinearDenoiser& denoiser, Eigen::Index count,
                                 std::uint64_t seed, SigmaChoice sigma_choice) {
    if (denoiser.objective != Objective::NoisePrediction)
        throw domain_error("iterative sampling is defined through the noise "
                           "predictor; got a data-prediction denoiser");
    if (count < 1) throw domain_error("sample count must be positive");
    const Eigen::Index d = denoiser.dim();
    const int T = denoiser.schedule.steps();
    const NoiseSchedule& sched = denoiser.schedule;
    const Eigen::VectorXd mean_coords = denoiser.basis.transpose() * denoiser.mean;
    const rng::Stream base = rng::root_stream(seed, 0x73616D706Cull); // "sampl"

    // abar_{t-1} with abar_0 = 1.
    const auto abar_prev = [&](int t) {
        return (t >= 2) ? sched.alpha_bar[t - 2] : 1.0;
    };

    Eigen::MatrixXd coords(count, d);
    for (Eigen::Index i = 0; i < count; ++i) {
        const rng::Stream traj = base.derived(static_cast<std::uint64_t>(i));
        Eigen::VectorXd u(d);
        for (Eigen::Index nu = 0; nu < d; ++nu)
            u[nu] = traj.normal(static_cast<std::uint64_t>(nu));
        std::uint64_t draw = d;
        for (int t = T; t >= 1; --t) {
            const double abar = sched.alpha_bar[t - 1];
            const double alpha = abar / abar_prev(t);
            const double sigma =
                (sigma_choice == SigmaChoice::MatchBeta && t > 1) ? sched.sigma[t - 1]
                                                                  : 0.0;
            const double renoise =
                std::sqrt(std::max(0.0, 1.0 - sigma * sigma - abar_prev(t)));
            const double sqrt_one_minus = std::sqrt(1.0 - abar);
            const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
            for (Eigen::Index nu = 0; nu < d; ++nu) {
                const double eps =
                    denoiser.weights(t - 1, nu) *
                    (u[nu] - std::sqrt(abar) * mean_coords[nu]);
                double next = (u[nu] - sqrt_one_minus * eps) * inv_sqrt_alpha +
                              renoise * eps;
                if (sigma > 0.0) next += sigma * traj.normal(draw + nu);
                u[nu] = next;
            }
            draw += d;
        }
        coords.row(i) = u;
    }
    return coords * denoiser.basis.transpose();
}

Eigen::MatrixXd sample_one_step(const EmpiricalStats& stats, Eigen::Index count,
                                std::uint64_t seed) {
    if (count < 1) throw domain_error("sample count must be positive");
    const Eigen::Index d = stats.dim();
    const rng::Stream stream = rng::root_stream(seed, 0x6F6E6573ull); // "ones"
    const Eigen::VectorXd scale = stats.cov_eigenvalues.cwiseSqrt();
    Eigen::MatrixXd coords(count, d);
    for (Eigen::Index i = 0; i < count; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            coords(i, j) = scale[j] * stream.normal(static_cast<std::uint64_t>(i) * d + j);
    Eigen::MatrixXd rows = coords * stats.cov_basis.transpose();
    rows.rowwise() += stats.mean.transpose();
    return rows;
}

SampleStatistics predicted_sample_stats(const EmpiricalStats& stats,
                                        const NoiseSchedule& schedule, double s,
                                        SigmaChoice sigma_choice) {
    if (s < 0.0 || s > 1.0) throw domain_error("denoising time s must be in [0,1]");
    const Eigen::Index d = stats.dim();
    const double abar_s = schedule.alpha_bar_at(1.0 - s); // abar(1-s)
    const double abar_1 = schedule.alpha_bar_at(1.0);
    const double c = schedule.reg_scale;

    SampleStatistics out;
    out.s = s;
    out.cov_eigenvalues.resize(d);
    Eigen::VectorXd mean_factor(d);
    for (Eigen::Index nu = 0; nu < d; ++nu) {
        const double lam = stats.cov_eigenvalues[nu] + c;
        const double now = abar_s * (lam - 1.0) + 1.0;
        const double end = abar_1 * (lam - 1.0) + 1.0;
        if (sigma_choice == SigmaChoice::Zero) {
            out.cov_eigenvalues[nu] = now / end;
            mean_factor[nu] = std::sqrt(abar_s) - std::sqrt(abar_1 * now / end);
        } else {
            // Exact SDE solution; evaluates to 1 at s = 0 and to lam + O(abar_1^2)
            // at s = 1.
            const double ratio = now / end;
            out.cov_eigenvalues[nu] =
                now - abar_1 * abar_1 * (lam - 1.0) / abar_s * ratio * ratio;
            mean_factor[nu] = std::sqrt(abar_s) - abar_1 * ratio / std::sqrt(abar_s);
        }
    }
    const Eigen::VectorXd mean_coords = stats.cov_basis.transpose() * stats.mean;
    out.mean = stats.cov_basis * mean_factor.cwiseProduct(mean_coords);
    return out;
}

} // namespace lindiff
