#include "lindiff/metrics.hpp"

#include <cmath>

#include "lindiff/errors.hpp"
#include "lindiff/rng.hpp"

namespace lindiff {

namespace {

double regularization_term(const LinearDenoiser& den) {
    const int T = den.schedule.steps();
    KahanSum sum;
    for (int t = 0; t < T; ++t)
        sum.add(den.schedule.gamma[t] * den.weights.row(t).squaredNorm());
    return sum.value() / (static_cast<double>(den.dim()) * T);
}

void check_compatible(const LinearDenoiser& a, const LinearDenoiser& b) {
    if (a.dim() != b.dim()) throw domain_error("denoisers have different dimensions");
    if (a.schedule.steps() != b.schedule.steps() ||
        (a.schedule.alpha_bar - b.schedule.alpha_bar).cwiseAbs().maxCoeff() > 1e-12)
        throw domain_error("denoisers must share the noise schedule");
}

} // namespace

MonteCarloEstimate monte_carlo_loss(const LinearDenoiser& denoiser,
                                    const Eigen::MatrixXd& data, long noise_draws,
                                    std::uint64_t seed) {
    if (noise_draws < 1) throw domain_error("noise_draws must be positive");
    if (data.rows() < 1 || data.cols() != denoiser.dim())
        throw domain_error("data matrix incompatible with denoiser");
    const Eigen::Index d = denoiser.dim();
    const int T = denoiser.schedule.steps();
    const Eigen::Index n = data.rows();

    // Rotate once into the denoiser basis; the noise is drawn directly in that
    // basis (isotropic either way), which makes every step a scalar update.
    const Eigen::MatrixXd rows_coords = data * denoiser.basis;
    const Eigen::VectorXd mean_coords = denoiser.basis.transpose() * denoiser.mean;

    const rng::Stream pick = rng::root_stream(seed, 0x6D636C6F73ull);   // "mclos"
    const rng::Stream noise = rng::root_stream(seed, 0x6D636E6Full);    // "mcno"

    KahanSum sum, sum_sq;
    std::uint64_t counter = 0;
    for (long j = 0; j < noise_draws; ++j) {
        const auto row = static_cast<Eigen::Index>(
            std::min<double>(static_cast<double>(n) - 1.0,
                             pick.uniform(static_cast<std::uint64_t>(j)) *
                                 static_cast<double>(n)));
        KahanSum per_draw;
        for (int t = 1; t <= T; ++t) {
            const double abar = denoiser.schedule.alpha_bar[t - 1];
            const double sa = std::sqrt(abar);
            const double sn = std::sqrt(1.0 - abar);
            for (Eigen::Index nu = 0; nu < d; ++nu) {
                const double x0 = rows_coords(row, nu);
                const double eps = noise.normal(counter++);
                const double xt = sa * x0 + sn * eps;
                const double w = denoiser.weights(t - 1, nu);
                double err;
                if (denoiser.objective == Objective::NoisePrediction) {
                    err = eps - w * (xt - sa * mean_coords[nu]);
                } else {
                    const double f = w * xt + mean_coords[nu] -
                                     sa * w * mean_coords[nu];
                    err = x0 - f;
                }
                per_draw.add(err * err);
            }
        }
        const double v = per_draw.value() / (static_cast<double>(d) * T);
        sum.add(v);
        sum_sq.add(v * v);
    }
    const double mean = sum.value() / static_cast<double>(noise_draws);
    double variance = 0.0;
    if (noise_draws > 1)
        variance = (sum_sq.value() - noise_draws * mean * mean) /
                   static_cast<double>(noise_draws - 1);
    MonteCarloEstimate out;
    out.value = mean + regularization_term(denoiser);
    out.std_error = std::sqrt(std::max(0.0, variance) / static_cast<double>(noise_draws));
    return out;
}

MonteCarloEstimate delta_epsilon_empirical(const LinearDenoiser& a,
                                           const LinearDenoiser& b,
                                           const Eigen::MatrixXd& test_data,
                                           std::uint64_t seed) {
    check_compatible(a, b);
    if (test_data.rows() < 1 || test_data.cols() != a.dim())
        throw domain_error("test data incompatible with denoisers");
    const Eigen::Index d = a.dim();
    const int T = a.schedule.steps();
    const Eigen::Index m = test_data.rows();
    const rng::Stream noise = rng::root_stream(seed, 0x64656C7465ull); // "delte"

    KahanSum sum, sum_sq;
    for (Eigen::Index i = 0; i < m; ++i) {
        const rng::Stream row_stream = noise.derived(static_cast<std::uint64_t>(i));
        KahanSum per_row;
        Eigen::VectorXd xt(d);
        std::uint64_t counter = 0;
        for (int t = 1; t <= T; ++t) {
            const double abar = a.schedule.alpha_bar[t - 1];
            const double sa = std::sqrt(abar);
            const double sn = std::sqrt(1.0 - abar);
            for (Eigen::Index nu = 0; nu < d; ++nu)
                xt[nu] = sa * test_data(i, nu) + sn * row_stream.normal(counter++);
            per_row.add((a.apply(xt, t) - b.apply(xt, t)).squaredNorm());
        }
        const double v = per_row.value() / (static_cast<double>(d) * T);
        sum.add(v);
        sum_sq.add(v * v);
    }
    const double mean = sum.value() / static_cast<double>(m);
    double variance = 0.0;
    if (m > 1)
        variance =
            (sum_sq.value() - m * mean * mean) / static_cast<double>(m - 1);
    return {mean, std::sqrt(std::max(0.0, variance) / static_cast<double>(m))};
}

Eigen::MatrixXd mode_resolved_difference(const LinearDenoiser& a,
                                         const LinearDenoiser& b,
                                         const Eigen::MatrixXd& basis,
                                         const Eigen::MatrixXd& test_data, double eta,
                                         std::uint64_t seed) {
    check_compatible(a, b);
    if (!(eta > 0.0)) throw domain_error("eta must be positive");
    if (basis.rows() != a.dim() || basis.cols() != a.dim())
        throw domain_error("basis incompatible with denoisers");
    const Eigen::Index d = a.dim();
    const int T = a.schedule.steps();
    const Eigen::Index m = test_data.rows();
    const rng::Stream noise = rng::root_stream(seed, 0x6D726469ull); // "mrdi"

    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(T, d);
    for (Eigen::Index i = 0; i < m; ++i) {
        const rng::Stream row_stream = noise.derived(static_cast<std::uint64_t>(i));
        Eigen::VectorXd xt(d);
        std::uint64_t counter = 0;
        for (int t = 1; t <= T; ++t) {
            const double abar = a.schedule.alpha_bar[t - 1];
            const double sa = std::sqrt(abar);
            const double sn = std::sqrt(1.0 - abar);
            for (Eigen::Index nu = 0; nu < d; ++nu)
                xt[nu] = sa * test_data(i, nu) + sn * row_stream.normal(counter++);
            const Eigen::VectorXd ea = basis.transpose() * a.apply(xt, t);
            const Eigen::VectorXd eb = basis.transpose() * b.apply(xt, t);
            for (Eigen::Index nu = 0; nu < d; ++nu) {
                const double diff = ea[nu] - eb[nu];
                out(t - 1, nu) += diff * diff /
                                  std::abs((ea[nu] + eta) * (eb[nu] + eta));
            }
        }
    }
    return out / static_cast<double>(m);
}

double detail_similarity(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                         const Eigen::MatrixXd& basis, int drop_leading) {
    const Eigen::Index d = x.size();
    if (y.size() != d || basis.rows() != d || basis.cols() != d)
        throw domain_error("detail_similarity: dimension mismatch");
    if (drop_leading < 0 || drop_leading >= d)
        throw domain_error("drop_leading must satisfy 0 <= drop < d");
    Eigen::VectorXd px = basis.transpose() * x;
    Eigen::VectorXd py = basis.transpose() * y;
    px.head(drop_leading).setZero();
    py.head(drop_leading).setZero();
    const double nx = px.norm();
    const double ny = py.norm();
    if (nx == 0.0 || ny == 0.0)
        throw domain_error("detail similarity undefined: zero-norm projection");
    return px.dot(py) / (nx * ny);
}

Eigen::VectorXd nearest_training_similarity(const Eigen::MatrixXd& generated,
                                            const Eigen::MatrixXd& training,
                                            const Eigen::MatrixXd& basis,
                                            int drop_leading) {
    if (training.rows() < 1) throw domain_error("training set must be non-empty");
    Eigen::VectorXd best(generated.rows());
    for (Eigen::Index i = 0; i < generated.rows(); ++i) {
        double hi = -1.0;
        for (Eigen::Index j = 0; j < training.rows(); ++j)
            hi = std::max(hi, detail_similarity(generated.row(i), training.row(j),
                                                basis, drop_leading));
        best[i] = hi;
    }
    return best;
}

} // namespace lindiff
