#include "lindiff/schedule.hpp"

#include <cmath>
#include <string>

#include "lindiff/errors.hpp"

namespace lindiff {

Eigen::VectorXd NoiseSchedule::alpha_hat() const {
    return alpha_bar.array() / (1.0 - alpha_bar.array() + gamma.array());
}

EffectiveSNR effective_snr(const NoiseSchedule& schedule) {
    return EffectiveSNR{schedule.alpha_hat()};
}

double NoiseSchedule::alpha_bar_at(double u) const {
    if (u < 0.0 || u > 1.0) throw domain_error("alpha_bar_at requires u in [0,1]");
    const int T = steps();
    const double x = u * T;
    const int lo = static_cast<int>(std::floor(x));
    if (lo >= T) return alpha_bar[T - 1];
    const double zlo = (lo == 0) ? 0.0 : zeta_knots[lo - 1];
    const double zhi = zeta_knots[lo];
    const double frac = x - lo;
    return std::exp(-(zlo + frac * (zhi - zlo)));
}

void NoiseSchedule::validate() const {
    const int T = steps();
    if (T < 2) throw domain_error("schedule requires at least 2 steps");
    if (beta.size() != T || sigma.size() != T || gamma.size() != T ||
        zeta_knots.size() != T)
        throw domain_error("schedule fields have mismatched lengths");
    double prod = 1.0;
    for (int t = 0; t < T; ++t) {
        if (!(alpha_bar[t] > 0.0 && alpha_bar[t] < 1.0))
            throw domain_error("alpha_bar must lie in (0,1)");
        if (t > 0 && !(alpha_bar[t] < alpha_bar[t - 1]))
            throw domain_error("alpha_bar must be strictly decreasing");
        if (!(beta[t] > 0.0 && beta[t] < 1.0))
            throw domain_error("beta must lie in (0,1)");
        if (sigma[t] < 0.0 || gamma[t] < 0.0)
            throw domain_error("sigma and gamma must be non-negative");
        prod *= 1.0 - beta[t];
        if (std::abs(prod - alpha_bar[t]) > 1e-12 * alpha_bar[t])
            throw domain_error("alpha_bar inconsistent with prod(1 - beta) at step " +
                               std::to_string(t + 1));
    }
}

namespace {

NoiseSchedule finish_schedule(Eigen::VectorXd abar, double c, GammaCoupling coupling) {
    const int T = static_cast<int>(abar.size());
    NoiseSchedule s;
    s.alpha_bar = std::move(abar);
    s.beta.resize(T);
    s.zeta_knots.resize(T);
    double prev = 1.0;
    for (int t = 0; t < T; ++t) {
        s.beta[t] = 1.0 - s.alpha_bar[t] / prev;
        s.zeta_knots[t] = -std::log(s.alpha_bar[t]);
        prev = s.alpha_bar[t];
    }
    s.sigma = s.beta.cwiseSqrt();
    s.reg_scale = c;
    s.coupling = coupling;
    s.gamma = (coupling == GammaCoupling::AlphaBar)
                  ? Eigen::VectorXd(c * s.alpha_bar)
                  : Eigen::VectorXd(c * s.alpha_bar.cwiseSqrt());
    s.validate();
    return s;
}

} // namespace

NoiseSchedule make_schedule(int steps, double zeta_total, double c,
                            GammaCoupling coupling) {
    if (steps < 2) throw domain_error("schedule requires at least 2 steps");
    if (!(zeta_total > 0.0)) throw domain_error("zeta_total must be positive");
    if (c < 0.0) throw domain_error("regularization scale must be non-negative");
    constexpr double ramp_ratio = 200.0;
    const double b0 = 2.0 * zeta_total / (1.0 + ramp_ratio);
    const double b1 = 2.0 * zeta_total - b0;
    Eigen::VectorXd abar(steps);
    for (int t = 1; t <= steps; ++t) {
        const double u = static_cast<double>(t) / steps;
        const double zeta = b0 * u + 0.5 * (b1 - b0) * u * u;
        abar[t - 1] = std::exp(-zeta);
    }
    return finish_schedule(std::move(abar), c, coupling);
}

NoiseSchedule schedule_from_alpha_bar(const Eigen::VectorXd& alpha_bar, double c,
                                      GammaCoupling coupling) {
    if (alpha_bar.size() < 2) throw domain_error("schedule requires at least 2 steps");
    if (c < 0.0) throw domain_error("regularization scale must be non-negative");
    return finish_schedule(alpha_bar, c, coupling);
}

} // namespace lindiff
