#include "lindiff/covariance.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "lindiff/errors.hpp"

namespace lindiff {

void SpectralCovariance::validate() const {
    const Eigen::Index d = dim();
    if (d < 1) throw domain_error("covariance dimension must be positive");
    if (basis.rows() != d || basis.cols() != d || mean.size() != d)
        throw domain_error("covariance fields have mismatched dimensions");
    for (Eigen::Index i = 0; i < d; ++i) {
        if (!(eigenvalues[i] >= 0.0))
            throw domain_error("covariance eigenvalues must be non-negative");
        if (i > 0 && eigenvalues[i] > eigenvalues[i - 1])
            throw domain_error("covariance eigenvalues must be sorted descending");
    }
    const double ortho =
        (basis.transpose() * basis - Eigen::MatrixXd::Identity(d, d)).norm();
    if (ortho > 1e-10)
        throw domain_error("covariance basis is not orthogonal (Frobenius defect " +
                           std::to_string(ortho) + ")");
}

Eigen::VectorXd make_powerlaw_spectrum(int d, double k) {
    if (d < 1) throw domain_error("powerlaw spectrum requires d >= 1");
    if (k < 0.0) throw domain_error("powerlaw exponent must be non-negative");
    Eigen::VectorXd lambda(d);
    KahanSum total;
    for (int nu = 1; nu <= d; ++nu) {
        lambda[nu - 1] = std::pow(static_cast<double>(nu), -k);
        total.add(lambda[nu - 1]);
    }
    lambda *= static_cast<double>(d) / total.value();
    return lambda;
}

SpectralCovariance make_powerlaw_covariance(int d, double k) {
    SpectralCovariance model;
    model.eigenvalues = make_powerlaw_spectrum(d, k);
    model.basis = Eigen::MatrixXd::Identity(d, d);
    model.mean = Eigen::VectorXd::Zero(d);
    return model;
}

Eigen::MatrixXd random_orthogonal(int d, std::uint64_t seed) {
    if (d < 1) throw domain_error("random_orthogonal requires d >= 1");
    const rng::Stream stream = rng::root_stream(seed, 0x6F7274686Full); // "ortho"
    Eigen::MatrixXd gauss(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            gauss(i, j) = stream.normal(static_cast<std::uint64_t>(i) * d + j);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < d; ++j)
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    return q;
}

Eigen::MatrixXd sample_gaussian(const SpectralCovariance& model, Eigen::Index n,
                                std::uint64_t seed) {
    model.validate();
    if (n < 1) throw domain_error("sample count must be positive");
    const Eigen::Index d = model.dim();
    const rng::Stream stream = rng::root_stream(seed, 0x676175737Aull); // "gausz"
    const Eigen::VectorXd scale = model.eigenvalues.cwiseSqrt();
    Eigen::MatrixXd z(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            z(i, j) = scale[j] * stream.normal(static_cast<std::uint64_t>(i) * d + j);
    Eigen::MatrixXd rows = z * model.basis.transpose();
    rows.rowwise() += model.mean.transpose();
    return rows;
}

void symmetric_eigen_desc(const Eigen::MatrixXd& sym, Eigen::VectorXd& eigenvalues,
                          Eigen::MatrixXd& eigenvectors) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success)
        throw domain_error("symmetric eigendecomposition failed to converge");
    const Eigen::Index d = sym.rows();
    eigenvalues.resize(d);
    eigenvectors.resize(d, d);
    const double lambda_max = std::max(0.0, solver.eigenvalues().maxCoeff());
    for (Eigen::Index i = 0; i < d; ++i) {
        const Eigen::Index src = d - 1 - i; // Eigen sorts ascending
        double value = solver.eigenvalues()[src];
        if (value < 0.0) {
            if (-value > 1e-10 * std::max(lambda_max, 1e-300))
                throw domain_error("symmetric solve produced a significantly negative "
                                   "eigenvalue: " + std::to_string(value));
            value = 0.0;
        }
        eigenvalues[i] = value;
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        Eigen::Index peak = 0;
        v.cwiseAbs().maxCoeff(&peak);
        if (v[peak] < 0.0) v = -v;
        eigenvectors.col(i) = v;
    }
}

namespace {

EmpiricalStats stats_from_scatter(const Eigen::MatrixXd& data, bool centered) {
    if (data.rows() < 1 || data.cols() < 1)
        throw domain_error("statistics require a non-empty data matrix");
    const Eigen::Index n = data.rows();
    EmpiricalStats stats;
    stats.sample_count = static_cast<long>(n);
    stats.mean = data.colwise().mean();
    Eigen::MatrixXd scatter;
    if (centered) {
        const Eigen::MatrixXd centered_rows = data.rowwise() - stats.mean.transpose();
        scatter = centered_rows.transpose() * centered_rows / static_cast<double>(n);
    } else {
        scatter = data.transpose() * data / static_cast<double>(n);
    }
    symmetric_eigen_desc(scatter, stats.cov_eigenvalues, stats.cov_basis);
    return stats;
}

} // namespace

EmpiricalStats empirical_stats(const Eigen::MatrixXd& data) {
    return stats_from_scatter(data, true);
}

EmpiricalStats moment_stats(const Eigen::MatrixXd& data) {
    return stats_from_scatter(data, false);
}

} // namespace lindiff
