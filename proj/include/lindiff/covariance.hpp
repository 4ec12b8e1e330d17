#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "lindiff/rng.hpp"

namespace lindiff {

// Ground-truth covariance model Sigma = R Lambda R^T plus mean.
// Eigenvalues sorted descending; columns of basis are the eigenvectors.
struct SpectralCovariance {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd basis;
    Eigen::VectorXd mean;

    Eigen::Index dim() const { return eigenvalues.size(); }
    Eigen::MatrixXd matrix() const {
        return basis * eigenvalues.asDiagonal() * basis.transpose();
    }
    // Throws domain_error if sorting, positivity, or orthogonality (1e-10
    // Frobenius) is violated.
    void validate() const;
};

// Sample mean and eigendecomposed sample covariance of a data matrix.
struct EmpiricalStats {
    long sample_count = 0;
    Eigen::VectorXd mean;
    Eigen::VectorXd cov_eigenvalues; // sorted descending, clamped at 0
    Eigen::MatrixXd cov_basis;       // columns e0_nu, matching order

    Eigen::Index dim() const { return cov_eigenvalues.size(); }
};

// lambda_nu = C nu^-k with C fixed by (1/d) sum lambda = 1.
Eigen::VectorXd make_powerlaw_spectrum(int d, double k);

// Identity basis, zero mean (the theory is basis-covariant).
SpectralCovariance make_powerlaw_covariance(int d, double k);

// Seeded random rotation for basis-invariance checks: QR of a Gaussian matrix
// with the R-diagonal sign fix.
Eigen::MatrixXd random_orthogonal(int d, std::uint64_t seed);

// n x d matrix of i.i.d. rows mean + R Lambda^{1/2} z. Deterministic in seed;
// element (i, j) is addressed individually, so any row-parallel split agrees
// with the serial fill.
Eigen::MatrixXd sample_gaussian(const SpectralCovariance& model, Eigen::Index n,
                                std::uint64_t seed);

// Mean-centered sample covariance with 1/N normalization (rank <= min(N-1, d)).
EmpiricalStats empirical_stats(const Eigen::MatrixXd& data);

// Second moment about the origin, (1/N) sum x x^T. This is the ensemble the
// replica averages are taken over; meant for data from centered ground truths.
// The mean field is still the sample mean.
EmpiricalStats moment_stats(const Eigen::MatrixXd& data);

// Shared eigendecomposition path: descending order, eigenvector sign fixed by
// making the largest-magnitude entry positive, eigenvalues below
// 1e-10 * lambda_max clamped to 0, larger negatives throw (broken solve).
void symmetric_eigen_desc(const Eigen::MatrixXd& sym, Eigen::VectorXd& eigenvalues,
                          Eigen::MatrixXd& eigenvectors);

// Compensated accumulator for the long spectral sums.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

} // namespace lindiff
