#pragma once

#include <vector>

#include <Eigen/Dense>

namespace rtp {

/// Dense matrix exponential (scaling and squaring, Pade 13).
Eigen::MatrixXcd expm(const Eigen::MatrixXcd& m);
Eigen::MatrixXd expm(const Eigen::MatrixXd& m);

/// Exact discretization of dX = F X dt + G dW over dt:
/// transition = e^{F dt}, covariance = int_0^dt e^{Fs} Q e^{F^* s} ds with
/// Q = G G^*, from a block exponential (Van Loan) over a short substep
/// followed by exact doubling, so stiff or long steps stay finite.
struct OuStep {
  Eigen::MatrixXcd transition;
  Eigen::MatrixXcd covariance;
};
OuStep van_loan(const Eigen::MatrixXcd& drift, const Eigen::MatrixXcd& noise_cov, double dt);

/// Returns L with L L^* = m for Hermitian PSD m. Eigenvalues in [-tol, 0)
/// (relative to the largest) are floored at zero and counted in *floored;
/// anything more negative throws std::domain_error.
Eigen::MatrixXcd psd_factor(const Eigen::MatrixXcd& m, double tol = 1e-12, int* floored = nullptr);
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& m, double tol = 1e-12, int* floored = nullptr);

/// Finite-difference weights for derivative `order` at x0 from nodes x
/// (Fornberg's recursion).
std::vector<double> fd_weights(const std::vector<double>& x, double x0, int order);

}  // namespace rtp
