#include "rtp/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace rtp {

Eigen::MatrixXcd expm(const Eigen::MatrixXcd& m) { return m.exp(); }
Eigen::MatrixXd expm(const Eigen::MatrixXd& m) { return m.exp(); }

OuStep van_loan(const Eigen::MatrixXcd& drift, const Eigen::MatrixXcd& noise_cov, double dt) {
  const Eigen::Index n = drift.rows();
  // One block exponential over a long or stiff step pairs e^{+|F| dt} with
  // e^{-|F| dt} and overflows or cancels, so take a short step and double:
  // Phi(2h) = Phi(h)^2, Sigma(2h) = Sigma(h) + Phi(h) Sigma(h) Phi(h)^*.
  const double norm = n > 0 ? drift.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
  int doublings = 0;
  while (std::abs(dt) * norm / std::ldexp(1.0, doublings) > 0.5 && doublings < 60) ++doublings;
  const double h = std::ldexp(dt, -doublings);
  Eigen::MatrixXcd block = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = -drift * h;
  block.topRightCorner(n, n) = noise_cov * h;
  block.bottomRightCorner(n, n) = drift.adjoint() * h;
  Eigen::MatrixXcd e = block.exp();
  OuStep out;
  out.transition = e.bottomRightCorner(n, n).adjoint();
  out.covariance = out.transition * e.topRightCorner(n, n);
  out.covariance = 0.5 * (out.covariance + out.covariance.adjoint()).eval();
  for (int i = 0; i < doublings; ++i) {
    out.covariance = (out.covariance + out.transition * out.covariance * out.transition.adjoint()).eval();
    out.covariance = 0.5 * (out.covariance + out.covariance.adjoint()).eval();
    out.transition = (out.transition * out.transition).eval();
  }
  return out;
}

namespace {

template <class Matrix>
Matrix psd_factor_impl(const Matrix& m, double tol, int* floored) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
  Eigen::VectorXd ev = es.eigenvalues();
  const double scale = std::max(1e-300, ev.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -tol * scale) throw std::domain_error("covariance is not positive semidefinite");
    if (ev(i) < 0.0 && floored) ++*floored;
    ev(i) = std::sqrt(std::max(0.0, ev(i)));
  }
  return es.eigenvectors() * ev.cast<typename Matrix::Scalar>().asDiagonal();
}

}  // namespace

Eigen::MatrixXcd psd_factor(const Eigen::MatrixXcd& m, double tol, int* floored) {
  return psd_factor_impl(m, tol, floored);
}

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& m, double tol, int* floored) {
  return psd_factor_impl(m, tol, floored);
}

std::vector<double> fd_weights(const std::vector<double>& x, double x0, int order) {
  const int n = static_cast<int>(x.size());
  if (order < 0 || order >= n) throw std::domain_error("need more nodes than the derivative order");
  // c[j][k]: weight of node j for derivative k.
  std::vector<std::vector<double>> c(n, std::vector<double>(order + 1, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int j = 0; j < n; ++j) w[j] = c[j][order];
  return w;
}

}  // namespace rtp
