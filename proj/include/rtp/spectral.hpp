#pragma once

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "rtp/model.hpp"

namespace rtp {

using cplx = std::complex<double>;

/// Samples of a function on the macroscopic torus [0, ell), one channel per
/// layer. Point j sits at x_j = j * ell / M; M is a power of two.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(int points, double macro_length, int layers);

  static GridFunction from_function(int points, double macro_length, int layers,
                                    const std::function<double(double x, int layer)>& f);

  int points() const { return points_; }
  int layers() const { return layers_; }
  double macro_length() const { return length_; }
  double spacing() const { return length_ / points_; }
  double x(int j) const { return j * spacing(); }

  double& at(int j, int layer) { return values_[static_cast<std::size_t>(layer) * points_ + j]; }
  double at(int j, int layer) const { return values_[static_cast<std::size_t>(layer) * points_ + j]; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  /// One layer as a single-layer function.
  GridFunction layer(int layer) const;
  /// phi_bar(x, s) = phi(x) on `layers` layers.
  GridFunction extend_to_layers(int layers) const;
  /// Sum over layers.
  GridFunction sum_layers() const;

  bool same_grid(const GridFunction& o) const;
  double mean() const;
  double max_abs() const;
  double min_value() const;

  GridFunction& operator+=(const GridFunction& o);
  GridFunction& operator-=(const GridFunction& o);
  GridFunction& operator*=(double a);
  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(double s, GridFunction a) { return a *= s; }

 private:
  int points_ = 0;
  int layers_ = 0;
  double length_ = 0.0;
  std::vector<double> values_;
};

// Fourier convention, used everywhere: f_hat(k_j) = (1/M) sum_n f(x_n) e^{-i k_j x_n},
// k_j = 2 pi j' / ell with j' = j for j <= M/2 and j - M above. Parseval:
// (ell/M) sum |f|^2 = ell * sum |f_hat|^2.
double wavenumber(int j, int points, double macro_length);
std::vector<cplx> forward_fft(const double* values, int points);
std::vector<double> inverse_fft(const std::vector<cplx>& coeffs);

/// Spectral (trigonometric) resampling to a new power-of-two grid size.
GridFunction resample(const GridFunction& f, int points);

enum class OperatorKind { A, Astar, B, Sigma, K };

/// |S| x |S| Fourier symbol of the chosen operator at wavenumber k:
///   A     diag(-D k^2 + i s lambda k) + C
///   Astar diag(-D k^2 - i s lambda k) + C
///   B     diag(-D_s k^2) + alpha C
///   Sigma -C
///   K     diag(kappa_s)
/// with C the switch generator and D from ModelParams::diffusion.
Eigen::MatrixXcd build_symbol(OperatorKind kind, const ModelParams& params, double k);

/// A for independent particles, B for the exclusion process.
OperatorKind forward_kind(const ModelParams& params);
/// A* for independent particles, B (self-adjoint) for the exclusion process.
OperatorKind adjoint_kind(const ModelParams& params);

/// Applies the symbol (the generator itself) spectrally.
GridFunction apply_operator(OperatorKind kind, const ModelParams& params, const GridFunction& phi);

/// e^{t Op} phi by per-mode matrix exponentials. Throws std::domain_error for t < 0.
GridFunction semigroup_apply(OperatorKind kind, const ModelParams& params, double t, const GridFunction& phi);

/// sum_s int phi psi dx by the rectangle rule (exact for trig polynomials
/// below Nyquist). Throws std::domain_error on grid mismatch.
double inner_product(const GridFunction& phi, const GridFunction& psi);

/// ell * sum_{k != 0} |f_hat(k)|^2 / k^2 for a single-layer mean-zero f.
/// Throws std::domain_error if |mean| > 1e-10 (scaled by max|f|).
double h_minus1_norm_sq(const GridFunction& f);

/// Spatial derivative of order `order` computed spectrally, per layer.
GridFunction spectral_derivative(const GridFunction& f, int order);

}  // namespace rtp
