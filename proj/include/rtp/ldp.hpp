#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rtp/spectral.hpp"

namespace rtp {

/// Zero-mean single-layer field Gamma(t, x) on a uniform time grid over [0, T].
struct SpaceTimePath {
  double dt = 0.0;
  std::vector<GridFunction> slices;

  double horizon() const { return dt * static_cast<double>(slices.size() - 1); }
  /// Throws std::domain_error on non-uniform shapes or nonzero-mean slices.
  void validate() const;
};

/// Parameters of the kappa = 0 total-density field.
struct LdpParams {
  double lambda = 1.0;
  double gamma = 1.0;
  double chi = 1.0;
  void validate() const;  // all three > 0, else std::domain_error
};

enum class PrefactorMode { Derived, Paper };
std::string to_string(PrefactorMode m);
PrefactorMode prefactor_mode_from_string(const std::string& s);

/// Derived: 1 / (2 a^2) with a^2 = 8 lambda^2 gamma chi the squared noise
/// amplitude of the second-order equation, i.e. 1 / (16 lambda^2 gamma chi).
/// Paper: the printed 1 / (4 lambda sqrt(gamma chi)).
double rate_prefactor(const LdpParams& p, PrefactorMode mode);

/// L[Gamma] = Gamma'' + 2 gamma Gamma' - lambda^2 dxx Gamma at every time
/// (fourth-order differences in time, one-sided at the ends; spectral in x).
std::vector<GridFunction> rate_operator(const SpaceTimePath& path, const LdpParams& p);

/// pref * int_0^T ||L[Gamma](t)||_{H^-1}^2 dt by the trapezoid rule with its
/// fourth-order end correction.
double rate_functional(const SpaceTimePath& path, const LdpParams& p, PrefactorMode mode = PrefactorMode::Derived);

/// Same quadrature applied to the three terms of L separately and summed;
/// the natural size against which a small I(Gamma) is judged.
double rate_scale(const SpaceTimePath& path, const LdpParams& p, PrefactorMode mode = PrefactorMode::Derived);

/// Per-mode Legendre check of Lambda(phi) = 1/2 <dphi, dphi> against
/// Lambda*(g) = 1/2 ||g||_{H^-1}^2.
struct LegendreReport {
  double lambda_star_modes = 0.0;   // sum of numeric per-mode suprema
  double lambda_star_closed = 0.0;  // sum of g^2 / (2 k^2) terms
  double lambda_star_norm = 0.0;    // 1/2 h_minus1_norm_sq(g)
  double max_mode_error = 0.0;      // |numeric sup - closed form| over modes
};
LegendreReport legendre_pair_check(const GridFunction& g);

/// sup_a {a y - c a^2 / 2} by golden-section search; exact answer y^2 / (2c).
double numeric_legendre(double y, double c);

/// Minimizer of int_0^T (a'' + 2 gamma a' + w^2 a)^2 dt with a(0), a'(0),
/// a(T) fixed and a'(T) free (natural condition (La)(T) = 0), w = lambda k.
/// Throws std::domain_error when the 2x2 Gramian has condition > 1e12.
struct ModeBridge {
  std::vector<double> a;      // on the time grid
  std::vector<double> adot;
  double integral = 0.0;      // int (La)^2 dt, exact
  double condition = 0.0;     // of the reachability Gramian
};
ModeBridge bridge_mode(double a0, double adot0, double aT, double k, const LdpParams& p, double horizon,
                       int steps);

/// Field-level bridge from (Gamma_0, Gamma'_0) to Gamma_T, mode by mode in
/// the cos/sin basis; cost includes the prefactor and H^-1 weights.
struct Bridge {
  SpaceTimePath path;
  double cost = 0.0;
  double worst_condition = 0.0;
};
Bridge minimum_cost_bridge(const GridFunction& gamma0, const GridFunction& gamma_dot0, const GridFunction& gammaT,
                           const LdpParams& p, double horizon, int steps, PrefactorMode mode = PrefactorMode::Derived);

/// Deterministic flow a'' + 2 gamma a' + w^2 a = 0 at time t.
double deterministic_mode(double a0, double adot0, double k, const LdpParams& p, double t);

/// Law of the sine amplitude a(T) at eps = 1: deterministic mean and
/// standard deviation (the latter scales linearly in eps).
struct ModeLaw {
  double mean = 0.0;
  double sd = 0.0;
};
ModeLaw mode_endpoint_law(const LdpParams& p, double ell, int mode, double horizon, double a0, double adot0);

/// Small-noise check on one sine mode of the (Z, R) system with kappa = 0:
///   a' = lambda k b,  b' = -lambda k a - 2 gamma b + eps xi,
/// with the intensity of xi taken from noise_covariance (16 gamma chi / ell).
/// Samples a(T) exactly from a deterministic start and compares the windowed
/// log density ratio at x1, x2 with -(cost(x1) - cost(x2)) / eps^2.
struct GaussianRatioRow {
  double eps = 0.0;
  double x1 = 0.0, x2 = 0.0;
  double cost1 = 0.0, cost2 = 0.0;  // bridge costs, prefactor included
  long count1 = 0, count2 = 0;
  double predicted = 0.0;  // -(cost1 - cost2) / eps^2
  double estimated = 0.0;  // log(count1 / count2)
  double std_error = 0.0;  // sqrt(1/count1 + 1/count2)
  double relative_error() const;
};
GaussianRatioRow gaussian_ratio_test(const LdpParams& p, double ell, int mode, double horizon, double a0,
                                     double adot0, double x1, double x2, double window, double eps,
                                     std::size_t samples, std::uint64_t seed, PrefactorMode mode_pref);

}  // namespace rtp
