#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "rtp/model.hpp"
#include "rtp/spectral.hpp"
#include "rtp/stats.hpp"

namespace rtp {

// Mode normalization: a field Y with Fourier coefficients c_k is stored as
// Y_k = sqrt(ell) c_k, so spatial white noise of variance chi has
// E[Y_k Y_k^*] = chi I for every k, and
//   Y(phi) = sqrt(ell) [Y_0 . phi_0 + 2 Re sum_{k > 0} Y_k . conj(phi_k)].

/// Per-mode noise covariance of the limiting equation:
/// 2 kappa chi k^2 I + 2 chi Sigma (run-and-tumble) or
/// 2 alpha chi (K k^2 + Sigma) (exclusion). Always the microscopic rates.
Eigen::MatrixXcd noise_covariance(const ModelParams& params, double k);

/// Drift symbol of the fluctuation field: A* (run-and-tumble) or B (exclusion).
Eigen::MatrixXcd field_drift(const ModelParams& params, double k);

/// max |A*(chi I) + (chi I) A*^H + N| at wavenumber k.
double lyapunov_residual(const ModelParams& params, double k);

struct OuOptions {
  bool stationary_start = true;
  double noise_scale = 1.0;                 // multiplies the noise amplitude
  std::vector<Eigen::VectorXcd> initial;    // per mode, used when !stationary_start
};

/// Modes j = 0..cutoff (k_j = 2 pi j / ell) at each time of a uniform grid.
struct ModeTrajectory {
  double macro_length = 0.0;
  std::vector<double> times;
  std::vector<double> wavenumbers;
  std::vector<std::vector<Eigen::VectorXcd>> modes;  // [time][mode]
  int floored = 0;  // eigenvalues of integrated covariances clipped to zero

  /// sqrt(ell) [Y_0 . phi_0 + 2 Re sum_{j>0} Y_j . conj(phi_j)], summed over
  /// components (layers). phi must resolve every stored mode.
  double pair(std::size_t time_index, const GridFunction& phi) const;
  /// Real-space field on M points; *max_imag receives the largest imaginary
  /// part of the complex inverse transform.
  GridFunction field(std::size_t time_index, int points, double* max_imag = nullptr) const;
};

/// Generic exact per-mode OU integrator: dY = F(k) Y dt + noise with
/// covariance Q(k) dt, stationary start drawn from S(k). One RNG stream per
/// mode, derived from seed, so results do not depend on scheduling.
struct ModeSystem {
  std::function<Eigen::MatrixXcd(double)> drift;
  std::function<Eigen::MatrixXcd(double)> noise;
  std::function<Eigen::MatrixXcd(double)> stationary;
};
ModeTrajectory simulate_modes(const ModeSystem& system, double macro_length, int cutoff,
                              const std::vector<double>& times, std::uint64_t seed, const OuOptions& options = {});

/// The limiting fluctuation field (drift A* or B, noise from noise_covariance,
/// stationary law chi I).
ModeTrajectory simulate_ou_field(const ModelParams& params, double macro_length, int cutoff,
                                 const std::vector<double>& times, std::uint64_t seed, const OuOptions& options = {});

/// Two-layer (Z, R) = (Y_+ + Y_-, Y_+ - Y_-) system:
///   dZ = (D dxx Z - lambda dx R) dt + noise,  dR = (D dxx R - lambda dx Z - 2 gamma R) dt + noise
/// with noise covariance T N T^T (T = [[1, 1], [1, -1]]), stationary law 2 chi I.
/// Component 0 is Z, component 1 is R.
ModeTrajectory simulate_sum_difference(const ModelParams& params, double macro_length, int cutoff,
                                       const std::vector<double>& times, std::uint64_t seed,
                                       const OuOptions& options = {});

/// Highest mode carrying >= 1e-12 of any test function's energy, times 4,
/// capped below Nyquist.
int mode_cutoff_for(const std::vector<GridFunction>& test_functions);

/// Pairing of the Z component alone (component 0) with a single-layer phi.
double pair_component(const ModeTrajectory& traj, std::size_t time_index, int component, const GridFunction& phi);

/// Long-run time average of Y_{s+lag}(phi) Y_s(psi) over s.
double time_averaged_covariance(const ModeTrajectory& traj, const GridFunction& phi, const GridFunction& psi,
                                std::size_t lag_steps);

/// Per-mode whiteness diagnostics of the second-order residual
///   r_n = (Z_{n+1} - 2 Z_n + Z_{n-1}) / dt^2 + 2 gamma (Z_{n+1} - Z_{n-1}) / (2 dt) + lambda^2 k^2 Z_n
/// for a kappa = 0 (Z, R) trajectory. The remainder integrates the noise
/// against a triangle kernel, so its variance is (2/3) a^2 k^2 / dt with
/// a^2 = 8 lambda^2 gamma chi, its lag-1 autocorrelation 1/4 and higher lags 0.
struct ModeWhiteness {
  double k = 0.0;
  double variance = 0.0;
  double variance_se = 0.0;
  double target_variance = 0.0;
  std::vector<double> autocorrelation;  // lags 1..max_lag
  double autocorrelation_se = 0.0;      // Bartlett standard error for lags >= 2
  double max_abs_residual = 0.0;
};
std::vector<ModeWhiteness> total_density_second_order_check(const ModeTrajectory& zr, const ModelParams& params,
                                                            int max_lag = 4);

}  // namespace rtp
