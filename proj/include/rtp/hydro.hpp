#pragma once

#include <cstdint>
#include <vector>

#include "rtp/model.hpp"
#include "rtp/spectral.hpp"
#include "rtp/stats.hpp"

namespace rtp {

/// Per-layer densities rho_t(x, s) at a list of times.
struct DensityTrajectory {
  std::vector<double> times;
  std::vector<GridFunction> profiles;

  /// Layer sum at time index i.
  GridFunction total(std::size_t i) const { return profiles[i].sum_layers(); }
  /// rho(., +1) - rho(., -1) at time index i (two-layer {-1, +1} models).
  GridFunction difference(std::size_t i, const LayerSet& layers) const;
};

/// rho_t = e^{t A*} rho_0 (or e^{t B} rho_0 for the exclusion process).
/// Throws std::domain_error on negative initial data.
DensityTrajectory solve_hydro(const GridFunction& rho0, const std::vector<double>& times, const ModelParams& params);

/// The same two-layer system integrated in (total, difference) variables:
///   total'      = D total'' - lambda difference'
///   difference' = D difference'' - lambda total' - 2 gamma difference
/// Requires states {-1, +1} with one switch rate gamma.
DensityTrajectory solve_sum_difference(const GridFunction& rho0, const std::vector<double>& times,
                                       const ModelParams& params);

/// Two-layer rate gamma; throws unless states are {-1, +1}.
double two_layer_gamma(const ModelParams& params);

struct ResidualReport {
  double absolute = 0.0;  // max over probe times of the L2 norm of the residual
  double scale = 0.0;     // max L2 norm of the second time derivative
  double relative = 0.0;  // absolute / scale, or absolute when scale is 0
};

/// Residual of the closed second-order equation for the total density
///   r'' + (2 gamma - 2 D dxx) r' - ((lambda^2 + 2 gamma D) dxx - D^2 dx^4) r = 0
/// with fourth-order central differences in time (uniform grid, >= 5 samples)
/// and spectral space derivatives.
ResidualReport total_density_residual(const DensityTrajectory& traj, const ModelParams& params);

struct PairingError {
  double predicted = 0.0;
  Moments empirical;  // pi^N_t(phi) over replicas
  double z() const;
};

struct HydroReport {
  double t = 0.0;
  int bins = 0;
  /// sum_s int |averaged empirical density - rho_t| dx over bins of L/bins sites.
  double l1_error = 0.0;
  std::vector<PairingError> pairings;
};

/// Starts replicas from the local equilibrium with profile rho0 (site grid,
/// M == L), evolves them to t and compares with the hydrodynamic solution.
/// Test functions also live on the site grid.
HydroReport compare_empirical_to_hydro(const ModelParams& params, const Lattice& lattice, const GridFunction& rho0,
                                       double t, std::size_t replicas, std::uint64_t seed,
                                       const std::vector<GridFunction>& test_functions, int bins, int workers);

}  // namespace rtp
