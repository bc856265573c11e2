#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rtp/kmc.hpp"
#include "rtp/model.hpp"
#include "rtp/spectral.hpp"
#include "rtp/stats.hpp"

namespace rtp {

/// Y^N(phi) = N^{-1/2} sum_{x,s} (eta(x,s) - m) phi(x/N, s) with m the
/// stationary mean. phi lives on the site grid (M == L).
double pair_field(const Configuration& config, const GridFunction& phi, const ModelParams& params,
                  const Lattice& lattice);

/// Z^N(phi) for a single-layer phi: the pairing of the layer sum.
double pair_total(const Configuration& config, const GridFunction& phi, const ModelParams& params,
                  const Lattice& lattice);

enum class Simulator { Auto, Gillespie, Independent, Uniformized };

/// Runs the chosen simulator (Auto: independent streams for run-and-tumble,
/// uniformization for exclusion).
TrajectoryRecord simulate(Simulator sim, const Configuration& config0, const ModelParams& params,
                          const Lattice& lattice, const std::vector<double>& obs_times, Rng& rng);

struct CovarianceEstimate {
  std::string label;
  double t = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_replicas = 0;
};

struct CovarianceCase {
  std::string label;
  GridFunction phi;  // paired at time t
  GridFunction psi;  // paired at time 0
};

/// E[Y_t(phi) Y_0(psi)] from stationary starts. The centering is the exact
/// stationary mean, so the product average is unbiased. Output is ordered
/// case-major: result[c * times.size() + i]. Needs replicas >= 100.
std::vector<CovarianceEstimate> estimate_stationary_covariances(const ModelParams& params, const Lattice& lattice,
                                                                const std::vector<CovarianceCase>& cases,
                                                                const std::vector<double>& times,
                                                                std::size_t replicas, std::uint64_t seed,
                                                                int workers, Simulator sim = Simulator::Auto);

CovarianceEstimate estimate_stationary_covariance(const ModelParams& params, const Lattice& lattice,
                                                  const GridFunction& phi, const GridFunction& psi, double t,
                                                  std::size_t replicas, std::uint64_t seed, int workers);

/// chi <<e^{tA} phi, psi>> (A for run-and-tumble, B for exclusion).
double predicted_covariance(const ModelParams& params, const GridFunction& phi, const GridFunction& psi, double t);

/// chi <<phi, e^{tA*} psi>>; equal to predicted_covariance by adjointness.
double predicted_covariance_dual(const ModelParams& params, const GridFunction& phi, const GridFunction& psi,
                                 double t);

/// Layer-constant extensions of single-layer phi, psi fed to predicted_covariance.
double total_density_covariance(const ModelParams& params, const GridFunction& phi, const GridFunction& psi,
                                double t);

struct MartingaleReport {
  double t = 0.0;
  Moments m;                  // M_t over replicas
  VarianceEstimate variance;  // of M_t
  double var_over_t = 0.0;
  double var_over_t_se = 0.0;
  double limit = 0.0;       // 2 kappa rho <<dphi, dphi>> + 2 rho <<phi, Sigma phi>>
  double finite_n = 0.0;    // exact E[carre du champ] at this N
};

/// Dynkin martingale M_t = Y_t(phi) - Y_0(phi) - int_0^t L_N Y_s(phi) ds for
/// independent particles from a stationary start. Each particle is simulated
/// event by event and the drift integral is exact over holding times.
MartingaleReport martingale_statistics(const ModelParams& params, const Lattice& lattice, const GridFunction& phi,
                                       double t, std::size_t replicas, std::uint64_t seed, int workers);

/// 2 kappa rho <<dphi, dphi>> + 2 rho <<phi, Sigma phi>> with spectral derivatives.
double martingale_limit(const ModelParams& params, const GridFunction& phi);

}  // namespace rtp
