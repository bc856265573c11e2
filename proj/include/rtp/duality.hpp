#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "rtp/kmc.hpp"
#include "rtp/model.hpp"
#include "rtp/random.hpp"
#include "rtp/stats.hpp"

namespace rtp {

class GridFunction;

/// Finite dual configuration; stored like a Configuration on the same ring.
using DualConfiguration = Configuration;

/// prod over (x, s) of binom(eta, xi), zero as soon as xi > eta somewhere.
double duality_function(const DualConfiguration& xi, const Configuration& eta);

/// prod over (x, s) of eta! / (eta - xi)!: ordered tuples of distinct particles
/// sitting on xi. This is the function for which independent walkers are dual
/// to the reversed walkers in every sector; the binomial form above divides by
/// prod xi!, which is not conserved once two dual particles share a slot.
double factorial_duality_function(const DualConfiguration& xi, const Configuration& eta);

/// True when the binomial form is a valid duality function for this pair: one
/// dual particle, or at most one particle per slot in both xi and eta (then
/// no two dual particles can meet on a slot where D could be nonzero).
bool binomial_duality_applies(const DualConfiguration& xi, const Configuration& eta);

enum class DualityKind { Binomial, FallingFactorial };

/// Every configuration with exactly `particles` particles on a ring, with an
/// optional per-slot cap (SEP). Used for exact master-equation checks.
class SectorSpace {
 public:
  static constexpr std::size_t kMaxStates = 200000;

  /// Throws std::domain_error when the sector has more than kMaxStates states.
  SectorSpace(int sites, int layers, int particles, int cap = -1);

  std::size_t size() const { return states_.size(); }
  const Configuration& state(std::size_t i) const { return states_[i]; }
  std::size_t index_of(const Configuration& c) const;

  /// Dense generator Q with Q(a, b) the rate a -> b and rows summing to zero.
  Eigen::MatrixXd generator(const ModelParams& params, const Lattice& lattice) const;

  /// Number of multisets of `particles` items over `slots` slots, capped at
  /// kMaxStates + 1 to avoid overflow.
  static std::size_t count(int slots, int particles);

 private:
  std::vector<Configuration> states_;
  std::map<std::vector<int>, std::size_t> lookup_;
};

/// Copy of params with every active-jump direction reversed.
ModelParams reversed_params(const ModelParams& params);

/// Dual walker: hops at kappa N^2 each way, active jumps at lambda N to x - s.
ParticleState simulate_dual_particle(ParticleState start, const ModelParams& params, double t, Rng& rng);

struct DualityCheck {
  double lhs = 0.0;  // E_eta[D(xi, eta_t)]
  double rhs = 0.0;  // E_xi[D(xi_t, eta)] under the reversed dynamics
  double error = 0.0;
  std::size_t forward_states = 0;
  std::size_t dual_states = 0;
};

/// Both sides of the duality relation by dense matrix exponentials of the
/// forward and reversed sector generators. Run-and-tumble family only.
DualityCheck check_duality_identity(const Lattice& lattice, const ModelParams& params, const DualConfiguration& xi,
                                    const Configuration& eta, double t,
                                    DualityKind kind = DualityKind::Binomial);

/// E-hat[rho(X_t / N, s_t)] for a dual walker started at (x, s), estimated by
/// Monte Carlo; every sample is asserted to lie below sup rho.
struct DualMoment {
  Moments estimate;
  double sup_profile = 0.0;
};
DualMoment dual_moment_prediction(int x, int layer, double t, const ModelParams& params, const Lattice& lattice,
                                  const GridFunction& profile, std::size_t samples, std::uint64_t seed);

/// Profile value at microscopic site x (grid point floor(x * M / L)).
double profile_at_site(const GridFunction& profile, const Lattice& lattice, long x, int layer);

}  // namespace rtp
