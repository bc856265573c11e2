#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rtp/model.hpp"
#include "rtp/random.hpp"

namespace rtp {

/// Called once per observation time with an immutable snapshot.
using Observer = std::function<void(std::size_t index, double t, const Configuration& snapshot)>;

/// Snapshots at the requested macroscopic times. The simulation clock is
/// macroscopic time; all rates already carry their powers of N.
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<Configuration> snapshots;
  long events = 0;  // executed transitions over [0, T]
};

struct StepResult {
  bool absorbed = false;
  double dt = 0.0;
  Transition transition;
};

/// One naive Gillespie step over the full transition list (O(L)); meant for
/// tiny systems and as a reference. Empty or frozen systems report absorbed.
StepResult gillespie_step(Configuration& config, const ModelParams& params, const Lattice& lattice, Rng& rng);

/// Fenwick tree of nonnegative weights with prefix search.
class RateTree {
 public:
  explicit RateTree(std::size_t n = 0);
  void set(std::size_t i, double w);
  double get(std::size_t i) const { return weights_[i]; }
  double total() const;
  /// Smallest i with prefix(i+1) > u, for u in [0, total()).
  std::size_t find(double u) const;
  void rebuild();

 private:
  std::vector<double> weights_;
  std::vector<double> tree_;
  std::size_t top_bit_ = 1;
};

/// Exact CTMC path for either family with per-site rates in a Fenwick tree
/// (O(log L) per event). Observation times must be sorted and nonnegative.
TrajectoryRecord simulate_gillespie(const Configuration& config0, const ModelParams& params, const Lattice& lattice,
                                    const std::vector<double>& obs_times, Rng& rng,
                                    const Observer& observer = {});

/// Independent run-and-tumble particles evolved one by one. Between flips a
/// particle's hop displacement is a difference of two Poisson counts and its
/// active displacement a Poisson count, so this is exact in law at the
/// observation times and costs O(flips) per particle.
TrajectoryRecord simulate_independent(const Configuration& config0, const ModelParams& params, const Lattice& lattice,
                                      const std::vector<double>& obs_times, Rng& rng,
                                      const Observer& observer = {});

/// Exclusion process by uniformization over a particle list: proposals arrive
/// at rate n_particles * B with B an upper bound on every per-particle rate,
/// and are accepted with probability rate / bound. Exact in law.
TrajectoryRecord simulate_uniformized(const Configuration& config0, const ModelParams& params, const Lattice& lattice,
                                      const std::vector<double>& obs_times, Rng& rng,
                                      const Observer& observer = {});

/// Single tagged RTP particle; displacement is unwrapped (microscopic units).
struct ParticleState {
  long x = 0;
  int layer = 0;
};

/// Forward (drift_sign = +1) or velocity-reversed (drift_sign = -1) walker.
ParticleState simulate_walker(ParticleState start, const ModelParams& params, double t, Rng& rng,
                              int drift_sign = +1);

void validate_obs_times(const std::vector<double>& obs_times);

}  // namespace rtp
