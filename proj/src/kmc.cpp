#include "rtp/kmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rtp {

void validate_obs_times(const std::vector<double>& obs_times) {
  for (std::size_t i = 0; i < obs_times.size(); ++i) {
    if (!(obs_times[i] >= 0.0) || !std::isfinite(obs_times[i]))
      throw std::domain_error("observation times must be finite and nonnegative");
    if (i > 0 && obs_times[i] < obs_times[i - 1]) throw std::domain_error("observation times must be sorted");
  }
}

namespace {

void record(TrajectoryRecord& rec, const Configuration& config, double t, const Observer& observer) {
  if (observer) observer(rec.times.size(), t, config);
  rec.times.push_back(t);
  rec.snapshots.push_back(config);
}

Transition pick_from(const std::vector<Transition>& list, double u) {
  double total = 0.0;
  for (const auto& tr : list) total += tr.rate;
  double target = u * total;
  for (const auto& tr : list) {
    if (target < tr.rate) return tr;
    target -= tr.rate;
  }
  return list.back();
}

}  // namespace

StepResult gillespie_step(Configuration& config, const ModelParams& params, const Lattice& lattice, Rng& rng) {
  auto list = enumerate_transitions(config, params, lattice);
  double total = 0.0;
  for (const auto& tr : list) total += tr.rate;
  if (list.empty() || !(total > 0.0)) return {true, 0.0, {}};
  StepResult res;
  res.dt = exponential(rng, total);
  res.transition = pick_from(list, uniform01(rng));
  apply_transition_inplace(config, res.transition, params);
  return res;
}

// ---------------------------------------------------------------------------
// RateTree

RateTree::RateTree(std::size_t n) : weights_(n, 0.0), tree_(n + 1, 0.0) {
  while (top_bit_ * 2 <= n) top_bit_ *= 2;
}

void RateTree::set(std::size_t i, double w) {
  double delta = w - weights_[i];
  weights_[i] = w;
  if (delta == 0.0) return;
  for (std::size_t j = i + 1; j < tree_.size(); j += j & (~j + 1)) tree_[j] += delta;
}

double RateTree::total() const {
  double s = 0.0;
  for (std::size_t j = weights_.size(); j > 0; j -= j & (~j + 1)) s += tree_[j];
  return s;
}

std::size_t RateTree::find(double u) const {
  const std::size_t n = weights_.size();
  std::size_t pos = 0;
  for (std::size_t step = top_bit_; step > 0; step >>= 1) {
    if (pos + step <= n && tree_[pos + step] <= u) {
      pos += step;
      u -= tree_[pos];
    }
  }
  // Round-off can land past the last positive weight.
  if (pos >= n) pos = n - 1;
  while (pos > 0 && weights_[pos] <= 0.0) --pos;
  return pos;
}

void RateTree::rebuild() {
  std::fill(tree_.begin(), tree_.end(), 0.0);
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    std::size_t j = i + 1;
    tree_[j] += weights_[i];
    std::size_t parent = j + (j & (~j + 1));
    if (parent < tree_.size()) tree_[parent] += tree_[j];
  }
}

// ---------------------------------------------------------------------------
// Fenwick Gillespie

TrajectoryRecord simulate_gillespie(const Configuration& config0, const ModelParams& params, const Lattice& lattice,
                                    const std::vector<double>& obs_times, Rng& rng, const Observer& observer) {
  validate_obs_times(obs_times);
  TrajectoryRecord rec;
  Configuration config = config0;
  const int nl = config.layers();
  RateTree tree(config.raw().size());
  for (int x = 0; x < config.sites(); ++x)
    for (int l = 0; l < nl; ++l) tree.set(config.index(x, l), site_rate(config, params, lattice, {x, l}));
  tree.rebuild();

  std::vector<Transition> scratch;
  std::size_t next_obs = 0;
  double t = 0.0;
  long updates = 0;
  const double horizon = obs_times.empty() ? 0.0 : obs_times.back();

  auto refresh = [&](Site s) { tree.set(config.index(s.x, s.layer), site_rate(config, params, lattice, s)); };

  while (next_obs < obs_times.size()) {
    double total = tree.total();
    double t_next = total > 0.0 ? t + exponential(rng, total) : std::numeric_limits<double>::infinity();
    while (next_obs < obs_times.size() && obs_times[next_obs] < t_next) record(rec, config, obs_times[next_obs++], observer);
    if (t_next > horizon) break;
    t = t_next;

    std::size_t idx = tree.find(uniform01(rng) * total);
    Site s{static_cast<int>(idx / nl), static_cast<int>(idx % nl)};
    scratch.clear();
    site_transitions(config, params, lattice, s, scratch);
    if (scratch.empty()) {  // stale round-off weight
      refresh(s);
      continue;
    }
    Transition tr = pick_from(scratch, uniform01(rng));
    apply_transition_inplace(config, tr, params);
    ++rec.events;
    for (Site p : {tr.from, tr.to}) {
      refresh(p);
      refresh({lattice.wrap(p.x - 1), p.layer});
      refresh({lattice.wrap(p.x + 1), p.layer});
      for (int l = 0; l < nl; ++l)
        if (l != p.layer) refresh({p.x, l});
    }
    if (++updates % (1 << 18) == 0) tree.rebuild();
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Independent particles

namespace {

int pick_flip_target(const LayerSet& layers, int layer, Rng& rng) {
  double target = uniform01(rng) * layers.total_rate(layer);
  int last = layer;
  for (int l = 0; l < layers.size(); ++l) {
    if (l == layer) continue;
    double c = layers.switch_rates(layer, l);
    if (c <= 0.0) continue;
    last = l;
    if (target < c) return l;
    target -= c;
  }
  return last;
}

// Advances one particle by dt. Returns the number of events executed.
long advance_walker(ParticleState& p, const ModelParams& params, double dt, Rng& rng, int drift_sign) {
  const double n = params.scaling_n;
  const double hop = params.kappa * n * n;
  const double active = params.lambda * n;
  long events = 0;
  double remaining = dt;
  while (remaining > 0.0) {
    double flip_rate = params.layers.total_rate(p.layer);
    double tau = flip_rate > 0.0 ? exponential(rng, flip_rate) : std::numeric_limits<double>::infinity();
    double run = std::min(tau, remaining);
    if (hop > 0.0) {
      long right = poisson(rng, hop * run);
      long left = poisson(rng, hop * run);
      p.x += right - left;
      events += right + left;
    }
    int sigma = params.layers.states[p.layer];
    if (active > 0.0 && sigma != 0) {
      long jumps = poisson(rng, active * run);
      p.x += static_cast<long>(drift_sign) * sigma * jumps;
      events += jumps;
    }
    if (tau >= remaining) break;
    remaining -= tau;
    p.layer = pick_flip_target(params.layers, p.layer, rng);
    ++events;
  }
  return events;
}

void require_rtp(const ModelParams& params) {
  if (params.family != Family::IndependentRtp)
    throw std::domain_error("independent-particle simulation requires the run-and-tumble family");
}

}  // namespace

ParticleState simulate_walker(ParticleState start, const ModelParams& params, double t, Rng& rng, int drift_sign) {
  require_rtp(params);
  if (!(t >= 0.0)) throw std::domain_error("simulation time must be >= 0");
  advance_walker(start, params, t, rng, drift_sign);
  return start;
}

TrajectoryRecord simulate_independent(const Configuration& config0, const ModelParams& params, const Lattice& lattice,
                                      const std::vector<double>& obs_times, Rng& rng, const Observer& observer) {
  require_rtp(params);
  validate_obs_times(obs_times);
  TrajectoryRecord rec;
  const std::size_t n_obs = obs_times.size();
  std::vector<Configuration> snaps(n_obs, Configuration(config0.sites(), config0.layers()));
  for (int x = 0; x < config0.sites(); ++x)
    for (int l = 0; l < config0.layers(); ++l)
      for (int k = 0; k < config0.at(x, l); ++k) {
        ParticleState p{x, l};
        double t = 0.0;
        for (std::size_t o = 0; o < n_obs; ++o) {
          rec.events += advance_walker(p, params, obs_times[o] - t, rng, +1);
          t = obs_times[o];
          snaps[o].add({lattice.wrap(p.x), p.layer}, 1);
        }
      }
  for (std::size_t o = 0; o < n_obs; ++o) record(rec, snaps[o], obs_times[o], observer);
  return rec;
}

// ---------------------------------------------------------------------------
// Uniformization over a particle list

TrajectoryRecord simulate_uniformized(const Configuration& config0, const ModelParams& params, const Lattice& lattice,
                                      const std::vector<double>& obs_times, Rng& rng, const Observer& observer) {
  validate_obs_times(obs_times);
  const bool sep = params.family == Family::MultiLayerSep;
  const LayerSet& layers = params.layers;
  const int nl = layers.size();
  const double n = params.scaling_n;
  const int alpha = sep ? params.alpha : 1;

  // Per-direction hop bound, active bound, flip bound.
  const double hop_bound = n * n * (sep ? params.max_kappa() * alpha : params.kappa);
  const double active_bound = sep ? 0.0 : params.lambda * n;
  const double flip_bound = layers.max_total_rate() * alpha;
  const double bound = 2.0 * hop_bound + active_bound + flip_bound;

  TrajectoryRecord rec;
  Configuration config = config0;
  std::vector<ParticleState> particles;
  particles.reserve(static_cast<std::size_t>(config.total_particles()));
  for (int x = 0; x < config.sites(); ++x)
    for (int l = 0; l < nl; ++l)
      for (int k = 0; k < config.at(x, l); ++k) particles.push_back({x, l});

  auto free_slots = [&](int x, int l) { return sep ? alpha - config.at(x, l) : 1; };
  std::vector<double> hop_rate(nl);
  for (int l = 0; l < nl; ++l) hop_rate[l] = n * n * (sep ? params.kappa_layers[l] : params.kappa);
  const int last = lattice.sites - 1;
  double t = 0.0;
  for (double t_obs : obs_times) {
    if (!particles.empty() && bound > 0.0) {
      long proposals = poisson(rng, static_cast<double>(particles.size()) * bound * (t_obs - t));
      for (long q = 0; q < proposals; ++q) {
        ParticleState& p = particles[uniform_index(rng, particles.size())];
        const int x = static_cast<int>(p.x);
        double u = uniform01(rng) * bound;
        Site to{-1, p.layer};
        if (u < 2.0 * hop_bound) {
          const bool right = u >= hop_bound;
          const double v = right ? u - hop_bound : u;
          // nearest neighbour without a modulo; this loop is the hot path
          const int y = right ? (x == last ? 0 : x + 1) : (x == 0 ? last : x - 1);
          const double rate = hop_rate[p.layer] * free_slots(y, p.layer);
          if (v < rate) to.x = y;
        } else if (u < 2.0 * hop_bound + active_bound) {
          int sigma = layers.states[p.layer];
          if (sigma != 0) to.x = lattice.wrap(x + sigma);
        } else {
          double v = u - 2.0 * hop_bound - active_bound;
          for (int l = 0; l < nl; ++l) {
            if (l == p.layer) continue;
            double rate = layers.switch_rates(p.layer, l) * free_slots(x, l);
            if (v < rate) {
              to = {x, l};
              break;
            }
            v -= rate;
          }
        }
        if (to.x < 0) continue;
        config.add({x, p.layer}, -1);
        config.add(to, +1);
        p.x = to.x;
        p.layer = to.layer;
        ++rec.events;
      }
    }
    t = t_obs;
    record(rec, config, t_obs, observer);
  }
  return rec;
}

}  // namespace rtp
