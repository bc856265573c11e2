#include "rtp/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rtp/random.hpp"
#include "rtp/spectral.hpp"

namespace rtp {

std::string to_string(Family f) { return f == Family::IndependentRtp ? "rtp" : "sep"; }
std::string to_string(Convention c) { return c == Convention::Microscopic ? "microscopic" : "paper"; }

Family family_from_string(const std::string& s) {
  if (s == "rtp" || s == "IndependentRTP") return Family::IndependentRtp;
  if (s == "sep" || s == "MultiLayerSEP") return Family::MultiLayerSep;
  throw std::domain_error("unknown model family '" + s + "'");
}

Convention convention_from_string(const std::string& s) {
  if (s == "microscopic") return Convention::Microscopic;
  if (s == "paper") return Convention::Paper;
  throw std::domain_error("unknown convention '" + s + "'");
}

// ---------------------------------------------------------------------------
// LayerSet

int LayerSet::index_of(int sigma) const {
  auto it = std::find(states.begin(), states.end(), sigma);
  if (it == states.end()) throw std::domain_error("state " + std::to_string(sigma) + " not in layer set");
  return static_cast<int>(it - states.begin());
}

Eigen::MatrixXd LayerSet::switch_generator() const {
  Eigen::MatrixXd c = switch_rates;
  for (int i = 0; i < size(); ++i) {
    c(i, i) = 0.0;
    c(i, i) = -c.row(i).sum();
  }
  return c;
}

double LayerSet::total_rate(int layer) const { return switch_rates.row(layer).sum() - switch_rates(layer, layer); }

double LayerSet::max_total_rate() const {
  double m = 0.0;
  for (int i = 0; i < size(); ++i) m = std::max(m, total_rate(i));
  return m;
}

void LayerSet::validate() const {
  const int n = size();
  if (n == 0) throw std::domain_error("layer set is empty");
  if (switch_rates.rows() != n || switch_rates.cols() != n)
    throw std::domain_error("switch-rate matrix must be |S| x |S|");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (states[i] == states[j]) throw std::domain_error("duplicate internal state");
  for (int i = 0; i < n; ++i) {
    if (switch_rates(i, i) != 0.0) throw std::domain_error("switch rates must have zero diagonal");
    for (int j = 0; j < n; ++j) {
      if (!(switch_rates(i, j) >= 0.0)) throw std::domain_error("switch rates must be nonnegative");
      if (switch_rates(i, j) != switch_rates(j, i)) throw std::domain_error("switch rates must be symmetric");
    }
  }
  // Irreducibility: breadth-first search over positive-rate edges.
  std::vector<bool> seen(n, false);
  std::vector<int> queue{0};
  seen[0] = true;
  for (std::size_t q = 0; q < queue.size(); ++q)
    for (int j = 0; j < n; ++j)
      if (!seen[j] && switch_rates(queue[q], j) > 0.0) {
        seen[j] = true;
        queue.push_back(j);
      }
  if (std::count(seen.begin(), seen.end(), true) != n)
    throw std::domain_error("switch rates are not irreducible");
}

LayerSet LayerSet::two_state(double gamma) {
  LayerSet s;
  s.states = {-1, 1};
  s.switch_rates = Eigen::MatrixXd{{0.0, gamma}, {gamma, 0.0}};
  return s;
}

// ---------------------------------------------------------------------------
// ModelParams

void ModelParams::validate() const {
  layers.validate();
  if (scaling_n < 1) throw std::domain_error("scaling_N must be >= 1");
  if (family == Family::IndependentRtp) {
    if (!(rho >= 0.0)) throw std::domain_error("RTP density rho must be >= 0");
    if (!(kappa >= 0.0)) throw std::domain_error("kappa must be >= 0");
    if (!(lambda >= 0.0)) throw std::domain_error("lambda must be >= 0");
  } else {
    if (!(rho > 0.0 && rho < 1.0)) throw std::domain_error("SEP parameter rho must lie in (0,1)");
    if (alpha < 1) throw std::domain_error("SEP alpha must be >= 1");
    if (static_cast<int>(kappa_layers.size()) != layers.size())
      throw std::domain_error("SEP needs one kappa_sigma per layer");
    for (double k : kappa_layers)
      if (!(k > 0.0)) throw std::domain_error("SEP kappa_sigma must be > 0");
  }
}

double ModelParams::kappa_of(int layer) const {
  return family == Family::MultiLayerSep ? kappa_layers.at(layer) : kappa;
}

double ModelParams::max_kappa() const {
  if (family == Family::IndependentRtp) return kappa;
  return *std::max_element(kappa_layers.begin(), kappa_layers.end());
}

double ModelParams::centering() const { return family == Family::IndependentRtp ? rho : alpha * rho; }

double ModelParams::chi() const { return family == Family::IndependentRtp ? rho : alpha * rho * (1.0 - rho); }

double ModelParams::paper_chi() const { return family == Family::IndependentRtp ? rho : rho * (alpha - rho); }

double ModelParams::diffusion(int layer) const {
  double half = convention == Convention::Paper ? 0.5 : 1.0;
  if (family == Family::IndependentRtp) return half * kappa;
  return half * alpha * kappa_layers.at(layer);
}

double ModelParams::switch_scale() const { return family == Family::IndependentRtp ? 1.0 : alpha; }

// ---------------------------------------------------------------------------
// Lattice

Lattice::Lattice(int sites_, int scaling_n_) : sites(sites_), scaling_n(scaling_n_) {
  if (scaling_n < 1) throw std::domain_error("scaling_N must be >= 1");
  if (sites % scaling_n != 0) throw std::domain_error("sites_L must be a multiple of scaling_N");
  if (sites < 4 * scaling_n) throw std::domain_error("sites_L must be at least 4 * scaling_N");
}

Lattice Lattice::from_macro(int macro_length, int scaling_n) { return Lattice(macro_length * scaling_n, scaling_n); }

Lattice Lattice::tiny(int sites, int scaling_n) {
  if (sites < 3 || scaling_n < 1) throw std::domain_error("tiny ring needs >= 3 sites and N >= 1");
  Lattice l;
  l.sites = sites;
  l.scaling_n = scaling_n;
  return l;
}

void check_wrap(const ModelParams& params, const Lattice& lattice, double horizon) {
  double n = params.scaling_n;
  double kappa = params.max_kappa() * (params.family == Family::MultiLayerSep ? params.alpha : 1);
  double lambda = params.family == Family::IndependentRtp ? params.lambda : 0.0;
  double reach = std::sqrt(2.0 * kappa * horizon) * n + lambda * n * horizon;
  if (reach >= lattice.sites / 4.0)
    throw std::domain_error("semigroup support " + std::to_string(reach) + " sites reaches L/4 = " +
                            std::to_string(lattice.sites / 4.0) + "; enlarge the ring");
}

// ---------------------------------------------------------------------------
// Configuration

Configuration::Configuration(int sites, int layers)
    : sites_(sites), layers_(layers), occ_(static_cast<std::size_t>(sites) * layers, 0) {}

void Configuration::set(int x, int layer, int value) {
  int& slot = occ_[index(x, layer)];
  total_ += value - slot;
  slot = value;
}

void Configuration::add(Site s, int delta) {
  occ_[index(s.x, s.layer)] += delta;
  total_ += delta;
}

Configuration sample_product_measure(const ModelParams& params, const Lattice& lattice,
                                     const GridFunction* profile, std::uint64_t seed) {
  const int layers = params.layers.size();
  if (profile) {
    if (profile->points() != lattice.sites || profile->layers() != layers)
      throw std::domain_error("profile must be sampled on the site grid (M == L) with one channel per layer");
    for (double v : profile->values()) {
      if (!(v >= 0.0)) throw std::domain_error("profile values must be nonnegative");
      if (params.family == Family::MultiLayerSep && v > 1.0)
        throw std::domain_error("SEP profile values are Binomial parameters and must lie in [0,1]");
    }
  } else if (params.family == Family::MultiLayerSep && !(params.rho >= 0.0 && params.rho <= 1.0)) {
    throw std::domain_error("SEP Binomial parameter outside [0,1]");
  } else if (!(params.rho >= 0.0)) {
    throw std::domain_error("density must be nonnegative");
  }

  Rng rng = make_rng(seed, 0x5a3b);
  Configuration config(lattice.sites, layers);
  for (int x = 0; x < lattice.sites; ++x)
    for (int l = 0; l < layers; ++l) {
      double value = profile ? profile->at(x, l) : params.rho;
      int n = params.family == Family::IndependentRtp ? static_cast<int>(poisson(rng, value))
                                                      : binomial_bernoulli(rng, params.alpha, value);
      config.set(x, l, n);
    }
  return config;
}

// ---------------------------------------------------------------------------
// Transitions

void site_transitions(const Configuration& config, const ModelParams& params, const Lattice& lattice, Site s,
                      std::vector<Transition>& out) {
  const int eta = config.at(s);
  if (eta == 0) return;
  const double n = params.scaling_n;
  const LayerSet& layers = params.layers;
  const int nl = layers.size();
  const Site left{lattice.wrap(s.x - 1), s.layer};
  const Site right{lattice.wrap(s.x + 1), s.layer};

  if (params.family == Family::IndependentRtp) {
    const double hop = params.kappa * n * n * eta;
    if (hop > 0.0) {
      out.push_back({TransitionKind::HopLeft, s, left, hop});
      out.push_back({TransitionKind::HopRight, s, right, hop});
    }
    const int sigma = layers.states[s.layer];
    const double active = params.lambda * n * eta;
    if (active > 0.0 && sigma != 0)
      out.push_back({TransitionKind::ActiveJump, s, {lattice.wrap(s.x + sigma), s.layer}, active});
    for (int l = 0; l < nl; ++l) {
      double c = layers.switch_rates(s.layer, l);
      if (l != s.layer && c > 0.0) out.push_back({TransitionKind::Flip, s, {s.x, l}, c * eta});
    }
    return;
  }

  const int alpha = params.alpha;
  const double base = n * n * params.kappa_layers[s.layer] * eta;
  double r = base * (alpha - config.at(left));
  if (r > 0.0) out.push_back({TransitionKind::HopLeft, s, left, r});
  r = base * (alpha - config.at(right));
  if (r > 0.0) out.push_back({TransitionKind::HopRight, s, right, r});
  for (int l = 0; l < nl; ++l) {
    double c = layers.switch_rates(s.layer, l);
    if (l == s.layer || c <= 0.0) continue;
    r = c * eta * (alpha - config.at(s.x, l));
    if (r > 0.0) out.push_back({TransitionKind::Flip, s, {s.x, l}, r});
  }
}

double site_rate(const Configuration& config, const ModelParams& params, const Lattice& lattice, Site s) {
  const int eta = config.at(s);
  if (eta == 0) return 0.0;
  const double n = params.scaling_n;
  const LayerSet& layers = params.layers;
  if (params.family == Family::IndependentRtp) {
    double r = 2.0 * params.kappa * n * n;
    if (layers.states[s.layer] != 0) r += params.lambda * n;
    return eta * (r + layers.total_rate(s.layer));
  }
  const int alpha = params.alpha;
  double free_sp = (alpha - config.at(lattice.wrap(s.x - 1), s.layer)) + (alpha - config.at(lattice.wrap(s.x + 1), s.layer));
  double r = n * n * params.kappa_layers[s.layer] * free_sp;
  for (int l = 0; l < layers.size(); ++l)
    if (l != s.layer) r += layers.switch_rates(s.layer, l) * (alpha - config.at(s.x, l));
  return eta * r;
}

std::vector<Transition> enumerate_transitions(const Configuration& config, const ModelParams& params,
                                              const Lattice& lattice) {
  std::vector<Transition> out;
  for (int x = 0; x < config.sites(); ++x)
    for (int l = 0; l < config.layers(); ++l) site_transitions(config, params, lattice, {x, l}, out);
  return out;
}

void apply_transition_inplace(Configuration& config, const Transition& t, const ModelParams& params) {
  if (config.at(t.from) <= 0) throw std::logic_error("illegal transition: source site is empty");
  if (t.from == t.to) throw std::logic_error("illegal transition: source equals target");
  if (params.family == Family::MultiLayerSep && config.at(t.to) >= params.alpha)
    throw std::logic_error("illegal transition: target site is full");
  config.add(t.from, -1);
  config.add(t.to, +1);
}

Configuration apply_transition(const Configuration& config, const Transition& t, const ModelParams& params) {
  Configuration next = config;
  apply_transition_inplace(next, t, params);
  return next;
}

bool is_valid(const Configuration& config, const ModelParams& params) {
  long sum = 0;
  for (int v : config.raw()) {
    if (v < 0) return false;
    if (params.family == Family::MultiLayerSep && v > params.alpha) return false;
    sum += v;
  }
  return sum == config.total_particles();
}

}  // namespace rtp
