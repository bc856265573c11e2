#include <algorithm>
#include "rtp/duality.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "rtp/linalg.hpp"
#include "rtp/spectral.hpp"

namespace rtp {

namespace {

double binomial_coefficient(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

}  // namespace

double duality_function(const DualConfiguration& xi, const Configuration& eta) {
  if (xi.sites() != eta.sites() || xi.layers() != eta.layers())
    throw std::domain_error("dual and primal configurations live on different lattices");
  double d = 1.0;
  const auto& a = xi.raw();
  const auto& b = eta.raw();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    if (a[i] > b[i]) return 0.0;
    d *= binomial_coefficient(b[i], a[i]);
  }
  return d;
}

double factorial_duality_function(const DualConfiguration& xi, const Configuration& eta) {
  if (xi.sites() != eta.sites() || xi.layers() != eta.layers())
    throw std::domain_error("dual and primal configurations live on different lattices");
  double d = 1.0;
  const auto& a = xi.raw();
  const auto& b = eta.raw();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return 0.0;
    for (int j = 0; j < a[i]; ++j) d *= b[i] - j;
  }
  return d;
}

bool binomial_duality_applies(const DualConfiguration& xi, const Configuration& eta) {
  if (xi.total_particles() <= 1) return true;
  auto at_most_one = [](const Configuration& c) {
    return std::all_of(c.raw().begin(), c.raw().end(), [](int v) { return v <= 1; });
  };
  return at_most_one(xi) && at_most_one(eta);
}

// ---------------------------------------------------------------------------
// SectorSpace

std::size_t SectorSpace::count(int slots, int particles) {
  // C(slots + particles - 1, particles), saturating.
  double c = 1.0;
  for (int i = 1; i <= particles; ++i) {
    c = c * (slots - 1 + i) / i;
    if (c > static_cast<double>(kMaxStates) + 1.0) return kMaxStates + 1;
  }
  return static_cast<std::size_t>(std::llround(c));
}

SectorSpace::SectorSpace(int sites, int layers, int particles, int cap) {
  const int slots = sites * layers;
  if (particles < 0) throw std::domain_error("particle count must be nonnegative");
  std::size_t bound = count(slots, particles);
  if (bound > kMaxStates)
    throw std::domain_error("sector too large: more than " + std::to_string(kMaxStates) + " states (" +
                            std::to_string(slots) + " slots, " + std::to_string(particles) + " particles)");
  std::vector<int> occ(slots, 0);
  // Depth-first enumeration of compositions with an optional cap.
  auto rec = [&](auto&& self, int slot, int left) -> void {
    if (slot == slots - 1) {
      if (cap >= 0 && left > cap) return;
      occ[slot] = left;
      Configuration c(sites, layers);
      for (int i = 0; i < slots; ++i) c.set(i / layers, i % layers, occ[i]);
      lookup_.emplace(occ, states_.size());
      states_.push_back(std::move(c));
      occ[slot] = 0;
      return;
    }
    const int top = cap >= 0 ? std::min(cap, left) : left;
    for (int k = top; k >= 0; --k) {
      occ[slot] = k;
      self(self, slot + 1, left - k);
    }
    occ[slot] = 0;
  };
  if (slots > 0) rec(rec, 0, particles);
}

std::size_t SectorSpace::index_of(const Configuration& c) const {
  auto it = lookup_.find(c.raw());
  if (it == lookup_.end()) throw std::logic_error("configuration outside the sector");
  return it->second;
}

Eigen::MatrixXd SectorSpace::generator(const ModelParams& params, const Lattice& lattice) const {
  const std::size_t n = size();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < n; ++a) {
    for (const auto& tr : enumerate_transitions(states_[a], params, lattice)) {
      std::size_t b = index_of(apply_transition(states_[a], tr, params));
      q(a, b) += tr.rate;
      q(a, a) -= tr.rate;
    }
  }
  return q;
}

// ---------------------------------------------------------------------------
// Dual dynamics

ModelParams reversed_params(const ModelParams& params) {
  ModelParams r = params;
  for (int& s : r.layers.states) s = -s;
  return r;
}

ParticleState simulate_dual_particle(ParticleState start, const ModelParams& params, double t, Rng& rng) {
  return simulate_walker(start, params, t, rng, -1);
}

DualityCheck check_duality_identity(const Lattice& lattice, const ModelParams& params, const DualConfiguration& xi,
                                    const Configuration& eta, double t, DualityKind kind) {
  if (params.family != Family::IndependentRtp)
    throw std::domain_error("duality check is implemented for independent run-and-tumble particles only");
  if (!(t >= 0.0)) throw std::domain_error("time must be >= 0");
  const int layers = params.layers.size();
  SectorSpace fwd(lattice.sites, layers, static_cast<int>(eta.total_particles()));
  SectorSpace dual(lattice.sites, layers, static_cast<int>(xi.total_particles()));

  DualityCheck out;
  out.forward_states = fwd.size();
  out.dual_states = dual.size();

  Eigen::MatrixXd pf = expm(Eigen::MatrixXd(t * fwd.generator(params, lattice)));
  Eigen::MatrixXd pd = expm(Eigen::MatrixXd(t * dual.generator(reversed_params(params), lattice)));

  auto D = kind == DualityKind::Binomial ? duality_function : factorial_duality_function;
  const std::size_t a = fwd.index_of(eta);
  for (std::size_t b = 0; b < fwd.size(); ++b) out.lhs += pf(a, b) * D(xi, fwd.state(b));
  const std::size_t c = dual.index_of(xi);
  for (std::size_t d = 0; d < dual.size(); ++d) out.rhs += pd(c, d) * D(dual.state(d), eta);
  out.error = std::abs(out.lhs - out.rhs);
  return out;
}

double profile_at_site(const GridFunction& profile, const Lattice& lattice, long x, int layer) {
  long site = lattice.wrap(x);
  int j = static_cast<int>(site * static_cast<long>(profile.points()) / lattice.sites);
  return profile.at(j, layer);
}

DualMoment dual_moment_prediction(int x, int layer, double t, const ModelParams& params, const Lattice& lattice,
                                  const GridFunction& profile, std::size_t samples, std::uint64_t seed) {
  DualMoment out;
  out.sup_profile = profile.values().empty() ? 0.0 : *std::max_element(profile.values().begin(), profile.values().end());
  for (std::size_t i = 0; i < samples; ++i) {
    Rng rng = make_rng(seed, i);
    ParticleState p = simulate_dual_particle({x, layer}, params, t, rng);
    double v = profile_at_site(profile, lattice, p.x, p.layer);
    if (v > out.sup_profile) throw std::logic_error("dual moment sample exceeds sup of the profile");
    out.estimate.add(v);
  }
  return out;
}

}  // namespace rtp
