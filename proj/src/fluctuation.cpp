#include "rtp/fluctuation.hpp"

#include <cmath>
#include <stdexcept>

#include "rtp/parallel.hpp"
#include "rtp/random.hpp"

namespace rtp {

namespace {

void require_site_grid(const GridFunction& phi, const Configuration& config, const Lattice& lattice) {
  if (phi.points() != lattice.sites || phi.layers() != config.layers() ||
      std::abs(phi.macro_length() - lattice.macro_length()) > 1e-12 * lattice.macro_length())
    throw std::domain_error("test function grid does not match the lattice");
}

}  // namespace

double pair_field(const Configuration& config, const GridFunction& phi, const ModelParams& params,
                  const Lattice& lattice) {
  require_site_grid(phi, config, lattice);
  const double m = params.centering();
  double s = 0.0;
  for (int x = 0; x < config.sites(); ++x)
    for (int l = 0; l < config.layers(); ++l) s += (config.at(x, l) - m) * phi.at(x, l);
  return s / std::sqrt(static_cast<double>(params.scaling_n));
}

double pair_total(const Configuration& config, const GridFunction& phi, const ModelParams& params,
                  const Lattice& lattice) {
  if (phi.layers() != 1) throw std::domain_error("total-density pairing takes a single-layer function");
  if (phi.points() != lattice.sites) throw std::domain_error("test function grid does not match the lattice");
  const double m = params.centering();
  double s = 0.0;
  for (int x = 0; x < config.sites(); ++x) {
    double col = 0.0;
    for (int l = 0; l < config.layers(); ++l) col += config.at(x, l) - m;
    s += col * phi.at(x, 0);
  }
  return s / std::sqrt(static_cast<double>(params.scaling_n));
}

TrajectoryRecord simulate(Simulator sim, const Configuration& config0, const ModelParams& params,
                          const Lattice& lattice, const std::vector<double>& obs_times, Rng& rng) {
  if (sim == Simulator::Auto)
    sim = params.family == Family::IndependentRtp ? Simulator::Independent : Simulator::Uniformized;
  switch (sim) {
    case Simulator::Gillespie:
      return simulate_gillespie(config0, params, lattice, obs_times, rng);
    case Simulator::Independent:
      return simulate_independent(config0, params, lattice, obs_times, rng);
    default:
      return simulate_uniformized(config0, params, lattice, obs_times, rng);
  }
}

std::vector<CovarianceEstimate> estimate_stationary_covariances(const ModelParams& params, const Lattice& lattice,
                                                                const std::vector<CovarianceCase>& cases,
                                                                const std::vector<double>& times,
                                                                std::size_t replicas, std::uint64_t seed,
                                                                int workers, Simulator sim) {
  if (replicas < 100) throw std::domain_error("covariance estimation needs at least 100 replicas");
  validate_obs_times(times);
  if (!times.empty()) check_wrap(params, lattice, times.back());
  Configuration probe(lattice.sites, params.layers.size());
  for (const auto& c : cases) {
    require_site_grid(c.phi, probe, lattice);
    require_site_grid(c.psi, probe, lattice);
  }
  const std::size_t nt = times.size();
  auto products = run_indexed(replicas, workers, [&](std::size_t i) {
    const std::uint64_t rs = derive_seed(seed, i);
    Configuration c0 = sample_product_measure(params, lattice, nullptr, rs);
    Rng rng = make_rng(rs, 1);
    TrajectoryRecord rec = simulate(sim, c0, params, lattice, times, rng);
    std::vector<double> out(cases.size() * nt);
    for (std::size_t c = 0; c < cases.size(); ++c) {
      const double y0 = pair_field(c0, cases[c].psi, params, lattice);
      for (std::size_t k = 0; k < nt; ++k)
        out[c * nt + k] = y0 * pair_field(rec.snapshots[k], cases[c].phi, params, lattice);
    }
    return out;
  });
  std::vector<CovarianceEstimate> est;
  for (std::size_t c = 0; c < cases.size(); ++c)
    for (std::size_t k = 0; k < nt; ++k) {
      Moments m;
      for (const auto& p : products) m.add(p[c * nt + k]);
      est.push_back({cases[c].label, times[k], m.mean, m.std_error(), m.n});
    }
  return est;
}

CovarianceEstimate estimate_stationary_covariance(const ModelParams& params, const Lattice& lattice,
                                                  const GridFunction& phi, const GridFunction& psi, double t,
                                                  std::size_t replicas, std::uint64_t seed, int workers) {
  return estimate_stationary_covariances(params, lattice, {{"", phi, psi}}, {t}, replicas, seed, workers).front();
}

double predicted_covariance(const ModelParams& params, const GridFunction& phi, const GridFunction& psi, double t) {
  return params.chi() * inner_product(semigroup_apply(forward_kind(params), params, t, phi), psi);
}

double predicted_covariance_dual(const ModelParams& params, const GridFunction& phi, const GridFunction& psi,
                                 double t) {
  return params.chi() * inner_product(phi, semigroup_apply(adjoint_kind(params), params, t, psi));
}

double total_density_covariance(const ModelParams& params, const GridFunction& phi, const GridFunction& psi,
                                double t) {
  if (phi.layers() != 1 || psi.layers() != 1)
    throw std::domain_error("total-density covariance takes single-layer functions");
  const int nl = params.layers.size();
  return predicted_covariance(params, phi.extend_to_layers(nl), psi.extend_to_layers(nl), t);
}

// ---------------------------------------------------------------------------
// Dynkin martingale

double martingale_limit(const ModelParams& params, const GridFunction& phi) {
  GridFunction dphi = spectral_derivative(phi, 1);
  GridFunction sigma_phi = apply_operator(OperatorKind::Sigma, params, phi);
  return 2.0 * params.kappa * params.rho * inner_product(dphi, dphi) +
         2.0 * params.rho * inner_product(phi, sigma_phi);
}

MartingaleReport martingale_statistics(const ModelParams& params, const Lattice& lattice, const GridFunction& phi,
                                       double t, std::size_t replicas, std::uint64_t seed, int workers) {
  if (params.family != Family::IndependentRtp)
    throw std::domain_error("martingale statistics are implemented for independent run-and-tumble particles");
  if (!(t > 0.0)) throw std::domain_error("martingale time must be positive");
  const int nl = params.layers.size();
  Configuration probe(lattice.sites, nl);
  require_site_grid(phi, probe, lattice);

  const int L = lattice.sites;
  const double n = params.scaling_n;
  const double hop = params.kappa * n * n;
  const double act = params.lambda * n;
  const LayerSet& layers = params.layers;

  // Generator applied to phi, carre du champ, and per-state total rates.
  std::vector<double> g(static_cast<std::size_t>(L) * nl), gamma_field(g.size());
  std::vector<double> rate(nl);
  for (int l = 0; l < nl; ++l) {
    const int sigma = layers.states[l];
    rate[l] = 2.0 * hop + (sigma != 0 ? act : 0.0) + layers.total_rate(l);
    for (int x = 0; x < L; ++x) {
      const double f = phi.at(x, l);
      const double dl = phi.at(lattice.wrap(x - 1), l) - f;
      const double dr = phi.at(lattice.wrap(x + 1), l) - f;
      const double da = sigma != 0 ? phi.at(lattice.wrap(x + sigma), l) - f : 0.0;
      double gen = hop * (dl + dr) + act * da;
      double cdc = hop * (dl * dl + dr * dr) + act * da * da;
      for (int k = 0; k < nl; ++k) {
        if (k == l) continue;
        const double df = phi.at(x, k) - f;
        gen += layers.switch_rates(l, k) * df;
        cdc += layers.switch_rates(l, k) * df * df;
      }
      g[static_cast<std::size_t>(x) * nl + l] = gen;
      gamma_field[static_cast<std::size_t>(x) * nl + l] = cdc;
    }
  }

  auto samples = run_indexed(replicas, workers, [&](std::size_t i) {
    const std::uint64_t rs = derive_seed(seed, i);
    Configuration c0 = sample_product_measure(params, lattice, nullptr, rs);
    Rng rng = make_rng(rs, 1);
    double acc = 0.0;
    for (int x0 = 0; x0 < L; ++x0)
      for (int l0 = 0; l0 < nl; ++l0)
        for (int k = 0; k < c0.at(x0, l0); ++k) {
          int x = x0, l = l0;
          double clock = 0.0, integral = 0.0;
          for (;;) {
            const double hold = exponential(rng, rate[l]);
            const double run = std::min(hold, t - clock);
            integral += g[static_cast<std::size_t>(x) * nl + l] * run;
            clock += hold;
            if (clock >= t) break;
            double u = uniform01(rng) * rate[l];
            if (u < hop) {
              x = lattice.wrap(x - 1);
            } else if ((u -= hop) < hop) {
              x = lattice.wrap(x + 1);
            } else if (layers.states[l] != 0 && (u -= hop) < act) {
              x = lattice.wrap(x + layers.states[l]);
            } else {
              if (layers.states[l] != 0) u -= act;
              int target = l;
              for (int q = 0; q < nl; ++q) {
                if (q == l) continue;
                target = q;
                if (u < layers.switch_rates(l, q)) break;
                u -= layers.switch_rates(l, q);
              }
              l = target;
            }
          }
          acc += phi.at(x, l) - phi.at(x0, l0) - integral;
        }
    return acc / std::sqrt(n);
  });

  MartingaleReport rep;
  rep.t = t;
  rep.m = moments_of(samples);
  rep.variance = variance_with_error(samples);
  rep.var_over_t = rep.variance.variance / t;
  rep.var_over_t_se = rep.variance.std_error / t;
  rep.limit = martingale_limit(params, phi);
  double s = 0.0;
  for (double v : gamma_field) s += v;
  rep.finite_n = params.rho * s / n;
  return rep;
}

}  // namespace rtp
