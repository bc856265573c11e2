#include "rtp/hydro.hpp"

#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

#include "rtp/kmc.hpp"
#include "rtp/parallel.hpp"
#include "rtp/random.hpp"

namespace rtp {

GridFunction DensityTrajectory::difference(std::size_t i, const LayerSet& layers) const {
  const GridFunction& p = profiles[i];
  return p.layer(layers.index_of(+1)) - p.layer(layers.index_of(-1));
}

DensityTrajectory solve_hydro(const GridFunction& rho0, const std::vector<double>& times, const ModelParams& params) {
  if (rho0.min_value() < 0.0) throw std::domain_error("initial density must be nonnegative");
  DensityTrajectory traj;
  const OperatorKind kind = adjoint_kind(params);
  for (double t : times) {
    traj.times.push_back(t);
    traj.profiles.push_back(semigroup_apply(kind, params, t, rho0));
  }
  return traj;
}

double two_layer_gamma(const ModelParams& params) {
  const LayerSet& l = params.layers;
  if (l.size() != 2 || l.index_of(+1) < 0 || l.index_of(-1) < 0)
    throw std::domain_error("the total-density system needs exactly the states {-1, +1}");
  return l.switch_rates(0, 1);
}

DensityTrajectory solve_sum_difference(const GridFunction& rho0, const std::vector<double>& times,
                                       const ModelParams& params) {
  if (params.family != Family::IndependentRtp)
    throw std::domain_error("sum/difference system is stated for run-and-tumble particles");
  if (rho0.min_value() < 0.0) throw std::domain_error("initial density must be nonnegative");
  const double gamma = two_layer_gamma(params);
  const int ip = params.layers.index_of(+1);
  const int im = params.layers.index_of(-1);
  const double d = params.diffusion(ip);
  const double lambda = params.lambda;
  const int m = rho0.points();

  const auto tot = forward_fft(rho0.sum_layers().values().data(), m);
  const auto dif = forward_fft((rho0.layer(ip) - rho0.layer(im)).values().data(), m);

  DensityTrajectory traj;
  for (double t : times) {
    std::vector<cplx> a(m), b(m);
    for (int j = 0; j <= m / 2; ++j) {
      const double k = wavenumber(j, m, rho0.macro_length());
      Eigen::Matrix2cd s;
      s << -d * k * k, cplx(0.0, -lambda * k), cplx(0.0, -lambda * k), -d * k * k - 2.0 * gamma;
      if (j == m / 2) s = s.real().cast<cplx>().eval();
      Eigen::Matrix2cd e = (t * s).exp();
      Eigen::Vector2cd v(tot[j], dif[j]);
      Eigen::Vector2cd w = e * v;
      a[j] = w(0);
      b[j] = w(1);
      if (j == 0 || j == m / 2) {
        a[j] = a[j].real();
        b[j] = b[j].real();
      } else {
        a[m - j] = std::conj(a[j]);
        b[m - j] = std::conj(b[j]);
      }
    }
    auto rt = inverse_fft(a);
    auto dt = inverse_fft(b);
    GridFunction p(m, rho0.macro_length(), 2);
    for (int i = 0; i < m; ++i) {
      p.at(i, ip) = 0.5 * (rt[i] + dt[i]);
      p.at(i, im) = 0.5 * (rt[i] - dt[i]);
    }
    traj.times.push_back(t);
    traj.profiles.push_back(std::move(p));
  }
  return traj;
}

namespace {

double l2_norm(const GridFunction& f) { return std::sqrt(inner_product(f, f)); }

}  // namespace

ResidualReport total_density_residual(const DensityTrajectory& traj, const ModelParams& params) {
  const std::size_t n = traj.times.size();
  if (n < 5) throw std::domain_error("residual needs at least 5 time samples");
  const double dt = traj.times[1] - traj.times[0];
  if (!(dt > 0.0)) throw std::domain_error("time grid must be increasing");
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(traj.times[i] - traj.times[i - 1] - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
      throw std::domain_error("time grid must be uniform");
  const double gamma = two_layer_gamma(params);
  const double d = params.diffusion(params.layers.index_of(+1));
  const double lambda = params.family == Family::IndependentRtp ? params.lambda : 0.0;

  std::vector<GridFunction> total;
  total.reserve(n);
  for (std::size_t i = 0; i < n; ++i) total.push_back(traj.total(i));

  ResidualReport rep;
  for (std::size_t i = 2; i + 2 < n; ++i) {
    // Fourth-order central stencils written as differences so that constant
    // data gives exactly zero.
    const GridFunction& fm2 = total[i - 2];
    const GridFunction& fm1 = total[i - 1];
    const GridFunction& f0 = total[i];
    const GridFunction& fp1 = total[i + 1];
    const GridFunction& fp2 = total[i + 2];
    GridFunction r1 = (1.0 / (12.0 * dt)) * (8.0 * (fp1 - fm1) - (fp2 - fm2));
    GridFunction r2 = (1.0 / (12.0 * dt * dt)) * (16.0 * (fp1 + fm1 - 2.0 * f0) - (fp2 + fm2 - 2.0 * f0));
    const GridFunction& r = total[i];
    GridFunction res = r2 + 2.0 * gamma * r1 - 2.0 * d * spectral_derivative(r1, 2) -
                       (lambda * lambda + 2.0 * gamma * d) * spectral_derivative(r, 2) +
                       d * d * spectral_derivative(r, 4);
    rep.absolute = std::max(rep.absolute, l2_norm(res));
    rep.scale = std::max(rep.scale, l2_norm(r2));
  }
  rep.relative = rep.scale > 0.0 ? rep.absolute / rep.scale : rep.absolute;
  return rep;
}

double PairingError::z() const {
  double se = empirical.std_error();
  double diff = empirical.mean - predicted;
  if (se == 0.0) return diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
  return diff / se;
}

HydroReport compare_empirical_to_hydro(const ModelParams& params, const Lattice& lattice, const GridFunction& rho0,
                                       double t, std::size_t replicas, std::uint64_t seed,
                                       const std::vector<GridFunction>& test_functions, int bins, int workers) {
  if (rho0.points() != lattice.sites) throw std::domain_error("initial profile must live on the site grid");
  if (bins <= 0 || lattice.sites % bins != 0) throw std::domain_error("bins must divide the number of sites");
  for (const auto& phi : test_functions)
    if (!phi.same_grid(rho0)) throw std::domain_error("test functions must live on the site grid");
  check_wrap(params, lattice, t);

  const int nl = rho0.layers();
  const int per_bin = lattice.sites / bins;
  const double n = params.scaling_n;

  struct ReplicaOut {
    std::vector<double> bin_density;  // bins * layers
    std::vector<double> pairings;
  };
  auto results = run_indexed(replicas, workers, [&](std::size_t i) {
    const std::uint64_t rs = derive_seed(seed, i);
    Configuration c0 = sample_product_measure(params, lattice, &rho0, rs);
    Rng rng = make_rng(rs, 1);
    TrajectoryRecord rec = params.family == Family::IndependentRtp
                               ? simulate_independent(c0, params, lattice, {t}, rng)
                               : simulate_uniformized(c0, params, lattice, {t}, rng);
    const Configuration& c = rec.snapshots.back();
    ReplicaOut out;
    out.bin_density.assign(static_cast<std::size_t>(bins) * nl, 0.0);
    for (int x = 0; x < lattice.sites; ++x)
      for (int l = 0; l < nl; ++l) out.bin_density[static_cast<std::size_t>(l) * bins + x / per_bin] += c.at(x, l);
    for (double& v : out.bin_density) v /= per_bin;
    for (const auto& phi : test_functions) {
      double s = 0.0;
      for (int x = 0; x < lattice.sites; ++x)
        for (int l = 0; l < nl; ++l) s += c.at(x, l) * phi.at(x, l);
      out.pairings.push_back(s / n);
    }
    return out;
  });

  // SEP profiles are Binomial parameters; the density is alpha times that.
  const double occupancy = params.family == Family::MultiLayerSep ? params.alpha : 1.0;
  GridFunction rho_t = occupancy * solve_hydro(rho0, {t}, params).profiles.back();
  HydroReport rep;
  rep.t = t;
  rep.bins = bins;
  const double bin_width = lattice.macro_length() / bins;
  for (int l = 0; l < nl; ++l)
    for (int b = 0; b < bins; ++b) {
      double emp = 0.0;
      for (const auto& r : results) emp += r.bin_density[static_cast<std::size_t>(l) * bins + b];
      emp /= static_cast<double>(replicas);
      double pred = 0.0;
      for (int x = b * per_bin; x < (b + 1) * per_bin; ++x) pred += rho_t.at(x, l);
      pred /= per_bin;
      rep.l1_error += std::abs(emp - pred) * bin_width;
    }
  for (std::size_t f = 0; f < test_functions.size(); ++f) {
    PairingError pe;
    pe.predicted = inner_product(test_functions[f], rho_t);
    for (const auto& r : results) pe.empirical.add(r.pairings[f]);
    rep.pairings.push_back(pe);
  }
  return rep;
}

}  // namespace rtp
