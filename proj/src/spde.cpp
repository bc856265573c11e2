#include "rtp/spde.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

#include "rtp/hydro.hpp"
#include "rtp/linalg.hpp"
#include "rtp/random.hpp"

namespace rtp {

Eigen::MatrixXcd noise_covariance(const ModelParams& params, double k) {
  const int n = params.layers.size();
  const Eigen::MatrixXcd sigma = build_symbol(OperatorKind::Sigma, params, k);
  const double chi = params.chi();
  if (params.family == Family::IndependentRtp)
    return 2.0 * params.kappa * chi * k * k * Eigen::MatrixXcd::Identity(n, n) + 2.0 * chi * sigma;
  const Eigen::MatrixXcd kk = build_symbol(OperatorKind::K, params, k);
  return 2.0 * params.alpha * chi * (kk * (k * k) + sigma);
}

Eigen::MatrixXcd field_drift(const ModelParams& params, double k) {
  return build_symbol(adjoint_kind(params), params, k);
}

double lyapunov_residual(const ModelParams& params, double k) {
  const Eigen::MatrixXcd a = field_drift(params, k);
  const double chi = params.chi();
  Eigen::MatrixXcd r = chi * (a + a.adjoint()) + noise_covariance(params, k);
  return r.cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Generic mode integrator

namespace {

Eigen::VectorXcd complex_normal(Rng& rng, Eigen::Index n) {
  Eigen::VectorXcd v(n);
  const double s = std::sqrt(0.5);
  for (Eigen::Index i = 0; i < n; ++i) {
    double re = standard_normal(rng);
    double im = standard_normal(rng);
    v(i) = cplx(s * re, s * im);
  }
  return v;
}

Eigen::VectorXd real_normal(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = standard_normal(rng);
  return v;
}

// Draws a Gaussian with covariance `cov`; the zero mode is real.
Eigen::VectorXcd draw(Rng& rng, const Eigen::MatrixXcd& factor_c, const Eigen::MatrixXd& factor_r, bool zero_mode) {
  if (zero_mode) return (factor_r * real_normal(rng, factor_r.cols())).cast<cplx>();
  return factor_c * complex_normal(rng, factor_c.cols());
}

}  // namespace

ModeTrajectory simulate_modes(const ModeSystem& system, double macro_length, int cutoff,
                              const std::vector<double>& times, std::uint64_t seed, const OuOptions& options) {
  if (cutoff < 0) throw std::domain_error("mode cutoff must be >= 0");
  if (times.empty()) throw std::domain_error("need at least one time");
  const double dt = times.size() > 1 ? times[1] - times[0] : 0.0;
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(dt > 0.0) || std::abs(times[i] - times[i - 1] - dt) > 1e-9 * std::max(1.0, dt))
      throw std::domain_error("time grid must be uniform and increasing");
  if (!options.stationary_start && options.initial.size() != static_cast<std::size_t>(cutoff) + 1)
    throw std::domain_error("initial state needs one vector per mode");

  ModeTrajectory out;
  out.macro_length = macro_length;
  out.times = times;
  out.modes.assign(times.size(), std::vector<Eigen::VectorXcd>(cutoff + 1));
  const double scale2 = options.noise_scale * options.noise_scale;
  for (int j = 0; j <= cutoff; ++j) {
    const double k = 2.0 * std::numbers::pi * j / macro_length;
    out.wavenumbers.push_back(k);
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(j));
    const bool zero = j == 0;
    const Eigen::MatrixXcd f = system.drift(k);

    Eigen::VectorXcd y;
    if (options.stationary_start) {
      Eigen::MatrixXcd s = system.stationary(k);
      Eigen::MatrixXcd fc = zero ? Eigen::MatrixXcd() : psd_factor(s, 1e-12, &out.floored);
      Eigen::MatrixXd fr = zero ? psd_factor(Eigen::MatrixXd(s.real()), 1e-12, &out.floored) : Eigen::MatrixXd();
      y = draw(rng, fc, fr, zero);
    } else {
      y = options.initial[j];
    }
    out.modes[0][j] = y;
    if (times.size() == 1) continue;

    OuStep step = van_loan(f, scale2 * system.noise(k), dt);
    Eigen::MatrixXcd fc = zero ? Eigen::MatrixXcd() : psd_factor(step.covariance, 1e-12, &out.floored);
    Eigen::MatrixXd fr = zero ? psd_factor(Eigen::MatrixXd(step.covariance.real()), 1e-12, &out.floored)
                              : Eigen::MatrixXd();
    if (zero) step.transition = step.transition.real().cast<cplx>();
    for (std::size_t i = 1; i < times.size(); ++i) {
      y = step.transition * y + draw(rng, fc, fr, zero);
      out.modes[i][j] = y;
    }
  }
  return out;
}

ModeTrajectory simulate_ou_field(const ModelParams& params, double macro_length, int cutoff,
                                 const std::vector<double>& times, std::uint64_t seed, const OuOptions& options) {
  const int n = params.layers.size();
  const double chi = params.chi();
  ModeSystem sys{[&](double k) { return field_drift(params, k); },
                 [&](double k) { return noise_covariance(params, k); },
                 [&](double) -> Eigen::MatrixXcd { return chi * Eigen::MatrixXcd::Identity(n, n); }};
  return simulate_modes(sys, macro_length, cutoff, times, seed, options);
}

ModeTrajectory simulate_sum_difference(const ModelParams& params, double macro_length, int cutoff,
                                       const std::vector<double>& times, std::uint64_t seed,
                                       const OuOptions& options) {
  if (params.family != Family::IndependentRtp)
    throw std::domain_error("the (Z, R) system is stated for run-and-tumble particles");
  const double gamma = two_layer_gamma(params);
  const int ip = params.layers.index_of(+1);
  const int im = params.layers.index_of(-1);
  const double d = params.diffusion(ip);
  const double lambda = params.lambda;
  const double chi = params.chi();
  Eigen::Matrix2cd t;  // (Y_+, Y_-) in layer order -> (Z, R)
  t.setZero();
  t(0, ip) = 1.0;
  t(0, im) = 1.0;
  t(1, ip) = 1.0;
  t(1, im) = -1.0;
  ModeSystem sys{[=](double k) -> Eigen::MatrixXcd {
                   Eigen::Matrix2cd s;
                   s << -d * k * k, cplx(0.0, -lambda * k), cplx(0.0, -lambda * k), -d * k * k - 2.0 * gamma;
                   return s;
                 },
                 [&, t](double k) -> Eigen::MatrixXcd { return t * noise_covariance(params, k) * t.transpose(); },
                 [=](double) -> Eigen::MatrixXcd { return 2.0 * chi * Eigen::Matrix2cd::Identity(); }};
  return simulate_modes(sys, macro_length, cutoff, times, seed, options);
}

// ---------------------------------------------------------------------------
// Pairings and fields

namespace {

std::vector<std::vector<cplx>> coefficients(const GridFunction& phi) {
  std::vector<std::vector<cplx>> c(phi.layers());
  for (int l = 0; l < phi.layers(); ++l)
    c[l] = forward_fft(phi.values().data() + static_cast<std::ptrdiff_t>(l) * phi.points(), phi.points());
  return c;
}

double pair_impl(const ModeTrajectory& traj, std::size_t ti, const GridFunction& phi, int component) {
  const auto& modes = traj.modes.at(ti);
  const int cutoff = static_cast<int>(modes.size()) - 1;
  if (std::abs(phi.macro_length() - traj.macro_length) > 1e-12 * traj.macro_length)
    throw std::domain_error("test function lives on a different torus");
  if (cutoff >= phi.points() / 2) throw std::domain_error("test function grid does not resolve the mode cutoff");
  const auto c = coefficients(phi);
  double s = 0.0;
  for (int j = 0; j <= cutoff; ++j) {
    cplx acc = 0.0;
    if (component < 0) {
      if (phi.layers() != modes[j].size()) throw std::domain_error("layer count mismatch");
      for (int l = 0; l < phi.layers(); ++l) acc += modes[j](l) * std::conj(c[l][j]);
    } else {
      acc = modes[j](component) * std::conj(c[0][j]);
    }
    s += j == 0 ? acc.real() : 2.0 * acc.real();
  }
  return std::sqrt(traj.macro_length) * s;
}

}  // namespace

double ModeTrajectory::pair(std::size_t time_index, const GridFunction& phi) const {
  return pair_impl(*this, time_index, phi, -1);
}

double pair_component(const ModeTrajectory& traj, std::size_t time_index, int component, const GridFunction& phi) {
  if (phi.layers() != 1) throw std::domain_error("component pairing takes a single-layer function");
  return pair_impl(traj, time_index, phi, component);
}

GridFunction ModeTrajectory::field(std::size_t time_index, int points, double* max_imag) const {
  const auto& m = modes.at(time_index);
  const int cutoff = static_cast<int>(m.size()) - 1;
  if (cutoff >= points / 2) throw std::domain_error("grid does not resolve the mode cutoff");
  const int comps = static_cast<int>(m.front().size());
  GridFunction g(points, macro_length, comps);
  Eigen::FFT<double> fft;
  double worst = 0.0;
  const double scale = points / std::sqrt(macro_length);
  for (int l = 0; l < comps; ++l) {
    std::vector<cplx> spec(points, 0.0), vals;
    for (int j = 0; j <= cutoff; ++j) {
      spec[j] = m[j](l) * scale;
      if (j > 0) spec[points - j] = std::conj(m[j](l)) * scale;
    }
    fft.inv(vals, spec);
    for (int i = 0; i < points; ++i) {
      g.at(i, l) = vals[i].real();
      worst = std::max(worst, std::abs(vals[i].imag()));
    }
  }
  if (max_imag) *max_imag = worst;
  return g;
}

int mode_cutoff_for(const std::vector<GridFunction>& test_functions) {
  int jmax = 0;
  int points = 0;
  for (const auto& phi : test_functions) {
    points = points == 0 ? phi.points() : std::min(points, phi.points());
    const auto c = coefficients(phi);
    double energy = 0.0;
    for (const auto& layer : c)
      for (auto v : layer) energy += std::norm(v);
    for (const auto& layer : c)
      for (int j = 0; j <= phi.points() / 2; ++j) {
        double e = std::norm(layer[j]) + (j > 0 && j < phi.points() / 2 ? std::norm(layer[phi.points() - j]) : 0.0);
        if (e >= 1e-12 * energy) jmax = std::max(jmax, j);
      }
  }
  if (points == 0) return 0;
  return std::min(4 * jmax, points / 2 - 1);
}

double time_averaged_covariance(const ModeTrajectory& traj, const GridFunction& phi, const GridFunction& psi,
                                std::size_t lag_steps) {
  if (traj.times.size() <= lag_steps) throw std::domain_error("trajectory shorter than the lag");
  std::vector<double> yphi(traj.times.size()), ypsi(traj.times.size());
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    yphi[i] = traj.pair(i, phi);
    ypsi[i] = traj.pair(i, psi);
  }
  double s = 0.0;
  const std::size_t n = traj.times.size() - lag_steps;
  for (std::size_t i = 0; i < n; ++i) s += yphi[i + lag_steps] * ypsi[i];
  return s / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Second-order residual of the total density

std::vector<ModeWhiteness> total_density_second_order_check(const ModeTrajectory& zr, const ModelParams& params,
                                                            int max_lag) {
  const std::size_t nt = zr.times.size();
  if (nt < 3 + static_cast<std::size_t>(max_lag)) throw std::domain_error("trajectory too short");
  const double dt = zr.times[1] - zr.times[0];
  for (std::size_t i = 1; i < nt; ++i)
    if (std::abs(zr.times[i] - zr.times[i - 1] - dt) > 1e-9 * std::max(1.0, dt))
      throw std::domain_error("time grid must be uniform");
  const double gamma = two_layer_gamma(params);
  const double lambda = params.lambda;
  const double a2 = 8.0 * lambda * lambda * gamma * params.chi();

  std::vector<ModeWhiteness> out;
  for (std::size_t j = 1; j < zr.wavenumbers.size(); ++j) {
    const double k = zr.wavenumbers[j];
    std::vector<cplx> r;
    r.reserve(nt - 2);
    for (std::size_t i = 1; i + 1 < nt; ++i) {
      cplx zp = zr.modes[i + 1][j](0), z0 = zr.modes[i][j](0), zm = zr.modes[i - 1][j](0);
      r.push_back((zp - 2.0 * z0 + zm) / (dt * dt) + gamma * (zp - zm) / dt + lambda * lambda * k * k * z0);
    }
    ModeWhiteness w;
    w.k = k;
    w.target_variance = (2.0 / 3.0) * a2 * k * k / dt;
    std::vector<double> sq;
    sq.reserve(r.size());
    for (auto v : r) {
      sq.push_back(std::norm(v));
      w.max_abs_residual = std::max(w.max_abs_residual, std::abs(v));
    }
    Moments m = moments_of(sq);
    w.variance = m.mean;
    // Neighbouring residuals overlap, so inflate the iid error by the
    // lag-1 structure of |r|^2 (correlation 1/16).
    w.variance_se = m.std_error() * std::sqrt(1.0 + 2.0 / 16.0);
    const double n = static_cast<double>(r.size());
    for (int lag = 1; lag <= max_lag; ++lag) {
      cplx acc = 0.0;
      for (std::size_t i = 0; i + lag < r.size(); ++i) acc += r[i + lag] * std::conj(r[i]);
      const double denom = w.variance * (n - lag);
      w.autocorrelation.push_back(denom > 0.0 ? acc.real() / denom : 0.0);
    }
    // Bartlett: lags beyond 1 of an MA(1) with rho_1 = 1/4 have variance
    // (1 + 2/16) / samples; real and imaginary parts double the samples.
    w.autocorrelation_se = std::sqrt((1.0 + 2.0 / 16.0) / (2.0 * n));
    out.push_back(w);
  }
  return out;
}

}  // namespace rtp
