#include "rtp/ldp.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "rtp/linalg.hpp"
#include "rtp/random.hpp"
#include "rtp/spde.hpp"

namespace rtp {

void SpaceTimePath::validate() const {
  if (slices.size() < 6) throw std::domain_error("path needs at least 6 time slices for fourth-order stencils");
  if (!(dt > 0.0)) throw std::domain_error("path time step must be positive");
  for (const auto& s : slices) {
    if (s.layers() != 1 || !s.same_grid(slices.front()))
      throw std::domain_error("path slices must share one single-layer grid");
    if (std::abs(s.mean()) > 1e-10 * std::max(1.0, s.max_abs()))
      throw std::domain_error("path slices must have zero spatial mean");
  }
}

void LdpParams::validate() const {
  if (!(lambda > 0.0)) throw std::domain_error("lambda must be > 0: with lambda = 0 the total-density noise is degenerate");
  if (!(gamma > 0.0)) throw std::domain_error("gamma must be > 0");
  if (!(chi > 0.0)) throw std::domain_error("chi must be > 0");
}

std::string to_string(PrefactorMode m) { return m == PrefactorMode::Derived ? "derived" : "paper"; }

PrefactorMode prefactor_mode_from_string(const std::string& s) {
  if (s == "derived") return PrefactorMode::Derived;
  if (s == "paper") return PrefactorMode::Paper;
  throw std::domain_error("unknown prefactor mode '" + s + "'");
}

double rate_prefactor(const LdpParams& p, PrefactorMode mode) {
  p.validate();
  if (mode == PrefactorMode::Paper) return 1.0 / (4.0 * p.lambda * std::sqrt(p.gamma * p.chi));
  return 1.0 / (16.0 * p.lambda * p.lambda * p.gamma * p.chi);
}

namespace {

void drop_mean(GridFunction& g) {
  const double m = g.mean();
  for (auto& v : g.values()) v -= m;
}

// First and second time derivatives at every slice: central five-point
// stencils inside, six-point one-sided ones at the two ends. The spatial mean
// is exactly zero in theory; roundoff amplified by 1/dt^2 is removed.
void time_derivatives(const SpaceTimePath& path, std::vector<GridFunction>& d1, std::vector<GridFunction>& d2) {
  const int n = static_cast<int>(path.slices.size());
  d1.assign(n, GridFunction());
  d2.assign(n, GridFunction());
  for (int i = 0; i < n; ++i) {
    int first = i - 2;
    int count = 5;
    if (i < 2) {
      first = 0;
      count = 6;
    } else if (i > n - 3) {
      first = n - 6;
      count = 6;
    }
    std::vector<double> nodes(count);
    for (int q = 0; q < count; ++q) nodes[q] = (first + q - i) * path.dt;
    auto w1 = fd_weights(nodes, 0.0, 1);
    auto w2 = fd_weights(nodes, 0.0, 2);
    GridFunction a = 0.0 * path.slices[i], b = a;
    for (int q = 0; q < count; ++q) {
      a += w1[q] * path.slices[first + q];
      b += w2[q] * path.slices[first + q];
    }
    drop_mean(a);
    drop_mean(b);
    d1[i] = std::move(a);
    d2[i] = std::move(b);
  }
}

// Trapezoid rule plus the Euler-Maclaurin end correction -dt^2/12 (f'(T) - f'(0)),
// with f' from five-point one-sided differences. Plain trapezoid cannot get
// below ~1e-8 here: its dt^2 error meets the 1/dt^2 roundoff of the second
// time derivative right around that level.
double trapezoid(const std::vector<double>& f, double dt) {
  const std::size_t n = f.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (i == 0 || i + 1 == n ? 0.5 : 1.0) * f[i];
  s *= dt;
  if (n >= 5) {
    static const std::vector<double> w = fd_weights({0.0, 1.0, 2.0, 3.0, 4.0}, 0.0, 1);
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t q = 0; q < 5; ++q) {
      d0 += w[q] * f[q];
      d1 -= w[q] * f[n - 1 - q];
    }
    s -= dt * (d1 - d0) / 12.0;  // dt^2 f' with f' = d / dt
  }
  return s;
}

}  // namespace

std::vector<GridFunction> rate_operator(const SpaceTimePath& path, const LdpParams& p) {
  p.validate();
  path.validate();
  std::vector<GridFunction> d1, d2;
  time_derivatives(path, d1, d2);
  std::vector<GridFunction> out;
  out.reserve(path.slices.size());
  const double l2 = p.lambda * p.lambda;
  for (std::size_t i = 0; i < path.slices.size(); ++i)
    out.push_back(d2[i] + 2.0 * p.gamma * d1[i] - l2 * spectral_derivative(path.slices[i], 2));
  return out;
}

double rate_functional(const SpaceTimePath& path, const LdpParams& p, PrefactorMode mode) {
  const double pref = rate_prefactor(p, mode);
  auto l = rate_operator(path, p);
  std::vector<double> f(l.size());
  for (std::size_t i = 0; i < l.size(); ++i) f[i] = h_minus1_norm_sq(l[i]);
  return pref * trapezoid(f, path.dt);
}

double rate_scale(const SpaceTimePath& path, const LdpParams& p, PrefactorMode mode) {
  const double pref = rate_prefactor(p, mode);
  path.validate();
  std::vector<GridFunction> d1, d2;
  time_derivatives(path, d1, d2);
  std::vector<double> f(path.slices.size());
  const double l2 = p.lambda * p.lambda;
  for (std::size_t i = 0; i < f.size(); ++i)
    f[i] = h_minus1_norm_sq(d2[i]) + 4.0 * p.gamma * p.gamma * h_minus1_norm_sq(d1[i]) +
           l2 * l2 * h_minus1_norm_sq(spectral_derivative(path.slices[i], 2));
  return pref * trapezoid(f, path.dt);
}

// ---------------------------------------------------------------------------
// Legendre pair

double numeric_legendre(double y, double c) {
  if (!(c > 0.0)) throw std::domain_error("Legendre check needs a positive curvature");
  auto f = [&](double a) { return a * y - 0.5 * c * a * a; };
  double lo = -(2.0 * std::abs(y) / c + 1.0), hi = -lo;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = f(x1);
    }
  }
  return f(0.5 * (lo + hi));
}

LegendreReport legendre_pair_check(const GridFunction& g) {
  if (g.layers() != 1) throw std::domain_error("Legendre check takes a single-layer function");
  const int m = g.points();
  const double ell = g.macro_length();
  auto c = forward_fft(g.values().data(), m);
  LegendreReport rep;
  for (int j = 1; j <= m / 2; ++j) {
    const double k = 2.0 * std::numbers::pi * j / ell;
    const bool nyquist = j == m / 2;
    // g = sum alpha cos + beta sin; weight is the squared L2 norm of one basis function.
    const double w = nyquist ? ell : ell / 2.0;
    const double alpha = nyquist ? c[j].real() : 2.0 * c[j].real();
    const double beta = nyquist ? 0.0 : -2.0 * c[j].imag();
    for (double y : {alpha, beta}) {
      const double num = w * numeric_legendre(y, k * k);
      const double closed = w * y * y / (2.0 * k * k);
      rep.lambda_star_modes += num;
      rep.lambda_star_closed += closed;
      rep.max_mode_error = std::max(rep.max_mode_error, std::abs(num - closed));
    }
  }
  rep.lambda_star_norm = 0.5 * h_minus1_norm_sq(g);
  return rep;
}

// ---------------------------------------------------------------------------
// Bridges

// Euler-Lagrange solution of min int (a'' + 2 gamma a' + w^2 a)^2 with a(0),
// a'(0), a(T) fixed, written in minimum-energy form. With X = (a, a') and
// X' = F X + e2 u (u = La), the optimal control is
// u(s) = e2^T e^{F^T (T - s)} nu with nu = e1 (aT - m) / W_11, m the free
// endpoint and W the reachability Gramian. u then solves the adjoint
// equation (so a solves the fourth-order one) and u(T) = e2^T nu = 0 is the
// natural condition. Only decaying exponentials appear, which keeps long
// horizons well conditioned; the 2x2 Gramian is the boundary system.
namespace {

// Van Loan over a short step, then doubling: W(2t) = W(t) + e^{Ft} W(t) e^{F^T t}.
// A single block exponential over a long horizon loses everything to
// cancellation once e^{-F T} is huge.

}  // namespace

ModeBridge bridge_mode(double a0, double adot0, double aT, double k, const LdpParams& p, double horizon, int steps) {
  p.validate();
  if (!(k > 0.0)) throw std::domain_error("bridge mode needs k > 0");
  if (!(horizon > 0.0) || steps < 1) throw std::domain_error("bridge needs a positive horizon and steps >= 1");
  if (!std::isfinite(a0) || !std::isfinite(adot0) || !std::isfinite(aT))
    throw std::domain_error("bridge boundary data must be finite");
  const double w = p.lambda * k;
  Eigen::MatrixXcd f(2, 2);
  f << 0.0, 1.0, -w * w, -2.0 * p.gamma;
  Eigen::MatrixXcd bb = Eigen::MatrixXcd::Zero(2, 2);
  bb(1, 1) = 1.0;

  const OuStep whole = van_loan(f, bb, horizon);
  const Eigen::Matrix2d gram = whole.covariance.real();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(gram);
  ModeBridge out;
  out.condition = eig.eigenvalues()(0) > 0.0 ? eig.eigenvalues()(1) / eig.eigenvalues()(0) : INFINITY;
  if (!(out.condition < 1e12)) {
    std::ostringstream msg;
    msg << "bridge boundary system is ill-conditioned (condition number " << out.condition << ")";
    throw std::domain_error(msg.str());
  }
  const Eigen::Vector2d x0(a0, adot0);
  const double free_end = (whole.transition.real() * x0)(0);
  const double miss = aT - free_end;
  out.integral = miss * miss / gram(0, 0);
  const Eigen::Vector2d nu(miss / gram(0, 0), 0.0);

  // X(t_i) = e^{F t_i} x0 + W(t_i) e^{F^T (T - t_i)} nu on the grid.
  const OuStep step = van_loan(f, bb, horizon / steps);
  const Eigen::Matrix2d e = step.transition.real();
  std::vector<Eigen::Matrix2d> back(steps + 1);  // e^{F (T - t_i)}
  back[steps].setIdentity();
  for (int i = steps - 1; i >= 0; --i) back[i] = e * back[i + 1];
  Eigen::Vector2d free_path = x0;
  Eigen::Matrix2d wt = Eigen::Matrix2d::Zero();
  for (int i = 0; i <= steps; ++i) {
    if (i > 0) {
      free_path = e * free_path;
      wt = e * wt * e.transpose() + step.covariance.real();
    }
    Eigen::Vector2d x = free_path + wt * back[i].transpose() * nu;
    out.a.push_back(x(0));
    out.adot.push_back(x(1));
  }
  out.a.back() = aT;  // exact by construction; drop the roundoff of repeated steps
  return out;
}

Bridge minimum_cost_bridge(const GridFunction& gamma0, const GridFunction& gamma_dot0, const GridFunction& gammaT,
                           const LdpParams& p, double horizon, int steps, PrefactorMode mode) {
  if (gamma0.layers() != 1 || !gamma0.same_grid(gamma_dot0) || !gamma0.same_grid(gammaT))
    throw std::domain_error("bridge endpoints must share one single-layer grid");
  for (const auto* f : {&gamma0, &gamma_dot0, &gammaT})
    if (std::abs(f->mean()) > 1e-10 * std::max(1.0, f->max_abs()))
      throw std::domain_error("bridge endpoints must have zero spatial mean");
  const double pref = rate_prefactor(p, mode);
  const int m = gamma0.points();
  const double ell = gamma0.macro_length();
  auto c0 = forward_fft(gamma0.values().data(), m);
  auto c1 = forward_fft(gamma_dot0.values().data(), m);
  auto cT = forward_fft(gammaT.values().data(), m);

  Bridge out;
  std::vector<std::vector<cplx>> spec(steps + 1, std::vector<cplx>(m, 0.0));
  for (int j = 1; j <= m / 2; ++j) {
    const double k = 2.0 * std::numbers::pi * j / ell;
    const bool nyquist = j == m / 2;
    const double w = nyquist ? ell : ell / 2.0;
    // cos amplitude 2 Re c, sin amplitude -2 Im c (Nyquist: c itself, no sine).
    const double f = nyquist ? 1.0 : 2.0;
    ModeBridge bc = bridge_mode(f * c0[j].real(), f * c1[j].real(), f * cT[j].real(), k, p, horizon, steps);
    out.cost += pref * w / (k * k) * bc.integral;
    out.worst_condition = std::max(out.worst_condition, bc.condition);
    ModeBridge bs;
    if (!nyquist) {
      bs = bridge_mode(-2.0 * c0[j].imag(), -2.0 * c1[j].imag(), -2.0 * cT[j].imag(), k, p, horizon, steps);
      out.cost += pref * w / (k * k) * bs.integral;
      out.worst_condition = std::max(out.worst_condition, bs.condition);
    }
    for (int i = 0; i <= steps; ++i) {
      if (nyquist) {
        spec[i][j] = bc.a[i];
      } else {
        spec[i][j] = cplx(bc.a[i], -bs.a[i]) / 2.0;
        spec[i][m - j] = std::conj(spec[i][j]);
      }
    }
  }
  out.path.dt = horizon / steps;
  for (int i = 0; i <= steps; ++i) {
    GridFunction g(m, ell, 1);
    g.values() = inverse_fft(spec[i]);
    out.path.slices.push_back(std::move(g));
  }
  return out;
}

double deterministic_mode(double a0, double adot0, double k, const LdpParams& p, double t) {
  const double w = p.lambda * k;
  Eigen::Matrix2d m;
  m << 0.0, 1.0, -w * w, -2.0 * p.gamma;
  Eigen::Vector2d x = expm(Eigen::MatrixXd(m * t)) * Eigen::Vector2d(a0, adot0);
  return x(0);
}

// ---------------------------------------------------------------------------
// Small-noise Gaussian ratio

namespace {

struct SineModeSystem {
  Eigen::MatrixXcd drift;
  Eigen::MatrixXcd noise;
  Eigen::Vector2d start;
  double k;
};

SineModeSystem sine_mode(const LdpParams& p, double ell, int mode, double a0, double adot0) {
  p.validate();
  if (mode < 1 || !(ell > 0.0)) throw std::domain_error("sine mode needs mode >= 1 and ell > 0");
  SineModeSystem s;
  s.k = 2.0 * std::numbers::pi * mode / ell;
  const double lk = p.lambda * s.k;
  s.drift = Eigen::MatrixXcd::Zero(2, 2);
  s.drift(0, 1) = lk;
  s.drift(1, 0) = -lk;
  s.drift(1, 1) = -2.0 * p.gamma;
  s.noise = Eigen::MatrixXcd::Zero(2, 2);
  // R-noise intensity from the field noise of the limiting equation
  // (kappa = 0, two layers), projected on cos(kx): 2 N_RR / ell.
  ModelParams field;
  field.kappa = 0.0;
  field.lambda = p.lambda;
  field.layers = LayerSet::two_state(p.gamma);
  field.rho = p.chi;
  const int ip = field.layers.index_of(+1), im = field.layers.index_of(-1);
  const Eigen::MatrixXcd n = noise_covariance(field, s.k);
  const double n_rr = (n(ip, ip) + n(im, im) - n(ip, im) - n(im, ip)).real();
  s.noise(1, 1) = 2.0 * n_rr / ell;
  s.start = Eigen::Vector2d(a0, adot0 / lk);
  return s;
}

}  // namespace

ModeLaw mode_endpoint_law(const LdpParams& p, double ell, int mode, double horizon, double a0, double adot0) {
  SineModeSystem s = sine_mode(p, ell, mode, a0, adot0);
  OuStep st = van_loan(s.drift, s.noise, horizon);
  ModeLaw law;
  law.mean = (st.transition.real() * s.start)(0);
  law.sd = std::sqrt(std::max(0.0, st.covariance(0, 0).real()));
  return law;
}

double GaussianRatioRow::relative_error() const {
  return predicted != 0.0 ? std::abs(estimated - predicted) / std::abs(predicted) : std::abs(estimated);
}

GaussianRatioRow gaussian_ratio_test(const LdpParams& p, double ell, int mode, double horizon, double a0,
                                     double adot0, double x1, double x2, double window, double eps,
                                     std::size_t samples, std::uint64_t seed, PrefactorMode mode_pref) {
  if (!(eps > 0.0) || !(window > 0.0) || samples == 0)
    throw std::domain_error("ratio test needs eps > 0, window > 0 and samples > 0");
  SineModeSystem s = sine_mode(p, ell, mode, a0, adot0);
  constexpr int kSteps = 8;
  OuStep st = van_loan(s.drift, eps * eps * s.noise, horizon / kSteps);
  const Eigen::Matrix2d trans = st.transition.real();
  const Eigen::Matrix2d factor = psd_factor(Eigen::MatrixXd(st.covariance.real()));

  GaussianRatioRow row;
  row.eps = eps;
  row.x1 = x1;
  row.x2 = x2;
  Rng rng = make_rng(seed, 0);
  for (std::size_t n = 0; n < samples; ++n) {
    Eigen::Vector2d x = s.start;
    for (int i = 0; i < kSteps; ++i) {
      const double z0 = standard_normal(rng);
      const double z1 = standard_normal(rng);
      x = trans * x + factor * Eigen::Vector2d(z0, z1);
    }
    if (std::abs(x(0) - x1) <= window) ++row.count1;
    if (std::abs(x(0) - x2) <= window) ++row.count2;
  }

  const double pref = rate_prefactor(p, mode_pref);
  const double w = ell / 2.0 / (s.k * s.k);
  const int grid = 8;
  row.cost1 = pref * w * bridge_mode(a0, adot0, x1, s.k, p, horizon, grid).integral;
  row.cost2 = pref * w * bridge_mode(a0, adot0, x2, s.k, p, horizon, grid).integral;
  row.predicted = -(row.cost1 - row.cost2) / (eps * eps);
  if (row.count1 > 0 && row.count2 > 0) {
    row.estimated = std::log(static_cast<double>(row.count1) / static_cast<double>(row.count2));
    row.std_error = std::sqrt(1.0 / row.count1 + 1.0 / row.count2);
  } else {
    row.estimated = NAN;
    row.std_error = INFINITY;
  }
  return row;
}

}  // namespace rtp
