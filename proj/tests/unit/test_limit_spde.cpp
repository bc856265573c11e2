#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rtp/fluctuation.hpp"
#include "rtp/linalg.hpp"
#include "rtp/spde.hpp"

using namespace rtp;
using std::numbers::pi;

namespace {

ModelParams rtp_params(double kappa, double lambda, double gamma, double rho = 1.0) {
  ModelParams p;
  p.kappa = kappa;
  p.lambda = lambda;
  p.layers = LayerSet::two_state(gamma);
  p.rho = rho;
  return p;
}

LayerSet three_states() {
  LayerSet s;
  s.states = {-1, 0, 1};
  s.switch_rates.resize(3, 3);
  s.switch_rates << 0.0, 0.7, 0.2, 0.7, 0.0, 1.1, 0.2, 1.1, 0.0;
  return s;
}

std::vector<double> grid(double dt, int n) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = i * dt;
  return t;
}

// Mean-zero bump derivatives: the conserved zero mode stays out of the pairing.
GridFunction wiggle(int m, double ell, int layers, double centre, double shift) {
  return GridFunction::from_function(m, ell, layers, [&](double x, int l) {
    double d = x - centre - 0.3 * l;
    return -d * std::exp(-d * d / 0.5) + shift * std::sin(2 * pi * x / ell);
  });
}

}  // namespace

TEST_CASE("lyapunov identity holds for 256 modes under the microscopic convention") {
  ModelParams r = rtp_params(1.0, 1.0, 1.0);
  ModelParams r3 = rtp_params(0.6, 1.7, 1.0, 2.5);
  r3.layers = three_states();
  ModelParams s;
  s.family = Family::MultiLayerSep;
  s.kappa_layers = {1.0, 0.4};
  s.alpha = 3;
  s.rho = 0.3;
  double worst = 0.0;
  for (int j = 0; j < 256; ++j) {
    double k = 2 * pi * j / 8.0;
    worst = std::max({worst, lyapunov_residual(r, k) / std::max(1.0, k * k), lyapunov_residual(r3, k) / std::max(1.0, k * k),
                      lyapunov_residual(s, k) / std::max(1.0, k * k)});
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("the halved diffusion convention breaks the lyapunov identity") {
  ModelParams r = rtp_params(1.0, 1.0, 1.0);
  r.convention = Convention::Paper;
  CHECK(lyapunov_residual(r, 2 * pi / 8.0) > 0.1);
  CHECK(lyapunov_residual(r, 0.0) <= 1e-14);
}

TEST_CASE("stiff modes: exact step stays finite and matches the stationary balance") {
  // With chi I stationary, Sigma(dt) = chi (I - Phi Phi^*); the block
  // exponential alone would overflow here (kappa k^2 dt is about 2e4).
  ModelParams p = rtp_params(1.0, 1.0, 1.0, 0.7);
  for (double k : {0.0, 3.0, 55.0, 201.0, 280.0}) {
    OuStep st = van_loan(field_drift(p, k), noise_covariance(p, k), 0.25);
    REQUIRE(st.covariance.allFinite());
    Eigen::MatrixXcd expect = 0.7 * (Eigen::MatrixXcd::Identity(2, 2) - st.transition * st.transition.adjoint());
    CHECK((st.covariance - expect).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("zero noise from a zero state stays zero") {
  ModelParams p = rtp_params(1.0, 1.0, 1.0);
  OuOptions o;
  o.stationary_start = false;
  o.noise_scale = 0.0;
  o.initial.assign(9, Eigen::VectorXcd::Zero(2));
  auto traj = simulate_ou_field(p, 8.0, 8, grid(0.1, 50), 3, o);
  for (const auto& slice : traj.modes)
    for (const auto& y : slice) CHECK(y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stationary law has covariance chi I at every probe time") {
  ModelParams p = rtp_params(0.8, 1.2, 0.9, 1.7);
  const std::vector<double> times = grid(0.5, 5);
  const int cutoff = 3, seeds = 10000;
  // [time][mode][component] second moments
  std::vector<std::vector<Eigen::VectorXd>> m2(times.size(), std::vector<Eigen::VectorXd>(cutoff + 1, Eigen::VectorXd::Zero(2)));
  std::vector<std::vector<double>> cross(times.size(), std::vector<double>(cutoff + 1, 0.0));
  for (int s = 0; s < seeds; ++s) {
    auto traj = simulate_ou_field(p, 8.0, cutoff, times, 1000 + s);
    for (std::size_t i = 0; i < times.size(); ++i)
      for (int j = 0; j <= cutoff; ++j) {
        m2[i][j] += traj.modes[i][j].cwiseAbs2();
        cross[i][j] += std::abs(traj.modes[i][j](0) * std::conj(traj.modes[i][j](1)));
      }
  }
  for (std::size_t i = 0; i < times.size(); ++i)
    for (int j = 0; j <= cutoff; ++j) {
      for (int c = 0; c < 2; ++c) CHECK(m2[i][j](c) / seeds == doctest::Approx(p.chi()).epsilon(0.05));
    }
  // off-diagonal stays small (|E| bounded by E|.|, so only a loose sanity bound)
  CHECK(cross[4][2] / seeds < 0.9 * p.chi());
}

TEST_CASE("inverse-transformed fields are real") {
  ModelParams p = rtp_params(1.0, 1.0, 1.0);
  auto traj = simulate_ou_field(p, 8.0, 20, grid(0.1, 10), 11);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    double imag = 1.0;
    traj.field(i, 64, &imag);
    CHECK(imag <= 1e-12);
  }
}

TEST_CASE("long-run time-averaged covariance matches the spectral prediction") {
  ModelParams p = rtp_params(1.0, 1.0, 1.0);
  const double ell = 8.0;
  GridFunction phi = wiggle(64, ell, 2, 3.5, 0.0);
  GridFunction psi = wiggle(64, ell, 2, 4.5, 0.2);
  const int cutoff = mode_cutoff_for({phi, psi});
  REQUIRE(cutoff < 32);
  const double dt = 0.25;
  auto traj = simulate_ou_field(p, ell, cutoff, grid(dt, 160001), 5);
  for (std::size_t lag : {0u, 2u}) {
    double est = time_averaged_covariance(traj, phi, psi, lag);
    double pred = predicted_covariance(p, phi, psi, lag * dt);
    double norm = std::sqrt(predicted_covariance(p, phi, phi, 0.0) * predicted_covariance(p, psi, psi, 0.0));
    INFO("lag " << lag << " est " << est << " pred " << pred);
    CHECK(std::abs(est - pred) <= 0.05 * std::max(std::abs(pred), 0.2 * norm));
  }
}

TEST_CASE("Z from the (Z, R) system and from the layer field share a covariance") {
  ModelParams p = rtp_params(1.0, 1.0, 1.0);
  const double ell = 8.0, dt = 0.25;
  GridFunction phi1 = wiggle(64, ell, 1, 3.5, 0.0);
  GridFunction psi1 = wiggle(64, ell, 1, 4.5, 0.1);
  const int cutoff = mode_cutoff_for({phi1, psi1});
  auto zr = simulate_sum_difference(p, ell, cutoff, grid(dt, 160001), 21);
  auto layers = simulate_ou_field(p, ell, cutoff, grid(dt, 160001), 22);
  GridFunction phi2 = phi1.extend_to_layers(2), psi2 = psi1.extend_to_layers(2);
  for (std::size_t lag : {0u, 2u}) {
    const std::size_t n = zr.times.size() - lag;
    double a = 0.0;
    for (std::size_t i = 0; i < n; ++i) a += pair_component(zr, i + lag, 0, phi1) * pair_component(zr, i, 0, psi1);
    a /= static_cast<double>(n);
    double b = time_averaged_covariance(layers, phi2, psi2, lag);
    double pred = total_density_covariance(p, phi1, psi1, lag * dt);
    double scale = std::sqrt(total_density_covariance(p, phi1, phi1, 0.0) * total_density_covariance(p, psi1, psi1, 0.0));
    INFO("lag " << lag << " zr " << a << " layers " << b << " pred " << pred);
    CHECK(std::abs(a - b) <= 0.05 * std::max(std::abs(pred), 0.2 * scale));
    CHECK(std::abs(a - pred) <= 0.05 * std::max(std::abs(pred), 0.2 * scale));
  }
}

TEST_CASE("without diffusion Z increments are smoother than a martingale") {
  ModelParams p = rtp_params(0.0, 1.0, 1.0);
  const double ell = 8.0;
  GridFunction phi = GridFunction::from_function(64, ell, 1, [&](double x, int) { return std::sin(2 * pi * 2 * x / ell); });
  std::vector<double> ratio;
  for (double t : {0.1, 0.01, 0.001}) {
    double s = 0.0;
    const int seeds = 4000;
    for (int r = 0; r < seeds; ++r) {
      auto zr = simulate_sum_difference(p, ell, 3, {0.0, t}, 50 + r);
      double d = pair_component(zr, 1, 0, phi) - pair_component(zr, 0, 0, phi);
      s += d * d;
    }
    ratio.push_back(s / seeds / t);
  }
  CHECK(ratio[1] < 0.2 * ratio[0]);
  CHECK(ratio[2] < 0.2 * ratio[1]);
}

TEST_CASE("no flips and no diffusion: R integrates -lambda dx Z") {
  ModelParams p = rtp_params(0.0, 1.3, 0.0);
  const double dt = 1e-3;
  const int n = 2001;
  auto zr = simulate_sum_difference(p, 8.0, 4, grid(dt, n), 7);
  double worst = 0.0, scale = 0.0;
  for (int j = 1; j <= 4; ++j) {
    const double k = zr.wavenumbers[j];
    // Simpson over the stored grid, independent of the exponential steps.
    cplx integral = zr.modes[0][j](0) + zr.modes[n - 1][j](0);
    for (int i = 1; i < n - 1; ++i) integral += (i % 2 ? 4.0 : 2.0) * zr.modes[i][j](0);
    integral *= dt / 3.0;
    cplx expect = zr.modes[0][j](1) - cplx(0.0, p.lambda * k) * integral;
    worst = std::max(worst, std::abs(zr.modes[n - 1][j](1) - expect));
    scale = std::max(scale, std::abs(zr.modes[0][j](1)));
  }
  CHECK(worst <= 1e-8 * std::max(1.0, scale));
}

TEST_CASE("second-order residual of the total density is white with the derived variance") {
  ModelParams p = rtp_params(0.0, 1.0, 1.0);
  const double dt = 1e-3;
  auto zr = simulate_sum_difference(p, 8.0, 4, grid(dt, 100001), 99);
  auto rep = total_density_second_order_check(zr, p, 4);
  REQUIRE(rep.size() == 4);
  for (const auto& w : rep) {
    INFO("k " << w.k << " var " << w.variance << " target " << w.target_variance);
    CHECK(std::abs(w.variance - w.target_variance) <= 0.10 * w.target_variance);
    CHECK(w.autocorrelation[0] == doctest::Approx(0.25).epsilon(0.2));
  }
  // Modes are independent, so pool them per lag: one 3 SE check per lag
  // instead of twelve.
  for (std::size_t lag = 1; lag < rep[0].autocorrelation.size(); ++lag) {
    double mean = 0.0, var = 0.0;
    for (const auto& w : rep) {
      mean += w.autocorrelation[lag] / rep.size();
      var += w.autocorrelation_se * w.autocorrelation_se / (rep.size() * rep.size());
    }
    INFO("lag " << lag + 1 << " pooled " << mean);
    CHECK(std::abs(mean) <= 3.0 * std::sqrt(var));
  }
}

TEST_CASE("without activity the residual vanishes") {
  ModelParams p = rtp_params(0.0, 0.0, 1.0);
  auto zr = simulate_sum_difference(p, 8.0, 4, grid(1e-3, 2001), 4);
  for (const auto& w : total_density_second_order_check(zr, p, 3)) CHECK(w.max_abs_residual <= 1e-8);
}

TEST_CASE("non-uniform time grids are refused") {
  ModelParams p = rtp_params(0.0, 1.0, 1.0);
  CHECK_THROWS_AS(simulate_ou_field(p, 8.0, 2, {0.0, 0.1, 0.3}, 1), std::domain_error);
  auto zr = simulate_sum_difference(p, 8.0, 2, grid(0.01, 20), 1);
  zr.times[7] += 0.004;
  CHECK_THROWS_AS(total_density_second_order_check(zr, p, 2), std::domain_error);
}

TEST_CASE("mode cutoff follows the test-function spectrum") {
  GridFunction f = GridFunction::from_function(64, 8.0, 1, [](double x, int) { return std::cos(2 * pi * 3 * x / 8.0); });
  CHECK(mode_cutoff_for({f}) == 12);
  GridFunction g = GridFunction::from_function(64, 8.0, 1, [](double x, int) { return std::cos(2 * pi * 10 * x / 8.0); });
  CHECK(mode_cutoff_for({g}) == 31);
}
