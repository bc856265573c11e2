#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "rtp/duality.hpp"
#include "rtp/spectral.hpp"

using namespace rtp;

namespace {

ModelParams rtp_params(double kappa, double lambda, double gamma, int n, double rho = 1.0) {
  ModelParams p;
  p.kappa = kappa;
  p.lambda = lambda;
  p.layers = LayerSet::two_state(gamma);
  p.scaling_n = n;
  p.rho = rho;
  return p;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("duality function values") {
  Configuration xi(3, 2), eta(3, 2);
  xi.set(1, 0, 1);
  eta.set(1, 0, 3);
  CHECK(duality_function(xi, eta) == 3.0);
  xi.set(1, 0, 2);
  CHECK(duality_function(xi, eta) == 3.0);  // 3! / (2! 1!)
  Configuration one(3, 2), none(3, 2);
  one.set(2, 1, 1);
  CHECK(duality_function(one, none) == 0.0);
  CHECK(duality_function(Configuration(3, 2), eta) == 1.0);
}

TEST_CASE("duality function is monotone in eta and vanishes without domination") {
  Configuration xi(3, 2);
  xi.set(0, 0, 1);
  xi.set(2, 1, 2);
  double prev = -1.0;
  for (int k = 0; k <= 4; ++k) {
    Configuration eta(3, 2);
    eta.set(0, 0, 2);
    eta.set(2, 1, k);
    double d = duality_function(xi, eta);
    if (k < 2) CHECK(d == 0.0);
    CHECK(d >= prev);
    prev = d;
  }
}

TEST_CASE("duality identity on a 3-site ring, one dual particle") {
  ModelParams p = rtp_params(1.0, 1.0, 1.0, 1);
  Lattice lat = Lattice::tiny(3, 1);
  Configuration eta(3, 2);
  eta.set(0, 1, 1);
  eta.set(2, 0, 1);
  Configuration xi(3, 2);
  xi.set(1, 1, 1);
  DualityCheck r = check_duality_identity(lat, p, xi, eta, 0.3);
  CHECK(r.error <= 1e-8);
  CHECK(r.lhs > 0.0);
  CHECK(r.forward_states == 21);
  CHECK(r.dual_states == 6);

  DualityCheck r0 = check_duality_identity(lat, p, xi, eta, 0.0);
  CHECK(r0.error == 0.0);
  CHECK(r0.lhs == duality_function(xi, eta));
}

TEST_CASE("duality identity, two dual particles at distinct sites") {
  ModelParams p = rtp_params(0.8, 1.7, 0.6, 1);
  Lattice lat = Lattice::tiny(3, 1);
  Configuration eta(3, 2);
  eta.set(0, 0, 1);
  eta.set(1, 1, 1);
  Configuration xi(3, 2);
  xi.set(0, 0, 1);
  xi.set(2, 1, 1);
  CHECK(check_duality_identity(lat, p, xi, eta, 0.5).error <= 1e-8);
}

TEST_CASE("duality with the forward dynamics in place of the reversed one fails when lambda > 0") {
  // Guards against a dual that is accidentally the forward walker.
  ModelParams p = rtp_params(0.5, 2.0, 0.3, 1);
  Lattice lat = Lattice::tiny(3, 1);
  Configuration eta(3, 2);
  eta.set(0, 1, 2);
  Configuration xi(3, 2);
  xi.set(1, 1, 1);
  DualityCheck good = check_duality_identity(lat, p, xi, eta, 0.4);
  DualityCheck bad = check_duality_identity(lat, reversed_params(p), xi, eta, 0.4);
  CHECK(good.error <= 1e-8);
  CHECK(std::abs(bad.lhs - good.lhs) > 1e-3);
}

TEST_CASE("falling-factorial form: exact in every sector, binomial form only without shared slots") {
  ModelParams p = rtp_params(1.0, 1.0, 1.0, 1);
  Lattice lat = Lattice::tiny(4, 1);
  Configuration eta(4, 2);
  eta.set(3, 0, 1);
  eta.set(3, 1, 2);  // two particles in one slot
  Configuration xi(4, 2);
  xi.set(0, 1, 1);
  xi.set(1, 1, 1);
  CHECK(factorial_duality_function(xi, eta) == 0.0);
  CHECK(check_duality_identity(lat, p, xi, eta, 0.5, DualityKind::FallingFactorial).error <= 1e-8);
  CHECK_FALSE(binomial_duality_applies(xi, eta));
  // The dual pair can meet in slot (3, +) where eta has 2 particles: the
  // binomial form then loses a factor 2! on the dual side.
  CHECK(check_duality_identity(lat, p, xi, eta, 0.5, DualityKind::Binomial).error > 1e-3);

  Configuration xi2(4, 2);
  xi2.set(2, 0, 2);
  CHECK(factorial_duality_function(xi2, eta) == 0.0);
  CHECK(check_duality_identity(lat, p, xi2, eta, 0.7, DualityKind::FallingFactorial).error <= 1e-8);

  Configuration single(4, 2);
  single.set(1, 0, 1);
  CHECK(binomial_duality_applies(single, eta));
  CHECK(check_duality_identity(lat, p, single, eta, 0.7, DualityKind::Binomial).error <= 1e-8);
}

TEST_CASE("falling-factorial values") {
  Configuration eta(2, 1), xi(2, 1);
  eta.set(0, 0, 3);
  xi.set(0, 0, 2);
  CHECK(factorial_duality_function(xi, eta) == 6.0);
  CHECK(duality_function(xi, eta) == 3.0);
  xi.set(1, 0, 1);
  CHECK(factorial_duality_function(xi, eta) == 0.0);
}

TEST_CASE("oversized sectors are refused") {
  ModelParams p = rtp_params(1.0, 1.0, 1.0, 1);
  Lattice lat = Lattice::tiny(100, 1);
  Configuration eta(100, 2), xi(100, 2);
  for (int i = 0; i < 3; ++i) eta.set(i, 0, 1);
  xi.set(0, 0, 1);
  CHECK_THROWS_WITH_AS(check_duality_identity(lat, p, xi, eta, 0.1), doctest::Contains("sector too large"),
                       std::domain_error);
}

TEST_CASE("dual walker: lambda = 0 matches the forward walker in law") {
  ModelParams p = rtp_params(1.0, 0.0, 1.0, 4);
  std::map<long, double> fwd, dual;
  const int runs = 100000;
  for (int r = 0; r < runs; ++r) {
    Rng a = make_rng(61, r), b = make_rng(62, r);
    fwd[simulate_walker({0, 0}, p, 0.3, a).x] += 1.0 / runs;
    dual[simulate_dual_particle({0, 0}, p, 0.3, b).x] += 1.0 / runs;
  }
  double tv = 0.0;
  for (auto& [x, w] : fwd) tv += std::abs(w - dual[x]);
  for (auto& [x, w] : dual)
    if (!fwd.count(x)) tv += w;
  CHECK(0.5 * tv <= 0.02);
}

TEST_CASE("dual walker drifts against its state") {
  ModelParams p = rtp_params(1.0, 2.0, 0.0, 8);
  p.layers.states = {1};
  p.layers.switch_rates = Eigen::MatrixXd::Zero(1, 1);
  Moments m;
  for (int r = 0; r < 10000; ++r) {
    Rng rng = make_rng(63, r);
    m.add(static_cast<double>(simulate_dual_particle({0, 0}, p, 0.5, rng).x) / 8.0);
  }
  CHECK(std::abs(m.mean + 2.0 * 0.5) <= 3.0 * m.std_error());
  Rng rng = make_rng(1);
  ParticleState s = simulate_dual_particle({5, 0}, p, 0.0, rng);
  CHECK(s.x == 5);
  CHECK(s.layer == 0);
}

TEST_CASE("dual moment prediction") {
  const int n = 64;
  ModelParams p = rtp_params(1.0, 0.0, 1.0, n);
  Lattice lat(8 * n, n);
  GridFunction flat = GridFunction::from_function(lat.sites, 8.0, 2, [](double, int) { return 1.7; });
  DualMoment c = dual_moment_prediction(100, 1, 0.3, p, lat, flat, 200, 5);
  CHECK(c.estimate.mean == 1.7);
  CHECK(c.estimate.std_error() == 0.0);

  // Step profile at macroscopic 4 (site 256); lambda = 0 so the walker is a
  // continuous-time simple walk with variance 2 kappa t N^2.
  GridFunction step = GridFunction::from_function(lat.sites, 8.0, 2, [](double x, int) { return x < 4.0 ? 2.0 : 0.5; });
  const double t = 0.05;
  const int x0 = 250;
  DualMoment d = dual_moment_prediction(x0, 0, t, p, lat, step, 20000, 6);
  CHECK(d.sup_profile == 2.0);
  const double sd = std::sqrt(2.0 * t) * n;
  const double below = normal_cdf((255.5 - x0) / sd);
  const double heat = 2.0 * below + 0.5 * (1.0 - below);
  CHECK(std::abs(d.estimate.mean - heat) <= 3.0 * d.estimate.std_error() + 2e-3);
}

TEST_CASE("forward first and second moments agree with the dual prediction") {
  const int n = 16;
  ModelParams p = rtp_params(1.0, 1.0, 1.0, n);
  Lattice lat(8 * n, n);
  GridFunction profile = GridFunction::from_function(lat.sites, 8.0, 2, [](double x, int l) {
    return 0.5 + 1.5 * std::exp(-(x - 4.0) * (x - 4.0)) * (l == 0 ? 1.0 : 0.6);
  });
  const double t = 0.3;
  const int x0 = 70, l0 = 1;
  Moments first, second;
  for (int r = 0; r < 20000; ++r) {
    Configuration c0 = sample_product_measure(p, lat, &profile, derive_seed(71, r));
    Rng rng = make_rng(72, r);
    int v = simulate_independent(c0, p, lat, {t}, rng).snapshots.back().at(x0, l0);
    first.add(v);
    second.add(static_cast<double>(v) * v);
  }
  DualMoment dual = dual_moment_prediction(x0, l0, t, p, lat, profile, 20000, 73);
  const double m = dual.estimate.mean, se = dual.estimate.std_error();
  CHECK(std::abs(first.mean - m) <= 3.0 * std::hypot(first.std_error(), se));
  // eta_t(x) is Poisson with mean m: E[eta^2] = m + m^2.
  const double m2 = m + m * m, se2 = (1.0 + 2.0 * m) * se;
  CHECK(std::abs(second.mean - m2) <= 3.0 * std::hypot(second.std_error(), se2));
  // Moment bounds from the sup of the profile.
  const double sup = dual.sup_profile;
  CHECK(first.mean <= sup + 3.0 * first.std_error());
  CHECK(second.mean <= sup * sup + sup + 3.0 * second.std_error());
}
