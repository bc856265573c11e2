#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "rtp/ldp.hpp"

using namespace rtp;
using std::numbers::pi;

namespace {

const LdpParams kParams{1.0, 1.0, 1.0};

SpaceTimePath make_path(int points, double ell, double horizon, int steps,
                        const std::function<double(double t, double x)>& f) {
  SpaceTimePath p;
  p.dt = horizon / steps;
  for (int i = 0; i <= steps; ++i) {
    const double t = i * p.dt;
    p.slices.push_back(GridFunction::from_function(points, ell, 1, [&](double x, int) { return f(t, x); }));
  }
  return p;
}

// a'' + 2 gamma a' + w^2 a = 0 from the characteristic roots, a(0) = a0, a'(0) = v0.
double flow(double a0, double v0, double w, double gamma, double t) {
  using C = std::complex<double>;
  C disc = std::sqrt(C(gamma * gamma - w * w, 0.0));
  C r1 = -gamma + disc, r2 = -gamma - disc;
  // c1 + c2 = a0, r1 c1 + r2 c2 = v0
  C c1 = (v0 - r2 * a0) / (r1 - r2);
  C c2 = a0 - c1;
  return (c1 * std::exp(r1 * t) + c2 * std::exp(r2 * t)).real();
}

}  // namespace

TEST_CASE("zero path has zero cost") {
  SpaceTimePath z = make_path(32, 8.0, 1.0, 40, [](double, double) { return 0.0; });
  CHECK(rate_functional(z, kParams) == 0.0);
}

TEST_CASE("deterministic-flow paths cost nothing") {
  const double ell = 8.0;
  LdpParams p{1.3, 0.6, 0.8};
  auto f = [&](double t, double x) {
    double s = 0.0;
    for (int j : {1, 2, 5}) {
      double k = 2 * pi * j / ell;
      s += flow(1.0 / j, 0.3, p.lambda * k, p.gamma, t) * std::sin(k * x) +
           flow(0.2, -0.5 / j, p.lambda * k, p.gamma, t) * std::cos(k * x);
    }
    return s;
  };
  SpaceTimePath path = make_path(64, ell, 2.0, 2000, f);
  double i = rate_functional(path, p);
  double scale = rate_scale(path, p);
  INFO("I " << i << " scale " << scale);
  CHECK(scale > 1.0);
  CHECK(i <= 1e-10 * scale);
}

TEST_CASE("single mode closed form against an independent quadrature") {
  const double ell = 8.0, horizon = 1.0, k = 2 * pi * 3 / ell;
  LdpParams p{0.9, 1.4, 0.7};
  auto a = [](double t) { return std::sin(2 * t) + 0.3 * t * t + 0.1; };
  auto da = [](double t) { return 2 * std::cos(2 * t) + 0.6 * t; };
  auto dda = [](double t) { return -4 * std::sin(2 * t) + 0.6; };
  SpaceTimePath path = make_path(32, ell, horizon, 1000, [&](double t, double x) { return a(t) * std::sin(k * x); });

  // Composite Simpson with exact derivatives.
  const int n = 20000;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    double t = horizon * i / n;
    double l = dda(t) + 2 * p.gamma * da(t) + p.lambda * p.lambda * k * k * a(t);
    s += (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0)) * l * l;
  }
  s *= horizon / n / 3.0;
  for (PrefactorMode m : {PrefactorMode::Derived, PrefactorMode::Paper}) {
    double oracle = rate_prefactor(p, m) * (ell / 2.0) / (k * k) * s;
    double got = rate_functional(path, p, m);
    INFO("mode " << to_string(m) << " got " << got << " oracle " << oracle);
    CHECK(std::abs(got - oracle) <= 1e-8 * oracle);
  }
}

TEST_CASE("prefactor modes") {
  LdpParams p{2.0, 0.5, 3.0};
  CHECK(rate_prefactor(p, PrefactorMode::Derived) == doctest::Approx(1.0 / (16 * 4 * 0.5 * 3)));
  CHECK(rate_prefactor(p, PrefactorMode::Paper) == doctest::Approx(1.0 / (4 * 2 * std::sqrt(1.5))));
  CHECK(prefactor_mode_from_string("paper") == PrefactorMode::Paper);
  CHECK_THROWS_AS(prefactor_mode_from_string("other"), std::domain_error);
}

TEST_CASE("invalid inputs") {
  SpaceTimePath shifted = make_path(32, 8.0, 1.0, 20, [](double t, double x) { return 0.1 + t * std::sin(x); });
  CHECK_THROWS_AS(rate_functional(shifted, kParams), std::domain_error);
  SpaceTimePath ok = make_path(32, 8.0, 1.0, 20, [](double t, double x) { return t * std::sin(2 * pi * x / 8.0); });
  CHECK_THROWS_AS(rate_functional(ok, LdpParams{0.0, 1.0, 1.0}), std::domain_error);
  SpaceTimePath short_path = make_path(32, 8.0, 1.0, 3, [](double t, double x) { return t * std::sin(2 * pi * x / 8.0); });
  CHECK_THROWS_AS(rate_functional(short_path, kParams), std::domain_error);
}

TEST_CASE("nonnegative and convex on random path pairs") {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> nd;
  const double ell = 8.0;
  auto random_path = [&]() {
    std::vector<double> c(12);
    for (auto& v : c) v = nd(gen);
    return make_path(32, ell, 1.0, 60, [c, ell](double t, double x) {
      double s = 0.0;
      for (int j = 1; j <= 3; ++j) {
        double k = 2 * pi * j / ell;
        s += (c[4 * j - 4] + c[4 * j - 3] * t + c[4 * j - 2] * t * t) * std::sin(k * x) + c[4 * j - 1] * t * t * t * std::cos(k * x);
      }
      return s;
    });
  };
  for (int trial = 0; trial < 20; ++trial) {
    SpaceTimePath g1 = random_path(), g2 = random_path(), mid = g1;
    for (std::size_t i = 0; i < mid.slices.size(); ++i) mid.slices[i] = 0.5 * g1.slices[i] + 0.5 * g2.slices[i];
    double i1 = rate_functional(g1, kParams), i2 = rate_functional(g2, kParams), im = rate_functional(mid, kParams);
    CHECK(i1 >= 0.0);
    CHECK(im <= 0.5 * i1 + 0.5 * i2 + 1e-10);
  }
}

TEST_CASE("Legendre pair on Fourier modes") {
  CHECK(numeric_legendre(1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(numeric_legendre(-3.0, 2.0) == doctest::Approx(9.0 / 4.0).epsilon(1e-12));

  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  std::vector<double> c(16);
  for (auto& v : c) v = nd(gen);
  GridFunction g = GridFunction::from_function(32, 6.0, 1, [&](double x, int) {
    double s = 0.0;
    for (int j = 1; j <= 8; ++j) s += (c[2 * j - 2] * std::cos(2 * pi * j * x / 6.0) + c[2 * j - 1] * std::sin(2 * pi * j * x / 6.0)) / j;
    return s;
  });
  auto rep = legendre_pair_check(g);
  CHECK(rep.max_mode_error <= 1e-12 * rep.lambda_star_closed);
  CHECK(std::abs(rep.lambda_star_modes - rep.lambda_star_norm) <= 1e-10 * rep.lambda_star_norm);
  CHECK(std::abs(rep.lambda_star_closed - rep.lambda_star_norm) <= 1e-10 * rep.lambda_star_norm);

  auto scaled = legendre_pair_check(3.0 * g);
  CHECK(std::abs(scaled.lambda_star_norm - 9.0 * rep.lambda_star_norm) <= 1e-12 * scaled.lambda_star_norm);

  // Single cosine of unit amplitude at k = 1 on a torus of length 2 pi:
  // per-mode term ell/2 * 1/(2 k^2) = pi / 2, i.e. 1/2 per unit of ell/pi.
  GridFunction one = GridFunction::from_function(16, 2 * pi, 1, [](double x, int) { return std::cos(x); });
  CHECK(legendre_pair_check(one).lambda_star_norm == doctest::Approx(pi / 2.0).epsilon(1e-12));

  GridFunction constant = GridFunction::from_function(16, 2 * pi, 1, [](double, int) { return 1.0; });
  CHECK_THROWS_AS(legendre_pair_check(constant), std::domain_error);
}

TEST_CASE("bridge along the deterministic flow costs nothing") {
  LdpParams p{1.0, 0.7, 1.0};
  for (double k : {0.4, 1.5, 3.0}) {
    double aT = flow(0.8, -0.2, p.lambda * k, p.gamma, 1.5);
    auto b = bridge_mode(0.8, -0.2, aT, k, p, 1.5, 100);
    CHECK(b.integral <= 1e-8);
    CHECK(b.condition < 1e6);
    CHECK(b.a.size() == 101);
    CHECK(std::abs(b.a[50] - flow(0.8, -0.2, p.lambda * k, p.gamma, 0.75)) <= 1e-8);
  }
}

TEST_CASE("bridge cost is quadratic in the endpoint perturbation") {
  LdpParams p{1.0, 0.7, 1.0};
  const double k = 1.2, base = flow(0.3, 0.1, p.lambda * k, p.gamma, 1.0);
  std::vector<double> cost;
  for (double d : {1e-1, 1e-2, 1e-3}) cost.push_back(bridge_mode(0.3, 0.1, base + d, k, p, 1.0, 10).integral);
  for (int i = 0; i < 2; ++i) {
    CHECK(cost[i] > 0.0);
    CHECK(std::log10(cost[i] / cost[i + 1]) == doctest::Approx(2.0).epsilon(0.025));
  }
}

TEST_CASE("field bridge: Gramian cost, endpoints, and minimality over competitors") {
  const double ell = 8.0, horizon = 1.0;
  const int steps = 400;
  LdpParams p{1.0, 1.0, 1.0};
  auto field = [&](double a, double b) {
    return GridFunction::from_function(32, ell, 1, [=](double x, int) {
      return a * std::sin(2 * pi * x / ell) + b * std::cos(4 * pi * x / ell);
    });
  };
  GridFunction g0 = field(0.5, -0.2), gd0 = field(0.1, 0.3), gT = field(-0.3, 0.4);
  Bridge br = minimum_cost_bridge(g0, gd0, gT, p, horizon, steps);
  CHECK((br.path.slices.front() - g0).max_abs() <= 1e-10);
  CHECK((br.path.slices.back() - gT).max_abs() <= 1e-10);
  const double quad = rate_functional(br.path, p);
  CHECK(quad == doctest::Approx(br.cost).epsilon(1e-6));

  std::mt19937_64 gen(21);
  std::normal_distribution<double> nd;
  int worse = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> c(6);
    for (auto& v : c) v = 0.5 * nd(gen);
    SpaceTimePath comp = br.path;
    for (int i = 0; i <= steps; ++i) {
      const double t = i * br.path.dt;
      const double h = t * t * (horizon - t);  // h(0) = h'(0) = h(T) = 0
      comp.slices[i] += GridFunction::from_function(32, ell, 1, [&](double x, int) {
        return h * ((c[0] + c[1] * t) * std::sin(2 * pi * x / ell) + (c[2] + c[3] * t) * std::cos(2 * pi * x / ell) +
                    c[4] * std::sin(6 * pi * x / ell) + c[5] * t * std::cos(4 * pi * x / ell));
      });
    }
    if (rate_functional(comp, p) >= quad) ++worse;
  }
  CHECK(worse == 100);
}

TEST_CASE("ill-conditioned bridge is reported with its condition number") {
  LdpParams p{1.0, 1.0, 1.0};
  try {
    bridge_mode(0.0, 0.0, 1.0, 1.0, p, 1e-6, 10);
    FAIL("expected a domain error");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("condition number") != std::string::npos);
  }
}

TEST_CASE("small-noise Gaussian ratio follows the derived rate") {
  const double ell = 8.0, horizon = 1.0;
  LdpParams p{1.0, 1.0, 1.0};
  ModeLaw law = mode_endpoint_law(p, ell, 1, horizon, 0.5, 0.0);
  CHECK(law.sd > 0.0);
  for (double eps : {0.3, 0.2, 0.1}) {
    const double x1 = law.mean + 0.05 * law.sd, x2 = law.mean + 0.3 * law.sd;
    auto row = gaussian_ratio_test(p, ell, 1, horizon, 0.5, 0.0, x1, x2, 0.05 * eps * law.sd, eps, 200000, 5,
                                   PrefactorMode::Derived);
    INFO("eps " << eps << " predicted " << row.predicted << " estimated " << row.estimated << " +- " << row.std_error);
    CHECK(row.relative_error() <= 0.2);
    auto paper = gaussian_ratio_test(p, ell, 1, horizon, 0.5, 0.0, x1, x2, 0.05 * eps * law.sd, eps, 20000, 5,
                                     PrefactorMode::Paper);
    CHECK(paper.relative_error() > 0.2);
  }
}

TEST_CASE("bridge path solves the fourth-order Euler-Lagrange equation with the natural end condition") {
  LdpParams p{1.1, 0.8, 1.0};
  const double k = 1.7, w = p.lambda * k, horizon = 1.2;
  const int steps = 240;
  const double h = horizon / steps;
  auto b = bridge_mode(0.4, -0.3, 1.0, k, p, horizon, steps);
  const auto& a = b.a;
  double worst = 0.0, scale = 0.0;
  for (int i = 3; i <= steps - 3; ++i) {
    // central differences, second order in h
    double d2 = (a[i + 1] - 2 * a[i] + a[i - 1]) / (h * h);
    double d4 = (a[i + 2] - 4 * a[i + 1] + 6 * a[i] - 4 * a[i - 1] + a[i - 2]) / (h * h * h * h);
    double r = d4 + (2 * w * w - 4 * p.gamma * p.gamma) * d2 + w * w * w * w * a[i];
    worst = std::max(worst, std::abs(r));
    scale = std::max({scale, std::abs(d4), w * w * w * w * std::abs(a[i])});
  }
  CHECK(worst <= 1e-4 * scale);
  // (La)(T) = a'' + 2 gamma a' + w^2 a at the end, a'' from the stored a'.
  const auto& v = b.adot;
  double add = (3 * v[steps] - 4 * v[steps - 1] + v[steps - 2]) / (2 * h);
  double la = add + 2 * p.gamma * v[steps] + w * w * a[steps];
  CHECK(std::abs(la) <= 1e-4 * std::sqrt(b.integral / horizon));
}
