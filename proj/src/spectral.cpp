#include "rtp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/MatrixFunctions>

namespace rtp {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine;
  return engine;
}

void require_same_grid(const GridFunction& a, const GridFunction& b) {
  if (!a.same_grid(b)) throw std::domain_error("grid mismatch between functions");
}

}  // namespace

// ---------------------------------------------------------------------------
// GridFunction

GridFunction::GridFunction(int points, double macro_length, int layers)
    : points_(points), layers_(layers), length_(macro_length),
      values_(static_cast<std::size_t>(points) * layers, 0.0) {
  if (!is_power_of_two(points)) throw std::domain_error("grid size must be a power of two");
  if (!(macro_length > 0.0)) throw std::domain_error("macro length must be positive");
  if (layers < 1) throw std::domain_error("need at least one layer");
}

GridFunction GridFunction::from_function(int points, double macro_length, int layers,
                                         const std::function<double(double, int)>& f) {
  GridFunction g(points, macro_length, layers);
  for (int l = 0; l < layers; ++l)
    for (int j = 0; j < points; ++j) g.at(j, l) = f(g.x(j), l);
  return g;
}

GridFunction GridFunction::layer(int l) const {
  GridFunction g(points_, length_, 1);
  std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(l) * points_, points_, g.values_.begin());
  return g;
}

GridFunction GridFunction::extend_to_layers(int layers) const {
  if (layers_ != 1) throw std::domain_error("extend_to_layers expects a single-layer function");
  GridFunction g(points_, length_, layers);
  for (int l = 0; l < layers; ++l) std::copy(values_.begin(), values_.end(), g.values_.begin() + static_cast<std::ptrdiff_t>(l) * points_);
  return g;
}

GridFunction GridFunction::sum_layers() const {
  GridFunction g(points_, length_, 1);
  for (int l = 0; l < layers_; ++l)
    for (int j = 0; j < points_; ++j) g.at(j, 0) += at(j, l);
  return g;
}

bool GridFunction::same_grid(const GridFunction& o) const {
  return points_ == o.points_ && layers_ == o.layers_ && std::abs(length_ - o.length_) <= 1e-12 * length_;
}

double GridFunction::mean() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s / static_cast<double>(values_.size());
}

double GridFunction::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double GridFunction::min_value() const { return *std::min_element(values_.begin(), values_.end()); }

GridFunction& GridFunction::operator+=(const GridFunction& o) {
  require_same_grid(*this, o);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& o) {
  require_same_grid(*this, o);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

GridFunction& GridFunction::operator*=(double a) {
  for (double& v : values_) v *= a;
  return *this;
}

// ---------------------------------------------------------------------------
// Fourier helpers

double wavenumber(int j, int points, double macro_length) {
  int signed_j = j <= points / 2 ? j : j - points;
  return 2.0 * std::numbers::pi * signed_j / macro_length;
}

std::vector<cplx> forward_fft(const double* values, int points) {
  std::vector<double> in(values, values + points);
  std::vector<cplx> out;
  fft_engine().fwd(out, in);
  for (cplx& c : out) c /= static_cast<double>(points);
  return out;
}

std::vector<double> inverse_fft(const std::vector<cplx>& coeffs) {
  std::vector<double> out;
  fft_engine().inv(out, coeffs);
  const double m = static_cast<double>(coeffs.size());
  for (double& v : out) v *= m;
  return out;
}

GridFunction resample(const GridFunction& f, int points) {
  GridFunction g(points, f.macro_length(), f.layers());
  const int m_old = f.points();
  const int half = std::min(m_old, points) / 2;
  for (int l = 0; l < f.layers(); ++l) {
    auto c = forward_fft(f.values().data() + static_cast<std::ptrdiff_t>(l) * m_old, m_old);
    std::vector<cplx> d(points, cplx(0.0));
    for (int j = 0; j < half; ++j) {
      d[j] = c[j];
      if (j > 0) d[points - j] = c[m_old - j];
    }
    // Nyquist of the smaller grid.
    if (points > m_old) {
      d[half] = 0.5 * c[half];
      d[points - half] = 0.5 * c[half];
    } else if (points < m_old) {
      d[half] = c[half] + c[m_old - half];
    } else {
      d[half] = c[half];
    }
    auto v = inverse_fft(d);
    std::copy(v.begin(), v.end(), g.values().begin() + static_cast<std::ptrdiff_t>(l) * points);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Symbols

Eigen::MatrixXcd build_symbol(OperatorKind kind, const ModelParams& params, double k) {
  const LayerSet& layers = params.layers;
  const int n = layers.size();
  const Eigen::MatrixXcd c = layers.switch_generator().cast<cplx>();
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(n, n);
  switch (kind) {
    case OperatorKind::A:
    case OperatorKind::Astar: {
      const double sign = kind == OperatorKind::A ? 1.0 : -1.0;
      const double lambda = params.family == Family::IndependentRtp ? params.lambda : 0.0;
      s = c * params.switch_scale();
      for (int i = 0; i < n; ++i)
        s(i, i) += cplx(-params.diffusion(i) * k * k, sign * layers.states[i] * lambda * k);
      break;
    }
    case OperatorKind::B:
      s = c * params.switch_scale();
      for (int i = 0; i < n; ++i) s(i, i) += -params.diffusion(i) * k * k;
      break;
    case OperatorKind::Sigma:
      s = -c;
      break;
    case OperatorKind::K:
      for (int i = 0; i < n; ++i) s(i, i) = params.kappa_of(i);
      break;
  }
  return s;
}

OperatorKind forward_kind(const ModelParams& params) {
  return params.family == Family::IndependentRtp ? OperatorKind::A : OperatorKind::B;
}

OperatorKind adjoint_kind(const ModelParams& params) {
  return params.family == Family::IndependentRtp ? OperatorKind::Astar : OperatorKind::B;
}

namespace {

// Applies transform(symbol(k)) to every Fourier mode of phi. At the Nyquist
// mode the symbol is replaced by its real part (the average of +k and -k) so
// the output stays real.
template <class Transform>
GridFunction apply_per_mode(const GridFunction& phi, const ModelParams& params, OperatorKind kind,
                            Transform&& transform) {
  const int m = phi.points();
  const int nl = phi.layers();
  if (nl != params.layers.size()) throw std::domain_error("layer count mismatch between function and model");
  std::vector<std::vector<cplx>> coeffs(nl);
  for (int l = 0; l < nl; ++l)
    coeffs[l] = forward_fft(phi.values().data() + static_cast<std::ptrdiff_t>(l) * m, m);
  Eigen::VectorXcd v(nl);
  for (int j = 0; j <= m / 2; ++j) {
    const double k = wavenumber(j, m, phi.macro_length());
    Eigen::MatrixXcd sym = build_symbol(kind, params, k);
    if (j == m / 2 && j > 0) sym = sym.real().cast<cplx>();
    Eigen::MatrixXcd op = transform(sym);
    for (int l = 0; l < nl; ++l) v(l) = coeffs[l][j];
    Eigen::VectorXcd w = op * v;
    for (int l = 0; l < nl; ++l) {
      coeffs[l][j] = (j == 0 || j == m / 2) ? cplx(w(l).real(), 0.0) : w(l);
      if (j > 0 && j < m / 2) coeffs[l][m - j] = std::conj(coeffs[l][j]);
    }
  }
  GridFunction out(m, phi.macro_length(), nl);
  for (int l = 0; l < nl; ++l) {
    auto vals = inverse_fft(coeffs[l]);
    std::copy(vals.begin(), vals.end(), out.values().begin() + static_cast<std::ptrdiff_t>(l) * m);
  }
  return out;
}

}  // namespace

GridFunction apply_operator(OperatorKind kind, const ModelParams& params, const GridFunction& phi) {
  return apply_per_mode(phi, params, kind, [](const Eigen::MatrixXcd& s) { return s; });
}

GridFunction semigroup_apply(OperatorKind kind, const ModelParams& params, double t, const GridFunction& phi) {
  if (!(t >= 0.0)) throw std::domain_error("semigroup time must be >= 0");
  if (t == 0.0) return phi;
  return apply_per_mode(phi, params, kind, [t](const Eigen::MatrixXcd& s) -> Eigen::MatrixXcd {
    Eigen::MatrixXcd ts = t * s;
    return ts.exp();
  });
}

double inner_product(const GridFunction& phi, const GridFunction& psi) {
  require_same_grid(phi, psi);
  double s = 0.0;
  for (std::size_t i = 0; i < phi.values().size(); ++i) s += phi.values()[i] * psi.values()[i];
  return s * phi.spacing();
}

double h_minus1_norm_sq(const GridFunction& f) {
  if (f.layers() != 1) throw std::domain_error("H^-1 norm takes a single-layer function");
  const double scale = std::max(1.0, f.max_abs());
  if (std::abs(f.mean()) > 1e-10 * scale)
    throw std::domain_error("H^-1 norm needs a mean-zero function (zero mode has no preimage on the torus)");
  const int m = f.points();
  auto c = forward_fft(f.values().data(), m);
  double s = 0.0;
  for (int j = 1; j < m; ++j) {
    double k = wavenumber(j, m, f.macro_length());
    s += std::norm(c[j]) / (k * k);
  }
  return f.macro_length() * s;
}

GridFunction spectral_derivative(const GridFunction& f, int order) {
  const int m = f.points();
  GridFunction out(m, f.macro_length(), f.layers());
  for (int l = 0; l < f.layers(); ++l) {
    auto c = forward_fft(f.values().data() + static_cast<std::ptrdiff_t>(l) * m, m);
    for (int j = 0; j < m; ++j) {
      double k = wavenumber(j, m, f.macro_length());
      if (j == m / 2 && order % 2 == 1) {
        c[j] = 0.0;
        continue;
      }
      c[j] *= std::pow(cplx(0.0, k), order);
    }
    auto v = inverse_fft(c);
    std::copy(v.begin(), v.end(), out.values().begin() + static_cast<std::ptrdiff_t>(l) * m);
  }
  return out;
}

}  // namespace rtp
