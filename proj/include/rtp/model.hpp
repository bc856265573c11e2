#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rtp {

class GridFunction;

enum class Family { IndependentRtp, MultiLayerSep };

/// Which diffusion coefficient the macroscopic operators carry. Microscopic
/// is the Taylor limit of the lattice generator (kappa * dxx); Paper uses the
/// printed kappa/2 * dxx.
enum class Convention { Microscopic, Paper };

std::string to_string(Family f);
std::string to_string(Convention c);
Family family_from_string(const std::string& s);
Convention convention_from_string(const std::string& s);

/// Internal states and the symmetric switch-rate matrix c(s, s').
struct LayerSet {
  std::vector<int> states;
  Eigen::MatrixXd switch_rates;

  int size() const { return static_cast<int>(states.size()); }
  int index_of(int sigma) const;

  /// Generator of the internal state alone: off-diagonal c(s, s'), diagonal
  /// minus the row sum.
  Eigen::MatrixXd switch_generator() const;
  double total_rate(int layer) const;
  double max_total_rate() const;

  /// Throws std::domain_error on asymmetry, negative rates, nonzero diagonal
  /// or a disconnected switch graph.
  void validate() const;

  static LayerSet two_state(double gamma);
};

struct ModelParams {
  Family family = Family::IndependentRtp;
  double kappa = 1.0;                // RTP hop rate constant
  std::vector<double> kappa_layers;  // SEP per-layer kappa_sigma
  double lambda = 0.0;               // RTP activity
  LayerSet layers = LayerSet::two_state(1.0);
  int scaling_n = 1;
  int alpha = 1;      // SEP max occupancy
  double rho = 1.0;   // Poisson mean (RTP) or Binomial parameter p (SEP)
  Convention convention = Convention::Microscopic;

  void validate() const;

  double kappa_of(int layer) const;
  double max_kappa() const;

  /// Per-site mean of the stationary product measure: rho or alpha*p.
  double centering() const;
  /// Exact per-site stationary variance: rho or alpha*p*(1-p).
  double chi() const;
  /// rho*(alpha - rho), the SEP variance as printed; equals chi() at alpha=1
  /// when rho is read as the Binomial parameter.
  double paper_chi() const;

  /// Macroscopic diffusion coefficient of layer `layer` after the convention
  /// flag: kappa or kappa/2 (RTP), alpha*kappa_s or alpha*kappa_s/2 (SEP).
  double diffusion(int layer) const;
  /// Multiplier on the switch generator in the macroscopic drift (1 or alpha).
  double switch_scale() const;
};

/// Periodic ring of L = ell * N sites standing in for Z.
struct Lattice {
  int sites = 0;
  int scaling_n = 1;

  Lattice() = default;
  Lattice(int sites_, int scaling_n_);
  static Lattice from_macro(int macro_length, int scaling_n);
  /// Skips the L >= 4N check; for exact master-equation oracles on rings of
  /// a handful of sites.
  static Lattice tiny(int sites, int scaling_n);

  double macro_length() const { return static_cast<double>(sites) / scaling_n; }
  int wrap(long x) const {
    long r = x % sites;
    return static_cast<int>(r < 0 ? r + sites : r);
  }
};

/// Throws std::domain_error when the effective support sqrt(2 kappa T) N +
/// lambda N T of the single-particle semigroup reaches L/4.
void check_wrap(const ModelParams& params, const Lattice& lattice, double horizon);

struct Site {
  int x = 0;
  int layer = 0;  // index into LayerSet::states
  bool operator==(const Site&) const = default;
};

class Configuration {
 public:
  Configuration() = default;
  Configuration(int sites, int layers);

  int sites() const { return sites_; }
  int layers() const { return layers_; }
  long total_particles() const { return total_; }

  int at(int x, int layer) const { return occ_[index(x, layer)]; }
  int at(Site s) const { return at(s.x, s.layer); }
  void set(int x, int layer, int value);
  void add(Site s, int delta);

  std::size_t index(int x, int layer) const { return static_cast<std::size_t>(x) * layers_ + layer; }
  const std::vector<int>& raw() const { return occ_; }

  bool operator==(const Configuration& o) const {
    return sites_ == o.sites_ && layers_ == o.layers_ && occ_ == o.occ_;
  }

 private:
  int sites_ = 0;
  int layers_ = 0;
  long total_ = 0;
  std::vector<int> occ_;
};

enum class TransitionKind { HopLeft, HopRight, ActiveJump, Flip };

struct Transition {
  TransitionKind kind = TransitionKind::HopLeft;
  Site from;
  Site to;
  double rate = 0.0;
};

/// Independent Poisson (RTP) or Binomial(alpha, p) (SEP) occupations. A
/// profile, when given, must live on the site grid (M == L) and replaces rho
/// site by site.
Configuration sample_product_measure(const ModelParams& params, const Lattice& lattice,
                                     const GridFunction* profile, std::uint64_t seed);

/// All transitions with positive rate, aggregated per occupied site.
std::vector<Transition> enumerate_transitions(const Configuration& config, const ModelParams& params,
                                              const Lattice& lattice);

/// Positive-rate transitions leaving one site (appended to `out`).
void site_transitions(const Configuration& config, const ModelParams& params, const Lattice& lattice, Site s,
                      std::vector<Transition>& out);
double site_rate(const Configuration& config, const ModelParams& params, const Lattice& lattice, Site s);

/// Moves one particle; throws std::logic_error if the move is illegal.
void apply_transition_inplace(Configuration& config, const Transition& t, const ModelParams& params);
Configuration apply_transition(const Configuration& config, const Transition& t, const ModelParams& params);

/// Checks occupation bounds and the cached particle count.
bool is_valid(const Configuration& config, const ModelParams& params);

}  // namespace rtp
