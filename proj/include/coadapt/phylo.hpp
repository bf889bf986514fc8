#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace coadapt::phylo {

constexpr int kTraits = 4;
using Vec = Eigen::Matrix<double, kTraits, 1>;
using Mat = Eigen::Matrix<double, kTraits, kTraits>;
using Rng = std::mt19937_64;

/// Ornstein-Uhlenbeck parameters: dξ = −Γ(ξ − μ)dt + Λ dB with Σ = ΛΛᵀ and
/// Γ diagonal (stored as its diagonal).
struct OUParams {
  Vec mu = Vec::Zero();
  Vec gamma = Vec::Ones();
  Mat sigma = Mat::Identity();
  std::optional<Vec> noise_sd;  // observation noise SD per trait

  /// Throws ParameterError on non-positive Γ or non-symmetric / non-PSD Σ.
  void validate() const;
};

/// Σ = (D U)(D U)ᵀ for positive diagonal D and a lower-triangular Cholesky
/// factor U of a correlation matrix.
Mat sigma_from_factors(const Vec& d, const Mat& corr_cholesky);

/// Ωᵢⱼ = Σᵢⱼ / (Γᵢᵢ + Γⱼⱼ). Throws ParameterError for non-positive Γ.
Mat stationary_cov(const OUParams& p);

/// e^{−ΔΓ} as a diagonal matrix.
Mat decay(const OUParams& p, double delta);

struct Gaussian {
  Vec mean;
  Mat cov;
};

/// Law of ξ(t + Δ) given ξ(t) = ξ₀. Throws ParameterError for Δ < 0.
Gaussian propagator(const OUParams& p, double delta, const Vec& xi0);

/// Cov(ξ_A, ξ_B) for two nodes at distances Δ₁, Δ₂ from their MRCA, with
/// the MRCA drawn from the stationary law.
Mat cross_covariance(const OUParams& p, double delta1, double delta2);

/// Correlation matrices of Ω and Σ; nullopt when a variance is zero.
std::optional<Mat> stationary_correlation(const OUParams& p);
std::optional<Mat> instantaneous_correlation(const OUParams& p);

// ---------------------------------------------------------------------------

struct Node {
  std::string id;
  int parent = -1;        // index into the node list, -1 for a family root
  double time = 0.0;      // model time units
  std::string family;
  std::optional<int> covariate;  // 0 or 1
  std::optional<Vec> observation;
  std::string language;
};

/// Dated forest. Nodes are stored parents-before-children.
class PhyloTree {
 public:
  PhyloTree() = default;
  /// Reorders nodes topologically and validates times (child strictly after
  /// parent) and covariate values. Throws ConfigError on violations.
  explicit PhyloTree(std::vector<Node> nodes);

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return nodes_.size(); }
  int index_of(const std::string& id) const;  // -1 when absent

  const std::vector<int>& roots() const { return roots_; }
  const std::vector<int>& children(int i) const { return children_[static_cast<std::size_t>(i)]; }
  /// Root index of the component containing node i.
  int root_of(int i) const { return root_of_[static_cast<std::size_t>(i)]; }
  /// Most recent common ancestor (a node may be its own ancestor); nullopt
  /// across components.
  std::optional<int> mrca(int a, int b) const;

  std::vector<int> observed() const;
  bool all_observed() const;
  /// Branch length to the parent (0 for roots).
  double branch_length(int i) const;

  /// Copy without observations (prior-only fits).
  PhyloTree without_observations() const;
  /// Copy whose observations are replaced (indexed by node).
  PhyloTree with_observations(const std::vector<std::optional<Vec>>& obs) const;

 private:
  std::vector<Node> nodes_;
  std::vector<int> roots_;
  std::vector<std::vector<int>> children_;
  std::vector<int> root_of_;
  std::vector<int> depth_;
};

// ---------------------------------------------------------------------------

enum class Variant { standard, noise, brownian, covariate };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// μ and Γ per covariate value, Σ shared.
struct CovariateParams {
  std::array<Vec, 2> mu{Vec::Zero(), Vec::Zero()};
  std::array<Vec, 2> gamma{Vec::Ones(), Vec::Ones()};
  Mat sigma = Mat::Identity();

  OUParams for_value(int c) const;
};

/// Marginal log-density of all observations with stationary family roots.
/// Observations of different components are independent. With `noise`,
/// diag(σ²) is added to each observed node's own block. Throws
/// NumericalError with a conditioning report when the joint covariance is
/// not positive definite, and ArityError without observations.
double log_likelihood(const PhyloTree& tree, const OUParams& p, bool noise = false);

/// Brownian limit: Cov = Σ·(t_MRCA − T₀), Var = Σ·(t − T₀), mean μ, all
/// families descending from a common ancestor at time T₀ (earlier than every
/// node).
double log_likelihood_brownian(const PhyloTree& tree, const OUParams& p, double t0);

/// Joint log-density of every node state. Observed nodes use their
/// observation, the others take `latent[i]`. Roots follow the stationary law
/// of their own covariate value; every branch uses the child's covariate.
/// Requires a covariate on every node.
double latent_log_density(const PhyloTree& tree, const CovariateParams& p, const std::vector<Vec>& latent);
/// Same with one parameter set on every branch (covariates ignored).
double latent_log_density(const PhyloTree& tree, const OUParams& p, const std::vector<Vec>& latent);

// ---------------------------------------------------------------------------

enum class SimMethod { exact, euler };

/// States for every node, roots drawn from the stationary law. Euler splits
/// each branch into ceil(Δ/dt) equal steps of ξ ← ξ − Γ(ξ − μ)h + chol(Σ)√h·η.
std::vector<Vec> simulate(const PhyloTree& tree, const OUParams& p, Rng& rng,
                          SimMethod method = SimMethod::exact, double dt = 0.01);
std::vector<Vec> simulate(const PhyloTree& tree, const CovariateParams& p, Rng& rng);

/// One propagator draw (or Euler path) along a branch of length Δ.
Vec advance(const OUParams& p, const Vec& start, double delta, Rng& rng,
            SimMethod method = SimMethod::exact, double dt = 0.01);

/// Moment fit for a cloud of states treated as stationary draws: μ = mean,
/// Ω = covariance (plus `ridge` on the diagonal), Γ = γ·I, Σ = ΓΩ + ΩΓ.
OUParams fit_stationary_moments(const std::vector<Vec>& states, double gamma = 1.0, double ridge = 1e-9);

// ---------------------------------------------------------------------------

/// Affine trait map v ↦ 2(v − lo)/(hi − lo) − 1 applied at ingestion.
struct TraitScaling {
  Vec lo = Vec::Zero();
  Vec hi = Vec::Ones();

  Vec forward(const Vec& v) const;
  Vec inverse(const Vec& v) const;
  /// Parameters on the model scale mapped back to the original trait scale.
  OUParams inverse(const OUParams& p) const;
};

}  // namespace coadapt::phylo
