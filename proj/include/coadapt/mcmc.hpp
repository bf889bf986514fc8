#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coadapt/phylo.hpp"

namespace coadapt::mcmc {

using phylo::Mat;
using phylo::Vec;
using phylo::Rng;

struct SamplerConfig {
  phylo::Variant variant = phylo::Variant::standard;
  int chains = 4;
  int iterations = 10000;
  int warmup = -1;  // -1: half of the iterations
  std::uint64_t seed = 1;
  int init_retries = 100;
  double target_acceptance = 0.3;
  int jobs = 1;
  double brownian_t0 = -20.0;  // model time units, Brownian variant only
};

/// One posterior draw on the model scale.
struct Draw {
  int chain = 0;
  int iteration = 0;
  std::array<Vec, 2> mu{Vec::Zero(), Vec::Zero()};     // index = covariate value
  std::array<Vec, 2> gamma{Vec::Ones(), Vec::Ones()};  // diagonal of Γ
  Mat sigma = Mat::Identity();
  std::optional<Vec> noise_sd;
  double r34_stationary = 0.0;      // NaN for the Brownian variant
  double r34_instantaneous = 0.0;
  double log_posterior = 0.0;

  phylo::OUParams params(int covariate = 0) const;
};

struct BlockStats {
  std::string name;
  long proposed = 0;
  long accepted = 0;
  double rate() const { return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
};

struct Posterior {
  phylo::Variant variant = phylo::Variant::standard;
  std::vector<Draw> draws;                     // post-warmup, chain-major
  std::vector<std::vector<BlockStats>> blocks; // per chain, post-warmup acceptance
  std::vector<std::pair<std::string, double>> rhat;  // split-R̂ per scalar
  int chains = 0;
  int kept_per_chain = 0;

  double max_rhat() const;
  std::optional<double> rhat_of(const std::string& name) const;
  /// Scalar trace of every draw, e.g. "R34_stationary", "mu1", "sigma_3_4".
  std::vector<double> trace(const std::string& name) const;
};

/// Adaptive random-walk Metropolis over
///   μ ~ N(0, 1), Γᵢᵢ, Dᵢ, noise SDs ~ N⁺(0, 1), Cholesky correlation ~ LKJ(1),
/// updating parameter blocks in turn (μ, Γ, D, correlation, noise, one block
/// per latent node in the covariate variant). Proposal covariances and scales
/// adapt during warmup only. Chains are independent and reproducible from
/// the seed regardless of `jobs`.
Posterior metropolis_sample(const phylo::PhyloTree& tree, const SamplerConfig& config);

/// Gelman-Rubin statistic on chains split in half.
double split_rhat(const std::vector<std::vector<double>>& chains);

/// Linear-interpolation quantile of unsorted values.
double quantile(std::vector<double> values, double q);

// Exposed for tests.

/// Row-wise map from R^{K(K−1)/2} to a Cholesky factor of a correlation
/// matrix: row r takes u = tanh(|w|)·w/|w| for its r free entries. Adds the
/// log-Jacobian of the map to `log_jacobian` when given.
Mat corr_cholesky_from_unconstrained(const std::vector<double>& w, double* log_jacobian = nullptr);
/// log LKJ(1) density of a correlation Cholesky factor w.r.t. its free entries.
double log_lkj_cholesky(const Mat& L);

}  // namespace coadapt::mcmc
