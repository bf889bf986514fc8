#include "coadapt/mcmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <thread>

#include "coadapt/error.hpp"
#include "coadapt/rng.hpp"

namespace coadapt::mcmc {

namespace {

constexpr int K = phylo::kTraits;
constexpr int kCorrFree = K * (K - 1) / 2;
constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kLog2 = 0.69314718055994530942;
const double kNegInf = -std::numeric_limits<double>::infinity();

// log sech(ρ) for ρ ≥ 0, stable for large ρ.
double log_sech(double rho) { return -rho - std::log1p(std::exp(-2.0 * rho)) + kLog2; }

double log_normal01(double x) { return -0.5 * x * x - kHalfLog2Pi; }
double log_half_normal01(double x) { return kLog2 + log_normal01(x); }

struct Block {
  std::string name;
  int offset = 0;
  int size = 0;
};

struct State {
  std::array<Vec, 2> mu{Vec::Zero(), Vec::Zero()};
  std::array<Vec, 2> gamma{Vec::Ones(), Vec::Ones()};
  Vec d = Vec::Ones();
  Mat corr_chol = Mat::Identity();
  Mat sigma = Mat::Identity();
  std::optional<Vec> noise;
  std::vector<Vec> latent;
};

class Target {
 public:
  Target(const phylo::PhyloTree& tree, const SamplerConfig& config)
      : tree_(tree), variant_(config.variant), t0_(config.brownian_t0) {
    covariate_ = variant_ == phylo::Variant::covariate;
    ncov_ = covariate_ ? 2 : 1;
    sample_gamma_ = variant_ != phylo::Variant::brownian;
    noise_ = variant_ == phylo::Variant::noise;
    observed_ = !tree_.observed().empty();
    if (covariate_) {
      for (int i = 0; i < static_cast<int>(tree_.size()); ++i) {
        if (!tree_.node(i).covariate) {
          throw ConfigError("covariate variant needs a covariate on every node (" + tree_.node(i).id + " has none)");
        }
        if (!tree_.node(i).observation) latent_nodes_.push_back(i);
      }
    }
    int off = 0;
    auto add = [&](std::string name, int size) {
      blocks_.push_back({std::move(name), off, size});
      off += size;
    };
    for (int c = 0; c < ncov_; ++c) add(covariate_ ? "mu_c" + std::to_string(c) : "mu", K);
    if (sample_gamma_) {
      for (int c = 0; c < ncov_; ++c) add(covariate_ ? "gamma_c" + std::to_string(c) : "gamma", K);
    }
    add("D", K);
    add("correlation", kCorrFree);
    if (noise_) add("noise", K);
    for (int i : latent_nodes_) add("latent_" + tree_.node(i).id, K);
    dim_ = off;
  }

  int dim() const { return dim_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const std::vector<int>& latent_nodes() const { return latent_nodes_; }
  bool covariate() const { return covariate_; }

  State unpack(const Eigen::VectorXd& th, double* log_jac) const {
    State s;
    std::size_t b = 0;
    for (int c = 0; c < ncov_; ++c) s.mu[static_cast<std::size_t>(c)] = th.segment<K>(blocks_[b++].offset);
    if (!covariate_) s.mu[1] = s.mu[0];
    if (sample_gamma_) {
      for (int c = 0; c < ncov_; ++c) {
        Vec y = th.segment<K>(blocks_[b++].offset);
        s.gamma[static_cast<std::size_t>(c)] = y.array().exp();
        if (log_jac) *log_jac += y.sum();
      }
      if (!covariate_) s.gamma[1] = s.gamma[0];
    }
    Vec yd = th.segment<K>(blocks_[b++].offset);
    s.d = yd.array().exp();
    if (log_jac) *log_jac += yd.sum();
    const auto& cb = blocks_[b++];
    std::vector<double> w(th.data() + cb.offset, th.data() + cb.offset + cb.size);
    s.corr_chol = corr_cholesky_from_unconstrained(w, log_jac);
    s.sigma = phylo::sigma_from_factors(s.d, s.corr_chol);
    if (noise_) {
      Vec yn = th.segment<K>(blocks_[b++].offset);
      s.noise = yn.array().exp();
      if (log_jac) *log_jac += yn.sum();
    }
    if (covariate_) {
      s.latent.assign(tree_.size(), Vec::Zero());
      for (int i : latent_nodes_) s.latent[static_cast<std::size_t>(i)] = th.segment<K>(blocks_[b++].offset);
    }
    return s;
  }

  double log_posterior(const Eigen::VectorXd& th) const {
    double lp = 0.0;
    State s = unpack(th, &lp);
    for (int c = 0; c < ncov_; ++c) {
      for (int k = 0; k < K; ++k) {
        lp += log_normal01(s.mu[static_cast<std::size_t>(c)](k));
        if (sample_gamma_) lp += log_half_normal01(s.gamma[static_cast<std::size_t>(c)](k));
      }
    }
    for (int k = 0; k < K; ++k) lp += log_half_normal01(s.d(k));
    lp += log_lkj_cholesky(s.corr_chol);
    if (s.noise) {
      for (int k = 0; k < K; ++k) lp += log_half_normal01((*s.noise)(k));
    }
    if (!std::isfinite(lp)) return kNegInf;
    try {
      lp += log_likelihood(s);
    } catch (const Error&) {
      return kNegInf;
    }
    return std::isfinite(lp) ? lp : kNegInf;
  }

  double log_likelihood(const State& s) const {
    if (covariate_) {
      phylo::CovariateParams p;
      p.mu = s.mu;
      p.gamma = s.gamma;
      p.sigma = s.sigma;
      return phylo::latent_log_density(tree_, p, s.latent);
    }
    if (!observed_) return 0.0;
    phylo::OUParams p;
    p.mu = s.mu[0];
    p.gamma = s.gamma[0];
    p.sigma = s.sigma;
    p.noise_sd = s.noise;
    if (variant_ == phylo::Variant::brownian) return phylo::log_likelihood_brownian(tree_, p, t0_);
    return phylo::log_likelihood(tree_, p, noise_);
  }

  Eigen::VectorXd initial(Rng& rng) const {
    std::normal_distribution<double> n01;
    Eigen::VectorXd th(dim_);
    Vec obs_mean = Vec::Zero();
    auto obs = tree_.observed();
    for (int i : obs) obs_mean += *tree_.node(i).observation;
    if (!obs.empty()) obs_mean /= static_cast<double>(obs.size());
    obs_mean = obs_mean.cwiseMax(-2.0).cwiseMin(2.0);
    std::size_t b = 0;
    for (int c = 0; c < ncov_; ++c) {
      const auto& blk = blocks_[b++];
      for (int k = 0; k < K; ++k) th(blk.offset + k) = obs_mean(k) + 0.3 * n01(rng);
    }
    if (sample_gamma_) {
      for (int c = 0; c < ncov_; ++c) {
        const auto& blk = blocks_[b++];
        for (int k = 0; k < K; ++k) th(blk.offset + k) = 0.5 * n01(rng);
      }
    }
    {
      const auto& blk = blocks_[b++];
      for (int k = 0; k < K; ++k) th(blk.offset + k) = std::log(0.5) + 0.5 * n01(rng);
    }
    {
      const auto& blk = blocks_[b++];
      for (int k = 0; k < blk.size; ++k) th(blk.offset + k) = 0.2 * n01(rng);
    }
    if (noise_) {
      const auto& blk = blocks_[b++];
      for (int k = 0; k < K; ++k) th(blk.offset + k) = std::log(0.2) + 0.3 * n01(rng);
    }
    for (std::size_t l = 0; l < latent_nodes_.size(); ++l) {
      const auto& blk = blocks_[b++];
      for (int k = 0; k < K; ++k) th(blk.offset + k) = obs_mean(k) + 0.3 * n01(rng);
    }
    return th;
  }

  Draw to_draw(const Eigen::VectorXd& th) const {
    State s = unpack(th, nullptr);
    Draw d;
    d.mu = s.mu;
    d.gamma = s.gamma;
    d.sigma = s.sigma;
    d.noise_sd = s.noise;
    auto inst = phylo::instantaneous_correlation(d.params(0));
    d.r34_instantaneous = inst ? (*inst)(2, 3) : std::nan("");
    if (sample_gamma_) {
      auto stat = phylo::stationary_correlation(d.params(0));
      d.r34_stationary = stat ? (*stat)(2, 3) : std::nan("");
    } else {
      d.r34_stationary = std::nan("");
    }
    return d;
  }

 private:
  const phylo::PhyloTree& tree_;
  phylo::Variant variant_;
  double t0_;
  bool covariate_ = false;
  int ncov_ = 1;
  bool sample_gamma_ = true;
  bool noise_ = false;
  bool observed_ = true;
  std::vector<int> latent_nodes_;
  std::vector<Block> blocks_;
  int dim_ = 0;
};

struct Proposal {
  Eigen::MatrixXd chol;  // Cholesky factor of the proposal covariance shape
  double log_scale = std::log(0.1);
  // Window moments of the block since the last covariance update.
  Eigen::VectorXd sum;
  Eigen::MatrixXd outer;
  long count = 0;
  long window_accepts = 0;
};

struct ChainResult {
  std::vector<Draw> draws;
  std::vector<BlockStats> blocks;
};

ChainResult run_chain(const Target& target, const SamplerConfig& config, int chain) {
  Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(chain)}));
  Eigen::VectorXd th;
  double lp = kNegInf;
  for (int attempt = 0; attempt <= config.init_retries && !std::isfinite(lp); ++attempt) {
    th = target.initial(rng);
    lp = target.log_posterior(th);
  }
  if (!std::isfinite(lp)) {
    throw NumericalError("sampler could not find a finite starting point for chain " + std::to_string(chain) +
                         " after " + std::to_string(config.init_retries) + " retries");
  }
  const int warmup = config.warmup >= 0 ? config.warmup : config.iterations / 2;
  const auto& blocks = target.blocks();
  std::vector<Proposal> props(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const int n = blocks[b].size;
    props[b].chol = Eigen::MatrixXd::Identity(n, n);
    props[b].sum = Eigen::VectorXd::Zero(n);
    props[b].outer = Eigen::MatrixXd::Zero(n, n);
  }
  ChainResult out;
  for (const auto& b : blocks) out.blocks.push_back({b.name, 0, 0});
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int next_update = 100, window = 100;
  for (int it = 0; it < config.iterations; ++it) {
    const bool adapting = it < warmup;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto& blk = blocks[b];
      auto& pr = props[b];
      Eigen::VectorXd z(blk.size);
      for (int k = 0; k < blk.size; ++k) z(k) = n01(rng);
      Eigen::VectorXd cand = th;
      cand.segment(blk.offset, blk.size) += std::exp(pr.log_scale) * (pr.chol * z);
      const double lc = target.log_posterior(cand);
      const bool accept = std::isfinite(lc) && std::log(u01(rng)) < lc - lp;
      if (accept) {
        th.swap(cand);
        lp = lc;
      }
      if (adapting) {
        const double eta = 1.0 / std::pow(1.0 + it / 10.0, 0.6);
        pr.log_scale += eta * ((accept ? 1.0 : 0.0) - config.target_acceptance);
        pr.log_scale = std::clamp(pr.log_scale, -12.0, 4.0);
        Eigen::VectorXd x = th.segment(blk.offset, blk.size);
        pr.sum += x;
        pr.outer += x * x.transpose();
        ++pr.count;
        pr.window_accepts += accept ? 1 : 0;
      } else {
        ++out.blocks[b].proposed;
        out.blocks[b].accepted += accept ? 1 : 0;
      }
    }
    if (adapting && it + 1 == next_update) {
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        auto& pr = props[b];
        const int n = blocks[b].size;
        if (pr.window_accepts > n + 1 && pr.count > 1) {
          Eigen::VectorXd mean = pr.sum / static_cast<double>(pr.count);
          Eigen::MatrixXd cov = (pr.outer - static_cast<double>(pr.count) * mean * mean.transpose()) /
                                static_cast<double>(pr.count - 1);
          cov += Eigen::MatrixXd::Identity(n, n) * (1e-8 + 1e-6 * cov.diagonal().maxCoeff());
          Eigen::LLT<Eigen::MatrixXd> llt(cov);
          if (llt.info() == Eigen::Success) {
            pr.chol = llt.matrixL();
            pr.log_scale = std::log(2.38 / std::sqrt(static_cast<double>(n)));
          }
        }
        pr.sum.setZero();
        pr.outer.setZero();
        pr.count = 0;
        pr.window_accepts = 0;
      }
      window *= 2;
      next_update += window;
    }
    if (!adapting) {
      Draw d = target.to_draw(th);
      d.chain = chain;
      d.iteration = it;
      d.log_posterior = lp;
      out.draws.push_back(std::move(d));
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::function<double(const Draw&)>>> scalar_fields(phylo::Variant v) {
  std::vector<std::pair<std::string, std::function<double(const Draw&)>>> f;
  const bool cov = v == phylo::Variant::covariate;
  for (int c = 0; c < (cov ? 2 : 1); ++c) {
    const std::string suffix = cov ? "_c" + std::to_string(c) : "";
    for (int k = 0; k < K; ++k) {
      f.emplace_back("mu" + std::to_string(k + 1) + suffix,
                     [c, k](const Draw& d) { return d.mu[static_cast<std::size_t>(c)](k); });
    }
    if (v != phylo::Variant::brownian) {
      for (int k = 0; k < K; ++k) {
        f.emplace_back("gamma" + std::to_string(k + 1) + std::to_string(k + 1) + suffix,
                       [c, k](const Draw& d) { return d.gamma[static_cast<std::size_t>(c)](k); });
      }
    }
  }
  for (int i = 0; i < K; ++i) {
    for (int j = i; j < K; ++j) {
      f.emplace_back("sigma_" + std::to_string(i + 1) + "_" + std::to_string(j + 1),
                     [i, j](const Draw& d) { return d.sigma(i, j); });
    }
  }
  if (v == phylo::Variant::noise) {
    for (int k = 0; k < K; ++k) {
      f.emplace_back("noise" + std::to_string(k + 1), [k](const Draw& d) { return (*d.noise_sd)(k); });
    }
  }
  if (v != phylo::Variant::brownian) {
    f.emplace_back("R34_stationary", [](const Draw& d) { return d.r34_stationary; });
  }
  f.emplace_back("R34_instantaneous", [](const Draw& d) { return d.r34_instantaneous; });
  return f;
}

}  // namespace

phylo::OUParams Draw::params(int covariate) const {
  phylo::OUParams p;
  p.mu = mu[static_cast<std::size_t>(covariate)];
  p.gamma = gamma[static_cast<std::size_t>(covariate)];
  p.sigma = sigma;
  p.noise_sd = noise_sd;
  return p;
}

Mat corr_cholesky_from_unconstrained(const std::vector<double>& w, double* log_jacobian) {
  if (w.size() != static_cast<std::size_t>(kCorrFree)) throw ArityError("correlation block needs 6 values");
  Mat L = Mat::Zero();
  L(0, 0) = 1.0;
  std::size_t pos = 0;
  for (int r = 1; r < K; ++r) {
    double rho2 = 0.0;
    for (int k = 0; k < r; ++k) rho2 += w[pos + static_cast<std::size_t>(k)] * w[pos + static_cast<std::size_t>(k)];
    const double rho = std::sqrt(rho2);
    const double t = std::tanh(rho);
    const double ratio = rho > 1e-12 ? t / rho : 1.0;
    for (int k = 0; k < r; ++k) L(r, k) = ratio * w[pos + static_cast<std::size_t>(k)];
    const double lsech = log_sech(rho);
    L(r, r) = std::exp(lsech);
    if (log_jacobian) *log_jacobian += 2.0 * lsech + (r - 1) * std::log(ratio);
    pos += static_cast<std::size_t>(r);
  }
  return L;
}

double log_lkj_cholesky(const Mat& L) {
  double lp = 0.0;
  for (int r = 1; r < K; ++r) lp += (K - 1 - r) * std::log(L(r, r));
  return lp;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    const std::size_t n = c.size() / 2;
    if (n < 2) throw ArityError("split-Rhat needs at least four draws per chain");
    halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(n));
    halves.emplace_back(c.end() - static_cast<std::ptrdiff_t>(n), c.end());
  }
  const double n = static_cast<double>(halves.front().size());
  const double m = static_cast<double>(halves.size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& h : halves) {
    double mean = 0.0;
    for (double x : h) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : h) ss += (x - mean) * (x - mean);
    w += ss / (n - 1.0);
    means.push_back(mean);
  }
  w /= m;
  double grand = 0.0;
  for (double x : means) grand += x;
  grand /= m;
  double b = 0.0;
  for (double x : means) b += (x - grand) * (x - grand);
  b = b * n / (m - 1.0);
  if (w <= 0.0) return b <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ArityError("quantile of no values");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double Posterior::max_rhat() const {
  double m = 0.0;
  for (const auto& [name, r] : rhat) {
    if (std::isfinite(r)) m = std::max(m, r);
  }
  return m;
}

std::optional<double> Posterior::rhat_of(const std::string& name) const {
  for (const auto& [n, r] : rhat) {
    if (n == name) return r;
  }
  return std::nullopt;
}

std::vector<double> Posterior::trace(const std::string& name) const {
  for (const auto& [n, f] : scalar_fields(variant)) {
    if (n != name) continue;
    std::vector<double> out;
    out.reserve(draws.size());
    for (const auto& d : draws) out.push_back(f(d));
    return out;
  }
  throw ConfigError("unknown posterior quantity " + name);
}

Posterior metropolis_sample(const phylo::PhyloTree& tree, const SamplerConfig& config) {
  if (config.chains < 1 || config.iterations < 2) throw ConfigError("sampler needs chains >= 1 and iterations >= 2");
  Target target(tree, config);
  std::vector<ChainResult> results(static_cast<std::size_t>(config.chains));
  const int workers = std::clamp(config.jobs, 1, config.chains);
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  auto work = [&](int w) {
    try {
      for (int c = next++; c < config.chains; c = next++) results[static_cast<std::size_t>(c)] = run_chain(target, config, c);
    } catch (...) {
      errors[static_cast<std::size_t>(w)] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Posterior post;
  post.variant = config.variant;
  post.chains = config.chains;
  post.kept_per_chain = static_cast<int>(results.front().draws.size());
  for (auto& r : results) {
    post.blocks.push_back(r.blocks);
    for (auto& d : r.draws) post.draws.push_back(std::move(d));
  }
  if (post.kept_per_chain >= 4) {
    for (const auto& [name, f] : scalar_fields(config.variant)) {
      std::vector<std::vector<double>> per_chain(static_cast<std::size_t>(config.chains));
      for (const auto& d : post.draws) per_chain[static_cast<std::size_t>(d.chain)].push_back(f(d));
      post.rhat.emplace_back(name, split_rhat(per_chain));
    }
  }
  return post;
}

}  // namespace coadapt::mcmc
