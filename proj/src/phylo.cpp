#include "coadapt/phylo.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <map>

#include "coadapt/error.hpp"

namespace coadapt::phylo {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void check_gamma(const Vec& gamma) {
  for (int i = 0; i < kTraits; ++i) {
    if (!(gamma(i) > 0.0) || !std::isfinite(gamma(i))) {
      throw ParameterError("drift matrix entries must be positive and finite");
    }
  }
}

// Any square root R with R Rᵀ = C for a symmetric PSD matrix.
Mat matrix_root(const Mat& c) {
  Eigen::LLT<Mat> llt(c);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Mat> es(c);
  Vec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal();
}

Vec standard_normal(Rng& rng) {
  std::normal_distribution<double> n01;
  Vec z;
  for (int i = 0; i < kTraits; ++i) z(i) = n01(rng);
  return z;
}

std::string conditioning_report(const Eigen::MatrixXd& c, const std::string& what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%s: joint covariance (%ld x %ld) is not positive definite; smallest eigenvalue %.6g, "
                "largest %.6g, condition estimate %.6g",
                what.c_str(), static_cast<long>(c.rows()), static_cast<long>(c.cols()), ev.minCoeff(),
                ev.maxCoeff(), ev.minCoeff() > 0 ? ev.maxCoeff() / ev.minCoeff() : INFINITY);
  return buf;
}

double gaussian_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                       const std::string& what) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError(conditioning_report(cov, what));
  const Eigen::MatrixXd& L = llt.matrixLLT();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    if (!(L(i, i) > 0.0)) throw NumericalError(conditioning_report(cov, what));
    logdet += 2.0 * std::log(L(i, i));
  }
  Eigen::VectorXd r = llt.matrixL().solve(x - mean);
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + logdet + r.squaredNorm());
}

}  // namespace

void OUParams::validate() const {
  check_gamma(gamma);
  if (!sigma.allFinite() || !sigma.isApprox(sigma.transpose(), 1e-12)) {
    throw ParameterError("diffusion matrix must be finite and symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(sigma, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().maxCoeff())) {
    throw ParameterError("diffusion matrix is not positive semidefinite");
  }
  if (noise_sd && ((noise_sd->array() < 0.0).any() || !noise_sd->allFinite())) {
    throw ParameterError("observation noise SDs must be non-negative");
  }
}

Mat sigma_from_factors(const Vec& d, const Mat& corr_cholesky) {
  Mat lambda = d.asDiagonal() * corr_cholesky;
  return lambda * lambda.transpose();
}

Mat stationary_cov(const OUParams& p) {
  check_gamma(p.gamma);
  Mat omega;
  for (int i = 0; i < kTraits; ++i) {
    for (int j = 0; j < kTraits; ++j) omega(i, j) = p.sigma(i, j) / (p.gamma(i) + p.gamma(j));
  }
  return omega;
}

Mat decay(const OUParams& p, double delta) {
  Vec e = (-delta * p.gamma).unaryExpr([](double v) { return std::exp(v); });
  return e.asDiagonal();
}

Gaussian propagator(const OUParams& p, double delta, const Vec& xi0) {
  if (delta < 0.0) throw ParameterError("propagator needs a non-negative time step");
  const Mat omega = stationary_cov(p);
  const Vec e = (-delta * p.gamma).unaryExpr([](double v) { return std::exp(v); });
  Gaussian g;
  // Convex form keeps both limits exact: Δ = 0 returns ξ₀, Δ → ∞ returns μ.
  g.mean = e.cwiseProduct(xi0) + (Vec::Ones() - e).cwiseProduct(p.mu);
  g.cov = omega - e.asDiagonal() * omega * e.asDiagonal();
  g.cov = 0.5 * (g.cov + g.cov.transpose());
  return g;
}

Mat cross_covariance(const OUParams& p, double delta1, double delta2) {
  const Mat omega = stationary_cov(p);
  return decay(p, delta1) * omega * decay(p, delta2);
}

namespace {

std::optional<Mat> correlation_of(const Mat& c) {
  Vec d = c.diagonal();
  if ((d.array() <= 0.0).any()) return std::nullopt;
  Vec inv = d.cwiseSqrt().cwiseInverse();
  Mat r = inv.asDiagonal() * c * inv.asDiagonal();
  for (int i = 0; i < kTraits; ++i) {
    r(i, i) = 1.0;
    for (int j = 0; j < kTraits; ++j) r(i, j) = std::clamp(r(i, j), -1.0, 1.0);
  }
  return r;
}

}  // namespace

std::optional<Mat> stationary_correlation(const OUParams& p) { return correlation_of(stationary_cov(p)); }
std::optional<Mat> instantaneous_correlation(const OUParams& p) { return correlation_of(p.sigma); }

// ---------------------------------------------------------------------------

PhyloTree::PhyloTree(std::vector<Node> nodes) {
  const int n = static_cast<int>(nodes.size());
  std::vector<std::vector<int>> kids(nodes.size());
  std::vector<int> roots;
  for (int i = 0; i < n; ++i) {
    int p = nodes[static_cast<std::size_t>(i)].parent;
    if (p < -1 || p >= n || p == i) throw ConfigError("node " + nodes[static_cast<std::size_t>(i)].id + " has an invalid parent");
    if (p < 0) {
      roots.push_back(i);
    } else {
      kids[static_cast<std::size_t>(p)].push_back(i);
    }
  }
  std::vector<int> order;
  std::deque<int> queue(roots.begin(), roots.end());
  while (!queue.empty()) {
    int i = queue.front();
    queue.pop_front();
    order.push_back(i);
    for (int k : kids[static_cast<std::size_t>(i)]) queue.push_back(k);
  }
  if (static_cast<int>(order.size()) != n) throw ConfigError("tree contains a cycle");
  std::vector<int> new_index(nodes.size());
  for (int k = 0; k < n; ++k) new_index[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = k;
  nodes_.reserve(nodes.size());
  for (int k = 0; k < n; ++k) {
    Node node = std::move(nodes[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]);
    if (node.parent >= 0) node.parent = new_index[static_cast<std::size_t>(node.parent)];
    if (node.covariate && *node.covariate != 0 && *node.covariate != 1) {
      throw ConfigError("node " + node.id + ": covariate must be 0 or 1");
    }
    if (node.observation && !node.observation->allFinite()) {
      throw ConfigError("node " + node.id + ": observation is not finite");
    }
    nodes_.push_back(std::move(node));
  }
  children_.assign(nodes_.size(), {});
  root_of_.assign(nodes_.size(), 0);
  depth_.assign(nodes_.size(), 0);
  std::map<std::string, int> seen;
  for (int i = 0; i < n; ++i) {
    auto& node = nodes_[static_cast<std::size_t>(i)];
    if (!seen.emplace(node.id, i).second) throw ConfigError("duplicate node id " + node.id);
    if (node.parent < 0) {
      if (node.family.empty()) node.family = node.id;
      roots_.push_back(i);
      root_of_[static_cast<std::size_t>(i)] = i;
      continue;
    }
    const auto& parent = nodes_[static_cast<std::size_t>(node.parent)];
    if (!(node.time > parent.time)) {
      throw ConfigError("node " + node.id + " is not strictly later than its parent " + parent.id);
    }
    children_[static_cast<std::size_t>(node.parent)].push_back(i);
    root_of_[static_cast<std::size_t>(i)] = root_of_[static_cast<std::size_t>(node.parent)];
    depth_[static_cast<std::size_t>(i)] = depth_[static_cast<std::size_t>(node.parent)] + 1;
    if (node.family.empty()) node.family = parent.family;
  }
}

int PhyloTree::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

std::optional<int> PhyloTree::mrca(int a, int b) const {
  if (root_of(a) != root_of(b)) return std::nullopt;
  while (depth_[static_cast<std::size_t>(a)] > depth_[static_cast<std::size_t>(b)]) a = node(a).parent;
  while (depth_[static_cast<std::size_t>(b)] > depth_[static_cast<std::size_t>(a)]) b = node(b).parent;
  while (a != b) {
    a = node(a).parent;
    b = node(b).parent;
  }
  return a;
}

std::vector<int> PhyloTree::observed() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].observation) out.push_back(static_cast<int>(i));
  }
  return out;
}

bool PhyloTree::all_observed() const { return observed().size() == nodes_.size(); }

double PhyloTree::branch_length(int i) const {
  const auto& n = node(i);
  return n.parent < 0 ? 0.0 : n.time - node(n.parent).time;
}

PhyloTree PhyloTree::without_observations() const {
  std::vector<std::optional<Vec>> none(nodes_.size());
  return with_observations(none);
}

PhyloTree PhyloTree::with_observations(const std::vector<std::optional<Vec>>& obs) const {
  if (obs.size() != nodes_.size()) throw ArityError("one observation slot per node is required");
  PhyloTree copy = *this;
  for (std::size_t i = 0; i < nodes_.size(); ++i) copy.nodes_[i].observation = obs[i];
  return copy;
}

// ---------------------------------------------------------------------------

std::string to_string(Variant v) {
  switch (v) {
    case Variant::standard: return "standard";
    case Variant::noise: return "noise";
    case Variant::brownian: return "brownian";
    case Variant::covariate: return "covariate";
  }
  return "unknown";
}

Variant variant_from_string(const std::string& s) {
  if (s == "standard") return Variant::standard;
  if (s == "noise") return Variant::noise;
  if (s == "brownian") return Variant::brownian;
  if (s == "covariate") return Variant::covariate;
  throw ConfigError("unknown model variant '" + s + "' (expected standard, noise, brownian or covariate)");
}

OUParams CovariateParams::for_value(int c) const {
  OUParams p;
  p.mu = mu[static_cast<std::size_t>(c)];
  p.gamma = gamma[static_cast<std::size_t>(c)];
  p.sigma = sigma;
  return p;
}

namespace {

// Observed nodes grouped by tree component.
std::map<int, std::vector<int>> observed_by_component(const PhyloTree& tree) {
  std::map<int, std::vector<int>> groups;
  for (int i : tree.observed()) groups[tree.root_of(i)].push_back(i);
  if (groups.empty()) throw ArityError("likelihood needs at least one observed node");
  return groups;
}

template <typename BlockFn>
double component_likelihood(const PhyloTree& tree, const std::vector<int>& obs, const Vec& mu, BlockFn&& block) {
  const Eigen::Index m = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd cov(kTraits * m, kTraits * m);
  Eigen::VectorXd x(kTraits * m), mean(kTraits * m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const int ia = obs[static_cast<std::size_t>(a)];
    x.segment<kTraits>(kTraits * a) = *tree.node(ia).observation;
    mean.segment<kTraits>(kTraits * a) = mu;
    for (Eigen::Index b = 0; b <= a; ++b) {
      const int ib = obs[static_cast<std::size_t>(b)];
      Mat c = block(ia, ib);
      cov.block<kTraits, kTraits>(kTraits * a, kTraits * b) = c;
      cov.block<kTraits, kTraits>(kTraits * b, kTraits * a) = c.transpose();
    }
  }
  return gaussian_logpdf(x, mean, cov, "family " + tree.node(tree.root_of(obs.front())).family);
}

}  // namespace

double log_likelihood(const PhyloTree& tree, const OUParams& p, bool noise) {
  if (noise && !p.noise_sd) throw ConfigError("noise variant needs observation noise SDs");
  const Mat omega = stationary_cov(p);
  double total = 0.0;
  for (const auto& [root, obs] : observed_by_component(tree)) {
    total += component_likelihood(tree, obs, p.mu, [&](int a, int b) -> Mat {
      const int m = *tree.mrca(a, b);
      const double tm = tree.node(m).time;
      Mat c = decay(p, tree.node(a).time - tm) * omega * decay(p, tree.node(b).time - tm);
      if (a == b && noise) c += p.noise_sd->cwiseAbs2().asDiagonal();
      return c;
    });
  }
  return total;
}

double log_likelihood_brownian(const PhyloTree& tree, const OUParams& p, double t0) {
  for (const auto& n : tree.nodes()) {
    if (!(n.time > t0)) throw ParameterError("Brownian origin must precede every node");
  }
  double total = 0.0;
  for (const auto& [root, obs] : observed_by_component(tree)) {
    total += component_likelihood(tree, obs, p.mu, [&](int a, int b) -> Mat {
      const int m = *tree.mrca(a, b);
      return p.sigma * (tree.node(m).time - t0);
    });
  }
  return total;
}

namespace {

template <typename ParamsAt>
double latent_density_impl(const PhyloTree& tree, const std::vector<Vec>& latent, ParamsAt&& params_at) {
  if (latent.size() != tree.size()) throw ArityError("one latent slot per node is required");
  auto state = [&](int i) -> const Vec& {
    const auto& n = tree.node(i);
    return n.observation ? *n.observation : latent[static_cast<std::size_t>(i)];
  };
  double total = 0.0;
  for (int i = 0; i < static_cast<int>(tree.size()); ++i) {
    const auto& n = tree.node(i);
    OUParams p = params_at(i);
    Gaussian g;
    if (n.parent < 0) {
      g.mean = p.mu;
      g.cov = stationary_cov(p);
    } else {
      g = propagator(p, tree.branch_length(i), state(n.parent));
    }
    total += gaussian_logpdf(state(i), g.mean, g.cov, "node " + n.id);
  }
  return total;
}

}  // namespace

double latent_log_density(const PhyloTree& tree, const CovariateParams& p, const std::vector<Vec>& latent) {
  return latent_density_impl(tree, latent, [&](int i) {
    const auto& c = tree.node(i).covariate;
    if (!c) throw ConfigError("node " + tree.node(i).id + " lacks the covariate value");
    return p.for_value(*c);
  });
}

double latent_log_density(const PhyloTree& tree, const OUParams& p, const std::vector<Vec>& latent) {
  return latent_density_impl(tree, latent, [&](int) { return p; });
}

// ---------------------------------------------------------------------------

Vec advance(const OUParams& p, const Vec& start, double delta, Rng& rng, SimMethod method, double dt) {
  if (delta < 0.0) throw ParameterError("negative branch length");
  if (method == SimMethod::exact) {
    Gaussian g = propagator(p, delta, start);
    return g.mean + matrix_root(g.cov) * standard_normal(rng);
  }
  if (!(dt > 0.0)) throw ParameterError("Euler step must be positive");
  const int steps = std::max(1, static_cast<int>(std::ceil(delta / dt - 1e-9)));
  const double h = delta / steps;
  const Mat root = matrix_root(p.sigma) * std::sqrt(h);
  Vec x = start;
  for (int k = 0; k < steps; ++k) {
    x = x - (p.gamma.cwiseProduct(x - p.mu)) * h + root * standard_normal(rng);
  }
  return x;
}

std::vector<Vec> simulate(const PhyloTree& tree, const OUParams& p, Rng& rng, SimMethod method, double dt) {
  p.validate();
  const Mat root_factor = matrix_root(stationary_cov(p));
  std::vector<Vec> states(tree.size());
  for (int i = 0; i < static_cast<int>(tree.size()); ++i) {
    const auto& n = tree.node(i);
    if (n.parent < 0) {
      states[static_cast<std::size_t>(i)] = p.mu + root_factor * standard_normal(rng);
    } else {
      states[static_cast<std::size_t>(i)] =
          advance(p, states[static_cast<std::size_t>(n.parent)], tree.branch_length(i), rng, method, dt);
    }
  }
  return states;
}

std::vector<Vec> simulate(const PhyloTree& tree, const CovariateParams& p, Rng& rng) {
  std::vector<Vec> states(tree.size());
  for (int i = 0; i < static_cast<int>(tree.size()); ++i) {
    const auto& n = tree.node(i);
    if (!n.covariate) throw ConfigError("node " + n.id + " lacks the covariate value");
    OUParams q = p.for_value(*n.covariate);
    if (n.parent < 0) {
      states[static_cast<std::size_t>(i)] = q.mu + matrix_root(stationary_cov(q)) * standard_normal(rng);
    } else {
      states[static_cast<std::size_t>(i)] =
          advance(q, states[static_cast<std::size_t>(n.parent)], tree.branch_length(i), rng);
    }
  }
  return states;
}

OUParams fit_stationary_moments(const std::vector<Vec>& states, double gamma, double ridge) {
  if (states.size() < 2) throw ArityError("moment fit needs at least two states");
  OUParams p;
  p.mu = Vec::Zero();
  for (const auto& s : states) p.mu += s;
  p.mu /= static_cast<double>(states.size());
  Mat omega = Mat::Zero();
  for (const auto& s : states) omega += (s - p.mu) * (s - p.mu).transpose();
  omega /= static_cast<double>(states.size() - 1);
  omega += ridge * Mat::Identity();
  p.gamma = Vec::Constant(gamma);
  p.sigma = 2.0 * gamma * omega;
  return p;
}

// ---------------------------------------------------------------------------

Vec TraitScaling::forward(const Vec& v) const {
  return (2.0 * (v - lo).array() / (hi - lo).array() - 1.0).matrix();
}

Vec TraitScaling::inverse(const Vec& v) const {
  return (lo.array() + (v.array() + 1.0) * (hi - lo).array() / 2.0).matrix();
}

OUParams TraitScaling::inverse(const OUParams& p) const {
  const Vec s = (hi - lo) / 2.0;
  OUParams q = p;
  q.mu = inverse(p.mu);
  q.sigma = s.asDiagonal() * p.sigma * s.asDiagonal();
  if (p.noise_sd) q.noise_sd = s.cwiseProduct(*p.noise_sd).cwiseAbs();
  return q;
}

}  // namespace coadapt::phylo
