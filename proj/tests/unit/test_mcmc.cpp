#include <cmath>
#include <random>

#include "coadapt/error.hpp"
#include "coadapt/mcmc.hpp"
#include "coadapt/stats.hpp"
#include "doctest.h"

using namespace coadapt;
using namespace coadapt::mcmc;
using doctest::Approx;

namespace {

phylo::Node node(std::string id, int parent, double t, std::optional<Vec> obs = std::nullopt, int cov = 0) {
  phylo::Node n;
  n.id = std::move(id);
  n.parent = parent;
  n.time = t;
  n.observation = obs;
  n.covariate = cov;
  return n;
}

phylo::PhyloTree small_tree(bool observed) {
  std::vector<phylo::Node> n{node("r", -1, 0.0), node("m", 0, 1.0)};
  Vec a, b, c;
  a << 0.2, -0.1, 0.4, 0.3;
  b << 0.1, 0.0, 0.5, 0.2;
  c << -0.3, 0.2, -0.2, -0.4;
  n.push_back(node("a", 1, 2.0, observed ? std::optional<Vec>(a) : std::nullopt, 1));
  n.push_back(node("b", 1, 2.0, observed ? std::optional<Vec>(b) : std::nullopt, 0));
  n.push_back(node("c", 0, 2.0, observed ? std::optional<Vec>(c) : std::nullopt, 1));
  return phylo::PhyloTree(n);
}

double variance(const std::vector<double>& v) {
  double s = stats::sd(v);
  return s * s;
}

}  // namespace

TEST_CASE("split R-hat and quantiles") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  std::vector<std::vector<double>> same(4, std::vector<double>(2000));
  for (auto& c : same) {
    for (auto& x : c) x = n(rng);
  }
  CHECK(split_rhat(same) < 1.01);
  auto shifted = same;
  for (auto& x : shifted[0]) x += 3;
  CHECK(split_rhat(shifted) > 1.1);
  // A trend within each chain is caught by the split.
  auto trend = same;
  for (auto& c : trend) {
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += 4.0 * static_cast<double>(i) / c.size();
  }
  CHECK(split_rhat(trend) > 1.1);
  CHECK(quantile({3, 1, 2, 4, 5}, 0.5) == 3);
  CHECK(quantile({0, 10}, 0.25) == Approx(2.5));
  CHECK_THROWS_AS(quantile({}, 0.5), ArityError);
}

TEST_CASE("unconstrained correlation factor") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 2);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> w(6);
    for (auto& x : w) x = n(rng);
    double lj = 0;
    Mat L = corr_cholesky_from_unconstrained(w, &lj);
    Mat R = L * L.transpose();
    for (int i = 0; i < 4; ++i) REQUIRE(R(i, i) == Approx(1.0).epsilon(1e-12));
    REQUIRE(L(0, 1) == 0.0);
    REQUIRE(std::isfinite(lj));
    Eigen::SelfAdjointEigenSolver<Mat> es(R);
    REQUIRE(es.eigenvalues().minCoeff() > 0);
    REQUIRE(std::isfinite(log_lkj_cholesky(L)));
  }
  CHECK(corr_cholesky_from_unconstrained(std::vector<double>(6, 0.0)).isApprox(Mat::Identity()));
  CHECK_THROWS_AS(corr_cholesky_from_unconstrained({1, 2}), ArityError);
}

TEST_CASE("sampler is reproducible and independent of the thread count") {
  SamplerConfig cfg;
  cfg.iterations = 400;
  cfg.chains = 2;
  cfg.seed = 9;
  auto a = metropolis_sample(small_tree(true), cfg);
  cfg.jobs = 2;
  auto b = metropolis_sample(small_tree(true), cfg);
  REQUIRE(a.draws.size() == b.draws.size());
  CHECK(a.draws.size() == 400);
  CHECK(a.kept_per_chain == 200);
  for (std::size_t i = 0; i < a.draws.size(); ++i) {
    REQUIRE(a.draws[i].mu[0] == b.draws[i].mu[0]);
    REQUIRE(a.draws[i].r34_stationary == b.draws[i].r34_stationary);
  }
  cfg.seed = 10;
  auto c = metropolis_sample(small_tree(true), cfg);
  CHECK(c.draws.back().mu[0] != a.draws.back().mu[0]);
}

TEST_CASE("without observations the sampler reproduces the prior") {
  SamplerConfig cfg;
  cfg.iterations = 12000;
  cfg.chains = 4;
  cfg.seed = 5;
  auto post = metropolis_sample(small_tree(false), cfg);
  auto mu1 = post.trace("mu1");
  CHECK(std::abs(stats::mean(mu1)) < 0.15);
  CHECK(variance(mu1) == Approx(1.0).epsilon(0.2));
  // LKJ(1) in four dimensions: each correlation has variance 1/5.
  auto r34 = post.trace("R34_instantaneous");
  CHECK(std::abs(stats::mean(r34)) < 0.06);
  CHECK(variance(r34) == Approx(0.2).epsilon(0.2));
  // Half-normal Γ: mean sqrt(2/π).
  CHECK(stats::mean(post.trace("gamma11")) == Approx(std::sqrt(2 / M_PI)).epsilon(0.15));
  for (const auto& chain : post.blocks) {
    for (const auto& b : chain) {
      CHECK(b.rate() > 0.1);
      CHECK(b.rate() < 0.6);
    }
  }
}

TEST_CASE("flat data shrinks the stationary variances") {
  std::vector<phylo::Node> n{node("r", -1, 0.0)};
  for (int i = 0; i < 8; ++i) n.push_back(node("l" + std::to_string(i), 0, 3.0, Vec::Constant(0.1)));
  SamplerConfig cfg;
  cfg.iterations = 4000;
  cfg.seed = 3;
  auto flat = metropolis_sample(phylo::PhyloTree(n), cfg);
  auto prior = metropolis_sample(phylo::PhyloTree(n).without_observations(), cfg);
  auto omega11 = [](const Posterior& p) {
    std::vector<double> v;
    for (const auto& d : p.draws) v.push_back(phylo::stationary_cov(d.params())(0, 0));
    return quantile(v, 0.5);
  };
  CHECK(omega11(flat) < 0.5 * omega11(prior));
}

TEST_CASE("variants run and expose their scalars") {
  SamplerConfig cfg;
  cfg.iterations = 300;
  cfg.chains = 2;
  for (auto v : {phylo::Variant::noise, phylo::Variant::brownian, phylo::Variant::covariate}) {
    cfg.variant = v;
    auto post = metropolis_sample(small_tree(true), cfg);
    CHECK(post.draws.size() == 300);
    if (v == phylo::Variant::brownian) {
      CHECK(std::isnan(post.draws[0].r34_stationary));
      CHECK_FALSE(post.rhat_of("gamma11").has_value());
    }
    if (v == phylo::Variant::noise) CHECK(post.draws[0].noise_sd.has_value());
    if (v == phylo::Variant::covariate) {
      CHECK(post.rhat_of("mu1_c1").has_value());
      bool latent = false;
      for (const auto& b : post.blocks[0]) latent = latent || b.name.rfind("latent_", 0) == 0;
      CHECK(latent);
    }
  }
}
