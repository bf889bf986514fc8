// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "coadapt/bigram.hpp"
#include "coadapt/conllu.hpp"
#include "coadapt/grammar.hpp"
#include "coadapt/hash.hpp"
#include "coadapt/mcmc.hpp"
#include "coadapt/metrics.hpp"
#include "coadapt/optimize.hpp"
#include "coadapt/pareto.hpp"
#include "coadapt/phylo.hpp"
#include "coadapt/pipeline.hpp"
#include "coadapt/rng.hpp"
#include "coadapt/toy.hpp"
#include "json.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace coadapt;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;
};

template <typename... T>
std::string fmtn(const char* f, T... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

fs::path source_dir() {
  if (const char* env = std::getenv("COADAPT_SOURCE_DIR")) return env;
  return COADAPT_SOURCE_DIR;
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Two-sided normal critical value for tail probability `alpha`.
double normal_critical(double alpha) {
  double lo = 0.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::erfc(mid / std::sqrt(2.0)) > alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double std_error(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

// ---------------------------------------------------------------------------

Outcome c1_transitive_dl() {
  auto parsed = conllu::parse_conllu_files({(source_dir() / "data/toy/transitive.conllu").string()}, "transitive");
  optimize::CorpusContext ctx(parsed.corpus, 1);
  grammar::OrderingGrammar svo({{"nsubj", -0.5}, {"obj", 0.5}, {"root", 0.0}});
  grammar::OrderingGrammar sov({{"nsubj", -0.5}, {"obj", -0.25}, {"root", 0.0}});
  const double a = ctx.evaluate(svo).dl, b = ctx.evaluate(sov).dl;
  return {a == 2.0 && b == 3.0, fmtn("SVO DL %.17g, SOV DL %.17g", a, b), {}};
}

std::vector<std::vector<std::string>> random_sentences(std::mt19937_64& rng, int n, int max_len, int vocab) {
  std::uniform_int_distribution<int> len(1, max_len), word(0, vocab - 1);
  std::vector<std::vector<std::string>> out(static_cast<std::size_t>(n));
  for (auto& s : out) {
    const int k = len(rng);
    for (int i = 0; i < k; ++i) s.push_back("w" + std::to_string(word(rng)));
  }
  return out;
}

Outcome c2_kn_normalization() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  long distributions = 0;
  for (int c = 0; c < 100; ++c) {
    std::uniform_int_distribution<int> vocab(2, 40), sents(1, 60);
    const int v = vocab(rng);
    auto train = random_sentences(rng, sents(rng), 12, v);
    auto heldout = random_sentences(rng, sents(rng), 12, v + 5);  // unseen types too
    const bool boundary = c % 2 == 0;
    auto m = bigram::train_bigram_model(train, heldout, boundary);
    const auto& ids = m.model.vocabulary();
    double su = 0.0;
    for (int w : ids) su += m.model.prob_unigram(w);
    worst = std::max(worst, std::abs(su - 1.0));
    ++distributions;
    for (int prev : ids) {
      double s = 0.0;
      for (int w : ids) s += m.model.prob_bigram(prev, w);
      worst = std::max(worst, std::abs(s - 1.0));
      ++distributions;
    }
  }
  return {worst <= 1e-9, fmtn("%ld distributions, max |sum - 1| = %.3g", distributions, worst), {}};
}

Outcome c3_i1_sanity() {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> word(0, 49);
  std::vector<std::vector<std::string>> iid(5000);
  for (auto& s : iid)
    for (int i = 0; i < 20; ++i) s.push_back("w" + std::to_string(word(rng)));
  std::vector<std::vector<std::string>> train(iid.begin(), iid.begin() + 4500), held(iid.begin() + 4500, iid.end());
  const double i_iid = bigram::mutual_information_I1(train, held);

  std::vector<std::vector<std::string>> alt(100);
  for (auto& s : alt)
    for (int i = 0; i < 1000; ++i) s.push_back(i % 2 ? "b" : "a");
  std::vector<std::vector<std::string>> atrain(alt.begin(), alt.begin() + 90), aheld(alt.begin() + 90, alt.end());
  auto m = bigram::train_bigram_model(atrain, aheld);
  auto h = bigram::cross_entropies(m.model, m.heldout);
  const double gap = std::abs(h.mutual_information() - h.unigram_bits);
  Outcome o;
  o.pass = std::abs(i_iid) < 0.1 && gap < 0.05;
  o.detail = fmtn("iid I1 = %.4f bits; alternating I1 = %.4f, H[X] = %.4f, gap %.4f", i_iid,
                  h.mutual_information(), h.unigram_bits, gap);
  return o;
}

int climb_hits(const conllu::Corpus& corpus, std::uint64_t seed, double* optimum = nullptr) {
  optimize::CorpusContext ctx(corpus, 1);
  optimize::ObjectiveSpec spec;  // λ = 0: plain DL
  const double best = oracle::min_mean_dl(corpus);
  if (optimum) *optimum = best;
  int hits = 0;
  for (std::uint64_t r = 0; r < 30; ++r) {
    grammar::Rng rng(derive_seed(seed, {r}));
    auto res = optimize::hill_climb(ctx, spec, rng);
    if (std::abs(res.point.dl - best) <= 1e-12) ++hits;
  }
  return hits;
}

Outcome c4_exhaustive_oracle() {
  Outcome o;
  std::vector<std::pair<std::string, conllu::Corpus>> corpora;
  corpora.emplace_back("transitive", toy::transitive_fixture());
  corpora.emplace_back("strict_svo", toy::strict_corpus(toy::BasicOrder::svo, 60, 1, "strict_svo"));
  corpora.emplace_back("strict_sov", toy::strict_corpus(toy::BasicOrder::sov, 60, 2, "strict_sov"));
  std::uint64_t k = 10;
  for (double co : {0.15, 0.5, 1.0}) {
    for (double det : {0.0, 1.0}) {
      for (auto order : {toy::BasicOrder::svo, toy::BasicOrder::sov}) {
        toy::UsageSpec u;
        u.sentences = 60;
        u.coexpression = co;
        u.det_rate = det;
        u.order = order;
        u.seed = ++k;
        u.name = fmtn("usage_%s_co%.2f_det%.0f", order == toy::BasicOrder::svo ? "svo" : "sov", co, det);
        corpora.emplace_back(u.name, toy::usage_corpus(u));
      }
    }
  }
  int worst = 31;
  std::string worst_name;
  for (std::size_t i = 0; i < corpora.size(); ++i) {
    const int h = climb_hits(corpora[i].second, 100 + i);
    if (h < worst) {
      worst = h;
      worst_name = corpora[i].first;
    }
  }
  o.pass = worst >= 28;
  o.detail = fmtn("%zu clause corpora, fewest hits %d/30 (%s)", corpora.size(), worst, worst_name.c_str());
  // Not gated: arbitrary random trees, where reposition moves have genuine local optima.
  for (std::uint64_t s = 1; s <= 3; ++s) {
    toy::RandomTreeSpec r;
    r.seed = s;
    r.max_tokens = 5;
    o.notes.push_back(fmtn("random-tree corpus %llu: %d/30 restarts reach the optimum (informational)",
                           static_cast<unsigned long long>(s), climb_hits(toy::random_tree_corpus(r), s)));
  }
  return o;
}

Outcome c5_frontier_audit() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_curv = 0, worst_slope = 0, worst_hull = 0, worst_c1 = 0, worst_area = 0, worst_upper = 0;
  std::size_t knots_total = 0;
  for (int set = 0; set < 50; ++set) {
    std::vector<pareto::PlanePoint> cloud(static_cast<std::size_t>(5 + set % 40));
    for (auto& p : cloud) {
      p.x = u(rng);
      p.y = u(rng) * u(rng) + 0.3 * p.x * p.x;
    }
    auto knots = pareto::nondominated(cloud);
    knots_total += knots.size();
    auto f = pareto::fit_frontier_spline(knots);
    std::vector<oracle::Point> ok;
    for (const auto& k : knots) ok.push_back({k.x, k.y});
    for (const auto& k : knots) worst_hull = std::max(worst_hull, f.value(k.x) - k.y);
    if (knots.size() > 1) {
      std::uniform_real_distribution<double> ux(f.x_min(), f.x_max());
      for (int i = 0; i < 1000; ++i) {
        const double x = ux(rng);
        worst_curv = std::max(worst_curv, -f.curvature(x));
        worst_slope = std::max(worst_slope, f.slope(x));
        // Below the piecewise-linear hull everywhere, not only at knots.
        auto it = std::upper_bound(knots.begin(), knots.end(), x,
                                   [](double v, const pareto::PlanePoint& p) { return v < p.x; });
        if (it == knots.begin()) ++it;
        if (it == knots.end()) --it;
        const auto& b = *it;
        const auto& a = *(it - 1);
        const double chord = a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x);
        worst_hull = std::max(worst_hull, f.value(x) - chord);
      }
      const auto& segs = f.segments();
      for (std::size_t s = 0; s + 1 < segs.size(); ++s) {
        const double x = segs[s].x1;
        worst_c1 = std::max({worst_c1, std::abs(segs[s].value(x) - segs[s + 1].value(x)),
                             std::abs(segs[s].slope(x) - segs[s + 1].slope(x))});
      }
      worst_area = std::max(worst_area, oracle::best_feasible_line_area(ok) - f.area());
      worst_upper = std::max(worst_upper, f.area() - oracle::polyline_area(ok));
    }
  }
  const double tol = 1e-8;
  Outcome o;
  o.pass = worst_curv <= tol && worst_slope <= tol && worst_hull <= tol && worst_c1 <= tol &&
           worst_area <= tol && worst_upper <= tol;
  o.detail = fmtn("%zu knots; max violation: curvature %.2g, slope %.2g, hull %.2g, C1 %.2g, "
                  "line-area deficit %.2g, polyline excess %.2g",
                  knots_total, worst_curv, worst_slope, worst_hull, worst_c1, worst_area, worst_upper);
  return o;
}

Outcome c6_congruence_identity() {
  int compared = 0, undefined = 0, mismatches = 0;
  for (std::uint64_t c = 0; c < 100; ++c) {
    toy::RandomTreeSpec spec;
    spec.seed = 600 + c;
    spec.sentences = 5 + c % 30;
    spec.max_tokens = 8;
    spec.relations = {"nsubj", "obj", "det", "obl"};
    spec.upos = {"VERB", "AUX", "NOUN"};
    auto corpus = toy::random_tree_corpus(spec);
    grammar::Rng rng(c);
    auto g = grammar::random_grammar(corpus.relations(), rng);
    for (int mode = 0; mode < 2; ++mode) {
      std::vector<std::vector<int>> orders;
      for (const auto& t : corpus.trees()) {
        orders.push_back(mode == 0 ? oracle::identity_order(t) : oracle::linearize(t, g.weights()));
      }
      auto provider = mode == 0 ? metrics::attested_orders() : metrics::grammar_orders(g);
      auto lib = metrics::congruence(corpus, provider);
      auto pc = oracle::brute_congruence(corpus, orders);
      if (pc.total == 0) {
        ++undefined;
        if (lib) ++mismatches;
        continue;
      }
      ++compared;
      if (!lib || *lib != static_cast<double>(pc.same) / static_cast<double>(pc.total)) ++mismatches;
    }
  }
  return {mismatches == 0 && compared >= 100,
          fmtn("%d orderings compared exactly, %d undefined, %d mismatches", compared, undefined, mismatches), {}};
}

phylo::OUParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> g(0.2, 3.0);
  std::normal_distribution<double> n(0.0, 1.0);
  phylo::OUParams p;
  for (int i = 0; i < phylo::kTraits; ++i) {
    p.gamma(i) = g(rng);
    p.mu(i) = n(rng);
  }
  phylo::Mat a;
  for (int i = 0; i < phylo::kTraits; ++i)
    for (int j = 0; j < phylo::kTraits; ++j) a(i, j) = n(rng);
  p.sigma = a * a.transpose() + 0.1 * phylo::Mat::Identity();
  return p;
}

Outcome c7_ou_algebra() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> t(0.01, 3.0);
  double lyap = 0, semi = 0;
  bool zero_exact = true, inf_exact = true;
  for (int k = 0; k < 200; ++k) {
    auto p = random_params(rng);
    const phylo::Mat omega = phylo::stationary_cov(p);
    const phylo::Mat G = p.gamma.asDiagonal();
    lyap = std::max(lyap, (G * omega + omega * G.transpose() - p.sigma).cwiseAbs().maxCoeff() /
                              std::max(1.0, p.sigma.cwiseAbs().maxCoeff()));
    phylo::Vec x0;
    for (int i = 0; i < phylo::kTraits; ++i) x0(i) = 2.0 * n(rng);
    const double s = t(rng), r = t(rng);
    auto direct = phylo::propagator(p, s + r, x0);
    auto first = phylo::propagator(p, s, x0);
    auto second = phylo::propagator(p, r, first.mean);
    const phylo::Mat e = phylo::decay(p, r);
    const phylo::Mat cov = e * first.cov * e.transpose() + second.cov;
    semi = std::max({semi, (direct.mean - second.mean).cwiseAbs().maxCoeff(),
                     (direct.cov - cov).cwiseAbs().maxCoeff()});
    auto z = phylo::propagator(p, 0.0, x0);
    zero_exact = zero_exact && z.mean == x0 && z.cov.isZero(0.0);
    for (double big : {std::numeric_limits<double>::infinity(), 1e6}) {
      auto w = phylo::propagator(p, big, x0);
      inf_exact = inf_exact && w.mean == p.mu && w.cov == omega;
    }
  }
  Outcome o;
  o.pass = lyap < 1e-12 && semi < 1e-10 && zero_exact && inf_exact;
  o.detail = fmtn("Lyapunov residual %.2g, semigroup error %.2g, zero limit %s, infinite limit %s", lyap, semi,
                  zero_exact ? "exact" : "inexact", inf_exact ? "exact" : "inexact");
  return o;
}

phylo::Node node(const std::string& id, int parent, double time, const std::string& family) {
  phylo::Node n;
  n.id = id;
  n.parent = parent;
  n.time = time;
  n.family = family;
  return n;
}

Outcome c8_simulation() {
  // ((A:1, B:1.5):0.5, (C:0.7, D:2):0.3) with a stationary root at time 0.
  std::vector<phylo::Node> nodes{node("R", -1, 0.0, "F"), node("X", 0, 0.5, "F"), node("Y", 0, 0.3, "F"),
                                 node("A", 1, 1.5, "F"), node("B", 1, 2.0, "F"), node("C", 2, 1.0, "F"),
                                 node("D", 2, 2.3, "F")};
  phylo::PhyloTree tree(nodes);
  std::mt19937_64 prng(8);
  auto p = random_params(prng);
  const std::vector<std::string> leaves{"A", "B", "C", "D"};
  std::vector<int> idx;
  for (const auto& l : leaves) idx.push_back(tree.index_of(l));
  auto depth_to = [&](int leaf, int anc) { return tree.node(leaf).time - tree.node(anc).time; };

  const int draws = 10000;
  std::vector<std::vector<phylo::Vec>> samples(leaves.size());
  phylo::Rng rng(88);
  for (int d = 0; d < draws; ++d) {
    auto states = phylo::simulate(tree, p, rng);
    for (std::size_t i = 0; i < idx.size(); ++i) samples[i].push_back(states[static_cast<std::size_t>(idx[i])]);
  }
  int entries = 0, outside = 0;
  double worst_z = 0;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a; b < idx.size(); ++b) {
      const int m = *tree.mrca(idx[a], idx[b]);
      const phylo::Mat analytic =
          a == b ? phylo::stationary_cov(p) : phylo::cross_covariance(p, depth_to(idx[a], m), depth_to(idx[b], m));
      for (int i = 0; i < phylo::kTraits; ++i) {
        for (int j = 0; j < phylo::kTraits; ++j) {
          if (a == b && j < i) continue;
          std::vector<double> prod(draws);
          double ma = 0, mb = 0;
          for (int d = 0; d < draws; ++d) {
            ma += samples[a][d](i);
            mb += samples[b][d](j);
          }
          ma /= draws;
          mb /= draws;
          for (int d = 0; d < draws; ++d) prod[d] = (samples[a][d](i) - ma) * (samples[b][d](j) - mb);
          const double est = mean(prod) * draws / (draws - 1.0);
          const double z = std::abs(est - analytic(i, j)) / std_error(prod);
          worst_z = std::max(worst_z, z);
          ++entries;
          if (z > 3.0) ++outside;
        }
      }
    }
  }

  // Euler-Maruyama: noise-free mean path error shrinks with dt, and the
  // one-branch variance at a fine step matches the propagator.
  auto quiet = p;
  quiet.sigma.setZero();
  phylo::Vec x0 = p.mu + phylo::Vec::Constant(1.5);
  const double delta = 1.3;
  const auto exact_mean = phylo::propagator(quiet, delta, x0).mean;
  std::vector<double> errs;
  for (double dt : {0.1, 0.01, 0.001, 0.0001}) {
    phylo::Rng r(1);
    errs.push_back((phylo::advance(quiet, x0, delta, r, phylo::SimMethod::euler, dt) - exact_mean).cwiseAbs().maxCoeff());
  }
  bool shrinking = true;
  for (std::size_t i = 1; i < errs.size(); ++i) shrinking = shrinking && errs[i] < errs[i - 1];
  const auto exact = phylo::propagator(p, delta, x0);
  phylo::Rng er(81);
  std::vector<std::vector<double>> cols(phylo::kTraits);
  for (int d = 0; d < draws; ++d) {
    auto v = phylo::advance(p, x0, delta, er, phylo::SimMethod::euler, 0.001);
    for (int i = 0; i < phylo::kTraits; ++i) cols[i].push_back(v(i));
  }
  double euler_z = 0;
  for (int i = 0; i < phylo::kTraits; ++i) {
    const double m = mean(cols[i]);
    std::vector<double> sq;
    for (double v : cols[i]) sq.push_back((v - m) * (v - m));
    euler_z = std::max(euler_z, std::abs(mean(sq) * draws / (draws - 1.0) - exact.cov(i, i)) / std_error(sq));
    euler_z = std::max(euler_z, std::abs(m - exact.mean(i)) / std_error(cols[i]));
  }
  // 3 SE per quantity, Sidak-adjusted so the whole matrix keeps the same
  // false-alarm rate as a single 3 SE check.
  const double single = std::erfc(3.0 / std::sqrt(2.0));
  const double z_family = normal_critical(1.0 - std::pow(1.0 - single, 1.0 / entries));
  const double z_euler = normal_critical(1.0 - std::pow(1.0 - single, 1.0 / (2.0 * phylo::kTraits)));
  Outcome o;
  o.pass = worst_z <= z_family && shrinking && errs.back() < 1e-3 && euler_z <= z_euler;
  o.detail = fmtn("%d covariance entries, max %.2f SE (family bound %.2f), %d beyond 3 SE; Euler mean error "
                  "%.2g -> %.2g, dt=0.001 moments max %.2f SE (bound %.2f)",
                  entries, worst_z, z_family, outside, errs.front(), errs.back(), euler_z, z_euler);
  return o;
}

Outcome c9_posterior_recovery() {
  std::vector<phylo::Node> nodes;
  for (int f = 0; f < 5; ++f) {
    const std::string fam = "F" + std::to_string(f);
    const int root = static_cast<int>(nodes.size());
    nodes.push_back(node(fam, -1, 0.0, fam));
    for (int c = 0; c < 2; ++c) {
      const int mid = static_cast<int>(nodes.size());
      nodes.push_back(node(fam + "_" + std::to_string(c), root, 1.0 + 0.3 * c, fam));
      for (int l = 0; l < 2; ++l) {
        nodes.push_back(node(fam + "_" + std::to_string(c) + "_" + std::to_string(l), mid, 2.5, fam));
      }
    }
  }
  phylo::PhyloTree bare(nodes);
  phylo::OUParams truth;
  phylo::Mat r = phylo::Mat::Identity();
  r(2, 3) = r(3, 2) = 0.5;
  const double s2 = 0.09;  // stationary variance
  truth.gamma = phylo::Vec::Ones();
  truth.sigma = 2.0 * s2 * r;  // ΓΩ + ΩΓ with Ω = s2·r
  phylo::Rng rng(9);
  auto states = phylo::simulate(bare, truth, rng);
  std::vector<std::optional<phylo::Vec>> obs(bare.size());
  int leaves = 0;
  for (std::size_t i = 0; i < bare.size(); ++i) {
    if (bare.children(static_cast<int>(i)).empty()) {
      obs[i] = states[i];
      ++leaves;
    }
  }
  auto tree = bare.with_observations(obs);

  mcmc::SamplerConfig cfg;
  cfg.chains = 4;
  cfg.iterations = 10000;
  cfg.seed = 99;
  auto post = mcmc::metropolis_sample(tree, cfg);
  auto trace = post.trace("R34_stationary");
  const double lo = mcmc::quantile(trace, 0.025), hi = mcmc::quantile(trace, 0.975);
  const double rhat = post.rhat_of("R34_stationary").value_or(std::numeric_limits<double>::infinity());
  Outcome o;
  o.pass = leaves == 20 && lo <= 0.5 && 0.5 <= hi && rhat < 1.05;
  o.detail = fmtn("%d leaves, R34 95%% interval [%.3f, %.3f], split-Rhat %.4f", leaves, lo, hi, rhat);
  o.notes.push_back(fmtn("largest split-Rhat over all reported scalars: %.4f", post.max_rhat()));
  return o;
}

Outcome c10_coadaptation() {
  auto config = pipeline::load_config(source_dir() / "data/toy/config.json");
  std::vector<pipeline::CorpusSpec> pair;
  for (const auto& c : config.corpora) {
    if (c.name == "dropping_sov" || c.name == "coexpressing_svo") pair.push_back(c);
  }
  Outcome o;
  if (pair.size() != 2) {
    o.detail = "bundled toy config lacks the engineered pair";
    return o;
  }
  config.corpora = pair;
  const fs::path out = fs::temp_directory_path() / fmtn("coadapt-acceptance-%lld",
      static_cast<long long>(std::chrono::steady_clock::now().time_since_epoch().count()));
  config.output_dir = out.string();
  pipeline::cmd_ingest(config);
  pipeline::cmd_suite(config);
  pipeline::cmd_frontier(config);

  std::map<std::string, std::map<std::string, double>> regions;
  double chain_t_min = std::numeric_limits<double>::infinity(), fitted_z_max = 0.0;
  bool ordering_ok = true;
  for (const auto& c : pair) {
    auto table = pipeline::read_csv(out / c.name / "regions.csv");
    for (const auto& row : table.rows) regions[c.name][row[table.column("region")]] = std::stod(row[table.column("smoothed")]);
    const double il = regions[c.name]["il-end"], dl = regions[c.name]["dl-end"];
    ordering_ok = ordering_ok && il >= dl - 1e-9;
    o.notes.push_back(fmtn("%s: il-end %.4f, dl-end %.4f, full %.4f", c.name.c_str(), il, dl, regions[c.name]["full"]));

    // Random adjacent swaps from optimized grammars.
    auto plane = pipeline::read_plane(out / c.name / "plane.csv");
    std::ifstream gin(out / c.name / "grammars.json");
    auto grammars = nlohmann::json::parse(gin);
    auto corpus = conllu::parse_conllu_files(c.conllu, c.name).corpus;
    optimize::CorpusContext ctx(corpus, config.seeds.split);
    grammar::Rng rng(derive_seed(config.seeds.suite, {fnv1a64(c.name), 10}));
    std::vector<double> chain_delta;
    std::vector<phylo::Vec> states;
    for (const auto& p : plane) {
      if (p.tag != optimize::Provenance::optimized) continue;
      states.push_back(phylo::Vec(p.il, p.dl, p.congruence.value_or(0.5), p.lambda));
    }
    int used = 0;
    for (std::size_t li = 0; li < config.lambdas.size(); ++li) {
      for (int r = 0; r < 2; ++r) {
        const std::string id = fmtn("opt-%zu-%d", li, r);
        grammar::OrderingGrammar g(grammars.at(id).get<std::map<std::string, double>>());
        ++used;
        for (const auto& ch : optimize::mutation_chains(g, ctx, rng, 20, 100)) {
          chain_delta.push_back(ch.steps.back().dl - ch.start.dl);
        }
      }
    }
    const double chain_t = mean(chain_delta) / std_error(chain_delta);
    chain_t_min = std::min(chain_t_min, chain_t);

    // The same starts evolved under a model fitted to the optimized cloud.
    auto fitted = phylo::fit_stationary_moments(states);
    phylo::Rng prng(derive_seed(config.seeds.phylo, {fnv1a64(c.name)}));
    std::vector<double> fitted_delta;
    for (const auto& s : states) {
      for (int k = 0; k < 4; ++k) fitted_delta.push_back(phylo::advance(fitted, s, 1.0, prng)(1) - s(1));
    }
    const double fz = std::abs(mean(fitted_delta)) / std_error(fitted_delta);
    fitted_z_max = std::max(fitted_z_max, fz);
    o.notes.push_back(fmtn("%s: %d start grammars, mutation DL change %+.4f (t = %.1f), fitted-model DL change "
                           "%+.4f (|z| = %.2f)",
                           c.name.c_str(), used, mean(chain_delta), chain_t, mean(fitted_delta), fz));
  }
  const auto& co = regions["coexpressing_svo"];
  const auto& dr = regions["dropping_sov"];
  const double pooled_il = 0.5 * (co.at("il-end") + dr.at("il-end"));
  const double pooled_dl = 0.5 * (co.at("dl-end") + dr.at("dl-end"));
  o.pass = ordering_ok && co.at("il-end") > co.at("dl-end") && pooled_il > pooled_dl && chain_t_min > 3.0 &&
           fitted_z_max < 3.0;
  o.detail = fmtn("pooled il-end %.4f > dl-end %.4f; mutation drift t >= %.1f; fitted drift |z| <= %.2f", pooled_il,
                  pooled_dl, chain_t_min, fitted_z_max);
  std::error_code ec;
  fs::remove_all(out, ec);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"transitive fixture DL", 1, c1_transitive_dl},
      {"Kneser-Ney normalization", 30, c2_kn_normalization},
      {"I1 sanity", 60, c3_i1_sanity},
      {"exhaustive DL oracle", 120, c4_exhaustive_oracle},
      {"frontier audit", 60, c5_frontier_audit},
      {"congruence identity", 30, c6_congruence_identity},
      {"OU algebra", 10, c7_ou_algebra},
      {"simulation consistency", 120, c8_simulation},
      {"posterior recovery", 600, c9_posterior_recovery},
      {"coadaptation fixture", 300, c10_coadaptation},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < criteria[i].budget_s;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("[%s] %2zu %s: %s; %.2f s of %.0f s%s\n", pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                o.detail.c_str(), secs, criteria[i].budget_s, in_time ? "" : " (over budget)");
    for (const auto& n : o.notes) std::printf("       %s\n", n.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
