#include "coadapt/optimize.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <limits>
#include <numeric>
#include <thread>

#include "coadapt/bigram.hpp"
#include "coadapt/error.hpp"
#include "coadapt/rng.hpp"

namespace coadapt::optimize {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::attested: return "attested";
    case Provenance::baseline: return "baseline";
    case Provenance::optimized: return "optimized";
    case Provenance::fitted: return "fitted";
  }
  return "unknown";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "attested") return Provenance::attested;
  if (s == "baseline") return Provenance::baseline;
  if (s == "fitted") return Provenance::fitted;
  if (s.rfind("optimized", 0) == 0) return Provenance::optimized;
  throw ParseError("unknown provenance tag '" + s + "'");
}

std::string EfficiencyPoint::tag_label() const {
  if (tag != Provenance::optimized) return to_string(tag);
  char buf[64];
  std::snprintf(buf, sizeof buf, "optimized(%g)", lambda);
  return buf;
}

// ---------------------------------------------------------------------------

CorpusContext::CorpusContext(const conllu::Corpus& corpus, std::uint64_t split_seed, ContextOptions options)
    : corpus_(corpus), options_(std::move(options)), relations_(corpus.relations()) {
  if (corpus_.empty()) throw EmptyCorpusError("corpus " + corpus_.name() + " is empty");
  bigram::Vocabulary vocab;
  if (options_.sentence_boundary) boundary_ = vocab.intern(bigram::kBoundarySymbol);
  trees_.reserve(corpus_.size());
  forms_.reserve(corpus_.size());
  std::size_t offset = 0;
  for (const auto& tree : corpus_.trees()) {
    trees_.push_back(grammar::index_tree(tree, relations_));
    std::vector<int> ids;
    ids.reserve(tree.size());
    offsets_.push_back(offset);
    for (const auto& t : tree.tokens()) {
      ids.push_back(vocab.intern(t.form));
      bool verbal_head = t.head != 0 && options_.roles.verbal_upos.count(tree.token(t.head).upos) > 0;
      subject_arg_.push_back(verbal_head && options_.roles.subject.count(t.deprel) ? 1 : 0);
      object_arg_.push_back(verbal_head && options_.roles.object.count(t.deprel) ? 1 : 0);
    }
    offset += tree.size();
    forms_.push_back(std::move(ids));
  }
  std::vector<char> is_dependent(relations_.size(), 0);
  for (const auto& t : trees_) {
    for (std::size_t i = 0; i < t.head.size(); ++i) {
      if (t.head[i] >= 0) is_dependent[static_cast<std::size_t>(t.relation[i])] = 1;
    }
  }
  for (std::size_t r = 0; r < is_dependent.size(); ++r) {
    if (is_dependent[r]) dependent_relations_.push_back(static_cast<int>(r));
  }
  id_limit_ = vocab.size();
  heldout_ = conllu::sample_heldout_indices(corpus_.size(), split_seed);
  std::vector<char> held(corpus_.size(), 0);
  for (auto i : heldout_) held[i] = 1;
  for (std::size_t i = 0; i < corpus_.size(); ++i) {
    if (!held[i]) train_.push_back(i);
  }
}

Measures CorpusContext::measure_orders(const std::vector<std::vector<int>>* fixed_orders,
                                       std::span<const double> weights, bool need_il, bool need_dl) const {
  Measures m;
  const std::size_t n = trees_.size();
  std::vector<std::vector<int>> orders(n);
  std::vector<int> positions;
  long dl_total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& tree = trees_[i];
    if (fixed_orders) {
      orders[i] = (*fixed_orders)[i];
    } else {
      grammar::linearize_indexed(tree, weights, orders[i]);
    }
    positions.assign(orders[i].size(), 0);
    for (std::size_t k = 0; k < orders[i].size(); ++k) positions[static_cast<std::size_t>(orders[i][k])] = static_cast<int>(k);
    if (need_dl) dl_total += metrics::dependency_length(tree, positions);
    const std::size_t off = offsets_[i];
    for (std::size_t t = 0; t < tree.head.size(); ++t) {
      if (!subject_arg_[off + t] && !object_arg_[off + t]) continue;
      bool before = positions[t] < positions[static_cast<std::size_t>(tree.head[t])];
      if (subject_arg_[off + t]) {
        (before ? m.sides.subjects_before : m.sides.subjects_after) += 1;
      } else {
        (before ? m.sides.objects_before : m.sides.objects_after) += 1;
      }
    }
  }
  if (need_dl) m.dl = static_cast<double>(dl_total) / static_cast<double>(n);
  if (need_il) {
    // Every sentence is held out: nothing to train on, IL is undefined.
    if (train_.empty()) {
      m.il = std::numeric_limits<double>::quiet_NaN();
      return m;
    }
    auto surface = [&](std::size_t i) {
      std::vector<int> s;
      s.reserve(orders[i].size());
      for (int slot : orders[i]) s.push_back(forms_[i][static_cast<std::size_t>(slot)]);
      return s;
    };
    bigram::BigramModel::Sentences train, heldout;
    train.reserve(train_.size());
    heldout.reserve(heldout_.size());
    for (auto i : train_) train.push_back(surface(i));
    for (auto i : heldout_) heldout.push_back(surface(i));
    bigram::BigramModel model(train, heldout, id_limit_, boundary_);
    m.il = bigram::cross_entropies(model, heldout).mutual_information();
  }
  return m;
}

Measures CorpusContext::measure(std::span<const double> weights, bool need_il, bool need_dl) const {
  if (weights.size() != relations_.size()) throw ConfigError("weight vector does not match relation inventory");
  return measure_orders(nullptr, weights, need_il, need_dl);
}

Measures CorpusContext::measure_attested() const {
  std::vector<std::vector<int>> identity(trees_.size());
  for (std::size_t i = 0; i < trees_.size(); ++i) {
    identity[i].resize(trees_[i].head.size());
    std::iota(identity[i].begin(), identity[i].end(), 0);
  }
  return measure_orders(&identity, {}, true, true);
}

EfficiencyPoint CorpusContext::evaluate(const grammar::OrderingGrammar& g, Provenance tag) const {
  auto w = relations_.dense(g);
  auto m = measure(w);
  EfficiencyPoint p;
  p.il = m.il;
  p.dl = m.dl;
  p.congruence = metrics::congruence(m.sides);
  p.tag = tag;
  return p;
}

EfficiencyPoint CorpusContext::evaluate_attested() const {
  auto m = measure_attested();
  EfficiencyPoint p;
  p.il = m.il;
  p.dl = m.dl;
  p.congruence = metrics::congruence(m.sides);
  p.tag = Provenance::attested;
  p.grammar_id = "attested";
  return p;
}

std::vector<int> CorpusContext::behaviour_key(std::span<const double> weights) const {
  std::vector<int> key = dependent_relations_;
  std::sort(key.begin(), key.end(), [&](int a, int b) {
    return weights[static_cast<std::size_t>(a)] < weights[static_cast<std::size_t>(b)];
  });
  int negatives = 0;
  for (int r : key) negatives += weights[static_cast<std::size_t>(r)] < 0.0 ? 1 : 0;
  key.push_back(negatives);
  return key;
}

// ---------------------------------------------------------------------------

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return {mean, sd};
}

}  // namespace

ObjectiveSpec make_objective_spec(std::span<const EfficiencyPoint> baselines, double lambda, Scaling scaling) {
  if (baselines.empty()) throw ArityError("objective standardization needs baseline points");
  std::vector<double> dl, il;
  for (const auto& p : baselines) {
    dl.push_back(p.dl);
    il.push_back(p.il);
  }
  ObjectiveSpec spec;
  spec.lambda = lambda;
  spec.scaling = scaling;
  std::tie(spec.dl_mean, spec.dl_sd) = mean_sd(dl);
  std::tie(spec.il_mean, spec.il_sd) = mean_sd(il);
  if (!(spec.dl_sd > 0.0)) spec.dl_sd = 1.0;
  if (!(spec.il_sd > 0.0)) spec.il_sd = 1.0;
  if (lambda > 0.0 && !std::isfinite(spec.il_mean)) {
    throw DegenerateError("IL is undefined on this corpus (no training sentences); only lambda = 0 is usable");
  }
  return spec;
}

double combined_objective(double dl, double il, const ObjectiveSpec& spec) {
  const double l = spec.lambda;
  double j = 0.0;
  if (l < 1.0) j += (1.0 - l) * (spec.scaling == Scaling::raw ? dl : (dl - spec.dl_mean) / spec.dl_sd);
  if (l > 0.0) j -= l * (spec.scaling == Scaling::raw ? il : (il - spec.il_mean) / spec.il_sd);
  return j;
}

double combined_objective(const EfficiencyPoint& p, const ObjectiveSpec& spec) {
  return combined_objective(p.dl, p.il, spec);
}

HillClimbResult hill_climb(const CorpusContext& ctx, const ObjectiveSpec& spec, grammar::Rng& rng,
                           const grammar::ClimbLimits& limits) {
  const bool need_dl = spec.lambda < 1.0;
  const bool need_il = spec.lambda > 0.0;
  // Grammars with the same behaviour key produce identical orders, so their
  // objective values are shared.
  std::map<std::vector<int>, double> cache;
  auto objective = [&](const std::vector<double>& w) {
    auto key = ctx.behaviour_key(w);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto m = ctx.measure(w, need_il, need_dl);
    double v = combined_objective(m.dl, m.il, spec);
    cache.emplace(std::move(key), v);
    return v;
  };
  auto start = grammar::random_weights(ctx.relations().size(), rng);
  auto climb = grammar::hill_climb_weights(std::move(start), objective, rng, limits);
  HillClimbResult result;
  result.grammar = ctx.relations().sparse(climb.weights);
  result.trace = std::move(climb.trace);
  result.iterations = climb.iterations;
  result.point = ctx.evaluate(result.grammar, Provenance::optimized);
  result.point.lambda = spec.lambda;
  return result;
}

std::vector<Sample> sample_baselines(const CorpusContext& ctx, std::size_t n, grammar::Rng& rng) {
  if (n == 0) throw ArityError("at least one baseline grammar is required");
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto g = grammar::random_grammar(ctx.corpus().relations(), rng);
    auto p = ctx.evaluate(g, Provenance::baseline);
    p.grammar_id = "baseline-" + std::to_string(i);
    out.push_back({std::move(p), std::move(g)});
  }
  return out;
}

namespace {

template <typename Task>
void run_parallel(std::size_t count, int jobs, Task&& task) {
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, count == 0 ? 1 : count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) task(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::vector<Sample> optimize_suite(const CorpusContext& ctx, std::span<const EfficiencyPoint> baselines,
                                   const SuiteConfig& config) {
  const std::size_t restarts = static_cast<std::size_t>(std::max(config.restarts_per_lambda, 0));
  const std::size_t tasks = config.lambdas.size() * restarts;
  std::vector<ObjectiveSpec> specs;
  for (double l : config.lambdas) specs.push_back(make_objective_spec(baselines, l, config.scaling));
  std::vector<Sample> out(tasks);
  run_parallel(tasks, config.jobs, [&](std::size_t task) {
    std::size_t li = task / restarts, r = task % restarts;
    grammar::Rng rng(derive_seed(config.seed, {li, r}));
    auto res = hill_climb(ctx, specs[li], rng, config.limits);
    res.point.grammar_id = "opt-" + std::to_string(li) + "-" + std::to_string(r);
    out[task] = {std::move(res.point), std::move(res.grammar)};
  });
  return out;
}

std::vector<MutationChain> mutation_chains(const grammar::OrderingGrammar& g, const CorpusContext& ctx,
                                           grammar::Rng& rng, int chains, int steps) {
  std::vector<MutationChain> out;
  const auto start = ctx.evaluate(g, Provenance::optimized);
  for (int c = 0; c < chains; ++c) {
    grammar::Rng chain_rng(rng());
    MutationChain chain;
    chain.start = start;
    auto cur = g;
    for (int s = 0; s < steps; ++s) {
      cur = grammar::adjacent_swap_mutation(cur, chain_rng);
      chain.steps.push_back(ctx.evaluate(cur, Provenance::optimized));
    }
    chain.end = cur;
    out.push_back(std::move(chain));
  }
  return out;
}

PlaneNormalization fit_normalization(std::span<const EfficiencyPoint> optimized,
                                     std::span<const EfficiencyPoint> baselines) {
  if (optimized.empty() || baselines.empty()) {
    throw ArityError("plane normalization needs optimized and baseline points");
  }
  PlaneNormalization n;
  n.il_opt = optimized.front().il;
  n.dl_opt = optimized.front().dl;
  for (const auto& p : optimized) {
    n.il_opt = std::max(n.il_opt, p.il);
    n.dl_opt = std::min(n.dl_opt, p.dl);
  }
  for (const auto& p : baselines) {
    n.il_base_mean += p.il;
    n.dl_base_mean += p.dl;
  }
  n.il_base_mean /= static_cast<double>(baselines.size());
  n.dl_base_mean /= static_cast<double>(baselines.size());
  if (!std::isfinite(n.il_opt) || !std::isfinite(n.il_base_mean)) {
    throw DegenerateError("IL is undefined on this corpus; the plane cannot be normalized");
  }
  if (n.il_opt == n.il_base_mean) throw DegenerateError("IL optimum equals the baseline mean");
  if (n.dl_opt == n.dl_base_mean) throw DegenerateError("DL optimum equals the baseline mean");
  return n;
}

std::vector<NormalizedPoint> normalize_plane(std::span<const EfficiencyPoint> points,
                                             const PlaneNormalization& norm) {
  std::vector<NormalizedPoint> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out.push_back({norm.x(points[i].il), norm.y(points[i].dl), points[i].congruence, i});
  }
  return out;
}

}  // namespace coadapt::optimize
