#include "coadapt/grammar.hpp"

#include <algorithm>
#include <numeric>

#include "coadapt/error.hpp"
#include "json.hpp"

namespace coadapt::grammar {

OrderingGrammar::OrderingGrammar(std::map<std::string, double> weights)
    : weights_(std::move(weights)) {
  std::vector<double> seen;
  seen.reserve(weights_.size());
  for (const auto& [rel, w] : weights_) {
    if (!(w >= -1.0 && w <= 1.0)) {
      throw ConfigError("weight of relation '" + rel + "' is outside [-1, 1]");
    }
    seen.push_back(w);
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
    throw ConfigError("grammar weights must be pairwise distinct");
  }
}

double OrderingGrammar::weight(const std::string& relation) const {
  auto it = weights_.find(relation);
  if (it == weights_.end()) throw ConfigError("grammar has no weight for relation '" + relation + "'");
  return it->second;
}

std::vector<std::string> OrderingGrammar::rank_order() const {
  std::vector<std::string> rels;
  for (const auto& [rel, w] : weights_) rels.push_back(rel);
  std::sort(rels.begin(), rels.end(),
            [&](const auto& a, const auto& b) { return weights_.at(a) < weights_.at(b); });
  return rels;
}

std::string to_json(const OrderingGrammar& g) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [rel, w] : g.weights()) j[rel] = w;  // std::map keeps keys sorted
  return j.dump();
}

OrderingGrammar grammar_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  if (!j.is_object()) throw ConfigError("grammar JSON must be an object");
  std::map<std::string, double> w;
  for (auto it = j.begin(); it != j.end(); ++it) w[it.key()] = it.value().get<double>();
  return OrderingGrammar(std::move(w));
}

// ---------------------------------------------------------------------------

namespace {

void linearize_node(const conllu::DepTree& tree, const OrderingGrammar& g, int node,
                    std::vector<int>& out) {
  const auto& kids = tree.children()[static_cast<std::size_t>(node)];
  std::vector<std::pair<double, int>> deps;
  deps.reserve(kids.size());
  for (int c : kids) deps.emplace_back(g.weight(tree.token(c).deprel), c);
  std::stable_sort(deps.begin(), deps.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  bool head_placed = false;
  for (const auto& [w, c] : deps) {
    if (!head_placed && w >= 0.0) {
      out.push_back(node);
      head_placed = true;
    }
    linearize_node(tree, g, c, out);
  }
  if (!head_placed) out.push_back(node);
}

}  // namespace

LinearizedSentence from_order(std::vector<int> order) {
  LinearizedSentence s;
  s.positions.assign(order.size() + 1, -1);
  for (std::size_t k = 0; k < order.size(); ++k) s.positions[static_cast<std::size_t>(order[k])] = static_cast<int>(k);
  s.order = std::move(order);
  return s;
}

LinearizedSentence linearize(const conllu::DepTree& tree, const OrderingGrammar& grammar) {
  std::vector<int> order;
  order.reserve(tree.size());
  linearize_node(tree, grammar, tree.root(), order);
  return from_order(std::move(order));
}

LinearizedSentence attested_order(const conllu::DepTree& tree) {
  std::vector<int> order(tree.size());
  std::iota(order.begin(), order.end(), 1);
  return from_order(std::move(order));
}

conllu::DepTree apply_order(const conllu::DepTree& tree, const LinearizedSentence& order) {
  std::vector<conllu::Token> tokens;
  tokens.reserve(tree.size());
  for (int old : order.order) {
    conllu::Token t = tree.token(old);
    t.index = order.positions[static_cast<std::size_t>(old)] + 1;
    t.head = t.head == 0 ? 0 : order.positions[static_cast<std::size_t>(t.head)] + 1;
    tokens.push_back(std::move(t));
  }
  return conllu::DepTree(tree.sentence_id(), std::move(tokens));
}

// ---------------------------------------------------------------------------

RelationIndex::RelationIndex(const std::set<std::string>& relations)
    : names_(relations.begin(), relations.end()) {
  for (std::size_t i = 0; i < names_.size(); ++i) ids_[names_[i]] = static_cast<int>(i);
}

int RelationIndex::id(const std::string& relation) const {
  auto it = ids_.find(relation);
  return it == ids_.end() ? -1 : it->second;
}

std::vector<double> RelationIndex::dense(const OrderingGrammar& g) const {
  std::vector<double> w(names_.size());
  for (std::size_t i = 0; i < names_.size(); ++i) w[i] = g.weight(names_[i]);
  return w;
}

OrderingGrammar RelationIndex::sparse(std::span<const double> weights) const {
  std::map<std::string, double> m;
  for (std::size_t i = 0; i < names_.size(); ++i) m[names_[i]] = weights[i];
  return OrderingGrammar(std::move(m));
}

IndexedTree index_tree(const conllu::DepTree& tree, const RelationIndex& relations) {
  IndexedTree it;
  const std::size_t n = tree.size();
  it.head.resize(n);
  it.relation.resize(n);
  it.children.assign(n, {});
  for (const auto& t : tree.tokens()) {
    auto slot = static_cast<std::size_t>(t.index - 1);
    it.head[slot] = t.head - 1;
    it.relation[slot] = relations.id(t.deprel);
    if (it.relation[slot] < 0) throw ConfigError("relation '" + t.deprel + "' missing from index");
    if (t.head == 0) {
      it.root = static_cast<int>(slot);
    } else {
      it.children[static_cast<std::size_t>(t.head - 1)].push_back(static_cast<int>(slot));
    }
  }
  return it;
}

void linearize_indexed(const IndexedTree& tree, std::span<const double> weights,
                       std::vector<int>& order) {
  order.clear();
  order.reserve(tree.head.size());
  // Explicit stack of (node, sorted dependents, cursor, head emitted).
  struct Frame {
    int node;
    std::vector<std::pair<double, int>> deps;
    std::size_t next = 0;
    bool head_done = false;
  };
  std::vector<Frame> stack;
  auto push = [&](int node) {
    Frame f{node, {}, 0, false};
    const auto& kids = tree.children[static_cast<std::size_t>(node)];
    f.deps.reserve(kids.size());
    for (int c : kids) {
      f.deps.emplace_back(weights[static_cast<std::size_t>(tree.relation[static_cast<std::size_t>(c)])], c);
    }
    std::stable_sort(f.deps.begin(), f.deps.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    stack.push_back(std::move(f));
  };
  push(tree.root);
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.deps.size()) {
      auto [w, c] = f.deps[f.next];
      if (!f.head_done && w >= 0.0) {
        order.push_back(f.node);
        f.head_done = true;
      }
      ++f.next;
      push(c);  // invalidates f
      continue;
    }
    if (!f.head_done) order.push_back(f.node);
    stack.pop_back();
  }
}

std::vector<int> behaviour_signature(std::span<const double> weights) {
  std::vector<int> sig(weights.size());
  std::iota(sig.begin(), sig.end(), 0);
  std::sort(sig.begin(), sig.end(), [&](int a, int b) {
    return weights[static_cast<std::size_t>(a)] < weights[static_cast<std::size_t>(b)];
  });
  int negatives = 0;
  for (double w : weights) negatives += w < 0.0 ? 1 : 0;
  sig.push_back(negatives);
  return sig;
}

// ---------------------------------------------------------------------------

namespace {

double uniform_weight(Rng& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  return dist(rng);
}

bool collides(const std::vector<double>& w, double value, std::size_t skip) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i != skip && w[i] == value) return true;
  }
  return false;
}

}  // namespace

std::vector<double> random_weights(std::size_t n, Rng& rng) {
  std::vector<double> w;
  w.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = uniform_weight(rng);
    while (collides(w, v, w.size())) v = uniform_weight(rng);
    w.push_back(v);
  }
  return w;
}

OrderingGrammar random_grammar(const std::set<std::string>& relations, Rng& rng) {
  if (relations.empty()) throw ArityError("random_grammar needs at least one relation");
  auto w = random_weights(relations.size(), rng);
  std::map<std::string, double> m;
  std::size_t i = 0;
  for (const auto& rel : relations) m[rel] = w[i++];
  return OrderingGrammar(std::move(m));
}

void reposition_in_place(std::vector<double>& weights, Rng& rng) {
  if (weights.empty()) throw ArityError("reposition needs at least one relation");
  std::uniform_int_distribution<std::size_t> pick(0, weights.size() - 1);
  std::size_t i = pick(rng);
  double v = uniform_weight(rng);
  while (collides(weights, v, i)) v = uniform_weight(rng);
  weights[i] = v;
}

OrderingGrammar reposition_mutation(const OrderingGrammar& g, Rng& rng) {
  RelationIndex idx([&] {
    std::set<std::string> s;
    for (const auto& [rel, w] : g.weights()) s.insert(rel);
    return s;
  }());
  auto w = idx.dense(g);
  reposition_in_place(w, rng);
  return idx.sparse(w);
}

OrderingGrammar reposition(const OrderingGrammar& g, const std::string& relation, double new_weight) {
  auto m = g.weights();
  if (!m.count(relation)) throw ConfigError("grammar has no weight for relation '" + relation + "'");
  m[relation] = new_weight;
  return OrderingGrammar(std::move(m));
}

OrderingGrammar adjacent_swap(const OrderingGrammar& g, std::size_t pair) {
  if (g.size() < 2) throw ArityError("adjacent swap needs at least two relations");
  auto ranked = g.rank_order();
  if (pair + 1 >= ranked.size()) throw ArityError("adjacent pair index out of range");
  auto m = g.weights();
  std::swap(m[ranked[pair]], m[ranked[pair + 1]]);
  return OrderingGrammar(std::move(m));
}

OrderingGrammar adjacent_swap_mutation(const OrderingGrammar& g, Rng& rng) {
  if (g.size() < 2) throw ArityError("adjacent swap needs at least two relations");
  std::uniform_int_distribution<std::size_t> pick(0, g.size() - 2);
  return adjacent_swap(g, pick(rng));
}

// ---------------------------------------------------------------------------

double attested_pair_agreement(const std::vector<IndexedTree>& trees, std::span<const double> weights) {
  std::size_t agree = 0, total = 0;
  std::vector<int> order, pos;
  for (const auto& tree : trees) {
    linearize_indexed(tree, weights, order);
    pos.assign(order.size(), 0);
    for (std::size_t k = 0; k < order.size(); ++k) pos[static_cast<std::size_t>(order[k])] = static_cast<int>(k);
    for (std::size_t h = 0; h < tree.children.size(); ++h) {
      const auto& kids = tree.children[h];
      if (kids.empty()) continue;
      std::vector<int> group(kids.begin(), kids.end());
      group.push_back(static_cast<int>(h));
      for (std::size_t i = 0; i < group.size(); ++i) {
        for (std::size_t j = i + 1; j < group.size(); ++j) {
          auto a = static_cast<std::size_t>(group[i]);
          auto b = static_cast<std::size_t>(group[j]);
          bool attested = a < b;
          bool predicted = pos[a] < pos[b];
          agree += attested == predicted ? 1 : 0;
          ++total;
        }
      }
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(agree) / static_cast<double>(total);
}

OrderingGrammar fit_grammar_to_corpus(const conllu::Corpus& corpus, Rng& rng, const ClimbLimits& limits) {
  if (corpus.empty()) throw EmptyCorpusError("cannot fit a grammar to an empty corpus");
  RelationIndex idx(corpus.relations());
  std::vector<IndexedTree> trees;
  trees.reserve(corpus.size());
  for (const auto& t : corpus.trees()) trees.push_back(index_tree(t, idx));
  auto start = random_weights(idx.size(), rng);
  auto result = hill_climb_weights(
      std::move(start), [&](const std::vector<double>& w) { return -attested_pair_agreement(trees, w); },
      rng, limits);
  return idx.sparse(result.weights);
}

// ---------------------------------------------------------------------------

std::array<CorrelateRule, 8> default_correlates() {
  return {{{"adposition", "case", Harmony::same_sign},
           {"copula", "cop", Harmony::same_sign},
           {"auxiliary", "aux", Harmony::same_sign},
           {"genitive", "nmod", Harmony::same_sign},
           {"relative clause", "acl", Harmony::same_sign},
           {"complementizer", "mark", Harmony::same_sign},
           {"oblique", "obl", Harmony::same_sign},
           {"want-complement", "xcomp", Harmony::same_sign}}};
}

std::array<CorrelateRule, 8> surface_ud_correlates() {
  auto rules = default_correlates();
  for (auto& r : rules) {
    if (r.relation == "case" || r.relation == "cop" || r.relation == "aux" || r.relation == "mark") {
      r.harmony = Harmony::opposite_sign;
    }
  }
  return rules;
}

std::array<std::optional<int>, 8> greenberg_profile(const OrderingGrammar& g,
                                                    const std::array<CorrelateRule, 8>& rules) {
  std::array<std::optional<int>, 8> out{};
  if (!g.covers("obj")) return out;
  bool obj_after = g.weight("obj") >= 0.0;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (!g.covers(rules[i].relation)) continue;
    bool rel_after = g.weight(rules[i].relation) >= 0.0;
    bool same = rel_after == obj_after;
    bool agrees = rules[i].harmony == Harmony::same_sign ? same : !same;
    out[i] = agrees ? 1 : 0;
  }
  return out;
}

}  // namespace coadapt::grammar
