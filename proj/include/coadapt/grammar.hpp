#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "coadapt/conllu.hpp"

namespace coadapt::grammar {

using Rng = std::mt19937_64;

/// Relation label -> weight in [-1, 1]. Dependents of a head are placed in
/// ascending weight order; negative weights go left of the head, the rest go
/// right of it. Weights are pairwise distinct.
class OrderingGrammar {
 public:
  OrderingGrammar() = default;
  /// Throws ConfigError on weights outside [-1, 1] or on duplicate weights.
  explicit OrderingGrammar(std::map<std::string, double> weights);

  const std::map<std::string, double>& weights() const { return weights_; }
  std::size_t size() const { return weights_.size(); }
  bool covers(const std::string& relation) const { return weights_.count(relation) > 0; }
  /// Throws ConfigError naming the relation when it has no weight.
  double weight(const std::string& relation) const;

  /// Relations sorted by ascending weight.
  std::vector<std::string> rank_order() const;

  friend bool operator==(const OrderingGrammar&, const OrderingGrammar&) = default;

 private:
  std::map<std::string, double> weights_;
};

/// `{"relation": weight, ...}` with lexicographic keys.
std::string to_json(const OrderingGrammar& g);
OrderingGrammar grammar_from_json(const std::string& text);

/// Surface order of a sentence. `order[k]` is the 1-based token index at
/// surface position k; `positions[i]` is the 0-based surface position of
/// token i (slot 0 unused).
struct LinearizedSentence {
  std::vector<int> order;
  std::vector<int> positions;
};

LinearizedSentence linearize(const conllu::DepTree& tree, const OrderingGrammar& grammar);
/// The order in which the treebank lists the tokens.
LinearizedSentence attested_order(const conllu::DepTree& tree);
LinearizedSentence from_order(std::vector<int> order);
/// Rebuilds the tree with tokens renumbered in the given surface order.
conllu::DepTree apply_order(const conllu::DepTree& tree, const LinearizedSentence& order);

// ---------------------------------------------------------------------------
// Integer-indexed representation used in inner loops.

class RelationIndex {
 public:
  RelationIndex() = default;
  explicit RelationIndex(const std::set<std::string>& relations);

  int id(const std::string& relation) const;  // -1 when absent
  const std::string& name(int id) const { return names_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  /// Dense weight vector; throws ConfigError when the grammar misses a relation.
  std::vector<double> dense(const OrderingGrammar& g) const;
  OrderingGrammar sparse(std::span<const double> weights) const;

 private:
  std::vector<std::string> names_;
  std::map<std::string, int> ids_;
};

/// Tree with relation labels replaced by ids; children in surface order.
struct IndexedTree {
  int root = 0;                           // 0-based token slot
  std::vector<int> head;                  // 0-based, -1 for the root
  std::vector<int> relation;              // relation id per token
  std::vector<std::vector<int>> children; // 0-based
};

IndexedTree index_tree(const conllu::DepTree& tree, const RelationIndex& relations);

/// Writes the 0-based token slots in surface order into `order` (resized).
void linearize_indexed(const IndexedTree& tree, std::span<const double> weights,
                       std::vector<int>& order);

/// Compact signature of the ordering behaviour of a weight vector: the rank
/// order of relations plus the number of negative weights. Two weight vectors
/// with equal signatures linearize every tree identically.
std::vector<int> behaviour_signature(std::span<const double> weights);

// ---------------------------------------------------------------------------
// Random grammars and mutation moves.

/// Independent uniform weights on [-1, 1], redrawn on exact collision.
OrderingGrammar random_grammar(const std::set<std::string>& relations, Rng& rng);
std::vector<double> random_weights(std::size_t n, Rng& rng);

/// One uniformly chosen relation receives a fresh uniform weight.
OrderingGrammar reposition_mutation(const OrderingGrammar& g, Rng& rng);
OrderingGrammar reposition(const OrderingGrammar& g, const std::string& relation, double new_weight);
void reposition_in_place(std::vector<double>& weights, Rng& rng);

/// Swaps the weights of a uniformly chosen pair of rank-adjacent relations.
/// Throws ArityError with fewer than two relations.
OrderingGrammar adjacent_swap_mutation(const OrderingGrammar& g, Rng& rng);
/// Swaps the relations at rank positions `pair` and `pair + 1`.
OrderingGrammar adjacent_swap(const OrderingGrammar& g, std::size_t pair);

// ---------------------------------------------------------------------------
// Hill climbing shared by grammar fitting and efficiency optimization.

struct ClimbLimits {
  int max_iterations = 10000;
  int stable_iterations = 2000;
};

struct ClimbResult {
  std::vector<double> weights;
  std::vector<double> trace;  // objective at start, then after every accepted move
  int iterations = 0;
};

/// Minimizes `objective(weights)`. Each iteration repositions one weight and
/// keeps the change only on strict improvement. Stops after
/// `stable_iterations` consecutive rejections or `max_iterations` in total.
/// Proposals with an unchanged behaviour signature are rejected without
/// evaluating the objective, since they cannot change it.
template <typename Objective>
ClimbResult hill_climb_weights(std::vector<double> start, Objective&& objective, Rng& rng,
                               const ClimbLimits& limits) {
  ClimbResult result;
  result.weights = std::move(start);
  double current = objective(result.weights);
  result.trace.push_back(current);
  auto signature = behaviour_signature(result.weights);
  int stable = 0;
  std::vector<double> candidate;
  while (result.iterations < limits.max_iterations && stable < limits.stable_iterations) {
    ++result.iterations;
    candidate = result.weights;
    reposition_in_place(candidate, rng);
    auto cand_sig = behaviour_signature(candidate);
    if (cand_sig == signature) {
      ++stable;
      continue;
    }
    double value = objective(candidate);
    if (value < current) {
      current = value;
      result.weights.swap(candidate);
      signature = std::move(cand_sig);
      result.trace.push_back(current);
      stable = 0;
    } else {
      ++stable;
    }
  }
  return result;
}

/// Fraction of pairs within {head} ∪ dependents (over all heads of the
/// corpus) whose relative order under `weights` matches the attested order.
/// Returns 1 when the corpus has no such pairs.
double attested_pair_agreement(const std::vector<IndexedTree>& trees, std::span<const double> weights);

/// Hill-climbs the attested pair agreement from a random start.
OrderingGrammar fit_grammar_to_corpus(const conllu::Corpus& corpus, Rng& rng,
                                      const ClimbLimits& limits = {});

// ---------------------------------------------------------------------------
// Greenberg correlation profile.

enum class Harmony { same_sign, opposite_sign };

struct CorrelateRule {
  std::string label;     // e.g. "adposition"
  std::string relation;  // UD relation carrying the correlate
  Harmony harmony = Harmony::same_sign;
};

/// Eight correlates in the order adposition, copula, auxiliary, genitive,
/// relative clause, complementizer, oblique, want-complement. The default
/// table reads every weight as head-direction of the correlate pair, so a
/// consistently head-initial grammar agrees on all eight.
std::array<CorrelateRule, 8> default_correlates();
/// Same relations, but with the direction flipped for function-word
/// relations (case, cop, aux, mark), which UD attaches to the content word.
std::array<CorrelateRule, 8> surface_ud_correlates();

/// Per correlate: 1 when it patterns with obj in the correlating direction,
/// 0 when it does not, nullopt when the grammar lacks the relation or obj.
std::array<std::optional<int>, 8> greenberg_profile(
    const OrderingGrammar& g, const std::array<CorrelateRule, 8>& rules = default_correlates());

}  // namespace coadapt::grammar
