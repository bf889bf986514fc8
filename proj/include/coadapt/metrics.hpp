#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "coadapt/conllu.hpp"
#include "coadapt/grammar.hpp"

namespace coadapt::metrics {

/// Sum over non-root arcs of |position(head) − position(dependent)|.
long dependency_length(const conllu::DepTree& tree, const grammar::LinearizedSentence& order);
long dependency_length(const grammar::IndexedTree& tree, const std::vector<int>& positions);

/// Supplies the surface order of the i-th tree of a corpus.
using OrderProvider = std::function<grammar::LinearizedSentence(std::size_t, const conllu::DepTree&)>;

OrderProvider attested_orders();
OrderProvider grammar_orders(const grammar::OrderingGrammar& g);

/// Mean dependency length per sentence.
double mean_dependency_length(const conllu::Corpus& corpus, const OrderProvider& orders);

/// Which dependents count as subject/object arguments of which heads.
struct ArgumentRoles {
  std::set<std::string> subject{"nsubj"};
  std::set<std::string> object{"obj"};
  std::set<std::string> verbal_upos{"VERB", "AUX"};
};

/// Subject and object instances split by side of their verbal head.
struct ArgumentSides {
  long subjects_before = 0;
  long subjects_after = 0;
  long objects_before = 0;
  long objects_after = 0;

  long subjects() const { return subjects_before + subjects_after; }
  long objects() const { return objects_before + objects_after; }
  ArgumentSides& operator+=(const ArgumentSides& o);
};

ArgumentSides argument_sides(const conllu::DepTree& tree, const grammar::LinearizedSentence& order,
                             const ArgumentRoles& roles = {});
ArgumentSides argument_sides(const conllu::Corpus& corpus, const OrderProvider& orders,
                             const ArgumentRoles& roles = {});

/// pS·pO + (1−pS)(1−pO), evaluated as (bS·bO + aS·aO)/(nS·nO) on the
/// instance counts. nullopt when there are no subjects or no objects.
std::optional<double> congruence(const ArgumentSides& sides);
std::optional<double> congruence(const conllu::Corpus& corpus, const OrderProvider& orders,
                                 const ArgumentRoles& roles = {});

/// Verbs realizing both a subject and an object, among verbs realizing at
/// least one of them.
struct Coexpression {
  long both = 0;
  long either = 0;
  std::optional<double> rate() const;
};

Coexpression coexpression_counts(const conllu::Corpus& corpus, const ArgumentRoles& roles = {});
std::optional<double> coexpression_rate(const conllu::Corpus& corpus, const ArgumentRoles& roles = {});

/// Subject position by object presence, over verbs with a subject.
/// Rows: SV, VS. Columns: object present, object absent.
struct SubjectOrderTable {
  long sv_with_object = 0;
  long sv_without_object = 0;
  long vs_with_object = 0;
  long vs_without_object = 0;
  bool corrected = false;   // 0.5 added to every cell
  double log_odds_ratio = 0.0;
};

/// Log odds ratio of SV order with vs. without an object; when a cell is 0
/// all cells get the Haldane–Anscombe +0.5 correction.
SubjectOrderTable subject_order_table(long sv_obj, long sv_noobj, long vs_obj, long vs_noobj);
SubjectOrderTable sv_order_stats(const conllu::Corpus& corpus, const ArgumentRoles& roles = {});

}  // namespace coadapt::metrics
