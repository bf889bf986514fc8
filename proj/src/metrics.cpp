#include "coadapt/metrics.hpp"

#include <cmath>
#include <cstdlib>

#include "coadapt/error.hpp"

namespace coadapt::metrics {

long dependency_length(const conllu::DepTree& tree, const grammar::LinearizedSentence& order) {
  long total = 0;
  for (const auto& t : tree.tokens()) {
    if (t.head == 0) continue;
    total += std::labs(order.positions[static_cast<std::size_t>(t.index)] -
                       order.positions[static_cast<std::size_t>(t.head)]);
  }
  return total;
}

long dependency_length(const grammar::IndexedTree& tree, const std::vector<int>& positions) {
  long total = 0;
  for (std::size_t i = 0; i < tree.head.size(); ++i) {
    int h = tree.head[i];
    if (h < 0) continue;
    total += std::labs(positions[i] - positions[static_cast<std::size_t>(h)]);
  }
  return total;
}

OrderProvider attested_orders() {
  return [](std::size_t, const conllu::DepTree& tree) { return grammar::attested_order(tree); };
}

OrderProvider grammar_orders(const grammar::OrderingGrammar& g) {
  return [g](std::size_t, const conllu::DepTree& tree) { return grammar::linearize(tree, g); };
}

double mean_dependency_length(const conllu::Corpus& corpus, const OrderProvider& orders) {
  if (corpus.empty()) throw EmptyCorpusError("mean dependency length of an empty corpus");
  double sum = 0.0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& tree = corpus.trees()[i];
    sum += static_cast<double>(dependency_length(tree, orders(i, tree)));
  }
  return sum / static_cast<double>(corpus.size());
}

ArgumentSides& ArgumentSides::operator+=(const ArgumentSides& o) {
  subjects_before += o.subjects_before;
  subjects_after += o.subjects_after;
  objects_before += o.objects_before;
  objects_after += o.objects_after;
  return *this;
}

ArgumentSides argument_sides(const conllu::DepTree& tree, const grammar::LinearizedSentence& order,
                             const ArgumentRoles& roles) {
  ArgumentSides s;
  for (const auto& t : tree.tokens()) {
    if (t.head == 0) continue;
    if (!roles.verbal_upos.count(tree.token(t.head).upos)) continue;
    bool before = order.positions[static_cast<std::size_t>(t.index)] <
                  order.positions[static_cast<std::size_t>(t.head)];
    if (roles.subject.count(t.deprel)) {
      (before ? s.subjects_before : s.subjects_after) += 1;
    } else if (roles.object.count(t.deprel)) {
      (before ? s.objects_before : s.objects_after) += 1;
    }
  }
  return s;
}

ArgumentSides argument_sides(const conllu::Corpus& corpus, const OrderProvider& orders,
                             const ArgumentRoles& roles) {
  ArgumentSides s;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& tree = corpus.trees()[i];
    s += argument_sides(tree, orders(i, tree), roles);
  }
  return s;
}

std::optional<double> congruence(const ArgumentSides& s) {
  if (s.subjects() == 0 || s.objects() == 0) return std::nullopt;
  double same = static_cast<double>(s.subjects_before) * static_cast<double>(s.objects_before) +
                static_cast<double>(s.subjects_after) * static_cast<double>(s.objects_after);
  return same / (static_cast<double>(s.subjects()) * static_cast<double>(s.objects()));
}

std::optional<double> congruence(const conllu::Corpus& corpus, const OrderProvider& orders,
                                 const ArgumentRoles& roles) {
  return congruence(argument_sides(corpus, orders, roles));
}

std::optional<double> Coexpression::rate() const {
  if (either == 0) return std::nullopt;
  return static_cast<double>(both) / static_cast<double>(either);
}

Coexpression coexpression_counts(const conllu::Corpus& corpus, const ArgumentRoles& roles) {
  Coexpression c;
  for (const auto& tree : corpus.trees()) {
    for (const auto& verb : tree.tokens()) {
      if (!roles.verbal_upos.count(verb.upos)) continue;
      bool subj = false, obj = false;
      for (int child : tree.children()[static_cast<std::size_t>(verb.index)]) {
        const auto& rel = tree.token(child).deprel;
        subj = subj || roles.subject.count(rel) > 0;
        obj = obj || roles.object.count(rel) > 0;
      }
      if (subj || obj) ++c.either;
      if (subj && obj) ++c.both;
    }
  }
  return c;
}

std::optional<double> coexpression_rate(const conllu::Corpus& corpus, const ArgumentRoles& roles) {
  return coexpression_counts(corpus, roles).rate();
}

SubjectOrderTable subject_order_table(long sv_obj, long sv_noobj, long vs_obj, long vs_noobj) {
  SubjectOrderTable t{sv_obj, sv_noobj, vs_obj, vs_noobj, false, 0.0};
  double a = static_cast<double>(sv_obj), b = static_cast<double>(sv_noobj);
  double c = static_cast<double>(vs_obj), d = static_cast<double>(vs_noobj);
  if (sv_obj == 0 || sv_noobj == 0 || vs_obj == 0 || vs_noobj == 0) {
    t.corrected = true;
    a += 0.5;
    b += 0.5;
    c += 0.5;
    d += 0.5;
  }
  // odds(SV | object) / odds(SV | no object)
  t.log_odds_ratio = std::log((a * d) / (b * c));
  return t;
}

SubjectOrderTable sv_order_stats(const conllu::Corpus& corpus, const ArgumentRoles& roles) {
  long sv_obj = 0, sv_noobj = 0, vs_obj = 0, vs_noobj = 0;
  for (const auto& tree : corpus.trees()) {
    for (const auto& verb : tree.tokens()) {
      if (!roles.verbal_upos.count(verb.upos)) continue;
      int subject = 0;
      bool obj = false;
      for (int child : tree.children()[static_cast<std::size_t>(verb.index)]) {
        const auto& rel = tree.token(child).deprel;
        if (roles.subject.count(rel) && subject == 0) subject = child;
        obj = obj || roles.object.count(rel) > 0;
      }
      if (subject == 0) continue;
      bool sv = subject < verb.index;
      if (sv) {
        (obj ? sv_obj : sv_noobj) += 1;
      } else {
        (obj ? vs_obj : vs_noobj) += 1;
      }
    }
  }
  if (sv_obj + sv_noobj + vs_obj + vs_noobj == 0) {
    throw DegenerateError("corpus " + corpus.name() + " has no verb with a subject");
  }
  return subject_order_table(sv_obj, sv_noobj, vs_obj, vs_noobj);
}

}  // namespace coadapt::metrics
