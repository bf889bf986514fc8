#include <cmath>
#include <random>

#include "coadapt/bigram.hpp"
#include "coadapt/error.hpp"
#include "coadapt/metrics.hpp"
#include "coadapt/toy.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace coadapt;
using namespace coadapt::metrics;
using doctest::Approx;

namespace {

using Sents = std::vector<std::vector<std::string>>;

grammar::OrderingGrammar g3(double s, double o) {
  return grammar::OrderingGrammar({{"nsubj", s}, {"obj", o}, {"root", 0.5}});
}

conllu::DepTree clause(const std::string& id, bool subj, bool obj, bool sv, bool ov) {
  // Tokens laid out in the requested attested order around the verb.
  std::vector<std::pair<std::string, std::string>> before, after;
  if (subj) (sv ? before : after).push_back({"s", "nsubj"});
  if (obj) (ov ? before : after).push_back({"o", "obj"});
  std::vector<conllu::Token> toks;
  int verb = static_cast<int>(before.size()) + 1;
  int i = 1;
  for (auto& [f, r] : before) toks.push_back({i++, f, "NOUN", verb, r});
  toks.push_back({i++, "v", "VERB", 0, "root"});
  for (auto& [f, r] : after) toks.push_back({i++, f, "NOUN", verb, r});
  return conllu::DepTree(id, toks);
}

}  // namespace

TEST_CASE("dependency length of the transitive fixture") {
  auto tree = toy::transitive_fixture().trees()[0];
  CHECK(dependency_length(tree, grammar::linearize(tree, g3(-0.8, 0.3))) == 2);
  CHECK(dependency_length(tree, grammar::linearize(tree, g3(-0.8, -0.3))) == 3);
  conllu::DepTree one("x", {{1, "hi", "INTJ", 0, "root"}});
  CHECK(dependency_length(one, grammar::attested_order(one)) == 0);
}

TEST_CASE("dependency length matches the oracle and is reversal invariant") {
  toy::RandomTreeSpec spec;
  spec.sentences = 300;
  spec.max_tokens = 12;
  auto corpus = toy::random_tree_corpus(spec);
  for (const auto& t : corpus.trees()) {
    auto o = grammar::attested_order(t);
    long dl = dependency_length(t, o);
    REQUIRE(dl == oracle::dependency_length(t, oracle::identity_order(t)));
    std::vector<int> rev(o.order.rbegin(), o.order.rend());
    REQUIRE(dependency_length(t, grammar::from_order(rev)) == dl);
  }
}

TEST_CASE("bigram counts and vocabulary") {
  auto m = bigram::train_bigram_model({{"a", "b", "a", "b"}}, {}, true);
  CHECK(m.model.unigram_count(m.vocab.find("a")) == 2);
  CHECK(m.model.unigram_count(m.vocab.find("b")) == 2);
  CHECK(m.model.vocab_size() == 3);
  CHECK(m.model.train_token_count() == 5);
  auto with_c = bigram::train_bigram_model({{"a", "b", "a", "b"}}, {{"c"}}, true);
  CHECK(with_c.model.vocab_size() == 4);
  auto no_boundary = bigram::train_bigram_model({{"a", "b", "a", "b"}}, {}, false);
  CHECK(no_boundary.model.vocab_size() == 2);
}

TEST_CASE("Laplace unigram and discounted bigram by hand") {
  auto m = bigram::train_bigram_model({{"a", "b", "a", "b", "a"}}, {}, false);
  CHECK(m.prob_unigram("a") == Approx(4.0 / 7.0).epsilon(1e-15));
  CHECK(m.prob_unigram("b") == Approx(3.0 / 7.0).epsilon(1e-15));
  auto n = bigram::train_bigram_model({{"a", "b", "a", "b"}}, {}, false);
  // N(ab)=2, T(a)=2, K(a)=1, p(b)=3/6.
  CHECK(n.prob_bigram("a", "b") == Approx((1.0 + 0.5) / 2.0).epsilon(1e-15));
  // Unseen bigram with a seen context keeps only the continuation mass.
  CHECK(n.prob_bigram("a", "a") == Approx(1.0 * 0.5 / 2.0).epsilon(1e-15));
  // N(ba)=1 is fully discounted: p(a|b) = K(b)·p(a)/T(b) = p(a).
  CHECK(n.prob_bigram("b", "a") == Approx(0.5).epsilon(1e-15));
  // A context with no outgoing bigram backs off to the unigram.
  auto e = bigram::train_bigram_model({{"a", "c"}}, {}, false);
  CHECK(e.prob_bigram("c", "a") == e.prob_unigram("a"));
}

TEST_CASE("bigram probabilities agree with the string-count oracle") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    Sents train, held;
    auto sentence = [&] {
      std::vector<std::string> s(std::uniform_int_distribution<int>(1, 6)(rng));
      for (auto& w : s) w = std::string(1, static_cast<char>('a' + rng() % 6));
      return s;
    };
    for (int i = 0; i < 20; ++i) train.push_back(sentence());
    for (int i = 0; i < 5; ++i) held.push_back(sentence());
    auto m = bigram::train_bigram_model(train, held, true);
    oracle::StringBigram o(train, held, bigram::kBoundarySymbol);
    REQUIRE(m.model.vocab_size() == static_cast<long>(o.vocab.size()));
    for (const auto& v : o.vocab) {
      REQUIRE(m.prob_unigram(v) == Approx(o.p(v)).epsilon(1e-14));
      for (const auto& w : o.vocab) REQUIRE(m.prob_bigram(v, w) == Approx(o.p(v, w)).epsilon(1e-14));
    }
  }
}

TEST_CASE("distributions are normalized") {
  auto m = bigram::train_bigram_model({{"x", "y", "z", "x"}, {"y", "y"}}, {{"q", "x"}}, true);
  double su = 0;
  for (int v : m.model.vocabulary()) su += m.model.prob_unigram(v);
  CHECK(su == Approx(1.0).epsilon(1e-12));
  for (int v : m.model.vocabulary()) {
    double s = 0;
    for (int w : m.model.vocabulary()) s += m.model.prob_bigram(v, w);
    CHECK(s == Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("mutual information special cases") {
  CHECK(bigram::mutual_information_I1({{"a"}}, {{"a"}}, true) == 0.0);
  CHECK(bigram::mutual_information_I1({{"a"}}, {{"a"}}, false) == 0.0);
  Sents alt;
  for (int s = 0; s < 40; ++s) {
    std::vector<std::string> sent;
    for (int i = 0; i < 500; ++i) sent.push_back(i % 2 ? "b" : "a");
    alt.push_back(sent);
  }
  Sents train(alt.begin(), alt.begin() + 30), held(alt.begin() + 30, alt.end());
  auto m = bigram::train_bigram_model(train, held, true);
  auto ce = bigram::cross_entropies(m.model, m.heldout);
  CHECK(ce.conditional_bits < 0.05);
  CHECK(ce.mutual_information() == Approx(ce.unigram_bits).epsilon(0.05));
}

TEST_CASE("mutual information is invariant under relabeling word forms") {
  std::mt19937_64 rng(7);
  Sents train, held;
  for (int i = 0; i < 300; ++i) {
    std::vector<std::string> s(5);
    for (auto& w : s) w = "w" + std::to_string(rng() % 9);
    (i < 250 ? train : held).push_back(s);
  }
  auto relabel = [](Sents s) {
    for (auto& sent : s) {
      for (auto& w : sent) w = "Z" + std::string(w.rbegin(), w.rend());
    }
    return s;
  };
  CHECK(bigram::mutual_information_I1(train, held) ==
        Approx(bigram::mutual_information_I1(relabel(train), relabel(held))).epsilon(1e-12));
}

TEST_CASE("congruence extremes and the half case") {
  auto sov = toy::strict_corpus(toy::BasicOrder::sov, 10, 1, "sov");
  auto svo = toy::strict_corpus(toy::BasicOrder::svo, 10, 1, "svo");
  CHECK(congruence(sov, attested_orders()) == 1.0);
  CHECK(congruence(svo, attested_orders()) == 0.0);
  // pS = 1, pO = 0.5 over four sentences.
  conllu::Corpus half("half", {clause("1", true, true, true, true), clause("2", true, true, true, false),
                               clause("3", true, true, true, true), clause("4", true, true, true, false)});
  CHECK(congruence(half, attested_orders()) == 0.5);
  std::vector<std::vector<int>> orders;
  for (const auto& t : half.trees()) orders.push_back(oracle::identity_order(t));
  auto pc = oracle::brute_congruence(half, orders);
  CHECK(static_cast<double>(pc.same) / static_cast<double>(pc.total) == 0.5);
}

TEST_CASE("congruence is undefined without subjects or objects") {
  conllu::Corpus only_s("s", {clause("1", true, false, true, true)});
  CHECK_FALSE(congruence(only_s, attested_orders()).has_value());
}

TEST_CASE("coexpression rate") {
  conllu::Corpus all("a", {clause("1", true, true, true, false), clause("2", true, true, false, false)});
  CHECK(coexpression_rate(all) == 1.0);
  conllu::Corpus single("b", {clause("1", true, false, true, false), clause("2", false, true, false, false)});
  CHECK(coexpression_rate(single) == 0.0);
  conllu::Corpus mixed("c", {clause("1", true, true, true, false), clause("2", true, false, true, false),
                             clause("3", false, true, true, false)});
  CHECK(coexpression_rate(mixed) == Approx(1.0 / 3.0));
  conllu::Corpus none("d", {conllu::DepTree("x", {{1, "hi", "INTJ", 0, "root"}})});
  CHECK_FALSE(coexpression_rate(none).has_value());
}

TEST_CASE("SV order statistics") {
  CHECK(subject_order_table(10, 10, 10, 10).log_odds_ratio == Approx(0.0));
  CHECK(subject_order_table(30, 10, 10, 30).log_odds_ratio == Approx(std::log(9.0)));
  auto t = subject_order_table(12, 7, 0, 0);
  CHECK(t.corrected);
  CHECK(std::isfinite(t.log_odds_ratio));
  conllu::Corpus c("c", {clause("1", true, true, true, false), clause("2", true, false, true, false),
                         clause("3", true, true, false, false), clause("4", true, false, false, false)});
  auto s = sv_order_stats(c);
  CHECK(s.sv_with_object == 1);
  CHECK(s.sv_without_object == 1);
  CHECK(s.vs_with_object == 1);
  CHECK(s.vs_without_object == 1);
  conllu::Corpus no_subject("n", {clause("1", false, true, true, false)});
  CHECK_THROWS_AS(sv_order_stats(no_subject), DegenerateError);
}
