#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coadapt/conllu.hpp"

namespace coadapt::toy {

enum class BasicOrder { svo, sov };

/// One sentence: "dogs bite people" (nsubj, root, obj) in SVO order.
conllu::Corpus transitive_fixture();

/// Clauses of a verb with a subject and/or an object noun phrase. Nouns are
/// shared between the subject and object roles; every verb prefers a small
/// subset of them.
struct UsageSpec {
  std::string name = "toy";
  std::size_t sentences = 2000;
  double coexpression = 1.0;    // P(clause has both S and O)
  double subject_share = 0.5;   // P(S | single argument)
  int verbs = 8;
  int nouns = 16;
  int nouns_per_verb = 4;
  double det_rate = 1.0;        // P(noun has a determiner)
  double amod_rate = 0.0;       // P(noun has an adjective)
  BasicOrder order = BasicOrder::svo;
  std::uint64_t seed = 1;
};

conllu::Corpus usage_corpus(const UsageSpec& spec);

/// Strictly ordered transitive clauses (coexpression 1).
conllu::Corpus strict_corpus(BasicOrder order, std::size_t sentences, std::uint64_t seed,
                             const std::string& name);

/// Random trees in attested order: token k attaches to a uniformly chosen
/// earlier token of a random permutation; labels and UPOS drawn uniformly.
struct RandomTreeSpec {
  std::string name = "random";
  std::size_t sentences = 20;
  int min_tokens = 1;
  int max_tokens = 6;
  std::vector<std::string> relations{"nsubj", "obj", "det"};
  std::vector<std::string> upos{"VERB", "NOUN"};
  int vocabulary = 10;
  std::uint64_t seed = 1;
};

conllu::Corpus random_tree_corpus(const RandomTreeSpec& spec);

}  // namespace coadapt::toy
