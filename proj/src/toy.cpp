#include "coadapt/toy.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "coadapt/error.hpp"

namespace coadapt::toy {

using conllu::Token;

conllu::Corpus transitive_fixture() {
  std::vector<Token> tokens{{1, "dogs", "NOUN", 2, "nsubj"}, {2, "bite", "VERB", 0, "root"},
                            {3, "people", "NOUN", 2, "obj"}};
  return conllu::Corpus("transitive", {conllu::DepTree("s1", std::move(tokens))});
}

conllu::Corpus usage_corpus(const UsageSpec& spec) {
  if (spec.sentences == 0 || spec.verbs < 1 || spec.nouns < 1 || spec.nouns_per_verb < 1) {
    throw ConfigError("usage corpus needs sentences, verbs and nouns");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> pick_verb(0, spec.verbs - 1);
  std::uniform_int_distribution<int> pick_pref(0, spec.nouns_per_verb - 1);
  std::uniform_int_distribution<int> pick_adj(0, 2);
  auto noun_for = [&](int verb, int role) {
    int k = pick_pref(rng);
    return "n" + std::to_string((verb * 3 + role * 5 + k * 7) % spec.nouns);
  };
  std::vector<conllu::DepTree> trees;
  trees.reserve(spec.sentences);
  for (std::size_t s = 0; s < spec.sentences; ++s) {
    const int verb = pick_verb(rng);
    bool subj = true, obj = true;
    if (u01(rng) >= spec.coexpression) {
      subj = u01(rng) < spec.subject_share;
      obj = !subj;
    }
    // Surface layout: each NP is [det] [amod] noun.
    struct NP {
      bool det = false, amod = false;
      std::string adj, noun, rel;
    };
    auto make_np = [&](const std::string& rel, int role) {
      NP np;
      np.rel = rel;
      np.det = u01(rng) < spec.det_rate;
      np.amod = u01(rng) < spec.amod_rate;
      np.adj = "adj" + std::to_string(pick_adj(rng));
      np.noun = noun_for(verb, role);
      return np;
    };
    std::vector<NP> before, after;
    if (subj) before.push_back(make_np("nsubj", 0));
    if (obj) (spec.order == BasicOrder::svo ? after : before).push_back(make_np("obj", 1));

    std::vector<Token> tokens;
    auto emit_np = [&](const NP& np, std::vector<int>& pending) {
      const int first = static_cast<int>(tokens.size()) + 1;
      int noun_index = first + (np.det ? 1 : 0) + (np.amod ? 1 : 0);
      if (np.det) tokens.push_back({static_cast<int>(tokens.size()) + 1, "the", "DET", noun_index, "det"});
      if (np.amod) tokens.push_back({static_cast<int>(tokens.size()) + 1, np.adj, "ADJ", noun_index, "amod"});
      tokens.push_back({noun_index, np.noun, "NOUN", 0, np.rel});
      pending.push_back(noun_index - 1);
    };
    std::vector<int> heads_to_verb;
    for (const auto& np : before) emit_np(np, heads_to_verb);
    const int verb_index = static_cast<int>(tokens.size()) + 1;
    tokens.push_back({verb_index, "v" + std::to_string(verb), "VERB", 0, "root"});
    for (const auto& np : after) emit_np(np, heads_to_verb);
    for (int slot : heads_to_verb) tokens[static_cast<std::size_t>(slot)].head = verb_index;
    trees.emplace_back("s" + std::to_string(s + 1), std::move(tokens));
  }
  return conllu::Corpus(spec.name, std::move(trees));
}

conllu::Corpus strict_corpus(BasicOrder order, std::size_t sentences, std::uint64_t seed, const std::string& name) {
  UsageSpec spec;
  spec.name = name;
  spec.sentences = sentences;
  spec.coexpression = 1.0;
  spec.order = order;
  spec.seed = seed;
  return usage_corpus(spec);
}

conllu::Corpus random_tree_corpus(const RandomTreeSpec& spec) {
  if (spec.relations.empty() || spec.upos.empty() || spec.min_tokens < 1 || spec.max_tokens < spec.min_tokens) {
    throw ConfigError("random tree corpus needs relations, tags and a valid length range");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> len(spec.min_tokens, spec.max_tokens);
  std::uniform_int_distribution<std::size_t> rel(0, spec.relations.size() - 1);
  std::uniform_int_distribution<std::size_t> tag(0, spec.upos.size() - 1);
  std::uniform_int_distribution<int> word(0, std::max(spec.vocabulary, 1) - 1);
  std::vector<conllu::DepTree> trees;
  for (std::size_t s = 0; s < spec.sentences; ++s) {
    const int n = len(rng);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 1);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Token> tokens(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const int idx = perm[static_cast<std::size_t>(k)];
      Token& t = tokens[static_cast<std::size_t>(idx - 1)];
      t.index = idx;
      t.form = "w" + std::to_string(word(rng));
      t.upos = spec.upos[tag(rng)];
      if (k == 0) {
        t.head = 0;
        t.deprel = "root";
      } else {
        std::uniform_int_distribution<int> parent(0, k - 1);
        t.head = perm[static_cast<std::size_t>(parent(rng))];
        t.deprel = spec.relations[rel(rng)];
      }
    }
    trees.emplace_back("r" + std::to_string(s + 1), std::move(tokens));
  }
  return conllu::Corpus(spec.name, std::move(trees));
}

}  // namespace coadapt::toy
