#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <set>
#include <string>
#include <vector>

namespace coadapt::conllu {

/// One syntactic word of a sentence. `head` is 0 for the root, otherwise the
/// 1-based index of the governing token. `deprel` holds the universal part of
/// the relation only ("nsubj:pass" is stored as "nsubj").
struct Token {
  int index = 0;
  std::string form;
  std::string upos;
  int head = 0;
  std::string deprel;

  friend bool operator==(const Token&, const Token&) = default;
};

/// A rooted dependency tree over tokens 1..n.
class DepTree {
 public:
  DepTree() = default;
  DepTree(std::string sentence_id, std::vector<Token> tokens);

  const std::string& sentence_id() const { return sentence_id_; }
  const std::vector<Token>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }

  /// Token with 1-based index `index`.
  const Token& token(int index) const { return tokens_[static_cast<std::size_t>(index - 1)]; }

  /// 1-based index of the root token.
  int root() const { return root_; }

  /// Children of every token, indexed by 1-based token index (slot 0 holds
  /// the children of the artificial root, i.e. the real root). Children are
  /// listed in surface order.
  const std::vector<std::vector<int>>& children() const { return children_; }

  /// Returns an empty string when the token list forms a valid tree, else a
  /// short reason (used by the parser to drop sentences).
  static std::string validate(const std::vector<Token>& tokens);

  friend bool operator==(const DepTree& a, const DepTree& b) {
    return a.sentence_id_ == b.sentence_id_ && a.tokens_ == b.tokens_;
  }

 private:
  std::string sentence_id_;
  std::vector<Token> tokens_;
  int root_ = 0;
  std::vector<std::vector<int>> children_;
};

/// Immutable collection of trees plus the set of relation labels they use.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::string name, std::vector<DepTree> trees);

  const std::string& name() const { return name_; }
  const std::vector<DepTree>& trees() const { return trees_; }
  const std::set<std::string>& relations() const { return relations_; }
  std::size_t size() const { return trees_.size(); }
  bool empty() const { return trees_.empty(); }
  std::size_t token_count() const;

  friend bool operator==(const Corpus&, const Corpus&) = default;

 private:
  std::string name_;
  std::vector<DepTree> trees_;
  std::set<std::string> relations_;
};

struct Diagnostic {
  std::string file;
  std::size_t line = 0;
  std::string code;
  std::string message;
};

/// `{"file":..,"line":..,"code":..,"message":..}` without trailing newline.
std::string to_json_line(const Diagnostic& d);

struct ParseOptions {
  /// Name recorded in diagnostics.
  std::string file_name = "<stream>";
  /// Drop tokens tagged PUNCT (only leaves; tokens with dependents stay).
  bool keep_punctuation = true;
  /// Drop sentences whose tree is not projective in the attested order.
  bool keep_nonprojective = true;
};

struct ParseResult {
  Corpus corpus;
  std::vector<Diagnostic> diagnostics;
  std::size_t dropped_sentences = 0;
};

/// Parses CoNLL-U. Multiword ranges and empty nodes are skipped, malformed
/// lines are skipped with a diagnostic and invalid sentences are dropped with
/// a diagnostic. Throws EmptyCorpusError when no sentence survives.
ParseResult parse_conllu(std::istream& in, const std::string& corpus_name,
                         const ParseOptions& options = {});
ParseResult parse_conllu_string(const std::string& text, const std::string& corpus_name,
                                const ParseOptions& options = {});
/// Reads and concatenates several files into one corpus.
ParseResult parse_conllu_files(const std::vector<std::string>& paths,
                               const std::string& corpus_name,
                               const ParseOptions& options = {});

/// Serializes kept sentences; LEMMA/XPOS/FEATS/DEPS/MISC are written as "_".
std::string write_conllu(const Corpus& corpus);

/// max(100, ceil(5% of total)), capped at total.
std::size_t heldout_size(std::size_t total);

struct Split {
  Corpus train;
  Corpus heldout;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> heldout_indices;
  std::vector<Diagnostic> diagnostics;
};

/// Uniform sample without replacement of heldout_size(n) sentences; both
/// parts keep corpus order. Deterministic for a fixed seed.
Split split_corpus(const Corpus& corpus, std::uint64_t seed);
std::vector<std::size_t> sample_heldout_indices(std::size_t total, std::uint64_t seed);

/// True when every subtree covers a contiguous span of the attested order.
bool is_projective(const DepTree& tree);

}  // namespace coadapt::conllu
