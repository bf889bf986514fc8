#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace coadapt::bigram {

/// Bigram model with Laplace-smoothed unigrams and interpolated
/// absolute-discount (Kneser-Ney style, discount 1) conditionals:
///
///   p(w)        = (N(w) + 1) / (|Train| + |V|)
///   p(w | v)    = (max(N(v w) - 1, 0) + K(v) p(w)) / T(v)   if T(v) > 0
///   p(w | v)    = p(w)                                      if T(v) = 0
///
/// T(v) is the number of training bigrams starting with v and K(v) the
/// number of distinct successors of v. |V| counts the types of train and
/// held-out data. Both distributions sum to one over V.
///
/// Tokens are dense ids in [0, id_limit). When a boundary id is given, every
/// sentence is terminated by it and the first token of every sentence is
/// conditioned on it; without a boundary, sentences are independent and
/// sentence-initial tokens are predicted by the unigram distribution.
class BigramModel {
 public:
  using Sentences = std::vector<std::vector<int>>;

  static constexpr int kNoBoundary = -1;

  BigramModel(const Sentences& train, const Sentences& heldout, int id_limit,
              int boundary_id = kNoBoundary);

  double prob_unigram(int w) const;
  double prob_bigram(int prev, int w) const;

  long unigram_count(int w) const;
  long bigram_count(int prev, int w) const;
  long context_total(int w) const;
  long continuation_count(int w) const;
  long vocab_size() const { return vocab_size_; }
  long train_token_count() const { return train_tokens_; }
  int boundary_id() const { return boundary_; }

  /// Ids that count towards |V|.
  const std::vector<int>& vocabulary() const { return vocab_; }

 private:
  int id_limit_;
  int boundary_;
  long vocab_size_ = 0;
  long train_tokens_ = 0;
  std::vector<int> vocab_;
  std::vector<long> unigram_;
  std::vector<long> context_total_;
  std::vector<long> continuation_;
  std::vector<std::uint64_t> bigram_keys_;  // sorted, unique
  std::vector<long> bigram_counts_;
};

struct CrossEntropies {
  double unigram_bits = 0.0;      // Ĥ[X]
  double conditional_bits = 0.0;  // Ĥ[X | X_prev]
  std::size_t tokens = 0;
  double mutual_information() const { return unigram_bits - conditional_bits; }
};

/// Per-token cross-entropies of the held-out sentences under `model`.
CrossEntropies cross_entropies(const BigramModel& model, const BigramModel::Sentences& heldout);

/// I1 = Ĥ[X] − Ĥ[X|X_prev] in bits, model trained on `train`.
double mutual_information(const BigramModel::Sentences& train, const BigramModel::Sentences& heldout,
                          int id_limit, int boundary_id = BigramModel::kNoBoundary);

/// String front end: interns the words of both parts (plus a reserved
/// boundary symbol when `use_boundary`) and builds the model.
class Vocabulary {
 public:
  int intern(const std::string& word);
  int find(const std::string& word) const;  // -1 when unknown
  int size() const { return static_cast<int>(words_.size()); }
  const std::string& word(int id) const { return words_[static_cast<std::size_t>(id)]; }

 private:
  std::map<std::string, int> ids_;
  std::vector<std::string> words_;
};

/// Contains a tab, so it cannot clash with a CoNLL-U word form.
inline constexpr const char* kBoundarySymbol = "\t</s>";

struct StringModel {
  Vocabulary vocab;
  BigramModel::Sentences train;
  BigramModel::Sentences heldout;
  BigramModel model;

  double prob_unigram(const std::string& w) const;
  double prob_bigram(const std::string& prev, const std::string& w) const;
};

StringModel train_bigram_model(const std::vector<std::vector<std::string>>& train,
                               const std::vector<std::vector<std::string>>& heldout,
                               bool use_boundary = true);

double mutual_information_I1(const std::vector<std::vector<std::string>>& train,
                             const std::vector<std::vector<std::string>>& heldout,
                             bool use_boundary = true);

}  // namespace coadapt::bigram
