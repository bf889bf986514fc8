#include "coadapt/bigram.hpp"

#include <algorithm>
#include <cmath>

#include "coadapt/error.hpp"

namespace coadapt::bigram {

namespace {

std::uint64_t key(int prev, int w) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(prev)) << 32) |
         static_cast<std::uint32_t>(w);
}

}  // namespace

BigramModel::BigramModel(const Sentences& train, const Sentences& heldout, int id_limit, int boundary_id)
    : id_limit_(id_limit), boundary_(boundary_id) {
  if (train.empty()) throw EmptyCorpusError("bigram model needs training sentences");
  const auto n = static_cast<std::size_t>(id_limit);
  unigram_.assign(n, 0);
  context_total_.assign(n, 0);
  continuation_.assign(n, 0);
  std::vector<char> in_vocab(n, 0);

  std::vector<std::uint64_t> keys;
  for (const auto& sentence : train) {
    int prev = boundary_;
    for (int w : sentence) {
      ++unigram_[static_cast<std::size_t>(w)];
      in_vocab[static_cast<std::size_t>(w)] = 1;
      if (prev >= 0) keys.push_back(key(prev, w));
      prev = w;
    }
    if (boundary_ >= 0) {
      ++unigram_[static_cast<std::size_t>(boundary_)];
      if (prev >= 0) keys.push_back(key(prev, boundary_));
    }
  }
  for (const auto& sentence : heldout) {
    for (int w : sentence) in_vocab[static_cast<std::size_t>(w)] = 1;
  }
  if (boundary_ >= 0) in_vocab[static_cast<std::size_t>(boundary_)] = 1;

  for (std::size_t i = 0; i < n; ++i) {
    train_tokens_ += unigram_[i];
    if (in_vocab[i]) vocab_.push_back(static_cast<int>(i));
  }
  vocab_size_ = static_cast<long>(vocab_.size());

  std::sort(keys.begin(), keys.end());
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    bigram_keys_.push_back(keys[i]);
    bigram_counts_.push_back(static_cast<long>(j - i));
    auto prev = static_cast<std::size_t>(keys[i] >> 32);
    context_total_[prev] += static_cast<long>(j - i);
    ++continuation_[prev];
    i = j;
  }
}

long BigramModel::unigram_count(int w) const {
  if (w < 0 || w >= id_limit_) return 0;
  return unigram_[static_cast<std::size_t>(w)];
}

long BigramModel::context_total(int w) const {
  if (w < 0 || w >= id_limit_) return 0;
  return context_total_[static_cast<std::size_t>(w)];
}

long BigramModel::continuation_count(int w) const {
  if (w < 0 || w >= id_limit_) return 0;
  return continuation_[static_cast<std::size_t>(w)];
}

long BigramModel::bigram_count(int prev, int w) const {
  if (prev < 0 || w < 0 || prev >= id_limit_ || w >= id_limit_) return 0;
  auto k = key(prev, w);
  auto it = std::lower_bound(bigram_keys_.begin(), bigram_keys_.end(), k);
  if (it == bigram_keys_.end() || *it != k) return 0;
  return bigram_counts_[static_cast<std::size_t>(it - bigram_keys_.begin())];
}

double BigramModel::prob_unigram(int w) const {
  return (static_cast<double>(unigram_count(w)) + 1.0) /
         static_cast<double>(train_tokens_ + vocab_size_);
}

double BigramModel::prob_bigram(int prev, int w) const {
  long total = context_total(prev);
  double pw = prob_unigram(w);
  if (total == 0) return pw;
  long count = bigram_count(prev, w);
  double discounted = static_cast<double>(std::max<long>(count - 1, 0));
  return (discounted + static_cast<double>(continuation_count(prev)) * pw) / static_cast<double>(total);
}

CrossEntropies cross_entropies(const BigramModel& model, const BigramModel::Sentences& heldout) {
  CrossEntropies ce;
  double uni = 0.0, cond = 0.0;
  const int b = model.boundary_id();
  auto score = [&](int prev, int w) {
    double pu = model.prob_unigram(w);
    uni -= std::log2(pu);
    cond -= std::log2(prev >= 0 ? model.prob_bigram(prev, w) : pu);
    ++ce.tokens;
  };
  for (const auto& sentence : heldout) {
    int prev = b;
    for (int w : sentence) {
      score(prev, w);
      prev = w;
    }
    if (b >= 0) score(prev, b);
  }
  if (ce.tokens > 0) {
    ce.unigram_bits = uni / static_cast<double>(ce.tokens);
    ce.conditional_bits = cond / static_cast<double>(ce.tokens);
  }
  return ce;
}

double mutual_information(const BigramModel::Sentences& train, const BigramModel::Sentences& heldout,
                          int id_limit, int boundary_id) {
  if (heldout.empty()) throw EmptyCorpusError("mutual information needs held-out sentences");
  BigramModel model(train, heldout, id_limit, boundary_id);
  return cross_entropies(model, heldout).mutual_information();
}

// ---------------------------------------------------------------------------

int Vocabulary::intern(const std::string& word) {
  auto [it, inserted] = ids_.emplace(word, static_cast<int>(words_.size()));
  if (inserted) words_.push_back(word);
  return it->second;
}

int Vocabulary::find(const std::string& word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? -1 : it->second;
}

double StringModel::prob_unigram(const std::string& w) const {
  return model.prob_unigram(vocab.find(w));
}

double StringModel::prob_bigram(const std::string& prev, const std::string& w) const {
  int p = vocab.find(prev);
  if (p < 0) return model.prob_unigram(vocab.find(w));
  return model.prob_bigram(p, vocab.find(w));
}

namespace {

BigramModel::Sentences intern_all(Vocabulary& vocab, const std::vector<std::vector<std::string>>& sentences) {
  BigramModel::Sentences out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    std::vector<int> ids;
    ids.reserve(s.size());
    for (const auto& w : s) ids.push_back(vocab.intern(w));
    out.push_back(std::move(ids));
  }
  return out;
}

}  // namespace

StringModel train_bigram_model(const std::vector<std::vector<std::string>>& train,
                               const std::vector<std::vector<std::string>>& heldout, bool use_boundary) {
  Vocabulary vocab;
  int boundary = use_boundary ? vocab.intern(kBoundarySymbol) : BigramModel::kNoBoundary;
  auto train_ids = intern_all(vocab, train);
  auto heldout_ids = intern_all(vocab, heldout);
  BigramModel model(train_ids, heldout_ids, vocab.size(), boundary);
  return StringModel{std::move(vocab), std::move(train_ids), std::move(heldout_ids), std::move(model)};
}

double mutual_information_I1(const std::vector<std::vector<std::string>>& train,
                             const std::vector<std::vector<std::string>>& heldout, bool use_boundary) {
  auto m = train_bigram_model(train, heldout, use_boundary);
  if (m.heldout.empty()) throw EmptyCorpusError("mutual information needs held-out sentences");
  return cross_entropies(m.model, m.heldout).mutual_information();
}

}  // namespace coadapt::bigram
