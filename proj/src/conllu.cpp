#include "coadapt/conllu.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "coadapt/error.hpp"
#include "json.hpp"

namespace coadapt::conllu {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

bool parse_int(std::string_view s, int& value) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string universal_part(std::string_view deprel) {
  auto colon = deprel.find(':');
  return std::string(deprel.substr(0, colon));
}

// Removes PUNCT leaves and renumbers the remaining tokens.
std::vector<Token> drop_punctuation(const std::vector<Token>& tokens) {
  std::vector<int> child_count(tokens.size() + 1, 0);
  for (const auto& t : tokens) {
    if (t.head >= 1 && t.head <= static_cast<int>(tokens.size())) ++child_count[t.head];
  }
  std::vector<int> new_index(tokens.size() + 1, 0);
  int next = 1;
  for (const auto& t : tokens) {
    bool drop = t.upos == "PUNCT" && child_count[t.index] == 0 && t.head != 0;
    new_index[t.index] = drop ? 0 : next++;
  }
  std::vector<Token> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (new_index[t.index] == 0) continue;
    Token copy = t;
    copy.index = new_index[t.index];
    copy.head = t.head == 0 ? 0 : new_index[t.head];
    out.push_back(std::move(copy));
  }
  return out;
}

class SentenceBuilder {
 public:
  SentenceBuilder(const std::string& corpus_name, const ParseOptions& options,
                  ParseResult& result)
      : corpus_name_(corpus_name), options_(options), result_(result) {}

  void comment(std::string_view line) {
    // "# sent_id = X"
    auto body = line.substr(1);
    auto eq = body.find('=');
    if (eq == std::string_view::npos) return;
    auto key = body.substr(0, eq);
    auto trim = [](std::string_view s) {
      auto b = s.find_first_not_of(" \t");
      if (b == std::string_view::npos) return std::string_view{};
      auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    if (trim(key) == "sent_id") sent_id_ = std::string(trim(body.substr(eq + 1)));
  }

  void token_line(std::string_view line, std::size_t line_no) {
    if (tokens_.empty() && first_line_ == 0) first_line_ = line_no;
    auto cols = split_tabs(line);
    if (cols.size() != 10) {
      diag(line_no, "malformed-columns",
           "expected 10 tab-separated columns, found " + std::to_string(cols.size()));
      return;
    }
    auto id = cols[0];
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) {
      return;  // multiword range or empty node
    }
    Token t;
    if (!parse_int(id, t.index)) {
      diag(line_no, "bad-id", "token id is not an integer: " + std::string(id));
      return;
    }
    if (!parse_int(cols[6], t.head)) {
      diag(line_no, "bad-head", "head is not an integer: " + std::string(cols[6]));
      return;
    }
    t.form = std::string(cols[1]);
    t.upos = std::string(cols[3]);
    t.deprel = universal_part(cols[7]);
    tokens_.push_back(std::move(t));
  }

  void finish(std::size_t line_no) {
    if (tokens_.empty() && first_line_ == 0) {
      sent_id_.clear();
      return;
    }
    ++sentence_count_;
    std::string id = sent_id_.empty() ? corpus_name_ + "-" + std::to_string(sentence_count_)
                                      : sent_id_;
    std::size_t at = first_line_ == 0 ? line_no : first_line_;
    std::string reason = tokens_.empty() ? "sentence has no tokens" : DepTree::validate(tokens_);
    if (reason.empty() && !options_.keep_punctuation) {
      tokens_ = drop_punctuation(tokens_);
    }
    if (reason.empty()) {
      DepTree tree(id, std::move(tokens_));
      if (!options_.keep_nonprojective && !is_projective(tree)) {
        diag(at, "nonprojective", "sentence " + id + " dropped: not projective");
        ++result_.dropped_sentences;
      } else {
        trees_.push_back(std::move(tree));
      }
    } else {
      diag(at, "invalid-tree", "sentence " + id + " dropped: " + reason);
      ++result_.dropped_sentences;
    }
    tokens_.clear();
    sent_id_.clear();
    first_line_ = 0;
  }

  std::vector<DepTree> take_trees() { return std::move(trees_); }

 private:
  void diag(std::size_t line_no, std::string code, std::string message) {
    result_.diagnostics.push_back({options_.file_name, line_no, std::move(code), std::move(message)});
  }

  const std::string& corpus_name_;
  const ParseOptions& options_;
  ParseResult& result_;
  std::vector<Token> tokens_;
  std::vector<DepTree> trees_;
  std::string sent_id_;
  std::size_t first_line_ = 0;
  std::size_t sentence_count_ = 0;
};

void parse_into(std::istream& in, SentenceBuilder& builder) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.find_first_not_of(" \t") == std::string::npos) {
      builder.finish(line_no);
    } else if (line[0] == '#') {
      builder.comment(line);
    } else {
      builder.token_line(line, line_no);
    }
  }
  builder.finish(line_no + 1);
}

}  // namespace

DepTree::DepTree(std::string sentence_id, std::vector<Token> tokens)
    : sentence_id_(std::move(sentence_id)), tokens_(std::move(tokens)) {
  auto reason = validate(tokens_);
  if (!reason.empty()) throw ParseError("invalid dependency tree " + sentence_id_ + ": " + reason);
  children_.assign(tokens_.size() + 1, {});
  for (const auto& t : tokens_) {
    children_[static_cast<std::size_t>(t.head)].push_back(t.index);
    if (t.head == 0) root_ = t.index;
  }
}

std::string DepTree::validate(const std::vector<Token>& tokens) {
  const int n = static_cast<int>(tokens.size());
  if (n == 0) return "empty sentence";
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const auto& t = tokens[static_cast<std::size_t>(i)];
    if (t.index != i + 1) return "token indices are not contiguous 1..n";
    if (t.head < 0 || t.head > n) return "head " + std::to_string(t.head) + " out of range";
    if (t.head == t.index) return "token " + std::to_string(t.index) + " heads itself";
    if (t.deprel.empty()) return "empty relation label";
    if (t.head == 0) ++roots;
  }
  if (roots != 1) return "expected exactly one root, found " + std::to_string(roots);
  // Every token must reach the root without revisiting a node.
  std::vector<int> state(static_cast<std::size_t>(n) + 1, 0);  // 0 new, 1 on path, 2 done
  for (int start = 1; start <= n; ++start) {
    std::vector<int> path;
    int cur = start;
    while (cur != 0 && state[static_cast<std::size_t>(cur)] == 0) {
      state[static_cast<std::size_t>(cur)] = 1;
      path.push_back(cur);
      cur = tokens[static_cast<std::size_t>(cur - 1)].head;
    }
    if (cur != 0 && state[static_cast<std::size_t>(cur)] == 1) return "head cycle";
    for (int p : path) state[static_cast<std::size_t>(p)] = 2;
  }
  return {};
}

Corpus::Corpus(std::string name, std::vector<DepTree> trees)
    : name_(std::move(name)), trees_(std::move(trees)) {
  for (const auto& tree : trees_) {
    for (const auto& t : tree.tokens()) relations_.insert(t.deprel);
  }
}

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const auto& t : trees_) n += t.size();
  return n;
}

std::string to_json_line(const Diagnostic& d) {
  nlohmann::ordered_json j;
  j["file"] = d.file;
  j["line"] = d.line;
  j["code"] = d.code;
  j["message"] = d.message;
  return j.dump();
}

ParseResult parse_conllu(std::istream& in, const std::string& corpus_name,
                         const ParseOptions& options) {
  ParseResult result;
  SentenceBuilder builder(corpus_name, options, result);
  parse_into(in, builder);
  auto trees = builder.take_trees();
  if (trees.empty()) throw EmptyCorpusError("corpus " + corpus_name + " has no valid sentences");
  result.corpus = Corpus(corpus_name, std::move(trees));
  return result;
}

ParseResult parse_conllu_string(const std::string& text, const std::string& corpus_name,
                                const ParseOptions& options) {
  std::istringstream in(text);
  return parse_conllu(in, corpus_name, options);
}

ParseResult parse_conllu_files(const std::vector<std::string>& paths,
                               const std::string& corpus_name, const ParseOptions& options) {
  ParseResult result;
  std::vector<DepTree> all;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open CoNLL-U file " + path);
    ParseOptions per_file = options;
    per_file.file_name = path;
    SentenceBuilder builder(corpus_name, per_file, result);
    parse_into(in, builder);
    auto trees = builder.take_trees();
    std::move(trees.begin(), trees.end(), std::back_inserter(all));
  }
  if (all.empty()) throw EmptyCorpusError("corpus " + corpus_name + " has no valid sentences");
  result.corpus = Corpus(corpus_name, std::move(all));
  return result;
}

std::string write_conllu(const Corpus& corpus) {
  std::ostringstream out;
  for (const auto& tree : corpus.trees()) {
    out << "# sent_id = " << tree.sentence_id() << '\n';
    for (const auto& t : tree.tokens()) {
      out << t.index << '\t' << t.form << "\t_\t" << t.upos << "\t_\t_\t" << t.head << '\t'
          << t.deprel << "\t_\t_\n";
    }
    out << '\n';
  }
  return out.str();
}

std::size_t heldout_size(std::size_t total) {
  std::size_t five_percent = (total * 5 + 99) / 100;  // ceil(0.05 * total)
  return std::min(total, std::max<std::size_t>(100, five_percent));
}

std::vector<std::size_t> sample_heldout_indices(std::size_t total, std::uint64_t seed) {
  std::size_t k = heldout_size(total);
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, total - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Split split_corpus(const Corpus& corpus, std::uint64_t seed) {
  if (corpus.empty()) throw EmptyCorpusError("cannot split an empty corpus");
  Split split;
  split.heldout_indices = sample_heldout_indices(corpus.size(), seed);
  std::vector<bool> held(corpus.size(), false);
  for (auto i : split.heldout_indices) held[i] = true;
  std::vector<DepTree> train, heldout;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (held[i]) {
      heldout.push_back(corpus.trees()[i]);
    } else {
      split.train_indices.push_back(i);
      train.push_back(corpus.trees()[i]);
    }
  }
  if (train.empty()) {
    split.diagnostics.push_back({corpus.name(), 0, "empty-train",
                                 "corpus has " + std::to_string(corpus.size()) +
                                     " sentences; all were assigned to held-out data"});
  }
  split.train = Corpus(corpus.name() + ":train", std::move(train));
  split.heldout = Corpus(corpus.name() + ":heldout", std::move(heldout));
  return split;
}

bool is_projective(const DepTree& tree) {
  const int n = static_cast<int>(tree.size());
  // Span of each subtree in the attested order must have size equal to the subtree size.
  std::vector<int> lo(static_cast<std::size_t>(n) + 1), hi(static_cast<std::size_t>(n) + 1),
      count(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> post;
  std::vector<std::pair<int, std::size_t>> stack{{tree.root(), 0}};
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    const auto& kids = tree.children()[static_cast<std::size_t>(node)];
    if (next < kids.size()) {
      int child = kids[next++];
      stack.push_back({child, 0});
      continue;
    }
    auto u = static_cast<std::size_t>(node);
    lo[u] = hi[u] = node;
    count[u] = 1;
    for (int c : kids) {
      auto cu = static_cast<std::size_t>(c);
      lo[u] = std::min(lo[u], lo[cu]);
      hi[u] = std::max(hi[u], hi[cu]);
      count[u] += count[cu];
    }
    if (hi[u] - lo[u] + 1 != count[u]) return false;
    stack.pop_back();
  }
  return true;
}

}  // namespace coadapt::conllu
