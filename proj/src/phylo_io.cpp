#include "coadapt/phylo_io.hpp"

#include <cctype>
#include <map>
#include <sstream>

#include "coadapt/error.hpp"
#include "json.hpp"

namespace coadapt::phylo {

namespace {

Vec scaled(const Vec& raw, const TreeInputOptions& options) {
  return options.rescale_traits ? options.scaling.forward(raw) : raw;
}

}  // namespace

PhyloTree parse_tree_json(const std::string& text, const TreeInputOptions& options) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tree JSON: ") + e.what());
  }
  if (!j.contains("nodes") || !j["nodes"].is_array()) throw ParseError("tree JSON needs a \"nodes\" array");
  std::vector<Node> nodes;
  std::vector<std::string> parents;
  std::map<std::string, int> index;
  try {
    for (const auto& e : j["nodes"]) {
      Node n;
      n.id = e.at("id").get<std::string>();
      n.time = e.at("time_years").get<double>() / options.years_per_unit;
      n.family = e.value("family", std::string());
      n.language = e.value("language", std::string());
      if (e.contains("covariate") && !e["covariate"].is_null()) n.covariate = e["covariate"].get<int>();
      if (e.contains("observation") && !e["observation"].is_null()) {
        const auto& o = e["observation"];
        if (!o.is_array() || o.size() != kTraits) throw ParseError("node " + n.id + ": observation needs 4 values");
        Vec v;
        for (int k = 0; k < kTraits; ++k) v(k) = o[static_cast<std::size_t>(k)].get<double>();
        n.observation = scaled(v, options);
      }
      parents.push_back(e.contains("parent") && !e["parent"].is_null() ? e["parent"].get<std::string>() : "");
      if (!index.emplace(n.id, static_cast<int>(nodes.size())).second) throw ConfigError("duplicate node id " + n.id);
      nodes.push_back(std::move(n));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tree JSON: ") + e.what());
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (parents[i].empty()) continue;
    auto it = index.find(parents[i]);
    if (it == index.end()) throw ConfigError("node " + nodes[i].id + " names unknown parent " + parents[i]);
    nodes[i].parent = it->second;
  }
  return PhyloTree(std::move(nodes));
}

std::string tree_to_json(const PhyloTree& tree, const TreeInputOptions& options) {
  nlohmann::ordered_json out;
  out["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : tree.nodes()) {
    nlohmann::ordered_json e;
    e["id"] = n.id;
    e["parent"] = n.parent < 0 ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(tree.node(n.parent).id);
    e["time_years"] = n.time * options.years_per_unit;
    e["family"] = n.family;
    if (n.covariate) e["covariate"] = *n.covariate;
    if (n.observation) {
      Vec v = options.rescale_traits ? options.scaling.inverse(*n.observation) : *n.observation;
      e["observation"] = {v(0), v(1), v(2), v(3)};
    }
    if (!n.language.empty()) e["language"] = n.language;
    out["nodes"].push_back(std::move(e));
  }
  return out.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

namespace {

class NewickParser {
 public:
  NewickParser(const std::string& text, double unit_per_millennium, double root_time)
      : s_(text), scale_(unit_per_millennium), root_time_(root_time) {}

  std::vector<Node> parse() {
    skip_ws();
    while (pos_ < s_.size()) {
      const int root = subtree(-1, root_time_, true);
      skip_ws();
      expect(';');
      nodes_[static_cast<std::size_t>(root)].family = nodes_[static_cast<std::size_t>(root)].id;
      skip_ws();
    }
    if (nodes_.empty()) throw ParseError("Newick input holds no tree");
    return std::move(nodes_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("Newick: " + what + " at offset " + std::to_string(pos_));
  }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  void expect(char c) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  std::string label() {
    skip_ws();
    std::string out;
    if (pos_ < s_.size() && s_[pos_] == '\'') {
      ++pos_;
      while (pos_ < s_.size() && s_[pos_] != '\'') out += s_[pos_++];
      if (pos_ >= s_.size()) fail("unterminated quoted label");
      ++pos_;
      return out;
    }
    while (pos_ < s_.size() && std::string_view("(),:;").find(s_[pos_]) == std::string_view::npos &&
           !std::isspace(static_cast<unsigned char>(s_[pos_]))) {
      out += s_[pos_++];
    }
    return out;
  }
  double length() {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != ':') return 0.0;
    ++pos_;
    skip_ws();
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s_.substr(pos_), &used);
    } catch (const std::exception&) {
      fail("bad branch length");
    }
    pos_ += used;
    return v;
  }

  // Parses a subtree whose parent sits at `parent_time`; returns its index.
  int subtree(int parent, double parent_time, bool is_root) {
    skip_ws();
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{});
    nodes_.back().parent = parent;
    bool inner = false;
    std::vector<int> kids;
    if (pos_ < s_.size() && s_[pos_] == '(') {
      inner = true;
      ++pos_;
      // Children are parsed before this node's own length is known, so their
      // times are fixed up afterwards.
      for (;;) {
        kids.push_back(subtree(self, 0.0, false));
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ',') {
          ++pos_;
          continue;
        }
        expect(')');
        break;
      }
    }
    std::string name = label();
    double len = length();
    if (is_root) len = 0.0;
    auto& node = nodes_[static_cast<std::size_t>(self)];
    node.id = name.empty() ? (inner ? "n" + std::to_string(++unnamed_) : fail_name()) : name;
    node.language = node.id;
    node.time = parent_time + len * scale_;
    shift(self, node.time);
    return self;
  }

  std::string fail_name() const { fail("leaf without a label"); }

  // Children were timed relative to 0; move the subtree below `self`.
  void shift(int self, double offset) {
    for (std::size_t i = static_cast<std::size_t>(self) + 1; i < nodes_.size(); ++i) {
      if (is_descendant(static_cast<int>(i), self)) nodes_[i].time += offset;
    }
  }
  bool is_descendant(int i, int anc) const {
    for (int p = nodes_[static_cast<std::size_t>(i)].parent; p >= 0; p = nodes_[static_cast<std::size_t>(p)].parent) {
      if (p == anc) return true;
    }
    return false;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  double scale_;
  double root_time_;
  int unnamed_ = 0;
  std::vector<Node> nodes_;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  for (auto& c : cells) {
    while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
    while (!c.empty() && c.front() == ' ') c.erase(c.begin());
  }
  return cells;
}

}  // namespace

PhyloTree parse_newick(const std::string& newick, const std::string& sidecar_csv, const TreeInputOptions& options) {
  NewickParser parser(newick, 1000.0 / options.years_per_unit, options.newick_root_years / options.years_per_unit);
  auto nodes = parser.parse();
  // Families propagate from roots (parents precede children in parse order).
  for (auto& n : nodes) {
    if (n.parent >= 0) n.family = nodes[static_cast<std::size_t>(n.parent)].family;
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!index.emplace(nodes[i].id, i).second) throw ConfigError("duplicate Newick label " + nodes[i].id);
  }
  std::istringstream in(sidecar_csv);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != 2 + kTraits) {
      throw ParseError("sidecar line " + std::to_string(line_no) + ": expected 6 columns");
    }
    auto it = index.find(cells[0]);
    if (it == index.end()) throw ConfigError("sidecar names unknown node " + cells[0]);
    auto& node = nodes[it->second];
    try {
      if (!cells[1].empty()) node.covariate = std::stoi(cells[1]);
      bool any = false, all = true;
      Vec v;
      for (int k = 0; k < kTraits; ++k) {
        const auto& c = cells[static_cast<std::size_t>(2 + k)];
        if (c.empty()) {
          all = false;
        } else {
          any = true;
          v(k) = std::stod(c);
        }
      }
      if (any && !all) throw ParseError("sidecar line " + std::to_string(line_no) + ": partial observation");
      if (all) node.observation = scaled(v, options);
    } catch (const std::invalid_argument&) {
      throw ParseError("sidecar line " + std::to_string(line_no) + ": not a number");
    }
  }
  return PhyloTree(std::move(nodes));
}

}  // namespace coadapt::phylo
