#include "coadapt/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "coadapt/conllu.hpp"
#include "coadapt/error.hpp"
#include "coadapt/hash.hpp"
#include "coadapt/mcmc.hpp"
#include "coadapt/metrics.hpp"
#include "coadapt/phylo_io.hpp"
#include "coadapt/rng.hpp"
#include "coadapt/stats.hpp"
#include "json.hpp"

namespace coadapt::pipeline {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration

namespace {

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (unsigned char c : s) {
    if (!(std::isalnum(c) || c == '_' || c == '-' || c == '.')) return false;
  }
  return true;
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::uint64_t require_seed(const nlohmann::json& seeds, const char* key) {
  if (!seeds.contains(key) || !seeds[key].is_number_integer() || seeds[key].get<long long>() < 0) {
    throw ConfigError(std::string("seeds.") + key + " must be given as a non-negative integer");
  }
  return seeds[key].get<std::uint64_t>();
}

phylo::Vec read_vec4(const nlohmann::json& j, const char* key, const phylo::Vec& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& a = j[key];
  if (!a.is_array() || a.size() != phylo::kTraits) throw ConfigError(std::string(key) + " needs 4 numbers");
  phylo::Vec v;
  for (int k = 0; k < phylo::kTraits; ++k) v(k) = a[static_cast<std::size_t>(k)].get<double>();
  return v;
}

}  // namespace

Config parse_config(const std::string& json_text, const fs::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  Config c;
  if (!j.contains("corpora") || !j["corpora"].is_array() || j["corpora"].empty()) {
    throw ConfigError("config needs a non-empty \"corpora\" list");
  }
  std::set<std::string> names;
  for (const auto& e : j["corpora"]) {
    CorpusSpec s;
    s.name = get_or<std::string>(e, "name", "");
    if (!valid_name(s.name)) throw ConfigError("corpus name '" + s.name + "' must match [A-Za-z0-9_.-]+");
    if (!names.insert(s.name).second) throw ConfigError("duplicate corpus name " + s.name);
    s.family = get_or<std::string>(e, "family", s.name);
    if (!e.contains("conllu") || !e["conllu"].is_array() || e["conllu"].empty()) {
      throw ConfigError("corpus " + s.name + " needs a non-empty \"conllu\" list");
    }
    for (const auto& p : e["conllu"]) {
      fs::path path = resolve(base_dir, p.get<std::string>());
      if (!fs::exists(path)) throw ConfigError("corpus " + s.name + ": file " + path.string() + " does not exist");
      s.conllu.push_back(path.string());
    }
    c.corpora.push_back(std::move(s));
  }
  if (!j.contains("seeds") || !j["seeds"].is_object()) throw ConfigError("config needs an explicit \"seeds\" object");
  const auto& seeds = j["seeds"];
  c.seeds = {require_seed(seeds, "split"), require_seed(seeds, "baseline"), require_seed(seeds, "suite"),
             require_seed(seeds, "smoother"), require_seed(seeds, "phylo")};
  c.lambdas = get_or<std::vector<double>>(j, "lambdas", c.lambdas);
  if (c.lambdas.empty()) throw ConfigError("lambdas must not be empty");
  for (double l : c.lambdas) {
    if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("lambdas must lie in [0, 1]");
  }
  c.baseline_n = get_or<std::size_t>(j, "baseline_n", c.baseline_n);
  c.restarts_per_lambda = get_or<int>(j, "restarts_per_lambda", c.restarts_per_lambda);
  c.limits.max_iterations = get_or<int>(j, "max_iterations", c.limits.max_iterations);
  c.limits.stable_iterations = get_or<int>(j, "stable_iterations", c.limits.stable_iterations);
  if (c.baseline_n < 1 || c.restarts_per_lambda < 1 || c.limits.max_iterations < 1 || c.limits.stable_iterations < 1) {
    throw ConfigError("baseline_n, restarts_per_lambda and iteration caps must be positive");
  }
  const auto scaling = get_or<std::string>(j, "objective_scaling", "standardized");
  if (scaling == "standardized") {
    c.scaling = optimize::Scaling::standardized;
  } else if (scaling == "raw") {
    c.scaling = optimize::Scaling::raw;
  } else {
    throw ConfigError("objective_scaling must be \"standardized\" or \"raw\"");
  }
  c.sentence_boundary = get_or<bool>(j, "sentence_boundary", c.sentence_boundary);
  c.keep_punctuation = get_or<bool>(j, "keep_punctuation", c.keep_punctuation);
  c.keep_nonprojective = get_or<bool>(j, "keep_nonprojective", c.keep_nonprojective);
  const auto kernel = get_or<std::string>(j, "kernel", "gaussian");
  if (kernel == "gaussian") {
    c.kernel = pareto::KernelForm::gaussian;
  } else if (kernel == "literal") {
    c.kernel = pareto::KernelForm::literal;
  } else {
    throw ConfigError("kernel must be \"gaussian\" or \"literal\"");
  }
  c.smoother_draws = get_or<int>(j, "smoother_draws", c.smoother_draws);
  if (j.contains("tree") && !j["tree"].is_null()) {
    fs::path path = resolve(base_dir, j["tree"].get<std::string>());
    if (!fs::exists(path)) throw ConfigError("tree file " + path.string() + " does not exist");
    c.phylo.tree = path.string();
  }
  if (j.contains("phylo")) {
    const auto& p = j["phylo"];
    c.phylo.variant = phylo::variant_from_string(get_or<std::string>(p, "variant", "standard"));
    c.phylo.chains = get_or<int>(p, "chains", c.phylo.chains);
    c.phylo.iterations = get_or<int>(p, "iterations", c.phylo.iterations);
    c.phylo.t0_years = get_or<double>(p, "t0_years", c.phylo.t0_years);
    if (p.contains("sidecar")) {
      fs::path path = resolve(base_dir, p["sidecar"].get<std::string>());
      if (!fs::exists(path)) throw ConfigError("sidecar file " + path.string() + " does not exist");
      c.phylo.sidecar = path.string();
    }
    c.phylo.scaling.lo = read_vec4(p, "trait_lo", c.phylo.scaling.lo);
    c.phylo.scaling.hi = read_vec4(p, "trait_hi", c.phylo.scaling.hi);
    if (((c.phylo.scaling.hi - c.phylo.scaling.lo).array() <= 0.0).any()) {
      throw ConfigError("trait_hi must exceed trait_lo in every component");
    }
  }
  c.output_dir = resolve(base_dir, get_or<std::string>(j, "output_dir", c.output_dir)).string();
  return c;
}

Config load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fs::absolute(path).parent_path());
}

Config apply_options(Config config, const RunOptions& options) {
  if (options.seed_override) {
    const auto s = *options.seed_override;
    config.seeds = {derive_seed(s, {0}), derive_seed(s, {1}), derive_seed(s, {2}), derive_seed(s, {3}),
                    derive_seed(s, {4})};
  }
  if (options.corpus_filter) {
    std::vector<CorpusSpec> kept;
    for (auto& c : config.corpora) {
      if (c.name == *options.corpus_filter) kept.push_back(std::move(c));
    }
    if (kept.empty()) throw ConfigError("corpus filter '" + *options.corpus_filter + "' matches no corpus");
    config.corpora = std::move(kept);
  }
  if (options.variant) config.phylo.variant = *options.variant;
  if (options.output_dir) {
    config.output_dir = *options.output_dir;
  } else if (const char* env = std::getenv("COADAPT_OUTPUT_ROOT"); env && *env) {
    config.output_dir = env;
  }
  return config;
}

// ---------------------------------------------------------------------------
// Text output

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string format_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ParseError("CSV has no column '" + name + "'");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out;
}

}  // namespace

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read " + path.string());
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size()) throw ParseError(path.string() + ": row width differs from header");
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw ParseError(path.string() + " is empty");
  return t;
}

std::string to_csv(const CsvTable& table) {
  std::string out = join(table.header) + "\n";
  for (const auto& r : table.rows) out += join(r) + "\n";
  return out;
}

std::string write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("failed writing " + path.string());
  return hex64(fnv1a64(text));
}

// ---------------------------------------------------------------------------
// Shared helpers

namespace {

fs::path corpus_dir(const Config& c, const std::string& name) { return fs::path(c.output_dir) / name; }
fs::path phylo_dir(const Config& c) { return fs::path(c.output_dir) / "phylo"; }

void require(const fs::path& path, const std::string& command) {
  if (!fs::exists(path)) {
    throw MissingArtifactError("missing " + path.string() + "; run `coadapt " + command + "` first");
  }
}

std::uint64_t corpus_key(const std::string& name) { return fnv1a64(name); }

conllu::Corpus load_corpus(const Config& config, const CorpusSpec& spec, std::vector<conllu::Diagnostic>* diags,
                           std::size_t* dropped) {
  conllu::ParseOptions opts;
  opts.keep_punctuation = config.keep_punctuation;
  opts.keep_nonprojective = config.keep_nonprojective;
  auto result = conllu::parse_conllu_files(spec.conllu, spec.name, opts);
  if (diags) *diags = std::move(result.diagnostics);
  if (dropped) *dropped = result.dropped_sentences;
  return std::move(result.corpus);
}

json seeds_json(const Seeds& s) {
  return json{{"split", s.split}, {"baseline", s.baseline}, {"suite", s.suite}, {"smoother", s.smoother},
              {"phylo", s.phylo}};
}

// Writes artifacts plus a manifest listing their hashes.
class ManifestWriter {
 public:
  ManifestWriter(fs::path dir, std::string command, CommandResult& result)
      : dir_(std::move(dir)), result_(result) {
    manifest_["command"] = std::move(command);
  }
  json& info() { return manifest_; }
  void write(const std::string& file, const std::string& text) {
    manifest_["artifacts"][file] = write_text(dir_ / file, text);
    result_.written.push_back(dir_ / file);
  }
  void finish() {
    const std::string name = manifest_["command"].get<std::string>() + ".manifest.json";
    std::string body = manifest_.dump(2) + "\n";
    write_text(dir_ / name, body);
    result_.written.push_back(dir_ / name);
  }

 private:
  fs::path dir_;
  CommandResult& result_;
  json manifest_;
};

optimize::ContextOptions context_options(const Config& c) {
  optimize::ContextOptions o;
  o.sentence_boundary = c.sentence_boundary;
  return o;
}

double parse_double(const std::string& s) {
  if (s.empty()) return std::nan("");
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw ParseError("not a number: " + s);
    return v;
  } catch (const std::logic_error&) {
    throw ParseError("not a number: " + s);
  }
}

std::optional<double> parse_optional(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_double(s);
}

}  // namespace

std::vector<optimize::EfficiencyPoint> read_plane(const fs::path& path) {
  auto t = read_csv(path);
  const auto ci = t.column("grammar_id"), ct = t.column("tag"), cil = t.column("il_bits"),
             cdl = t.column("dl_mean"), cc = t.column("congruence");
  std::vector<optimize::EfficiencyPoint> out;
  for (const auto& r : t.rows) {
    optimize::EfficiencyPoint p;
    p.grammar_id = r[ci];
    p.tag = optimize::provenance_from_string(r[ct]);
    if (p.tag == optimize::Provenance::optimized) {
      auto open = r[ct].find('('), close = r[ct].find(')');
      if (open == std::string::npos || close == std::string::npos) throw ParseError("bad tag " + r[ct]);
      p.lambda = parse_double(r[ct].substr(open + 1, close - open - 1));
    }
    p.il = parse_double(r[cil]);
    p.dl = parse_double(r[cdl]);
    p.congruence = parse_optional(r[cc]);
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands

CommandResult cmd_ingest(const Config& config) {
  CommandResult result;
  for (const auto& spec : config.corpora) {
    std::vector<conllu::Diagnostic> diags;
    std::size_t dropped = 0;
    auto corpus = load_corpus(config, spec, &diags, &dropped);
    ManifestWriter m(corpus_dir(config, spec.name), "ingest", result);
    std::string lines;
    for (const auto& d : diags) lines += conllu::to_json_line(d) + "\n";
    m.write("diagnostics.jsonl", lines);
    auto& info = m.info();
    info["corpus"] = spec.name;
    info["family"] = spec.family;
    info["files"] = spec.conllu;
    info["sentences"] = corpus.size();
    info["tokens"] = corpus.token_count();
    info["dropped_sentences"] = dropped;
    info["relations"] = std::vector<std::string>(corpus.relations().begin(), corpus.relations().end());
    const auto heldout = conllu::heldout_size(corpus.size());
    info["heldout_sentences"] = heldout;
    info["train_sentences"] = corpus.size() - heldout;
    m.finish();
  }
  return result;
}

CommandResult cmd_suite(const Config& config, int jobs) {
  CommandResult result;
  for (const auto& spec : config.corpora) {
    const auto dir = corpus_dir(config, spec.name);
    require(dir / "ingest.manifest.json", "ingest");
    auto corpus = load_corpus(config, spec, nullptr, nullptr);
    optimize::CorpusContext ctx(corpus, config.seeds.split, context_options(config));
    auto attested = ctx.evaluate_attested();
    grammar::Rng brng(derive_seed(config.seeds.baseline, {corpus_key(spec.name)}));
    auto baselines = optimize::sample_baselines(ctx, config.baseline_n, brng);
    std::vector<optimize::EfficiencyPoint> base_points;
    for (const auto& b : baselines) base_points.push_back(b.point);
    optimize::SuiteConfig sc;
    sc.lambdas = config.lambdas;
    sc.restarts_per_lambda = config.restarts_per_lambda;
    sc.limits = config.limits;
    sc.seed = derive_seed(config.seeds.suite, {corpus_key(spec.name)});
    sc.scaling = config.scaling;
    sc.jobs = jobs;
    auto optimized = optimize::optimize_suite(ctx, base_points, sc);

    const auto coexpression = metrics::coexpression_rate(corpus);
    CsvTable plane;
    plane.header = {"corpus", "grammar_id", "tag", "il_bits", "dl_mean", "congruence", "coexpression", "n_sentences"};
    auto add = [&](const optimize::EfficiencyPoint& p) {
      plane.rows.push_back({spec.name, p.grammar_id, p.tag_label(), format_number(p.il), format_number(p.dl),
                            format_number(p.congruence), format_number(coexpression), std::to_string(corpus.size())});
    };
    add(attested);
    json grammars = json::object();
    for (const auto& b : baselines) {
      add(b.point);
      grammars[b.point.grammar_id] = json::parse(grammar::to_json(b.grammar));
    }
    for (const auto& o : optimized) {
      add(o.point);
      grammars[o.point.grammar_id] = json::parse(grammar::to_json(o.grammar));
    }
    ManifestWriter m(dir, "suite", result);
    m.write("plane.csv", to_csv(plane));
    m.write("grammars.json", grammars.dump(2) + "\n");
    auto& info = m.info();
    info["corpus"] = spec.name;
    info["seeds"] = seeds_json(config.seeds);
    info["lambdas"] = config.lambdas;
    info["baseline_n"] = config.baseline_n;
    info["restarts_per_lambda"] = config.restarts_per_lambda;
    info["iteration_caps"] = {{"max_iterations", config.limits.max_iterations},
                              {"stable_iterations", config.limits.stable_iterations}};
    info["objective_scaling"] = config.scaling == optimize::Scaling::raw ? "raw" : "standardized";
    info["sentence_boundary"] = config.sentence_boundary;
    m.finish();
  }
  return result;
}

namespace {

struct PlaneData {
  std::vector<optimize::EfficiencyPoint> all, optimized, baselines;
  std::optional<optimize::EfficiencyPoint> attested;
  optimize::PlaneNormalization norm;
};

PlaneData load_plane(const fs::path& dir) {
  require(dir / "plane.csv", "suite");
  PlaneData d;
  d.all = read_plane(dir / "plane.csv");
  for (const auto& p : d.all) {
    if (p.tag == optimize::Provenance::optimized) d.optimized.push_back(p);
    if (p.tag == optimize::Provenance::baseline) d.baselines.push_back(p);
    if (p.tag == optimize::Provenance::attested) d.attested = p;
  }
  d.norm = optimize::fit_normalization(d.optimized, d.baselines);
  return d;
}

}  // namespace

CommandResult cmd_frontier(const Config& config) {
  CommandResult result;
  for (std::size_t ci = 0; ci < config.corpora.size(); ++ci) {
    const auto& spec = config.corpora[ci];
    const auto dir = corpus_dir(config, spec.name);
    auto plane = load_plane(dir);
    std::vector<optimize::EfficiencyPoint> grammar_points = plane.optimized;
    grammar_points.insert(grammar_points.end(), plane.baselines.begin(), plane.baselines.end());
    std::vector<pareto::PlanePoint> pts;
    for (const auto& n : optimize::normalize_plane(grammar_points, plane.norm)) pts.push_back({n.x, n.y});
    auto knots = pareto::nondominated(pts);
    auto frontier = pareto::fit_frontier_spline(knots);

    std::vector<pareto::KernelSample> samples;
    for (const auto& n : optimize::normalize_plane(plane.optimized, plane.norm)) {
      if (n.congruence) samples.push_back({n.x, n.y, *n.congruence});
    }
    pareto::SmootherSearch search;
    search.seed = derive_seed(config.seeds.smoother, {corpus_key(spec.name)});
    search.draws = config.smoother_draws;
    search.form = config.kernel;
    auto smoother = pareto::fit_kernel_smoother(samples, search);

    CsvTable regions;
    regions.header = {"corpus", "region", "smoothed", "raw"};
    for (auto r : {pareto::Region::full, pareto::Region::il_end, pareto::Region::dl_end}) {
      std::optional<double> raw;
      try {
        raw = pareto::raw_frontier_congruence(plane.optimized, r);
      } catch (const DegenerateError&) {
      }
      regions.rows.push_back({spec.name, pareto::to_string(r),
                              format_number(pareto::frontier_congruence(frontier, smoother, r)), format_number(raw)});
    }
    json fj = json::parse(pareto::frontier_to_json(frontier));
    json out;
    out["corpus"] = spec.name;
    out["normalization"] = {{"il_opt", plane.norm.il_opt},
                            {"dl_opt", plane.norm.dl_opt},
                            {"il_base_mean", plane.norm.il_base_mean},
                            {"dl_base_mean", plane.norm.dl_base_mean}};
    out["knots"] = fj["knots"];
    out["segments"] = fj["segments"];
    ManifestWriter m(dir, "frontier", result);
    m.write("frontier.json", out.dump(2) + "\n");
    m.write("smoother.json", pareto::smoother_to_json(smoother) + "\n");
    m.write("regions.csv", to_csv(regions));
    m.info()["corpus"] = spec.name;
    m.info()["smoother_seed"] = search.seed;
    m.info()["smoother_draws"] = search.draws;
    m.info()["kernel"] = config.kernel == pareto::KernelForm::gaussian ? "gaussian" : "literal";
    m.finish();
  }
  return result;
}

CommandResult cmd_usage(const Config& config) {
  CommandResult result;
  for (const auto& spec : config.corpora) {
    const auto dir = corpus_dir(config, spec.name);
    require(dir / "ingest.manifest.json", "ingest");
    auto corpus = load_corpus(config, spec, nullptr, nullptr);
    CsvTable t;
    t.header = {"corpus",         "family",          "congruence",        "coexpression",
                "sv_with_object", "sv_without_object", "vs_with_object", "vs_without_object",
                "log_odds_ratio", "corrected"};
    std::vector<std::string> row{spec.name, spec.family,
                                 format_number(metrics::congruence(corpus, metrics::attested_orders())),
                                 format_number(metrics::coexpression_rate(corpus))};
    try {
      auto sv = metrics::sv_order_stats(corpus);
      for (long v : {sv.sv_with_object, sv.sv_without_object, sv.vs_with_object, sv.vs_without_object}) {
        row.push_back(std::to_string(v));
      }
      row.push_back(format_number(sv.log_odds_ratio));
      row.push_back(sv.corrected ? "1" : "0");
    } catch (const DegenerateError&) {
      row.insert(row.end(), {"0", "0", "0", "0", "", ""});
    }
    t.rows.push_back(std::move(row));
    ManifestWriter m(dir, "usage", result);
    m.write("usage.csv", to_csv(t));
    m.info()["corpus"] = spec.name;
    m.finish();
  }
  return result;
}

CommandResult cmd_report(const Config& config) {
  CommandResult result;
  CsvTable report;
  report.header = {"corpus",       "family",       "il_normalized", "dl_normalized",  "attested_congruence",
                   "frontier_full", "frontier_il_end", "frontier_dl_end", "raw_full", "raw_il_end",
                   "raw_dl_end",   "coexpression"};
  std::map<std::string, std::vector<double>> columns;
  for (const auto& spec : config.corpora) {
    const auto dir = corpus_dir(config, spec.name);
    require(dir / "regions.csv", "frontier");
    require(dir / "usage.csv", "usage");
    auto plane = load_plane(dir);
    auto regions = read_csv(dir / "regions.csv");
    auto usage = read_csv(dir / "usage.csv");
    std::map<std::string, std::pair<std::string, std::string>> by_region;
    for (const auto& r : regions.rows) {
      by_region[r[regions.column("region")]] = {r[regions.column("smoothed")], r[regions.column("raw")]};
    }
    if (usage.rows.empty()) throw ParseError((dir / "usage.csv").string() + " has no rows");
    const auto& u = usage.rows.front();
    std::string il_n, dl_n;
    if (plane.attested) {
      il_n = format_number(plane.norm.x(plane.attested->il));
      dl_n = format_number(plane.norm.y(plane.attested->dl));
    }
    std::vector<std::string> row{spec.name,
                                 spec.family,
                                 il_n,
                                 dl_n,
                                 u[usage.column("congruence")],
                                 by_region["full"].first,
                                 by_region["il-end"].first,
                                 by_region["dl-end"].first,
                                 by_region["full"].second,
                                 by_region["il-end"].second,
                                 by_region["dl-end"].second,
                                 u[usage.column("coexpression")]};
    report.rows.push_back(row);
  }
  CsvTable corr;
  corr.header = {"x", "y", "n", "pearson", "spearman"};
  const std::vector<std::pair<std::string, std::string>> pairs{{"attested_congruence", "frontier_full"},
                                                               {"attested_congruence", "coexpression"},
                                                               {"frontier_full", "coexpression"}};
  for (const auto& [xn, yn] : pairs) {
    std::vector<double> xs, ys;
    const auto cx = report.column(xn), cy = report.column(yn);
    for (const auto& r : report.rows) {
      if (r[cx].empty() || r[cy].empty()) continue;
      xs.push_back(parse_double(r[cx]));
      ys.push_back(parse_double(r[cy]));
    }
    corr.rows.push_back({xn, yn, std::to_string(xs.size()), format_number(stats::pearson(xs, ys)),
                         format_number(stats::spearman(xs, ys))});
  }
  ManifestWriter m(config.output_dir, "report", result);
  m.write("report.csv", to_csv(report));
  m.write("correlations.csv", to_csv(corr));
  std::vector<std::string> names;
  for (const auto& c : config.corpora) names.push_back(c.name);
  m.info()["corpora"] = names;
  m.finish();
  return result;
}

CommandResult cmd_phylo(const Config& config, int jobs) {
  if (config.phylo.tree.empty()) throw ConfigError("cmd_phylo needs a \"tree\" entry in the config");
  phylo::TreeInputOptions topts;
  topts.scaling = config.phylo.scaling;
  std::ifstream in(config.phylo.tree);
  std::stringstream ss;
  ss << in.rdbuf();
  phylo::PhyloTree tree;
  if (fs::path(config.phylo.tree).extension() == ".json") {
    tree = phylo::parse_tree_json(ss.str(), topts);
  } else {
    std::string sidecar;
    if (!config.phylo.sidecar.empty()) {
      std::ifstream sc(config.phylo.sidecar);
      std::stringstream sss;
      sss << sc.rdbuf();
      sidecar = sss.str();
    }
    tree = phylo::parse_newick(ss.str(), sidecar, topts);
  }
  // Fill missing observations from the report when it exists.
  int filled = 0;
  const auto report_path = fs::path(config.output_dir) / "report.csv";
  if (fs::exists(report_path)) {
    auto report = read_csv(report_path);
    std::map<std::string, phylo::Vec> rows;
    for (const auto& r : report.rows) {
      const char* cols[] = {"il_normalized", "dl_normalized", "attested_congruence", "frontier_full"};
      phylo::Vec v;
      bool ok = true;
      for (int k = 0; k < phylo::kTraits; ++k) {
        const auto& cell = r[report.column(cols[k])];
        ok = ok && !cell.empty();
        if (ok) v(k) = parse_double(cell);
      }
      if (ok) rows[r[report.column("corpus")]] = v;
    }
    std::vector<std::optional<phylo::Vec>> obs;
    for (const auto& n : tree.nodes()) {
      auto it = rows.find(n.language);
      if (!n.observation && it != rows.end()) {
        obs.push_back(config.phylo.scaling.forward(it->second));
        ++filled;
      } else {
        obs.push_back(n.observation);
      }
    }
    tree = tree.with_observations(obs);
  }
  mcmc::SamplerConfig sc;
  sc.variant = config.phylo.variant;
  sc.chains = config.phylo.chains;
  sc.iterations = config.phylo.iterations;
  sc.seed = config.seeds.phylo;
  sc.jobs = jobs;
  sc.brownian_t0 = config.phylo.t0_years / topts.years_per_unit;
  auto post = mcmc::metropolis_sample(tree, sc);

  const bool covariate = sc.variant == phylo::Variant::covariate;
  const bool noise = sc.variant == phylo::Variant::noise;
  const bool brownian = sc.variant == phylo::Variant::brownian;
  CsvTable draws;
  draws.header = {"chain", "iter"};
  for (int c = 0; c < (covariate ? 2 : 1); ++c) {
    const std::string suffix = covariate ? "_c" + std::to_string(c) : "";
    for (int k = 1; k <= 4; ++k) draws.header.push_back("mu" + std::to_string(k) + suffix);
    if (!brownian) {
      for (int k = 1; k <= 4; ++k) draws.header.push_back("gamma" + std::to_string(k) + std::to_string(k) + suffix);
    }
  }
  for (int i = 1; i <= 4; ++i) {
    for (int j = 1; j <= 4; ++j) draws.header.push_back("sigma_" + std::to_string(i) + "_" + std::to_string(j));
  }
  if (noise) {
    for (int k = 1; k <= 4; ++k) draws.header.push_back("noise" + std::to_string(k));
  }
  draws.header.push_back("R34_stationary");
  draws.header.push_back("R34_instantaneous");
  std::vector<std::vector<double>> numeric(draws.header.size());
  for (const auto& d : post.draws) {
    std::vector<double> vals{static_cast<double>(d.chain), static_cast<double>(d.iteration)};
    for (int c = 0; c < (covariate ? 2 : 1); ++c) {
      auto p = config.phylo.scaling.inverse(d.params(c));
      for (int k = 0; k < 4; ++k) vals.push_back(p.mu(k));
      if (!brownian) {
        for (int k = 0; k < 4; ++k) vals.push_back(p.gamma(k));
      }
    }
    auto p0 = config.phylo.scaling.inverse(d.params(0));
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) vals.push_back(p0.sigma(i, j));
    }
    if (noise) {
      for (int k = 0; k < 4; ++k) vals.push_back((*p0.noise_sd)(k));
    }
    vals.push_back(d.r34_stationary);
    vals.push_back(d.r34_instantaneous);
    std::vector<std::string> row;
    row.push_back(std::to_string(d.chain));
    row.push_back(std::to_string(d.iteration));
    for (std::size_t k = 2; k < vals.size(); ++k) row.push_back(format_number(vals[k]));
    for (std::size_t k = 0; k < vals.size(); ++k) numeric[k].push_back(vals[k]);
    draws.rows.push_back(std::move(row));
  }
  CsvTable summary;
  summary.header = {"quantity", "mean", "q2.5", "q97.5", "rhat"};
  for (std::size_t k = 2; k < draws.header.size(); ++k) {
    std::vector<double> v;
    for (double x : numeric[k]) {
      if (!std::isnan(x)) v.push_back(x);
    }
    if (v.empty()) continue;
    std::string name = draws.header[k];
    std::optional<double> rhat = post.rhat_of(name);
    if (!rhat && name.rfind("sigma_", 0) == 0) {
      // R̂ is tracked for the upper triangle only.
      int i = name[6] - '0', j = name[8] - '0';
      rhat = post.rhat_of("sigma_" + std::to_string(std::min(i, j)) + "_" + std::to_string(std::max(i, j)));
    }
    summary.rows.push_back({name, format_number(stats::mean(v)), format_number(mcmc::quantile(v, 0.025)),
                            format_number(mcmc::quantile(v, 0.975)), format_number(rhat)});
  }
  CsvTable acceptance;
  acceptance.header = {"chain", "block", "acceptance"};
  for (std::size_t c = 0; c < post.blocks.size(); ++c) {
    for (const auto& b : post.blocks[c]) acceptance.rows.push_back({std::to_string(c), b.name, format_number(b.rate())});
  }
  CommandResult result;
  ManifestWriter m(phylo_dir(config), "phylo", result);
  m.write("posterior.csv", to_csv(draws));
  m.write("summary.csv", to_csv(summary));
  m.write("acceptance.csv", to_csv(acceptance));
  auto& info = m.info();
  info["variant"] = phylo::to_string(sc.variant);
  info["chains"] = sc.chains;
  info["iterations"] = sc.iterations;
  info["seed"] = sc.seed;
  info["tree"] = config.phylo.tree;
  info["observations_from_report"] = filled;
  info["max_split_rhat"] = post.max_rhat();
  m.finish();
  return result;
}

}  // namespace coadapt::pipeline
