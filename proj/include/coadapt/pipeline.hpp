#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coadapt/grammar.hpp"
#include "coadapt/optimize.hpp"
#include "coadapt/pareto.hpp"
#include "coadapt/phylo.hpp"

namespace coadapt::pipeline {

namespace fs = std::filesystem;

struct CorpusSpec {
  std::string name;
  std::vector<std::string> conllu;  // absolute after loading
  std::string family;
};

struct Seeds {
  std::uint64_t split = 0;
  std::uint64_t baseline = 0;
  std::uint64_t suite = 0;
  std::uint64_t smoother = 0;
  std::uint64_t phylo = 0;
};

struct PhyloSettings {
  phylo::Variant variant = phylo::Variant::standard;
  int chains = 4;
  int iterations = 10000;
  double t0_years = -20000.0;
  std::string tree;     // JSON tree or Newick file; empty disables cmd_phylo
  std::string sidecar;  // CSV sidecar for Newick input
  phylo::TraitScaling scaling;
};

struct Config {
  std::vector<CorpusSpec> corpora;
  Seeds seeds;
  std::vector<double> lambdas{0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t baseline_n = 75;
  int restarts_per_lambda = 30;
  grammar::ClimbLimits limits;
  optimize::Scaling scaling = optimize::Scaling::standardized;
  bool sentence_boundary = true;
  bool keep_punctuation = true;
  bool keep_nonprojective = true;
  pareto::KernelForm kernel = pareto::KernelForm::gaussian;
  int smoother_draws = 5000;
  PhyloSettings phylo;
  std::string output_dir = "coadapt-out";
};

/// Parses the JSON configuration; relative paths resolve against
/// `base_dir`. Throws ConfigError on missing seeds, unknown keys' types or
/// files that do not exist.
Config parse_config(const std::string& json_text, const fs::path& base_dir);
Config load_config(const fs::path& path);

/// Command-line overrides.
struct RunOptions {
  std::optional<std::uint64_t> seed_override;
  int jobs = 1;
  std::optional<std::string> corpus_filter;  // exact corpus name
  std::optional<phylo::Variant> variant;
  std::optional<std::string> output_dir;
};

/// Applies the overrides. The output root comes from the flag, else from
/// the COADAPT_OUTPUT_ROOT environment variable, else from the config.
Config apply_options(Config config, const RunOptions& options);

struct CommandResult {
  std::vector<fs::path> written;
};

CommandResult cmd_ingest(const Config& config);
CommandResult cmd_suite(const Config& config, int jobs = 1);
CommandResult cmd_frontier(const Config& config);
CommandResult cmd_usage(const Config& config);
CommandResult cmd_report(const Config& config);
CommandResult cmd_phylo(const Config& config, int jobs = 1);

// Plumbing shared with the CLI and tests.

/// "%.12g"; empty string for NaN or nullopt.
std::string format_number(double v);
std::string format_number(const std::optional<double>& v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws ParseError
};

CsvTable read_csv(const fs::path& path);
/// Writes with LF endings and returns the FNV-1a hash of the bytes.
std::string write_text(const fs::path& path, const std::string& text);
std::string to_csv(const CsvTable& table);

/// Mapping of efficiency-plane rows back to points.
std::vector<optimize::EfficiencyPoint> read_plane(const fs::path& path);

}  // namespace coadapt::pipeline
