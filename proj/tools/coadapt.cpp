// Command-line front end for the pipeline.

#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "coadapt/error.hpp"
#include "coadapt/pipeline.hpp"

namespace pl = coadapt::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"coadapt: word-order efficiency and congruence pipeline"};
  app.require_subcommand(1, 0);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  int jobs = 1;
  std::optional<std::string> corpus_filter, variant, output_dir;
  app.add_option("--config", config_path, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--seed-override", seed_override, "Replace every configured seed by seeds derived from this one");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--corpus-filter", corpus_filter, "Only process the corpus with this name");
  app.add_option("--variant", variant, "Phylogenetic model variant")
      ->check(CLI::IsMember({"standard", "noise", "brownian", "covariate"}));
  app.add_option("--output-dir", output_dir, "Output root (overrides COADAPT_OUTPUT_ROOT and the config)");

  using Command = std::function<pl::CommandResult(const pl::Config&)>;
  const std::vector<std::pair<std::string, Command>> commands{
      {"ingest", [](const pl::Config& c) { return pl::cmd_ingest(c); }},
      {"suite", [&](const pl::Config& c) { return pl::cmd_suite(c, jobs); }},
      {"frontier", [](const pl::Config& c) { return pl::cmd_frontier(c); }},
      {"usage", [](const pl::Config& c) { return pl::cmd_usage(c); }},
      {"report", [](const pl::Config& c) { return pl::cmd_report(c); }},
      {"phylo", [&](const pl::Config& c) { return pl::cmd_phylo(c, jobs); }},
  };
  const std::vector<std::pair<std::string, std::string>> help{
      {"ingest", "Parse corpora and write manifests and diagnostics"},
      {"suite", "Evaluate attested, baseline and optimized grammars"},
      {"frontier", "Fit the Pareto frontier and congruence smoother"},
      {"usage", "Attested congruence, coexpression and subject-order statistics"},
      {"report", "Merge per-corpus results and correlations"},
      {"phylo", "Sample the phylogenetic model posterior"},
  };
  for (const auto& [name, text] : help) app.add_subcommand(name, text);
  app.add_subcommand("all", "Run ingest, suite, frontier, usage and report in order");

  CLI11_PARSE(app, argc, argv);

  try {
    pl::RunOptions opts;
    opts.seed_override = seed_override;
    opts.jobs = jobs;
    opts.corpus_filter = corpus_filter;
    if (variant) opts.variant = coadapt::phylo::variant_from_string(*variant);
    if (output_dir) opts.output_dir = *output_dir;
    auto config = pl::apply_options(pl::load_config(config_path), opts);

    std::vector<std::string> to_run;
    for (auto* sub : app.get_subcommands()) {
      if (sub->get_name() == "all") {
        to_run = {"ingest", "suite", "frontier", "usage", "report"};
      } else {
        to_run.push_back(sub->get_name());
      }
    }
    for (const auto& name : to_run) {
      for (const auto& [cmd, fn] : commands) {
        if (cmd != name) continue;
        auto result = fn(config);
        for (const auto& path : result.written) std::printf("%s\n", path.string().c_str());
      }
    }
  } catch (const coadapt::MissingArtifactError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const coadapt::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
