// Writes the bundled toy corpora, a pipeline config and a small dated tree.

#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "coadapt/conllu.hpp"
#include "coadapt/pipeline.hpp"
#include "coadapt/toy.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using coadapt::toy::BasicOrder;

int main(int argc, char** argv) {
  CLI::App app{"Generate toy corpora and a matching pipeline config"};
  std::string out = "data/toy";
  std::size_t sentences = 1200;
  std::uint64_t seed = 7;
  app.add_option("-o,--output", out, "Output directory");
  app.add_option("-n,--sentences", sentences, "Sentences per usage corpus");
  app.add_option("--seed", seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);

  fs::create_directories(out);
  auto dump = [&](const std::string& file, const coadapt::conllu::Corpus& c) {
    coadapt::pipeline::write_text(fs::path(out) / file, coadapt::conllu::write_conllu(c));
    std::printf("%s (%zu sentences)\n", (fs::path(out) / file).string().c_str(), c.size());
  };
  dump("transitive.conllu", coadapt::toy::transitive_fixture());
  dump("strict_svo.conllu", coadapt::toy::strict_corpus(BasicOrder::svo, sentences, seed, "strict_svo"));
  dump("strict_sov.conllu", coadapt::toy::strict_corpus(BasicOrder::sov, sentences, seed + 1, "strict_sov"));

  coadapt::toy::UsageSpec dropping;
  dropping.name = "dropping_sov";
  dropping.sentences = sentences;
  dropping.coexpression = 0.15;
  dropping.order = BasicOrder::sov;
  dropping.seed = seed + 2;
  dump("dropping_sov.conllu", coadapt::toy::usage_corpus(dropping));

  coadapt::toy::UsageSpec coexpressing = dropping;
  coexpressing.name = "coexpressing_svo";
  coexpressing.coexpression = 1.0;
  coexpressing.order = BasicOrder::svo;
  coexpressing.seed = seed + 3;
  dump("coexpressing_svo.conllu", coadapt::toy::usage_corpus(coexpressing));

  using json = nlohmann::ordered_json;
  json config;
  config["corpora"] = json::array();
  for (const auto& [name, family] : {std::pair{"strict_svo", "A"}, std::pair{"strict_sov", "A"},
                                     std::pair{"dropping_sov", "B"}, std::pair{"coexpressing_svo", "B"}}) {
    config["corpora"].push_back({{"name", name}, {"conllu", {std::string(name) + ".conllu"}}, {"family", family}});
  }
  config["seeds"] = {{"split", 11}, {"baseline", 12}, {"suite", 13}, {"smoother", 14}, {"phylo", 15}};
  config["lambdas"] = {0.0, 0.25, 0.5, 0.75, 1.0};
  config["baseline_n"] = 75;
  config["restarts_per_lambda"] = 30;
  config["tree"] = "tree.json";
  config["phylo"] = {{"variant", "standard"}, {"chains", 4}, {"iterations", 4000}};
  config["output_dir"] = "../../coadapt-out";
  coadapt::pipeline::write_text(fs::path(out) / "config.json", config.dump(2) + "\n");

  // Two families of two languages each, split 2000 years ago, observed via the report.
  json tree;
  tree["nodes"] = json::array();
  tree["nodes"].push_back({{"id", "A"}, {"parent", nullptr}, {"time_years", -3000}, {"family", "A"}});
  tree["nodes"].push_back({{"id", "B"}, {"parent", nullptr}, {"time_years", -3000}, {"family", "B"}});
  for (const auto& [id, parent] : {std::pair{"strict_svo", "A"}, std::pair{"strict_sov", "A"},
                                   std::pair{"dropping_sov", "B"}, std::pair{"coexpressing_svo", "B"}}) {
    tree["nodes"].push_back({{"id", id}, {"parent", parent}, {"time_years", 0}, {"language", id}});
  }
  coadapt::pipeline::write_text(fs::path(out) / "tree.json", tree.dump(2) + "\n");
  std::printf("%s\n%s\n", (fs::path(out) / "config.json").string().c_str(),
              (fs::path(out) / "tree.json").string().c_str());
  return 0;
}
