#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coadapt/conllu.hpp"
#include "coadapt/grammar.hpp"
#include "coadapt/metrics.hpp"

namespace coadapt::optimize {

enum class Provenance { attested, baseline, optimized, fitted };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

/// One ordering evaluated on one corpus.
struct EfficiencyPoint {
  double il = 0.0;  // bits; NaN when no sentence is left for training
  double dl = 0.0;  // mean summed arc length per sentence
  std::optional<double> congruence;
  Provenance tag = Provenance::baseline;
  double lambda = 0.0;  // meaningful for optimized points
  std::string grammar_id;

  /// "attested", "baseline", "fitted" or "optimized(0.25)".
  std::string tag_label() const;
};

/// A point together with the grammar that produced it (attested points carry
/// an empty grammar).
struct Sample {
  EfficiencyPoint point;
  grammar::OrderingGrammar grammar;
};

struct ContextOptions {
  bool sentence_boundary = true;
  metrics::ArgumentRoles roles;
};

struct Measures {
  double dl = 0.0;
  double il = 0.0;
  metrics::ArgumentSides sides;
};

/// Precomputed, immutable view of a corpus for repeated grammar evaluation.
/// The train/held-out split is drawn once from `split_seed` and shared by
/// every grammar. Evaluation is const and safe to call concurrently.
class CorpusContext {
 public:
  CorpusContext(const conllu::Corpus& corpus, std::uint64_t split_seed, ContextOptions options = {});

  const conllu::Corpus& corpus() const { return corpus_; }
  const grammar::RelationIndex& relations() const { return relations_; }
  std::size_t train_sentences() const { return train_.size(); }
  std::size_t heldout_sentences() const { return heldout_.size(); }

  Measures measure(std::span<const double> weights, bool need_il = true, bool need_dl = true) const;
  Measures measure_attested() const;

  EfficiencyPoint evaluate(const grammar::OrderingGrammar& g, Provenance tag = Provenance::baseline) const;
  EfficiencyPoint evaluate_attested() const;

  /// Rank order and sign count of the relations that occur as dependents.
  /// Equal keys linearize every tree of this corpus identically.
  std::vector<int> behaviour_key(std::span<const double> weights) const;

 private:
  Measures measure_orders(const std::vector<std::vector<int>>* orders, std::span<const double> weights,
                          bool need_il, bool need_dl) const;

  conllu::Corpus corpus_;
  ContextOptions options_;
  grammar::RelationIndex relations_;
  std::vector<grammar::IndexedTree> trees_;
  std::vector<std::vector<int>> forms_;  // form id per token slot
  std::vector<char> subject_arg_;        // per tree, flattened by offset
  std::vector<char> object_arg_;
  std::vector<std::size_t> offsets_;
  std::vector<int> dependent_relations_;
  std::vector<std::size_t> train_;
  std::vector<std::size_t> heldout_;
  int id_limit_ = 0;
  int boundary_ = -1;
};

enum class Scaling { standardized, raw };

struct ObjectiveSpec {
  double lambda = 0.0;
  double dl_mean = 0.0, dl_sd = 1.0;
  double il_mean = 0.0, il_sd = 1.0;
  Scaling scaling = Scaling::standardized;
};

/// Baseline means and SDs of DL and IL. A zero SD (all baselines tie on that
/// axis) is replaced by 1 so the axis still enters the objective.
ObjectiveSpec make_objective_spec(std::span<const EfficiencyPoint> baselines, double lambda,
                                  Scaling scaling = Scaling::standardized);

/// J = (1−λ)·z(DL) − λ·z(IL); lower is better. Raw scaling uses
/// (1−λ)·DL − λ·IL.
double combined_objective(double dl, double il, const ObjectiveSpec& spec);
double combined_objective(const EfficiencyPoint& p, const ObjectiveSpec& spec);

struct HillClimbResult {
  grammar::OrderingGrammar grammar;
  std::vector<double> trace;  // accepted objective values, non-increasing
  int iterations = 0;
  EfficiencyPoint point;
};

HillClimbResult hill_climb(const CorpusContext& ctx, const ObjectiveSpec& spec, grammar::Rng& rng,
                           const grammar::ClimbLimits& limits = {});

/// `n` random grammars evaluated and tagged baseline. Throws ArityError for n = 0.
std::vector<Sample> sample_baselines(const CorpusContext& ctx, std::size_t n, grammar::Rng& rng);

struct SuiteConfig {
  std::vector<double> lambdas{0.0, 0.25, 0.5, 0.75, 1.0};
  int restarts_per_lambda = 30;
  grammar::ClimbLimits limits;
  std::uint64_t seed = 1;
  Scaling scaling = Scaling::standardized;
  int jobs = 1;
};

/// Independent hill-climbing restarts for every λ; the restart with key
/// (λ index, r) is seeded from derive_seed(seed, {λ index, r}). Results are
/// ordered by λ, then restart.
std::vector<Sample> optimize_suite(const CorpusContext& ctx, std::span<const EfficiencyPoint> baselines,
                                   const SuiteConfig& config);

struct MutationChain {
  EfficiencyPoint start;
  std::vector<EfficiencyPoint> steps;  // point after every swap
  grammar::OrderingGrammar end;
};

/// Unfiltered adjacent-swap random walks starting at `g`.
std::vector<MutationChain> mutation_chains(const grammar::OrderingGrammar& g, const CorpusContext& ctx,
                                           grammar::Rng& rng, int chains = 30, int steps = 200);

/// Affine rescaling of the plane: the best optimized value maps to 0 and
/// the baseline mean to 1 on each axis; lower is more efficient on both.
struct PlaneNormalization {
  double il_opt = 0.0, dl_opt = 0.0;
  double il_base_mean = 0.0, dl_base_mean = 0.0;

  double x(double il) const { return (il_opt - il) / (il_opt - il_base_mean); }
  double y(double dl) const { return (dl - dl_opt) / (dl_base_mean - dl_opt); }
};

/// Throws ArityError without optimized or baseline points and DegenerateError
/// when the optimum equals the baseline mean on an axis.
PlaneNormalization fit_normalization(std::span<const EfficiencyPoint> optimized,
                                     std::span<const EfficiencyPoint> baselines);

struct NormalizedPoint {
  double x = 0.0;  // normalized IL
  double y = 0.0;  // normalized DL
  std::optional<double> congruence;
  std::size_t index = 0;  // position in the input span
};

std::vector<NormalizedPoint> normalize_plane(std::span<const EfficiencyPoint> points,
                                             const PlaneNormalization& norm);

}  // namespace coadapt::optimize
