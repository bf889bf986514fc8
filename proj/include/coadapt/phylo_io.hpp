#pragma once

#include <string>

#include "coadapt/phylo.hpp"

namespace coadapt::phylo {

struct TreeInputOptions {
  double years_per_unit = 1000.0;
  /// Applied to every observation on the way in.
  TraitScaling scaling;
  bool rescale_traits = true;
  /// Calendar time of Newick roots (Newick carries no absolute dates).
  double newick_root_years = 0.0;
};

/// {"nodes":[{"id":..,"parent":<id or null>,"time_years":..,"family":..,
///   "covariate":0|1,"observation":[4 numbers],"language":..}, ...]}
PhyloTree parse_tree_json(const std::string& text, const TreeInputOptions& options = {});
/// Inverse of parse_tree_json (times and traits mapped back).
std::string tree_to_json(const PhyloTree& tree, const TreeInputOptions& options = {});

/// Newick forest (one tree per ';', branch lengths in millennia) plus a CSV
/// sidecar with header `id,covariate,trait1,trait2,trait3,trait4`; empty
/// cells mean "absent". Unlabelled inner nodes are named n1, n2, ...
PhyloTree parse_newick(const std::string& newick, const std::string& sidecar_csv,
                       const TreeInputOptions& options = {});

}  // namespace coadapt::phylo
