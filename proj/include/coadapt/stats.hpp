#pragma once

#include <optional>
#include <span>
#include <vector>

namespace coadapt::stats {

double mean(std::span<const double> v);
/// Sample standard deviation (n − 1); 0 for fewer than two values.
double sd(std::span<const double> v);
/// Average ranks (1-based), ties share their mean rank.
std::vector<double> ranks(std::span<const double> v);
/// nullopt when either side has zero variance or sizes differ / n < 2.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

}  // namespace coadapt::stats
