#pragma once

#include <span>
#include <string>
#include <vector>

#include "bdcraft/eval.hpp"

namespace bdcraft {

/// Fraction rendered as a percentage with two decimals: 0.94471 -> "94.47".
std::string percent(double fraction);

struct RankingEntry {
  std::string name;
  EvalScores scores;
};

/// Sorted by h-mean descending; ties ordered by name.
std::vector<RankingEntry> report_ranking(std::vector<RankingEntry> entries);

/// Fixed-width text table: rank, method, precision, recall, h-mean.
std::string render_ranking_table(std::span<const RankingEntry> ranked);
std::string render_ranking_csv(std::span<const RankingEntry> ranked);

/// Loads the aggregate of a report.json written by the pipeline or the
/// evaluate command. Throws DataError.
EvalScores load_aggregate(const std::string& path);

}  // namespace bdcraft
