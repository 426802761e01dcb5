#include "bdcraft/report.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>

#include "bdcraft/error.hpp"
#include "bdcraft/text_io.hpp"

namespace bdcraft {

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
  return buf;
}

std::vector<RankingEntry> report_ranking(std::vector<RankingEntry> entries) {
  std::sort(entries.begin(), entries.end(), [](const RankingEntry& a, const RankingEntry& b) {
    if (a.scores.hmean != b.scores.hmean) return a.scores.hmean > b.scores.hmean;
    return a.name < b.name;
  });
  return entries;
}

std::string render_ranking_table(std::span<const RankingEntry> ranked) {
  std::size_t name_w = 6;
  for (const auto& e : ranked) {
    name_w = std::max(name_w, e.name.size());
  }
  std::string out;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-4s  %-*s  %9s  %9s  %9s\n", "Rank", static_cast<int>(name_w), "Method",
                "Precision", "Recall", "H-Mean");
  out += buf;
  std::size_t rank = 1;
  for (const auto& e : ranked) {
    std::snprintf(buf, sizeof buf, "%-4zu  %-*s  %8s%%  %8s%%  %8s%%\n", rank++, static_cast<int>(name_w),
                  e.name.c_str(), percent(e.scores.precision).c_str(), percent(e.scores.recall).c_str(),
                  percent(e.scores.hmean).c_str());
    out += buf;
  }
  return out;
}

std::string render_ranking_csv(std::span<const RankingEntry> ranked) {
  std::string out = "rank,method,precision,recall,hmean\n";
  std::size_t rank = 1;
  for (const auto& e : ranked) {
    out += std::to_string(rank++) + "," + e.name + "," + percent(e.scores.precision) + "," +
           percent(e.scores.recall) + "," + percent(e.scores.hmean) + "\n";
  }
  return out;
}

EvalScores load_aggregate(const std::string& path) {
  try {
    const auto doc = nlohmann::json::parse(read_text_file(path));
    const auto& a = doc.at("aggregate");
    return scores_from_tallies(a.at("precision_num").get<double>(), a.at("precision_den").get<double>(),
                               a.at("recall_num").get<double>(), a.at("recall_den").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": not a report with an aggregate section (" + e.what() + ")");
  }
}

}  // namespace bdcraft
