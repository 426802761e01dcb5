#include "bdcraft/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "bdcraft/error.hpp"

namespace bdcraft {
namespace {

constexpr std::string_view kDontCare = "###";

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view s) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ',' || s[i] == ' ' || s[i] == '\t')) {
      ++i;
    }
    const std::size_t start = i;
    while (i < s.size() && s[i] != ',' && s[i] != ' ' && s[i] != '\t') {
      ++i;
    }
    if (i > start) {
      fields.push_back(s.substr(start, i - start));
    }
  }
  return fields;
}

double parse_number(std::string_view field, std::size_t line) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
    throw ParseError(line, "expected a number, got '" + std::string(field) + "'");
  }
  return value;
}

AnnotatedBox box_from_fields(std::span<const std::string_view> fields, std::size_t line) {
  AnnotatedBox box;
  box.x_min = parse_number(fields[0], line);
  box.y_min = parse_number(fields[1], line);
  box.x_max = parse_number(fields[2], line);
  box.y_max = parse_number(fields[3], line);
  if (box.x_min > box.x_max) {
    throw ParseError(line, "x_min exceeds x_max");
  }
  if (box.y_min > box.y_max) {
    throw ParseError(line, "y_min exceeds y_max");
  }
  return box;
}

template <typename LineFn>
void for_each_line(std::string_view text, LineFn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    ++line_no;
    const auto line = trim(text.substr(pos, end - pos));
    if (!line.empty()) {
      fn(line, line_no);
    }
    if (nl == std::string_view::npos) {
      break;
    }
    pos = nl + 1;
  }
}

double pair_score(const AnnotatedBox& a, const AnnotatedBox& b) {
  const double denom = a.area() + b.area();
  return denom > 0.0 ? 2.0 * intersection_area(a, b) / denom : 0.0;
}

double best_match(const AnnotatedBox& box, std::span<const AnnotatedBox> others, Diagnostics* diagnostics,
                  std::string_view role) {
  if (box.area() <= 0.0) {
    if (diagnostics != nullptr) {
      diagnostics->messages.push_back("zero-area " + std::string(role) + " box contributes 0");
    }
    return 0.0;
  }
  double best = 0.0;
  for (const auto& other : others) {
    best = std::max(best, pair_score(box, other));
  }
  return best;
}

}  // namespace

MatchMode parse_match_mode(std::string_view name) {
  if (name == "bestmatch" || name == "best-match") return MatchMode::BestMatch;
  if (name == "iou50" || name == "iou") return MatchMode::IoUAt50;
  throw ConfigError("unknown match mode '" + std::string(name) + "' (expected iou50 or bestmatch)");
}

std::string_view to_string(MatchMode mode) { return mode == MatchMode::BestMatch ? "bestmatch" : "iou50"; }

ImageAnnotations parse_gt_icdar2013(std::string_view text, std::string image_id) {
  ImageAnnotations out{std::move(image_id), {}};
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    std::string_view coords = line;
    std::optional<std::string> transcription;
    if (const auto q = line.find('"'); q != std::string_view::npos) {
      const auto q_end = line.rfind('"');
      if (q_end == q) {
        throw ParseError(line_no, "unterminated transcription");
      }
      transcription = std::string(line.substr(q + 1, q_end - q - 1));
      coords = line.substr(0, q);
    }
    const auto fields = split_fields(coords);
    if (fields.size() < 4) {
      throw ParseError(line_no, "expected four coordinates");
    }
    if (fields.size() > 4) {
      if (transcription) {
        throw ParseError(line_no, "unexpected field before transcription");
      }
      // Unquoted transcription: the remainder after the fourth coordinate.
      const auto rest_start = static_cast<std::size_t>(fields[4].data() - coords.data());
      transcription = std::string(trim(coords.substr(rest_start)));
    }
    AnnotatedBox box = box_from_fields(fields, line_no);
    box.dont_care = transcription.has_value() && *transcription == kDontCare;
    box.transcription = std::move(transcription);
    out.boxes.push_back(std::move(box));
  });
  return out;
}

ImageAnnotations parse_detections(std::string_view text, std::string image_id) {
  ImageAnnotations out{std::move(image_id), {}};
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const auto fields = split_fields(line);
    if (fields.size() != 4 && fields.size() != 5) {
      throw ParseError(line_no, "expected x_min,y_min,x_max,y_max[,confidence]");
    }
    AnnotatedBox box = box_from_fields(fields, line_no);
    if (fields.size() == 5) {
      box.confidence = parse_number(fields[4], line_no);
    }
    out.boxes.push_back(std::move(box));
  });
  return out;
}

std::string format_detections(const ImageAnnotations& detections) {
  std::string out;
  char buf[32];
  auto put = [&](double v) {
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
  };
  for (const auto& b : detections.boxes) {
    put(b.x_min);
    out += ',';
    put(b.y_min);
    out += ',';
    put(b.x_max);
    out += ',';
    put(b.y_max);
    if (b.confidence) {
      out += ',';
      put(*b.confidence);
    }
    out += '\n';
  }
  return out;
}

double intersection_area(const AnnotatedBox& a, const AnnotatedBox& b) {
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  return std::max(0.0, w) * std::max(0.0, h);
}

double iou(const AnnotatedBox& a, const AnnotatedBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double best_match_g(const AnnotatedBox& gi, std::span<const AnnotatedBox> detections, Diagnostics* diagnostics) {
  return best_match(gi, detections, diagnostics, "ground-truth");
}

double best_match_d(const AnnotatedBox& dj, std::span<const AnnotatedBox> ground_truth, Diagnostics* diagnostics) {
  return best_match(dj, ground_truth, diagnostics, "detection");
}

double hmean(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

EvalScores scores_from_tallies(double precision_num, double precision_den, double recall_num, double recall_den) {
  EvalScores s;
  s.precision_num = precision_num;
  s.precision_den = precision_den;
  s.recall_num = recall_num;
  s.recall_den = recall_den;
  const bool both_empty = precision_den == 0.0 && recall_den == 0.0;
  s.precision = precision_den > 0.0 ? precision_num / precision_den : (both_empty ? 1.0 : 0.0);
  s.recall = recall_den > 0.0 ? recall_num / recall_den : (both_empty ? 1.0 : 0.0);
  s.hmean = hmean(s.precision, s.recall);
  return s;
}

std::vector<Match> greedy_iou_matching(std::span<const AnnotatedBox> ground_truth,
                                       std::span<const AnnotatedBox> detections, double threshold) {
  std::vector<Match> candidates;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    for (std::size_t j = 0; j < detections.size(); ++j) {
      const double v = iou(ground_truth[i], detections[j]);
      if (v >= threshold) {
        candidates.push_back({i, j, v});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Match& a, const Match& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.gt_index != b.gt_index) return a.gt_index < b.gt_index;
    return a.det_index < b.det_index;
  });
  std::vector<bool> gt_used(ground_truth.size(), false);
  std::vector<bool> det_used(detections.size(), false);
  std::vector<Match> matches;
  for (const auto& c : candidates) {
    if (!gt_used[c.gt_index] && !det_used[c.det_index]) {
      gt_used[c.gt_index] = true;
      det_used[c.det_index] = true;
      matches.push_back(c);
    }
  }
  return matches;
}

EvalScores score_image(const ImageAnnotations& ground_truth, const ImageAnnotations& detections, MatchMode mode,
                       Diagnostics* diagnostics) {
  std::vector<AnnotatedBox> gt;
  std::vector<AnnotatedBox> dont_care;
  for (const auto& b : ground_truth.boxes) {
    (b.dont_care ? dont_care : gt).push_back(b);
  }
  std::vector<AnnotatedBox> det;
  for (const auto& d : detections.boxes) {
    const bool covers_dont_care =
        std::any_of(dont_care.begin(), dont_care.end(), [&](const AnnotatedBox& c) { return iou(d, c) >= 0.5; });
    if (!covers_dont_care) {
      det.push_back(d);
    }
  }

  const auto n_gt = static_cast<double>(gt.size());
  const auto n_det = static_cast<double>(det.size());
  if (mode == MatchMode::IoUAt50) {
    const auto matched = static_cast<double>(greedy_iou_matching(gt, det).size());
    return scores_from_tallies(matched, n_det, matched, n_gt);
  }
  double precision_num = 0.0;
  for (const auto& d : det) {
    precision_num += best_match_d(d, gt, diagnostics);
  }
  double recall_num = 0.0;
  for (const auto& g : gt) {
    recall_num += best_match_g(g, det, diagnostics);
  }
  return scores_from_tallies(precision_num, n_det, recall_num, n_gt);
}

EvalScores aggregate(std::span<const EvalScores> per_image) {
  if (per_image.empty()) {
    throw InvalidInput("cannot aggregate an empty list of scores");
  }
  double pn = 0.0, pd = 0.0, rn = 0.0, rd = 0.0;
  for (const auto& s : per_image) {
    pn += s.precision_num;
    pd += s.precision_den;
    rn += s.recall_num;
    rd += s.recall_den;
  }
  return scores_from_tallies(pn, pd, rn, rd);
}

}  // namespace bdcraft
