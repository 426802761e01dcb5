#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bdcraft {

/// Axis-aligned box shared by ground truth and detections.
struct AnnotatedBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  std::optional<std::string> transcription;
  bool dont_care = false;
  std::optional<double> confidence;

  double area() const noexcept { return (x_max - x_min) * (y_max - y_min); }

  friend bool operator==(const AnnotatedBox&, const AnnotatedBox&) = default;
};

struct ImageAnnotations {
  std::string image_id;
  std::vector<AnnotatedBox> boxes;

  friend bool operator==(const ImageAnnotations&, const ImageAnnotations&) = default;
};

/// Scores plus the raw tallies that produced them; tallies make
/// micro-aggregation over a dataset exact.
struct EvalScores {
  double precision = 0.0;
  double recall = 0.0;
  double hmean = 0.0;
  double precision_num = 0.0;
  double precision_den = 0.0;
  double recall_num = 0.0;
  double recall_den = 0.0;

  friend bool operator==(const EvalScores&, const EvalScores&) = default;
};

enum class MatchMode {
  /// Continuous 2|A n B| / (|A| + |B|) best-match sums.
  BestMatch,
  /// Greedy one-to-one matching, a pair counts iff IoU >= 0.5.
  IoUAt50,
};

MatchMode parse_match_mode(std::string_view name);
std::string_view to_string(MatchMode mode);

/// Ground truth, one box per non-empty line:
///   x_min, y_min, x_max, y_max, "transcription"
/// Commas or whitespace separate the coordinates; "###" marks don't-care.
/// Throws ParseError with the offending line number.
ImageAnnotations parse_gt_icdar2013(std::string_view text, std::string image_id = "image");

/// Detections, one `x_min,y_min,x_max,y_max[,confidence]` per non-empty line.
ImageAnnotations parse_detections(std::string_view text, std::string image_id = "image");

/// Inverse of parse_detections, shortest round-trip formatting.
std::string format_detections(const ImageAnnotations& detections);

double intersection_area(const AnnotatedBox& a, const AnnotatedBox& b);
double iou(const AnnotatedBox& a, const AnnotatedBox& b);

/// Collects non-fatal anomalies (zero-area boxes and the like).
struct Diagnostics {
  std::vector<std::string> messages;
};

/// max_j 2|g n D_j| / (|g| + |D_j|); 0 for an empty list or a zero-area g.
double best_match_g(const AnnotatedBox& gi, std::span<const AnnotatedBox> detections,
                    Diagnostics* diagnostics = nullptr);
double best_match_d(const AnnotatedBox& dj, std::span<const AnnotatedBox> ground_truth,
                    Diagnostics* diagnostics = nullptr);

/// Builds scores from tallies. A zero denominator yields 1 when both
/// denominators are zero and 0 otherwise.
EvalScores scores_from_tallies(double precision_num, double precision_den, double recall_num, double recall_den);

struct Match {
  std::size_t gt_index;
  std::size_t det_index;
  double iou;
};

/// Greedy one-to-one assignment in descending IoU order, ties broken by the
/// lowest (gt index, det index); only pairs with IoU >= `threshold` match.
std::vector<Match> greedy_iou_matching(std::span<const AnnotatedBox> ground_truth,
                                       std::span<const AnnotatedBox> detections, double threshold = 0.5);

/// Scores one image. Don't-care ground truth is dropped, as is every
/// detection whose IoU with a don't-care box reaches 0.5.
EvalScores score_image(const ImageAnnotations& ground_truth, const ImageAnnotations& detections, MatchMode mode,
                       Diagnostics* diagnostics = nullptr);

/// Micro-aggregation: sums tallies in list order, then recomputes the ratios.
/// Throws InvalidInput for an empty list.
EvalScores aggregate(std::span<const EvalScores> per_image);

/// 2pr / (p + r), or 0 when p + r == 0.
double hmean(double p, double r);

}  // namespace bdcraft
