#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bdcraft/deconv.hpp"
#include "bdcraft/detector.hpp"
#include "bdcraft/eval.hpp"
#include "bdcraft/focus.hpp"

namespace bdcraft {

enum class PipelineMode {
  /// Detect on the input as is.
  Baseline,
  /// Deconvolve every image before detection.
  DeblurAll,
  /// Deconvolve only images classified Blurry.
  DeblurBlurryOnly,
};

PipelineMode parse_pipeline_mode(std::string_view name);
std::string_view to_string(PipelineMode mode);

struct RunConfig {
  std::filesystem::path dataset_dir;
  DetectorSource detector = MockSource{};
  PipelineMode mode = PipelineMode::DeblurBlurryOnly;
  std::optional<PsfDims> psf;
  std::vector<PsfDims> grid;
  double threshold = kDefaultBlurThreshold;
  std::size_t iterations = 10;
  bool symmetric_psf = false;
  LaplacianKind laplacian = LaplacianKind::FourNeighbor;
  MatchMode match_mode = MatchMode::IoUAt50;
  std::filesystem::path output_dir;
  std::size_t parallelism = 1;
  /// Detector failures tolerated before a run counts as failed.
  std::optional<std::size_t> failure_budget;
  std::chrono::milliseconds detector_timeout{std::chrono::seconds(120)};
  std::optional<std::filesystem::path> cache_dir;
};

/// Default parallelism: the number of hardware threads (at least 1).
std::size_t default_parallelism();

/// Throws ConfigError when the configuration cannot drive `run`.
void validate_run_config(const RunConfig& config);

/// Flat "key = value" text, '#' starts a comment. Throws ConfigError on a
/// line without '='.
std::map<std::string, std::string> parse_key_values(std::string_view text);

/// Applies one configuration key; throws ConfigError for unknown keys or bad
/// values. Keys mirror the RunConfig fields (detector_timeout in seconds).
void apply_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// "1..3" expands to the square grid {1..3}^2; otherwise a comma list of RxC.
std::vector<PsfDims> parse_psf_grid(std::string_view text);

struct DatasetItem {
  std::string image_id;
  std::filesystem::path image_path;
  std::filesystem::path gt_path;
};

struct DatasetListing {
  std::vector<DatasetItem> items;
  std::vector<std::string> warnings;
};

/// Pairs every image `<id>.{png,jpg,jpeg}` with `gt_<id>.txt`, in natural
/// order of the id. Unpaired files become warnings.
DatasetListing discover_dataset(const std::filesystem::path& dir);

/// Orders "img_2" before "img_10".
bool natural_less(std::string_view a, std::string_view b);

struct ImageResult {
  std::string image_id;
  double measure = 0.0;
  FocusLabel label = FocusLabel::Blurry;
  std::optional<PsfDims> psf_used;
  EvalScores scores;
  std::size_t gt_boxes = 0;
  std::size_t detections = 0;
  bool detector_ok = true;
  std::string detector_error;
};

struct InputHash {
  std::string image_id;
  std::string image_sha256;
  std::string gt_sha256;
};

struct RunManifest {
  std::string config_description;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<InputHash> inputs;
  std::vector<std::string> warnings;
  /// Execution details that may differ between otherwise identical runs.
  std::string started_at;
  std::string finished_at;
  std::size_t parallelism = 1;
  std::string simd_backend;
};

struct RunReport {
  std::vector<ImageResult> per_image;
  EvalScores aggregate;
  RunManifest manifest;
  std::size_t detector_failures = 0;
};

/// Classify, conditionally deblur, detect and score every image in the
/// dataset. Throws DataError for an empty dataset. Pass `detector` to share a
/// detector (and its cache) between runs.
RunReport run(const RunConfig& config, Detector* detector = nullptr);

/// report.csv, report.json and manifest.json under `dir`.
void write_run_report(const RunReport& report, const std::filesystem::path& dir);

struct SweepRow {
  PsfDims dims;
  EvalScores scores;
  std::size_t detector_failures = 0;
  bool best = false;
};

/// One run per grid cell sharing a single detector; rows sorted by h-mean
/// descending (ties by dims ascending), first row flagged best. Reports for
/// each cell are written to <output_dir>/psf_<RxC> when output_dir is set.
std::vector<SweepRow> sweep(const RunConfig& config, std::span<const PsfDims> grid);

void write_sweep_table(std::span<const SweepRow> rows, const std::filesystem::path& dir);

}  // namespace bdcraft
