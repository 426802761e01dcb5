#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "bdcraft/eval.hpp"
#include "bdcraft/raster.hpp"

namespace bdcraft {

/// Deterministic damage applied by the mock detector to the ground truth.
struct PerturbationSpec {
  double drop_fraction = 0.0;
  double jitter_px = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;
};

/// Reads `res_<image_id>.txt` from a directory.
struct PrecomputedSource {
  std::filesystem::path dir;
};

/// Runs a child process per image. The template must contain the
/// placeholders {input_image} and {output_file}; they are substituted with
/// single-quoted paths and the result is run through /bin/sh.
struct ExternalCommandSource {
  std::string command_template;
  std::chrono::milliseconds timeout{std::chrono::seconds(120)};
  /// When set, outputs are kept here and reused instead of re-running.
  std::optional<std::filesystem::path> cache_dir;
};

/// Echoes the injected ground truth, perturbed per spec.
struct MockSource {
  PerturbationSpec perturbation;
};

using DetectorSource = std::variant<PrecomputedSource, ExternalCommandSource, MockSource>;

/// Parses "precomputed:<dir>", "command:<template>", "mock" or
/// "mock:drop=<f>,jitter=<px>,seed=<n>".
DetectorSource parse_detector_source(std::string_view text);
std::string describe(const DetectorSource& source);

/// Drops round(drop_fraction * n) boxes chosen by a seeded shuffle and adds
/// uniform jitter in [-jitter_px, jitter_px] to every remaining coordinate.
/// Output boxes carry no transcription and no don't-care flag. Pure in
/// (ground truth, spec).
ImageAnnotations perturb_ground_truth(const ImageAnnotations& ground_truth, const PerturbationSpec& spec);

struct DetectionOutcome {
  ImageAnnotations detections;
  bool ok = true;
  std::string error;
  bool cache_hit = false;
};

/// Uniform front end over every detector source. Failures never throw; they
/// come back as an outcome with `ok == false` and no detections.
///
/// Thread-safe. Results of the external command are memoised per
/// (image content hash, preprocessing descriptor) for the lifetime of the
/// object, and concurrent requests for the same key share one invocation.
class Detector {
 public:
  explicit Detector(DetectorSource source);

  DetectionOutcome detect(const std::string& image_id, const Raster& image,
                          const ImageAnnotations* ground_truth = nullptr, std::string_view preprocessing = "none");

  const DetectorSource& source() const noexcept { return source_; }

  /// Number of child processes launched so far.
  std::size_t invocations() const noexcept { return invocations_.load(); }

 private:
  DetectionOutcome run_external(const ExternalCommandSource& src, const std::string& image_id, const Raster& image,
                                const std::string& key);

  DetectorSource source_;
  std::mutex mutex_;
  std::map<std::string, std::shared_future<DetectionOutcome>> memo_;
  std::atomic<std::size_t> invocations_{0};
};

}  // namespace bdcraft
