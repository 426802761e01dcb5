#include "bdcraft/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <ctime>
#include <json.hpp>
#include <set>

#include "bdcraft/error.hpp"
#include "bdcraft/hash.hpp"
#include "bdcraft/image_io.hpp"
#include "bdcraft/parallel.hpp"
#include "bdcraft/report.hpp"
#include "bdcraft/simd/kernels.hpp"
#include "bdcraft/text_io.hpp"

namespace bdcraft {
namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

DetectorSource effective_source(const RunConfig& config) {
  DetectorSource source = config.detector;
  if (auto* cmd = std::get_if<ExternalCommandSource>(&source)) {
    cmd->timeout = config.detector_timeout;
    if (config.cache_dir) {
      cmd->cache_dir = config.cache_dir;
    }
  }
  return source;
}

std::vector<std::pair<std::string, std::string>> echo_config(const RunConfig& c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", c.threshold);
  std::string grid;
  for (const auto& d : c.grid) {
    grid += (grid.empty() ? "" : ",") + to_string(d);
  }
  return {
      {"dataset_dir", c.dataset_dir.string()},
      {"detector", describe(c.detector)},
      {"mode", std::string(to_string(c.mode))},
      {"psf", c.psf ? to_string(*c.psf) : "none"},
      {"grid", grid},
      {"threshold", buf},
      {"iterations", std::to_string(c.iterations)},
      {"symmetric_psf", c.symmetric_psf ? "true" : "false"},
      {"laplacian", c.laplacian == LaplacianKind::FourNeighbor ? "4" : "8"},
      {"match_mode", std::string(to_string(c.match_mode))},
      {"failure_budget", c.failure_budget ? std::to_string(*c.failure_budget) : "unlimited"},
      {"detector_timeout_ms", std::to_string(c.detector_timeout.count())},
      {"detector_input", "restored grayscale, 8-bit PNG"},
  };
}

ordered_json scores_json(const EvalScores& s) {
  return {{"precision", s.precision},         {"recall", s.recall},
          {"hmean", s.hmean},                 {"precision_num", s.precision_num},
          {"precision_den", s.precision_den}, {"recall_num", s.recall_num},
          {"recall_den", s.recall_den}};
}

}  // namespace

bool natural_less(std::string_view a, std::string_view b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (std::isdigit(static_cast<unsigned char>(a[i])) && std::isdigit(static_cast<unsigned char>(b[j]))) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      auto na = a.substr(i, ie - i);
      auto nb = b.substr(j, je - j);
      na.remove_prefix(std::min(na.find_first_not_of('0'), na.size()));
      nb.remove_prefix(std::min(nb.find_first_not_of('0'), nb.size()));
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  if (a.size() - i != b.size() - j) return a.size() - i < b.size() - j;
  return a < b;
}

DatasetListing discover_dataset(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw DataError("dataset directory " + dir.string() + " does not exist");
  }
  std::map<std::string, fs::path> images;
  std::map<std::string, fs::path> gts;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) {
      continue;
    }
    const auto& p = entry.path();
    const std::string name = p.filename().string();
    if (is_supported_image(p)) {
      images[p.stem().string()] = p;
    } else if (name.starts_with("gt_") && p.extension() == ".txt") {
      gts[p.stem().string().substr(3)] = p;
    }
  }
  DatasetListing listing;
  for (const auto& [id, path] : images) {
    const auto gt = gts.find(id);
    if (gt == gts.end()) {
      listing.warnings.push_back("image " + path.filename().string() + " has no gt_" + id + ".txt; skipped");
      continue;
    }
    listing.items.push_back({id, path, gt->second});
  }
  for (const auto& [id, path] : gts) {
    if (!images.contains(id)) {
      listing.warnings.push_back("ground truth " + path.filename().string() + " has no image; skipped");
    }
  }
  std::sort(listing.items.begin(), listing.items.end(),
            [](const DatasetItem& a, const DatasetItem& b) { return natural_less(a.image_id, b.image_id); });
  return listing;
}

RunReport run(const RunConfig& config, Detector* detector) {
  validate_run_config(config);
  if (config.mode != PipelineMode::Baseline && !config.psf) {
    throw ConfigError("run in mode " + std::string(to_string(config.mode)) + " needs a psf");
  }
  std::optional<Detector> local;
  if (detector == nullptr) {
    local.emplace(effective_source(config));
    detector = &*local;
  }

  RunReport report;
  report.manifest.started_at = utc_now();
  report.manifest.parallelism = config.parallelism;
  report.manifest.simd_backend = std::string(simd::to_string(simd::active_backend()));
  report.manifest.config = echo_config(config);
  report.manifest.config_description = describe(config.detector);

  DatasetListing listing = discover_dataset(config.dataset_dir);
  report.manifest.warnings = listing.warnings;
  if (listing.items.empty()) {
    throw DataError("dataset " + config.dataset_dir.string() + " contains no image/ground-truth pairs");
  }

  const std::size_t n = listing.items.size();
  report.per_image.resize(n);
  report.manifest.inputs.resize(n);
  std::string descriptor;
  if (config.psf) {
    descriptor = "bd:" + to_string(*config.psf) + ":i" + std::to_string(config.iterations) +
                 (config.symmetric_psf ? ":sym" : "");
  }

  parallel_for(n, config.parallelism, [&](std::size_t i) {
    const DatasetItem& item = listing.items[i];
    const Raster image = load_grayscale(item.image_path);
    const ImageAnnotations gt = parse_gt_icdar2013(read_text_file(item.gt_path), item.image_id);
    const FocusVerdict verdict = classify(image, config.threshold, config.laplacian);

    const bool deblur = config.mode == PipelineMode::DeblurAll ||
                        (config.mode == PipelineMode::DeblurBlurryOnly && verdict.label == FocusLabel::Blurry);
    ImageResult& result = report.per_image[i];
    result.image_id = item.image_id;
    result.measure = verdict.measure;
    result.label = verdict.label;
    result.gt_boxes = gt.boxes.size();

    DetectionOutcome outcome;
    if (deblur) {
      const DeconvOptions options{config.iterations, config.symmetric_psf, 1e-6};
      const DeconvResult restored = blind_deconvolve(image, init_psf(config.psf->rows, config.psf->cols), options);
      result.psf_used = config.psf;
      outcome = detector->detect(item.image_id, restored.restored, &gt, descriptor);
    } else {
      outcome = detector->detect(item.image_id, image, &gt, "none");
    }
    result.detector_ok = outcome.ok;
    result.detector_error = outcome.error;
    result.detections = outcome.detections.boxes.size();
    result.scores = score_image(gt, outcome.detections, config.match_mode);

    report.manifest.inputs[i] = {item.image_id, sha256_file(item.image_path), sha256_file(item.gt_path)};
  });

  std::vector<EvalScores> tallies;
  tallies.reserve(n);
  for (const auto& r : report.per_image) {
    tallies.push_back(r.scores);
    if (!r.detector_ok) {
      ++report.detector_failures;
    }
  }
  report.aggregate = aggregate(tallies);
  report.manifest.finished_at = utc_now();
  return report;
}

void write_run_report(const RunReport& report, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  }

  std::string csv = "image_id,measure,label,precision,recall,hmean,psf,status\n";
  char measure[64];
  for (const auto& r : report.per_image) {
    std::snprintf(measure, sizeof measure, "%.6f", r.measure);
    csv += r.image_id + "," + measure + "," + std::string(to_string(r.label)) + "," + percent(r.scores.precision) +
           "," + percent(r.scores.recall) + "," + percent(r.scores.hmean) + "," +
           (r.psf_used ? to_string(*r.psf_used) : "none") + "," + (r.detector_ok ? "ok" : "failed") + "\n";
  }
  write_text_file(dir / "report.csv", csv);

  ordered_json per_image = ordered_json::array();
  for (const auto& r : report.per_image) {
    ordered_json row{{"image_id", r.image_id},
                     {"measure", r.measure},
                     {"label", to_string(r.label)},
                     {"psf", r.psf_used ? ordered_json(to_string(*r.psf_used)) : ordered_json(nullptr)},
                     {"gt_boxes", r.gt_boxes},
                     {"detections", r.detections},
                     {"scores", scores_json(r.scores)},
                     {"detector", r.detector_ok ? "ok" : "failed"}};
    if (!r.detector_ok) {
      row["error"] = r.detector_error;
    }
    per_image.push_back(std::move(row));
  }
  const ordered_json doc{{"images", per_image.size()},
                         {"detector_failures", report.detector_failures},
                         {"aggregate", scores_json(report.aggregate)},
                         {"per_image", per_image}};
  write_text_file(dir / "report.json", doc.dump(2) + "\n");

  ordered_json config = ordered_json::object();
  for (const auto& [k, v] : report.manifest.config) {
    config[k] = v;
  }
  ordered_json inputs = ordered_json::array();
  for (const auto& h : report.manifest.inputs) {
    inputs.push_back({{"image_id", h.image_id}, {"image_sha256", h.image_sha256}, {"gt_sha256", h.gt_sha256}});
  }
  const ordered_json manifest{{"config", config},
                              {"inputs", inputs},
                              {"warnings", report.manifest.warnings},
                              {"execution",
                               {{"started_at", report.manifest.started_at},
                                {"finished_at", report.manifest.finished_at},
                                {"parallelism", report.manifest.parallelism},
                                {"simd_backend", report.manifest.simd_backend}}}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<SweepRow> sweep(const RunConfig& config, std::span<const PsfDims> grid) {
  if (config.mode == PipelineMode::Baseline) {
    throw ConfigError("sweep needs mode deblur_all or deblur_blurry_only");
  }
  if (grid.empty()) {
    throw ConfigError("sweep needs a non-empty PSF grid");
  }
  std::set<PsfDims> seen;
  for (const auto& d : grid) {
    if (d.rows < 1 || d.rows > Psf::kMaxExtent || d.cols < 1 || d.cols > Psf::kMaxExtent) {
      throw ConfigError("PSF " + to_string(d) + " lies outside 1..7");
    }
    if (!seen.insert(d).second) {
      throw ConfigError("PSF " + to_string(d) + " appears twice in the grid");
    }
  }
  RunConfig cell = config;
  cell.psf = grid.front();
  validate_run_config(cell);

  Detector detector(effective_source(config));
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (const auto& dims : grid) {
    cell.psf = dims;
    const RunReport report = run(cell, &detector);
    if (!config.output_dir.empty()) {
      write_run_report(report, config.output_dir / ("psf_" + to_string(dims)));
    }
    rows.push_back({dims, report.aggregate, report.detector_failures, false});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.scores.hmean != b.scores.hmean) return a.scores.hmean > b.scores.hmean;
    return a.dims < b.dims;
  });
  rows.front().best = true;
  return rows;
}

void write_sweep_table(std::span<const SweepRow> rows, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  }
  std::string csv = "rank,psf,precision,recall,hmean,best\n";
  ordered_json table = ordered_json::array();
  std::size_t rank = 1;
  for (const auto& r : rows) {
    csv += std::to_string(rank) + ",\"(" + std::to_string(r.dims.rows) + "," + std::to_string(r.dims.cols) +
           ")\"," + percent(r.scores.precision) + "," + percent(r.scores.recall) + "," + percent(r.scores.hmean) +
           "," + (r.best ? "yes" : "") + "\n";
    table.push_back({{"rank", rank},
                     {"psf", to_string(r.dims)},
                     {"best", r.best},
                     {"detector_failures", r.detector_failures},
                     {"scores", scores_json(r.scores)}});
    ++rank;
  }
  write_text_file(dir / "sweep.csv", csv);
  write_text_file(dir / "sweep.json", ordered_json{{"rows", table}}.dump(2) + "\n");
}

}  // namespace bdcraft
