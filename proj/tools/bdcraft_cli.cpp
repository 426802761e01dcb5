// bdcraft: blur classification, blind deconvolution and text-detection
// scoring from the command line.
//
// Exit codes: 0 success, 1 configuration error, 2 data error,
// 3 detector failures exceeded the failure budget.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "bdcraft/deconv.hpp"
#include "bdcraft/error.hpp"
#include "bdcraft/focus.hpp"
#include "bdcraft/image_io.hpp"
#include "bdcraft/pipeline.hpp"
#include "bdcraft/report.hpp"
#include "bdcraft/synth.hpp"
#include "bdcraft/text_io.hpp"

namespace fs = std::filesystem;
using namespace bdcraft;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitDetector = 3;

// Expands directories into their supported images (natural order); files pass
// through unchanged.
std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && is_supported_image(e.path())) {
          found.push_back(e.path());
        }
      }
      std::sort(found.begin(), found.end(), [](const fs::path& a, const fs::path& b) {
        return natural_less(a.filename().string(), b.filename().string());
      });
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

/// RunConfig keys exposed as flags; a flag given on the command line
/// overrides the same key from --config.
class RunOptions {
 public:
  explicit RunOptions(CLI::App* cmd) {
    cmd->add_option("--config", config_file_, "Flat key = value configuration file");
    add(cmd, "dataset_dir", "--dataset", "Directory with images and gt_<id>.txt files");
    add(cmd, "detector", "--detector", "precomputed:<dir> | command:<template> | mock[:drop=F,jitter=PX,seed=N]");
    add(cmd, "mode", "--mode", "baseline | deblur_all | deblur_blurry_only");
    add(cmd, "psf", "--psf", "PSF dimensions RxC, e.g. 1x3");
    add(cmd, "grid", "--grid", "PSF grid: A..B (square) or RxC,RxC,...");
    add(cmd, "threshold", "--threshold", "Blur threshold on the focus measure (default 100)");
    add(cmd, "iterations", "--iters", "Richardson-Lucy iterations (default 10)");
    add(cmd, "symmetric_psf", "--symmetric-psf", "Force a symmetric PSF estimate (true/false)");
    add(cmd, "laplacian", "--laplacian", "Laplacian stencil: 4 or 8");
    add(cmd, "match_mode", "--match", "iou50 | bestmatch");
    add(cmd, "output_dir", "--out", "Directory for reports");
    add(cmd, "parallelism", "--jobs", "Concurrent images (default: CPU count)");
    add(cmd, "failure_budget", "--failure-budget", "Detector failures tolerated before exit code 3");
    add(cmd, "detector_timeout", "--timeout", "Detector timeout in seconds (default 120)");
    add(cmd, "cache_dir", "--cache-dir", "Cache directory for external detector outputs");
  }

  RunConfig build() const {
    RunConfig config;
    config.parallelism = default_parallelism();
    if (!config_file_.empty()) {
      for (const auto& [k, v] : parse_key_values(read_text_file(config_file_))) {
        apply_config_value(config, k, v);
      }
    }
    for (const auto& [key, opt] : flags_) {
      if (opt.option->count() > 0) {
        apply_config_value(config, key, *opt.value);
      }
    }
    return config;
  }

 private:
  struct Flag {
    std::shared_ptr<std::string> value;
    CLI::Option* option;
  };

  void add(CLI::App* cmd, const std::string& key, const std::string& flag, const std::string& help) {
    auto value = std::make_shared<std::string>();
    flags_.push_back({key, Flag{value, cmd->add_option(flag, *value, help)}});
  }

  std::string config_file_;
  std::vector<std::pair<std::string, Flag>> flags_;
};

int cmd_classify(double threshold, const std::string& laplacian, const std::vector<std::string>& inputs) {
  const LaplacianKind kind = parse_laplacian_kind(laplacian);
  std::cout << "filename,measure,label\n";
  for (const auto& path : expand_inputs(inputs)) {
    const FocusVerdict v = classify(load_grayscale(path), threshold, kind);
    std::printf("%s,%.6f,%s\n", path.filename().string().c_str(), v.measure, std::string(to_string(v.label)).c_str());
    std::fflush(stdout);
  }
  return kExitOk;
}

int cmd_deblur(const std::string& psf_text, std::size_t iterations, bool symmetric, const std::string& out,
               const std::vector<std::string>& inputs) {
  const PsfDims dims = parse_psf_dims(psf_text);
  const Psf psf0 = init_psf(dims.rows, dims.cols);
  fs::create_directories(out);
  for (const auto& path : expand_inputs(inputs)) {
    const Raster img = load_grayscale(path);
    const DeconvResult r = blind_deconvolve(img, psf0, DeconvOptions{iterations, symmetric, 1e-6});
    const fs::path png = fs::path(out) / (path.stem().string() + ".png");
    save_png(r.restored, png);
    const nlohmann::ordered_json sidecar{{"kw", r.psf_estimate.cols()},
                                         {"kh", r.psf_estimate.rows()},
                                         {"weights", std::vector<double>(r.psf_estimate.weights().begin(),
                                                                         r.psf_estimate.weights().end())}};
    write_text_file(fs::path(out) / (path.stem().string() + ".psf.json"), sidecar.dump() + "\n");
    std::cout << png.string() << "\n";
  }
  return kExitOk;
}

int cmd_evaluate(const std::string& gt_dir, const std::string& det_dir, const std::string& images_dir,
                 const std::string& mode_text, double threshold, const std::string& out) {
  const MatchMode mode = parse_match_mode(mode_text);
  std::vector<std::pair<std::string, fs::path>> gts;
  for (const auto& e : fs::directory_iterator(gt_dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.starts_with("gt_") && e.path().extension() == ".txt") {
      gts.emplace_back(e.path().stem().string().substr(3), e.path());
    }
  }
  if (gts.empty()) {
    throw DataError("no gt_<id>.txt files in " + gt_dir);
  }
  std::sort(gts.begin(), gts.end(), [](const auto& a, const auto& b) { return natural_less(a.first, b.first); });

  std::string csv = "image_id,measure,label,precision,recall,hmean\n";
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  std::vector<EvalScores> all;
  for (const auto& [id, gt_path] : gts) {
    const auto gt = parse_gt_icdar2013(read_text_file(gt_path), id);
    const fs::path res = fs::path(det_dir) / ("res_" + id + ".txt");
    ImageAnnotations dets{id, {}};
    if (fs::exists(res)) {
      dets = parse_detections(read_text_file(res), id);
    } else {
      std::cerr << "warning: " << res.string() << " missing; scored as zero detections\n";
    }
    const EvalScores s = score_image(gt, dets, mode);
    all.push_back(s);

    std::string measure, label;
    if (!images_dir.empty()) {
      for (const char* ext : {".jpg", ".png", ".jpeg", ".JPG", ".PNG"}) {
        const fs::path img = fs::path(images_dir) / (id + ext);
        if (fs::exists(img)) {
          const FocusVerdict v = classify(load_grayscale(img), threshold);
          char buf[64];
          std::snprintf(buf, sizeof buf, "%.6f", v.measure);
          measure = buf;
          label = to_string(v.label);
          break;
        }
      }
    }
    csv += id + "," + measure + "," + label + "," + percent(s.precision) + "," + percent(s.recall) + "," +
           percent(s.hmean) + "\n";
    rows.push_back({{"image_id", id},
                    {"precision_num", s.precision_num},
                    {"precision_den", s.precision_den},
                    {"recall_num", s.recall_num},
                    {"recall_den", s.recall_den}});
  }
  const EvalScores agg = aggregate(all);
  const nlohmann::ordered_json doc{{"match_mode", to_string(mode)},
                                   {"images", all.size()},
                                   {"aggregate",
                                    {{"precision", agg.precision},
                                     {"recall", agg.recall},
                                     {"hmean", agg.hmean},
                                     {"precision_num", agg.precision_num},
                                     {"precision_den", agg.precision_den},
                                     {"recall_num", agg.recall_num},
                                     {"recall_den", agg.recall_den}}},
                                   {"per_image", rows}};
  if (out.empty()) {
    std::cout << csv;
  } else {
    fs::create_directories(out);
    write_text_file(fs::path(out) / "evaluation.csv", csv);
    write_text_file(fs::path(out) / "report.json", doc.dump(2) + "\n");
  }
  std::cerr << "aggregate: P " << percent(agg.precision) << "%  R " << percent(agg.recall) << "%  H "
            << percent(agg.hmean) << "%\n";
  return kExitOk;
}

int budget_exit(const RunConfig& config, std::size_t failures) {
  if (config.failure_budget && failures > *config.failure_budget) {
    std::cerr << "error: " << failures << " detector failures exceed the budget of " << *config.failure_budget
              << "\n";
    return kExitDetector;
  }
  return kExitOk;
}

int cmd_run(const RunOptions& options) {
  const RunConfig config = options.build();
  const RunReport report = run(config);
  for (const auto& w : report.manifest.warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  for (const auto& r : report.per_image) {
    if (!r.detector_ok) {
      std::cerr << "warning: detector failed on " << r.image_id << ": " << r.detector_error << "\n";
    }
  }
  if (!config.output_dir.empty()) {
    write_run_report(report, config.output_dir);
  }
  std::cout << "images: " << report.per_image.size() << "  precision: " << percent(report.aggregate.precision)
            << "%  recall: " << percent(report.aggregate.recall) << "%  h-mean: " << percent(report.aggregate.hmean)
            << "%\n";
  return budget_exit(config, report.detector_failures);
}

int cmd_sweep(const RunOptions& options) {
  RunConfig config = options.build();
  if (config.grid.empty()) {
    config.grid = parse_psf_grid("1..3");
  }
  const auto rows = sweep(config, config.grid);
  if (!config.output_dir.empty()) {
    write_sweep_table(rows, config.output_dir);
  }
  std::printf("%-8s  %9s  %9s  %9s\n", "PSF", "Precision", "Recall", "H-Mean");
  std::size_t failures = 0;
  for (const auto& r : rows) {
    const std::string label = "(" + std::to_string(r.dims.rows) + "," + std::to_string(r.dims.cols) + ")";
    std::printf("%-8s  %8s%%  %8s%%  %8s%%%s\n", label.c_str(), percent(r.scores.precision).c_str(),
                percent(r.scores.recall).c_str(), percent(r.scores.hmean).c_str(), r.best ? "  best" : "");
    failures = std::max(failures, r.detector_failures);
  }
  return budget_exit(config, failures);
}

int cmd_synth(std::size_t n, std::uint64_t seed, const std::string& out) {
  const CorpusManifest m = generate_synthetic_corpus(n, seed, out);
  const auto blurred = std::count_if(m.entries.begin(), m.entries.end(), [](const CorpusEntry& e) { return e.blurred; });
  std::cout << "wrote " << m.entries.size() << " images (" << blurred << " blurred) to " << out << "\n";
  return kExitOk;
}

// Entry forms: name=path/to/report.json or name=P,R (percentages).
RankingEntry parse_entry(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("ranking entry '" + text + "' must be NAME=report.json or NAME=P,R");
  }
  RankingEntry e{text.substr(0, eq), {}};
  const std::string value = text.substr(eq + 1);
  if (const auto comma = value.find(','); comma != std::string::npos && !fs::exists(value)) {
    try {
      const double p = std::stod(value.substr(0, comma)) / 100.0;
      const double r = std::stod(value.substr(comma + 1)) / 100.0;
      e.scores.precision = p;
      e.scores.recall = r;
      e.scores.hmean = hmean(p, r);
    } catch (const std::logic_error&) {
      throw ConfigError("malformed precision/recall pair in '" + text + "'");
    }
  } else {
    e.scores = load_aggregate(value);
  }
  return e;
}

int cmd_report(const std::vector<std::string>& entries, bool csv) {
  std::vector<RankingEntry> parsed;
  for (const auto& e : entries) {
    parsed.push_back(parse_entry(e));
  }
  const auto ranked = report_ranking(std::move(parsed));
  std::cout << (csv ? render_ranking_csv(ranked) : render_ranking_table(ranked));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blur-aware preprocessing and evaluation for scene text detection"};
  app.require_subcommand(1);

  auto* classify_cmd = app.add_subcommand("classify", "Variance-of-Laplacian blur classification");
  double classify_threshold = kDefaultBlurThreshold;
  std::string laplacian = "4";
  std::vector<std::string> classify_inputs;
  classify_cmd->add_option("--threshold", classify_threshold, "Focus measure threshold")->capture_default_str();
  classify_cmd->add_option("--laplacian", laplacian, "Laplacian stencil: 4 or 8")->capture_default_str();
  classify_cmd->add_option("paths", classify_inputs, "Images or directories")->required();

  auto* deblur_cmd = app.add_subcommand("deblur", "Blind deconvolution of images");
  std::string psf = "1x3";
  std::size_t iterations = 10;
  bool symmetric = false;
  std::string deblur_out;
  std::vector<std::string> deblur_inputs;
  deblur_cmd->add_option("--psf", psf, "Initial PSF dimensions RxC")->capture_default_str();
  deblur_cmd->add_option("--iters", iterations, "Iterations")->capture_default_str();
  deblur_cmd->add_flag("--symmetric", symmetric, "Force a symmetric PSF estimate");
  deblur_cmd->add_option("--out", deblur_out, "Output directory")->required();
  deblur_cmd->add_option("paths", deblur_inputs, "Images or directories")->required();

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score detection files against ground truth");
  std::string gt_dir, det_dir, images_dir, match = "iou50", eval_out;
  double eval_threshold = kDefaultBlurThreshold;
  evaluate_cmd->add_option("--gt-dir", gt_dir, "Directory of gt_<id>.txt files")->required();
  evaluate_cmd->add_option("--det-dir", det_dir, "Directory of res_<id>.txt files")->required();
  evaluate_cmd->add_option("--images", images_dir, "Image directory; adds focus measure columns");
  evaluate_cmd->add_option("--match", match, "iou50 | bestmatch")->capture_default_str();
  evaluate_cmd->add_option("--threshold", eval_threshold, "Blur threshold for the label column");
  evaluate_cmd->add_option("--out", eval_out, "Write evaluation.csv and report.json here");

  auto* run_cmd = app.add_subcommand("run", "Classify, deblur, detect and score a dataset");
  RunOptions run_options(run_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "Run the pipeline over a grid of PSF dimensions");
  RunOptions sweep_options(sweep_cmd);

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic text corpus with exact ground truth");
  std::size_t synth_n = 50;
  std::uint64_t synth_seed = 1;
  std::string synth_out;
  synth_cmd->add_option("--n", synth_n, "Number of images")->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();

  auto* report_cmd = app.add_subcommand("report", "Rank methods by h-mean");
  std::vector<std::string> entries;
  bool report_csv = false;
  report_cmd->add_option("entries", entries, "NAME=report.json or NAME=P,R (percent)")->required();
  report_cmd->add_flag("--csv", report_csv, "Emit CSV instead of a text table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*classify_cmd) return cmd_classify(classify_threshold, laplacian, classify_inputs);
    if (*deblur_cmd) return cmd_deblur(psf, iterations, symmetric, deblur_out, deblur_inputs);
    if (*evaluate_cmd) return cmd_evaluate(gt_dir, det_dir, images_dir, match, eval_threshold, eval_out);
    if (*run_cmd) return cmd_run(run_options);
    if (*sweep_cmd) return cmd_sweep(sweep_options);
    if (*synth_cmd) return cmd_synth(synth_n, synth_seed, synth_out);
    if (*report_cmd) return cmd_report(entries, report_csv);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitConfig;
}
