#include <charconv>
#include <cmath>
#include <set>
#include <thread>

#include "bdcraft/error.hpp"
#include "bdcraft/pipeline.hpp"

namespace bdcraft {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("invalid boolean '" + std::string(value) + "' for " + std::string(key));
}

}  // namespace

PipelineMode parse_pipeline_mode(std::string_view name) {
  if (name == "baseline") return PipelineMode::Baseline;
  if (name == "deblur_all" || name == "deblur-all") return PipelineMode::DeblurAll;
  if (name == "deblur_blurry_only" || name == "deblur-blurry-only" || name == "blurry") {
    return PipelineMode::DeblurBlurryOnly;
  }
  throw ConfigError("unknown mode '" + std::string(name) + "' (expected baseline, deblur_all, deblur_blurry_only)");
}

std::string_view to_string(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::Baseline:
      return "baseline";
    case PipelineMode::DeblurAll:
      return "deblur_all";
    case PipelineMode::DeblurBlurryOnly:
      return "deblur_blurry_only";
  }
  return "unknown";
}

std::size_t default_parallelism() { return std::max(1u, std::thread::hardware_concurrency()); }

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    out[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
  }
  return out;
}

std::vector<PsfDims> parse_psf_grid(std::string_view text) {
  std::vector<PsfDims> grid;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const auto lo = parse_number<std::size_t>("grid", trim(text.substr(0, dots)));
    const auto hi = parse_number<std::size_t>("grid", trim(text.substr(dots + 2)));
    if (lo < 1 || hi > Psf::kMaxExtent || lo > hi) {
      throw ConfigError("grid range must lie within 1..7");
    }
    for (std::size_t r = lo; r <= hi; ++r) {
      for (std::size_t c = lo; c <= hi; ++c) {
        grid.push_back({r, c});
      }
    }
    return grid;
  }
  std::set<PsfDims> seen;
  while (!text.empty()) {
    const auto comma = text.find_first_of(",;");
    const auto item = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item.empty()) {
      continue;
    }
    const PsfDims d = parse_psf_dims(item);
    if (!seen.insert(d).second) {
      throw ConfigError("PSF " + to_string(d) + " appears twice in the grid");
    }
    grid.push_back(d);
  }
  if (grid.empty()) {
    throw ConfigError("PSF grid is empty");
  }
  return grid;
}

void apply_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  if (key == "dataset_dir") {
    config.dataset_dir = std::string(value);
  } else if (key == "detector") {
    config.detector = parse_detector_source(value);
  } else if (key == "mode") {
    config.mode = parse_pipeline_mode(value);
  } else if (key == "psf") {
    config.psf = parse_psf_dims(value);
  } else if (key == "grid") {
    config.grid = parse_psf_grid(value);
  } else if (key == "threshold") {
    config.threshold = parse_number<double>(key, value);
  } else if (key == "iterations") {
    config.iterations = parse_number<std::size_t>(key, value);
  } else if (key == "symmetric_psf") {
    config.symmetric_psf = parse_bool(key, value);
  } else if (key == "laplacian") {
    config.laplacian = parse_laplacian_kind(value);
  } else if (key == "match_mode") {
    config.match_mode = parse_match_mode(value);
  } else if (key == "output_dir") {
    config.output_dir = std::string(value);
  } else if (key == "parallelism") {
    config.parallelism = parse_number<std::size_t>(key, value);
  } else if (key == "failure_budget") {
    config.failure_budget = parse_number<std::size_t>(key, value);
  } else if (key == "detector_timeout") {
    const auto seconds = parse_number<double>(key, value);
    if (!(seconds > 0.0)) {
      throw ConfigError("detector_timeout must be positive");
    }
    config.detector_timeout = std::chrono::milliseconds(static_cast<long long>(std::llround(seconds * 1000.0)));
  } else if (key == "cache_dir") {
    config.cache_dir = std::string(value);
  } else {
    throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  }
}

void validate_run_config(const RunConfig& config) {
  if (config.dataset_dir.empty()) {
    throw ConfigError("dataset_dir is required");
  }
  if (!(config.threshold > 0.0) || !std::isfinite(config.threshold)) {
    throw ConfigError("threshold must be positive");
  }
  if (config.iterations == 0) {
    throw ConfigError("iterations must be at least 1");
  }
  if (config.parallelism == 0) {
    throw ConfigError("parallelism must be at least 1");
  }
  if (config.mode != PipelineMode::Baseline && !config.psf && config.grid.empty()) {
    throw ConfigError("mode " + std::string(to_string(config.mode)) + " needs psf or grid");
  }
}

}  // namespace bdcraft
