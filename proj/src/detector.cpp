#include "bdcraft/detector.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cstring>
#include <random>
#include <thread>

#include "bdcraft/error.hpp"
#include "bdcraft/hash.hpp"
#include "bdcraft/image_io.hpp"
#include "bdcraft/text_io.hpp"

namespace bdcraft {
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kInputPlaceholder = "{input_image}";
constexpr std::string_view kOutputPlaceholder = "{output_file}";

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h = (h ^ c) * 0x100000001b3ULL;
  }
  return h;
}

// Uniform in [0, 1) from the top 53 bits; portable across standard libraries.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += '\'';
  return out;
}

std::string replace_all(std::string text, std::string_view what, const std::string& with) {
  for (std::size_t pos = text.find(what); pos != std::string::npos; pos = text.find(what, pos + with.size())) {
    text.replace(pos, what.size(), with);
  }
  return text;
}

double parse_double(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("malformed " + std::string(what) + " '" + std::string(text) + "'");
  }
  return v;
}

PerturbationSpec parse_perturbation(std::string_view text) {
  PerturbationSpec spec;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("mock option '" + std::string(item) + "' must be key=value");
    }
    const auto key = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    if (key == "drop") {
      spec.drop_fraction = parse_double(value, "drop fraction");
    } else if (key == "jitter") {
      spec.jitter_px = parse_double(value, "jitter");
    } else if (key == "seed") {
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), spec.seed);
      if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("malformed mock seed '" + std::string(value) + "'");
      }
    } else {
      throw ConfigError("unknown mock option '" + std::string(key) + "'");
    }
  }
  if (!(spec.drop_fraction >= 0.0 && spec.drop_fraction <= 1.0)) {
    throw ConfigError("mock drop fraction must lie in [0, 1]");
  }
  if (!(spec.jitter_px >= 0.0)) {
    throw ConfigError("mock jitter must be non-negative");
  }
  return spec;
}

struct ProcessResult {
  bool timed_out = false;
  int exit_code = -1;
  std::string diagnostics;
};

ProcessResult run_shell(const std::string& command, std::chrono::milliseconds timeout, const fs::path& log_path) {
  const std::string log = log_path.string();
  const pid_t pid = ::fork();
  if (pid < 0) {
    return {false, -1, std::string("fork failed: ") + std::strerror(errno)};
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    const int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd >= 0) {
      ::dup2(fd, STDOUT_FILENO);
      ::dup2(fd, STDERR_FILENO);
      ::close(fd);
    }
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);

  ProcessResult result;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  int status = 0;
  for (;;) {
    const pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid) {
      break;
    }
    if (done < 0 && errno != EINTR) {
      result.diagnostics = std::string("waitpid failed: ") + std::strerror(errno);
      return result;
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      result.timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (!result.timed_out) {
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  }
  std::error_code ec;
  if (fs::exists(log_path, ec)) {
    try {
      result.diagnostics = read_text_file(log_path);
    } catch (const DataError&) {
    }
  }
  constexpr std::size_t kTail = 2000;
  if (result.diagnostics.size() > kTail) {
    result.diagnostics = result.diagnostics.substr(result.diagnostics.size() - kTail);
  }
  return result;
}

class ScratchDir {
 public:
  ScratchDir() {
    static std::atomic<unsigned> counter{0};
    path_ = fs::temp_directory_path() /
            ("bdcraft-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const fs::path& path() const noexcept { return path_; }

 private:
  fs::path path_;
};

DetectionOutcome failure(const std::string& image_id, std::string message) {
  return DetectionOutcome{ImageAnnotations{image_id, {}}, false, std::move(message), false};
}

std::string content_key(const Raster& image, std::string_view preprocessing) {
  const auto bytes = to_gray8(image);
  const std::string dims = std::to_string(image.width()) + "x" + std::to_string(image.height());
  return sha256_hex(dims + ":" + sha256_hex(bytes) + ":" + std::string(preprocessing));
}

}  // namespace

DetectorSource parse_detector_source(std::string_view text) {
  const auto colon = text.find(':');
  const auto kind = text.substr(0, colon);
  const auto rest = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  if (kind == "mock") {
    return MockSource{parse_perturbation(rest)};
  }
  if (kind == "precomputed") {
    if (rest.empty()) {
      throw ConfigError("precomputed detector needs a directory: precomputed:<dir>");
    }
    return PrecomputedSource{fs::path(std::string(rest))};
  }
  if (kind == "command") {
    ExternalCommandSource src{std::string(rest), std::chrono::seconds(120), std::nullopt};
    if (src.command_template.find(kInputPlaceholder) == std::string::npos ||
        src.command_template.find(kOutputPlaceholder) == std::string::npos) {
      throw ConfigError("detector command must contain {input_image} and {output_file}");
    }
    return src;
  }
  throw ConfigError("unknown detector source '" + std::string(text) +
                    "' (expected precomputed:<dir>, command:<template> or mock[:opts])");
}

std::string describe(const DetectorSource& source) {
  struct Visitor {
    std::string operator()(const PrecomputedSource& s) const { return "precomputed:" + s.dir.string(); }
    std::string operator()(const ExternalCommandSource& s) const { return "command:" + s.command_template; }
    std::string operator()(const MockSource& s) const {
      char buf[128];
      std::snprintf(buf, sizeof buf, "mock:drop=%.17g,jitter=%.17g,seed=%llu", s.perturbation.drop_fraction,
                    s.perturbation.jitter_px, static_cast<unsigned long long>(s.perturbation.seed));
      return buf;
    }
  };
  return std::visit(Visitor{}, source);
}

ImageAnnotations perturb_ground_truth(const ImageAnnotations& ground_truth, const PerturbationSpec& spec) {
  std::mt19937_64 rng(splitmix64(spec.seed ^ fnv1a(ground_truth.image_id)));
  const std::size_t n = ground_truth.boxes.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    order[i] = i;
  }
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng() % i]);
  }
  const auto drop = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(spec.drop_fraction * n)));
  std::vector<std::size_t> keep(order.begin() + static_cast<std::ptrdiff_t>(drop), order.end());
  std::sort(keep.begin(), keep.end());

  ImageAnnotations out{ground_truth.image_id, {}};
  out.boxes.reserve(keep.size());
  for (std::size_t idx : keep) {
    const auto& g = ground_truth.boxes[idx];
    AnnotatedBox d{g.x_min, g.y_min, g.x_max, g.y_max, std::nullopt, false, std::nullopt};
    if (spec.jitter_px > 0.0) {
      auto jitter = [&] { return (2.0 * unit_uniform(rng) - 1.0) * spec.jitter_px; };
      d.x_min += jitter();
      d.y_min += jitter();
      d.x_max += jitter();
      d.y_max += jitter();
      if (d.x_min > d.x_max) std::swap(d.x_min, d.x_max);
      if (d.y_min > d.y_max) std::swap(d.y_min, d.y_max);
    }
    out.boxes.push_back(d);
  }
  return out;
}

Detector::Detector(DetectorSource source) : source_(std::move(source)) {
  if (const auto* cmd = std::get_if<ExternalCommandSource>(&source_)) {
    if (cmd->command_template.find(kInputPlaceholder) == std::string::npos ||
        cmd->command_template.find(kOutputPlaceholder) == std::string::npos) {
      throw ConfigError("detector command must contain {input_image} and {output_file}");
    }
    if (cmd->cache_dir) {
      fs::create_directories(*cmd->cache_dir);
    }
  }
}

DetectionOutcome Detector::detect(const std::string& image_id, const Raster& image,
                                  const ImageAnnotations* ground_truth, std::string_view preprocessing) {
  if (const auto* mock = std::get_if<MockSource>(&source_)) {
    if (ground_truth == nullptr) {
      return failure(image_id, "mock detector needs the ground truth of " + image_id);
    }
    auto dets = perturb_ground_truth(*ground_truth, mock->perturbation);
    dets.image_id = image_id;
    return DetectionOutcome{std::move(dets), true, {}, false};
  }

  if (const auto* pre = std::get_if<PrecomputedSource>(&source_)) {
    const fs::path file = pre->dir / ("res_" + image_id + ".txt");
    std::error_code ec;
    if (!fs::exists(file, ec)) {
      return failure(image_id, "missing detection file " + file.string());
    }
    try {
      return DetectionOutcome{parse_detections(read_text_file(file), image_id), true, {}, false};
    } catch (const DataError& e) {
      return failure(image_id, file.string() + ": " + e.what());
    }
  }

  const auto& cmd = std::get<ExternalCommandSource>(source_);
  const std::string key = content_key(image, preprocessing);
  std::promise<DetectionOutcome> promise;
  std::shared_future<DetectionOutcome> future;
  bool producer = false;
  {
    std::lock_guard lock(mutex_);
    auto it = memo_.find(key);
    if (it == memo_.end()) {
      future = promise.get_future().share();
      memo_.emplace(key, future);
      producer = true;
    } else {
      future = it->second;
    }
  }
  if (producer) {
    DetectionOutcome outcome;
    try {
      outcome = run_external(cmd, image_id, image, key);
    } catch (const std::exception& e) {
      outcome = failure(image_id, e.what());
    }
    promise.set_value(outcome);
    return outcome;
  }
  DetectionOutcome shared = future.get();
  shared.detections.image_id = image_id;
  shared.cache_hit = true;
  return shared;
}

DetectionOutcome Detector::run_external(const ExternalCommandSource& src, const std::string& image_id,
                                        const Raster& image, const std::string& key) {
  std::optional<fs::path> cached;
  if (src.cache_dir) {
    cached = *src.cache_dir / (key + ".txt");
    std::error_code ec;
    if (fs::exists(*cached, ec)) {
      try {
        return DetectionOutcome{parse_detections(read_text_file(*cached), image_id), true, {}, true};
      } catch (const DataError& e) {
        return failure(image_id, "cached output " + cached->string() + ": " + e.what());
      }
    }
  }

  ScratchDir scratch;
  const fs::path input = scratch.path() / (image_id + ".png");
  const fs::path output = scratch.path() / ("res_" + image_id + ".txt");
  save_png(image, input);
  std::string command = replace_all(src.command_template, kInputPlaceholder, shell_quote(input.string()));
  command = replace_all(std::move(command), kOutputPlaceholder, shell_quote(output.string()));

  invocations_.fetch_add(1);
  const ProcessResult proc = run_shell(command, src.timeout, scratch.path() / "detector.log");
  if (proc.timed_out) {
    return failure(image_id, "detector timed out after " + std::to_string(src.timeout.count()) + " ms");
  }
  if (proc.exit_code != 0) {
    return failure(image_id,
                   "detector exited with status " + std::to_string(proc.exit_code) + ": " + proc.diagnostics);
  }
  std::error_code ec;
  if (!fs::exists(output, ec)) {
    return failure(image_id, "detector produced no output file");
  }
  std::string text;
  ImageAnnotations dets;
  try {
    text = read_text_file(output);
    dets = parse_detections(text, image_id);
  } catch (const DataError& e) {
    return failure(image_id, std::string("detector output: ") + e.what());
  }
  if (cached) {
    write_text_file(*cached, text);
  }
  return DetectionOutcome{std::move(dets), true, {}, false};
}

}  // namespace bdcraft
