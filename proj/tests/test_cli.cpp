#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "bdcraft/synth.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(const fixture::TempDir& scratch, const std::string& args) {
  const fs::path out = scratch.path() / "stdout.txt";
  const fs::path err = scratch.path() / "stderr.txt";
  const std::string cmd = std::string(BDCRAFT_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return {WEXITSTATUS(status), fixture::slurp(out), fixture::slurp(err)};
}

std::size_t lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST_CASE("command line interface") {
  fixture::TempDir tmp("cli");
  const fs::path data = tmp.path() / "data";
  const std::string d = data.string();

  REQUIRE(cli(tmp, "synth --n 6 --seed 3 --out " + d).code == 0);
  CHECK(fs::exists(data / "img_6.png"));
  CHECK(fs::exists(data / "gt_img_6.txt"));

  SUBCASE("usage errors are configuration errors") {
    CHECK(cli(tmp, "").code == 1);
    CHECK(cli(tmp, "frobnicate").code == 1);
    CHECK(cli(tmp, "classify").code == 1);
    CHECK(cli(tmp, "--help").code == 0);
  }

  SUBCASE("classify") {
    const auto r = cli(tmp, "classify --threshold 100 " + d);
    CHECK(r.code == 0);
    CHECK(r.out.starts_with("filename,measure,label\nimg_1.png,"));
    CHECK(lines(r.out) == 7);
    CHECK(cli(tmp, "classify " + (data / "missing.png").string()).code == 2);
    CHECK(cli(tmp, "classify --threshold -1 " + d).code == 1);
    CHECK(cli(tmp, "classify --laplacian 6 " + d).code == 1);
  }

  SUBCASE("deblur writes the image and a PSF sidecar") {
    const fs::path out = tmp.path() / "deblurred";
    const auto r = cli(tmp, "deblur --psf 1x3 --iters 3 --out " + out.string() + " " + (data / "img_2.png").string());
    CHECK(r.code == 0);
    CHECK(fs::exists(out / "img_2.png"));
    const auto sidecar = nlohmann::json::parse(fixture::slurp(out / "img_2.psf.json"));
    CHECK(sidecar.at("kw") == 3);
    CHECK(sidecar.at("kh") == 1);
    CHECK(sidecar.at("weights").size() == 3);
    CHECK(cli(tmp, "deblur --psf 9x9 --out " + out.string() + " " + d).code == 1);
  }

  SUBCASE("evaluate") {
    const fs::path res = tmp.path() / "res";
    fs::create_directories(res);
    for (std::size_t i = 0; i < 6; ++i) {
      const auto s = bdcraft::render_synthetic_sample(i, 3);
      fixture::spit(res / ("res_" + s.image_id + ".txt"), bdcraft::format_detections(s.ground_truth));
    }
    fs::remove(res / "res_img_4.txt");
    const fs::path out = tmp.path() / "eval";
    const auto r = cli(tmp, "evaluate --gt-dir " + d + " --det-dir " + res.string() + " --images " + d +
                                " --match iou50 --out " + out.string());
    CHECK(r.code == 0);
    CHECK(r.err.find("res_img_4.txt missing") != std::string::npos);
    const std::string csv = fixture::slurp(out / "evaluation.csv");
    CHECK(lines(csv) == 7);
    CHECK(csv.find("img_4,") != std::string::npos);
    const auto report = nlohmann::json::parse(fixture::slurp(out / "report.json"));
    CHECK(report.at("aggregate").at("precision") == 1.0);
    CHECK(report.at("aggregate").at("recall").get<double>() < 1.0);

    const auto ranked = cli(tmp, "report --csv synthetic=" + (out / "report.json").string() + " other=50,50");
    CHECK(ranked.code == 0);
    CHECK(ranked.out.starts_with("rank,method,precision,recall,hmean\n1,synthetic,100.00,"));
  }

  SUBCASE("run") {
    const fs::path out = tmp.path() / "run";
    const auto r = cli(tmp, "run --dataset " + d + " --detector mock --mode deblur_blurry_only --psf 1x3 --iters 3 --jobs 2 --out " +
                                out.string());
    CHECK(r.code == 0);
    CHECK(r.out.find("h-mean: 100.00%") != std::string::npos);
    CHECK(fs::exists(out / "report.csv"));
    CHECK(fs::exists(out / "report.json"));
    CHECK(fs::exists(out / "manifest.json"));

    const fs::path cfg = tmp.path() / "run.cfg";
    fixture::spit(cfg, "dataset_dir = " + d + "\nmode = deblur_all\npsf = 2x2\niterations = 2\nthreshold = 5000\n");
    const fs::path out2 = tmp.path() / "run2";
    CHECK(cli(tmp, "run --config " + cfg.string() + " --mode baseline --out " + out2.string()).code == 0);
    const auto manifest = nlohmann::json::parse(fixture::slurp(out2 / "manifest.json"));
    CHECK(manifest.at("config").at("mode") == "baseline");
    CHECK(manifest.at("config").at("psf") == "2x2");

    fixture::spit(cfg, "dataset_dir = " + d + "\nwhatever = 1\n");
    CHECK(cli(tmp, "run --config " + cfg.string()).code == 1);
    CHECK(cli(tmp, "run --config " + (tmp.path() / "absent.cfg").string()).code == 2);
  }

  SUBCASE("run exit codes") {
    const fs::path empty = tmp.path() / "empty";
    fs::create_directories(empty);
    CHECK(cli(tmp, "run --dataset " + empty.string() + " --mode baseline").code == 2);
    CHECK(cli(tmp, "run --dataset " + d + " --mode sideways").code == 1);
    CHECK(cli(tmp, "run --dataset " + d + " --mode deblur_all").code == 1);
    CHECK(cli(tmp, "run --dataset " + d + " --mode baseline --detector precomputed:" + empty.string() +
                       " --failure-budget 0")
              .code == 3);
    CHECK(cli(tmp, "run --dataset " + d + " --mode baseline --detector precomputed:" + empty.string() +
                       " --failure-budget 6")
              .code == 0);
    CHECK(cli(tmp, "run --dataset " + d + " --mode baseline --detector precomputed:" + empty.string()).code == 0);
  }

  SUBCASE("sweep") {
    const fs::path out = tmp.path() / "sweep";
    const auto r = cli(tmp, "sweep --dataset " + d + " --mode deblur_all --grid 1..2 --iters 2 --detector mock --out " +
                                out.string());
    CHECK(r.code == 0);
    CHECK(lines(r.out) == 5);
    CHECK(r.out.find("best") != std::string::npos);
    CHECK(lines(fixture::slurp(out / "sweep.csv")) == 5);
    CHECK(fs::exists(out / "psf_2x2" / "report.json"));
  }

  SUBCASE("report ranks by h-mean") {
    const auto r = cli(tmp, "report CRAFT=89.04,93.93 BD-CRAFT=95.24,93.72 SenseTime=91.87,95.45");
    CHECK(r.code == 0);
    std::istringstream rows(r.out);
    std::string line, rank, name;
    std::vector<std::string> order;
    std::getline(rows, line);
    while (std::getline(rows, line)) {
      std::istringstream(line) >> rank >> name;
      order.push_back(name);
    }
    CHECK(order == std::vector<std::string>{"BD-CRAFT", "SenseTime", "CRAFT"});
    CHECK(r.out.find("94.47%") != std::string::npos);
    CHECK(cli(tmp, "report nonsense").code == 1);
    CHECK(cli(tmp, "report x=" + (tmp.path() / "none.json").string()).code == 2);
  }
}
