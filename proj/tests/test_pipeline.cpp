#include <doctest.h>

#include <filesystem>
#include <json.hpp>
#include <set>

#include "bdcraft/error.hpp"
#include "bdcraft/pipeline.hpp"
#include "bdcraft/synth.hpp"
#include "fixtures.hpp"

using namespace bdcraft;
namespace fs = std::filesystem;

namespace {

RunConfig base_config(const fs::path& dataset) {
  RunConfig c;
  c.dataset_dir = dataset;
  c.psf = PsfDims{1, 3};
  c.iterations = 4;
  return c;
}

std::string manifest_without_execution(const fs::path& dir) {
  auto doc = nlohmann::json::parse(fixture::slurp(dir / "manifest.json"));
  doc.erase("execution");
  return doc.dump();
}

}  // namespace

TEST_CASE("natural ordering") {
  CHECK(natural_less("img_2", "img_10"));
  CHECK(!natural_less("img_10", "img_2"));
  CHECK(natural_less("a", "b"));
  CHECK(natural_less("img_2", "img_2a"));
  CHECK(!natural_less("img_7", "img_7"));
  CHECK(natural_less("img_07", "img_7"));
}

TEST_CASE("configuration parsing") {
  const auto kv = parse_key_values("# comment\nmode = baseline\n\n threshold=50 # trailing\n");
  CHECK(kv.size() == 2);
  CHECK(kv.at("mode") == "baseline");
  CHECK(kv.at("threshold") == "50");
  CHECK_THROWS_AS(parse_key_values("just words\n"), ConfigError);

  RunConfig c;
  apply_config_value(c, "mode", "deblur_all");
  apply_config_value(c, "psf", "1x3");
  apply_config_value(c, "iterations", "12");
  apply_config_value(c, "detector", "mock:drop=0.5,seed=4");
  apply_config_value(c, "symmetric_psf", "true");
  apply_config_value(c, "detector_timeout", "2.5");
  CHECK(c.mode == PipelineMode::DeblurAll);
  CHECK(c.psf == PsfDims{1, 3});
  CHECK(c.iterations == 12);
  CHECK(c.symmetric_psf);
  CHECK(c.detector_timeout == std::chrono::milliseconds(2500));
  CHECK_THROWS_AS(apply_config_value(c, "colour", "red"), ConfigError);
  CHECK_THROWS_AS(apply_config_value(c, "threshold", "ten"), ConfigError);
  CHECK_THROWS_AS(apply_config_value(c, "detector_timeout", "0"), ConfigError);

  const auto grid = parse_psf_grid("1..3");
  CHECK(grid.size() == 9);
  CHECK(grid.front() == PsfDims{1, 1});
  CHECK(grid.back() == PsfDims{3, 3});
  CHECK(parse_psf_grid("1x3, 2x2").size() == 2);
  CHECK_THROWS_AS(parse_psf_grid("1x3,1x3"), ConfigError);
  CHECK_THROWS_AS(parse_psf_grid("0..3"), ConfigError);

  RunConfig bad;
  bad.dataset_dir = "x";
  bad.mode = PipelineMode::DeblurAll;
  CHECK_THROWS_AS(validate_run_config(bad), ConfigError);
  bad.psf = PsfDims{1, 1};
  bad.threshold = 0.0;
  CHECK_THROWS_AS(validate_run_config(bad), ConfigError);
}

TEST_CASE("dataset discovery") {
  fixture::TempDir dir("discover");
  generate_synthetic_corpus(3, 1, dir.path());
  fs::copy_file(dir.path() / "img_1.png", dir.path() / "img_10.png");
  fixture::spit(dir.path() / "gt_img_10.txt", "1,1,5,5,\"x\"\n");
  fixture::spit(dir.path() / "gt_orphan.txt", "");
  fs::copy_file(dir.path() / "img_2.png", dir.path() / "lonely.png");

  const DatasetListing listing = discover_dataset(dir.path());
  REQUIRE(listing.items.size() == 4);
  CHECK(listing.items[0].image_id == "img_1");
  CHECK(listing.items[1].image_id == "img_2");
  CHECK(listing.items[2].image_id == "img_3");
  CHECK(listing.items[3].image_id == "img_10");
  CHECK(listing.warnings.size() == 2);

  CHECK_THROWS_AS(discover_dataset(dir.path() / "nope"), DataError);
}

TEST_CASE("runs over a synthetic corpus") {
  fixture::TempDir data("pipeline_data");
  generate_synthetic_corpus(8, 11, data.path());

  SUBCASE("identity mock scores perfectly in every mode") {
    for (auto mode : {PipelineMode::Baseline, PipelineMode::DeblurAll, PipelineMode::DeblurBlurryOnly}) {
      RunConfig c = base_config(data.path());
      c.mode = mode;
      const RunReport r = run(c);
      REQUIRE(r.per_image.size() == 8);
      CHECK(r.aggregate.precision == 1.0);
      CHECK(r.aggregate.recall == 1.0);
      CHECK(r.aggregate.hmean == 1.0);
      CHECK(r.detector_failures == 0);
    }
  }

  SUBCASE("blurry-only deblurs exactly the blurry images") {
    RunConfig c = base_config(data.path());
    c.mode = PipelineMode::Baseline;
    const RunReport probe = run(c);
    std::vector<double> measures;
    for (const auto& r : probe.per_image) measures.push_back(r.measure);
    std::sort(measures.begin(), measures.end());
    c.threshold = 0.5 * (measures[3] + measures[4]);
    c.mode = PipelineMode::DeblurBlurryOnly;
    const RunReport r = run(c);
    std::size_t blurry = 0;
    for (const auto& row : r.per_image) {
      if (row.label == FocusLabel::Blurry) {
        ++blurry;
        CHECK(row.psf_used == PsfDims{1, 3});
      } else {
        CHECK(!row.psf_used);
      }
    }
    CHECK(blurry == 4);

    fixture::TempDir out("pipeline_out");
    write_run_report(r, out.path());
    const std::string csv = fixture::slurp(out.path() / "report.csv");
    CHECK(csv.starts_with("image_id,measure,label,precision,recall,hmean,psf,status\n"));
    CHECK(csv.find(",non-blurry,100.00,100.00,100.00,none,ok\n") != std::string::npos);
    CHECK(csv.find(",blurry,100.00,100.00,100.00,1x3,ok\n") != std::string::npos);
  }

  SUBCASE("reports are identical across parallelism") {
    RunConfig c = base_config(data.path());
    c.detector = MockSource{{0.3, 1.5, 8}};
    fixture::TempDir one("par1");
    fixture::TempDir eight("par8");
    c.parallelism = 1;
    write_run_report(run(c), one.path());
    c.parallelism = 8;
    write_run_report(run(c), eight.path());
    CHECK(fixture::slurp(one.path() / "report.csv") == fixture::slurp(eight.path() / "report.csv"));
    CHECK(fixture::slurp(one.path() / "report.json") == fixture::slurp(eight.path() / "report.json"));
    CHECK(manifest_without_execution(one.path()) == manifest_without_execution(eight.path()));
  }

  SUBCASE("aggregate equals the per-image tally sum") {
    RunConfig c = base_config(data.path());
    c.detector = MockSource{{0.4, 3.0, 2}};
    c.match_mode = MatchMode::BestMatch;
    const RunReport r = run(c);
    double pn = 0, pd = 0, rn = 0, rd = 0;
    for (const auto& row : r.per_image) {
      pn += row.scores.precision_num;
      pd += row.scores.precision_den;
      rn += row.scores.recall_num;
      rd += row.scores.recall_den;
    }
    CHECK(r.aggregate == scores_from_tallies(pn, pd, rn, rd));
    CHECK(r.aggregate.hmean < 1.0);
  }

  SUBCASE("precomputed detections make baseline and blurry-only agree") {
    fixture::TempDir res("precomputed");
    for (std::size_t i = 0; i < 8; ++i) {
      const SyntheticSample s = render_synthetic_sample(i, 11);
      fixture::spit(res.path() / ("res_" + s.image_id + ".txt"),
                    format_detections(perturb_ground_truth(s.ground_truth, {0.25, 2.0, i})));
    }
    RunConfig c = base_config(data.path());
    c.detector = PrecomputedSource{res.path()};
    c.mode = PipelineMode::Baseline;
    const RunReport baseline = run(c);
    c.mode = PipelineMode::DeblurBlurryOnly;
    c.threshold = 1e9;
    const RunReport blurry = run(c);
    CHECK(baseline.aggregate == blurry.aggregate);
    CHECK(baseline.aggregate.hmean < 1.0);
    for (const auto& row : blurry.per_image) CHECK(row.psf_used.has_value());
  }

  SUBCASE("a failing detector does not abort the batch") {
    fixture::TempDir res("partial");
    const SyntheticSample s = render_synthetic_sample(0, 11);
    fixture::spit(res.path() / "res_img_1.txt", format_detections(s.ground_truth));
    RunConfig c = base_config(data.path());
    c.detector = PrecomputedSource{res.path()};
    c.mode = PipelineMode::Baseline;
    const RunReport r = run(c);
    CHECK(r.per_image.size() == 8);
    CHECK(r.detector_failures == 7);
    CHECK(r.per_image[0].detector_ok);
    CHECK(!r.per_image[1].detector_ok);
    CHECK(r.per_image[1].scores.precision_den == 0.0);
    CHECK(r.aggregate.recall < 1.0);
  }

  SUBCASE("manifest records inputs") {
    const RunReport r = run(base_config(data.path()));
    REQUIRE(r.manifest.inputs.size() == 8);
    CHECK(r.manifest.inputs[0].image_sha256.size() == 64);
    CHECK(!r.manifest.simd_backend.empty());
  }
}

TEST_CASE("rejected runs") {
  fixture::TempDir empty("empty_dataset");
  RunConfig c = base_config(empty.path());
  CHECK_THROWS_AS(run(c), DataError);

  fixture::TempDir data("no_psf");
  generate_synthetic_corpus(2, 1, data.path());
  RunConfig d = base_config(data.path());
  d.psf.reset();
  d.mode = PipelineMode::DeblurAll;
  CHECK_THROWS_AS(run(d), ConfigError);
}

TEST_CASE("sweep") {
  fixture::TempDir data("sweep_data");
  fixture::TempDir out("sweep_out");
  generate_synthetic_corpus(4, 3, data.path());
  RunConfig c = base_config(data.path());
  c.mode = PipelineMode::DeblurAll;
  c.output_dir = out.path();
  const auto grid = parse_psf_grid("1..3");
  const auto rows = sweep(c, grid);
  REQUIRE(rows.size() == 9);
  std::set<PsfDims> dims;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(dims.insert(rows[i].dims).second);
    CHECK(rows[i].scores.hmean == 1.0);
    CHECK(rows[i].best == (i == 0));
    if (i > 0) CHECK(rows[i - 1].scores.hmean >= rows[i].scores.hmean);
    CHECK(fs::exists(out.path() / ("psf_" + to_string(rows[i].dims)) / "report.json"));
  }
  CHECK(rows.front().dims == PsfDims{1, 1});

  write_sweep_table(rows, out.path());
  const std::string csv = fixture::slurp(out.path() / "sweep.csv");
  CHECK(csv.starts_with("rank,psf,precision,recall,hmean,best\n1,\"(1,1)\",100.00,100.00,100.00,yes\n"));

  RunConfig baseline = c;
  baseline.mode = PipelineMode::Baseline;
  CHECK_THROWS_AS(sweep(baseline, grid), ConfigError);
  const std::vector<PsfDims> dup{{1, 1}, {1, 1}};
  CHECK_THROWS_AS(sweep(c, dup), ConfigError);
}
