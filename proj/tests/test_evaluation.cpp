#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "tdbs/errors.hpp"
#include "tdbs/evaluation.hpp"
#include "test_helpers.hpp"

using namespace tdbs;
using namespace tdbs::testing;

TEST_CASE("identity scene reproduces the model bit for bit") {
  PointCloud model = bumpy_surface(400, 3);
  auto [scene, gt] = synth_scene(model, Mat3::Identity(), Vec3::Zero(),
                                 /*noise_sigma=*/0.0, /*keep_fraction=*/1.0, 1);
  REQUIRE(scene.size() == model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    CHECK(scene.points[i] == model.points[i]);
    CHECK(gt.scene_to_model[i] == static_cast<int>(i));
  }
}

TEST_CASE("pure translation shifts the centroid") {
  PointCloud model = bumpy_surface(400, 5);
  const Vec3 t(3, -2, 7);
  auto [scene, gt] = synth_scene(model, Mat3::Identity(), t, 0.0, 1.0, 1);
  CHECK((scene.centroid() - (model.centroid() + t)).norm() < 1e-9);
  CHECK(gt.translation == t);
}

TEST_CASE("subsampling keeps the rounded fraction, reproducibly") {
  PointCloud model = bumpy_surface(1000, 7);
  auto [scene_a, gt_a] = synth_scene(model, Mat3::Identity(), Vec3::Zero(),
                                     0.0, 0.5, 99);
  CHECK(scene_a.size() == 500);
  CHECK(gt_a.scene_to_model.size() == 500);
  for (std::size_t i = 1; i < gt_a.scene_to_model.size(); ++i) {
    CHECK(gt_a.scene_to_model[i] > gt_a.scene_to_model[i - 1]);
  }
  // survivors are genuine model points
  for (std::size_t i = 0; i < scene_a.size(); ++i) {
    CHECK(scene_a.points[i] == model.points[gt_a.scene_to_model[i]]);
  }
  auto [scene_b, gt_b] = synth_scene(model, Mat3::Identity(), Vec3::Zero(),
                                     0.0, 0.5, 99);
  CHECK(gt_a.scene_to_model == gt_b.scene_to_model);
  auto [scene_c, gt_c] = synth_scene(model, Mat3::Identity(), Vec3::Zero(),
                                     0.0, 0.5, 100);
  CHECK(gt_a.scene_to_model != gt_c.scene_to_model);
}

TEST_CASE("noise perturbs points on the expected scale") {
  PointCloud model = bumpy_surface(800, 9);
  const double mr = mesh_resolution(model).mr;
  auto [scene, gt] = synth_scene(model, Mat3::Identity(), Vec3::Zero(),
                                 /*noise_sigma=*/0.5, 1.0, 11);
  double max_shift = 0, mean_shift = 0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const double d = (scene.points[i] - model.points[i]).norm();
    max_shift = std::max(max_shift, d);
    mean_shift += d;
  }
  mean_shift /= static_cast<double>(model.size());
  CHECK(mean_shift > 0.1 * mr);
  CHECK(max_shift < 5.0 * mr);  // no wild outliers at sigma 0.5
}

TEST_CASE("synth_scene rejects bad parameters") {
  PointCloud model = bumpy_surface(50, 1);
  CHECK_THROWS_AS(
      synth_scene(model, Mat3::Identity(), Vec3::Zero(), -0.1, 1.0, 1),
      ParameterError);
  CHECK_THROWS_AS(
      synth_scene(model, Mat3::Identity(), Vec3::Zero(), 0.0, 0.0, 1),
      ParameterError);
  CHECK_THROWS_AS(
      synth_scene(model, Mat3::Identity(), Vec3::Zero(), 0.0, 1.5, 1),
      ParameterError);
  CHECK_THROWS_AS(
      synth_scene(PointCloud{}, Mat3::Identity(), Vec3::Zero(), 0.0, 1.0, 1),
      EmptyInputError);
}

TEST_CASE("match correctness sphere is boundary inclusive") {
  GroundTruth gt;  // identity transform
  MeshResolution mr{1.0};
  std::vector<Vec3> model_kps = {Vec3(0, 0, 0)};
  std::vector<Vec3> scene_kps = {Vec3(2.0, 0, 0), Vec3(2.0 + 1e-9, 0, 0),
                                 Vec3(0, 0, 0)};
  CHECK(is_correct_match({0, 0, 0}, model_kps, scene_kps, gt, mr));   // exactly 2 mr
  CHECK(!is_correct_match({0, 1, 0}, model_kps, scene_kps, gt, mr));  // just outside
  CHECK(is_correct_match({0, 2, 0}, model_kps, scene_kps, gt, mr));   // coincident

  std::mt19937_64 rng(4);
  GroundTruth moved;
  moved.rotation = random_rotation(rng);
  moved.translation = Vec3(1, 2, 3);
  std::vector<Vec3> scene2 = {moved.rotation * model_kps[0] + moved.translation};
  CHECK(is_correct_match({0, 0, 0}, model_kps, scene2, moved, mr));
}

TEST_CASE("precision and recall are simple ratios") {
  std::vector<MatchCandidate> matches(5);
  std::vector<bool> correct = {true, false, true, true, false};
  PRPoint p = precision_recall(matches, correct, 4);
  CHECK(p.precision == doctest::Approx(0.6));
  CHECK(p.recall == doctest::Approx(0.75));

  PRPoint empty = precision_recall({}, {}, 10);
  CHECK(empty.precision == 1.0);
  CHECK(empty.recall == 0.0);

  std::vector<bool> none(5, false);
  PRPoint zero = precision_recall(matches, none, 4);
  CHECK(zero.precision == 0.0);
  CHECK(zero.recall == 0.0);

  CHECK_THROWS_AS(precision_recall(matches, correct, 0), ParameterError);
  CHECK_THROWS_AS(precision_recall(matches, {true}, 4), ParameterError);
}

TEST_CASE("AUC matches hand-computed areas") {
  // right triangle: precision falls linearly 1 -> 0 as recall 0 -> 1
  std::vector<PRPoint> tri = {{1.0, 0.0}, {0.5, 0.5}, {0.0, 1.0}};
  CHECK(auc_pr(tri) == doctest::Approx(0.5));

  // rectangle: constant precision 0.8 over the full recall range
  std::vector<PRPoint> rect = {{0.8, 0.0}, {0.8, 1.0}};
  CHECK(auc_pr(rect) == doctest::Approx(0.8));

  // four-point trapezoid sum done by hand:
  // flat 0->0.2 at 0.9 = 0.18, 0.2->0.5 avg(0.9,0.7)=0.8 -> 0.24,
  // 0.5->0.8 avg(0.7,0.4)=0.55 -> 0.165; total 0.585
  std::vector<PRPoint> hand = {{0.9, 0.2}, {0.7, 0.5}, {0.4, 0.8}};
  CHECK(auc_pr(hand) == doctest::Approx(0.585));

  // input order must not matter
  std::vector<PRPoint> shuffled = {{0.4, 0.8}, {0.9, 0.2}, {0.7, 0.5}};
  CHECK(auc_pr(shuffled) == doctest::Approx(0.585));

  // duplicate recalls collapse to the best precision
  std::vector<PRPoint> dup = {{0.3, 0.5}, {0.9, 0.5}, {0.9, 1.0}};
  // flat 0->0.5 at 0.9 = 0.45, then 0.5->1.0 at 0.9 = 0.45
  CHECK(auc_pr(dup) == doctest::Approx(0.9));

  CHECK_THROWS_AS(auc_pr({{1.0, 0.5}}), DegenerateGeometryError);
}

TEST_CASE("compactness is AUC per float") {
  CHECK(compactness(0.33, 33) == doctest::Approx(0.01));
  CHECK(compactness(0.262522, 192) == doctest::Approx(0.262522 / 192.0));
  CHECK(compactness(0.0, 48) == 0.0);
  CHECK_THROWS_AS(compactness(0.5, 0), ParameterError);
}

TEST_CASE("identity benchmark achieves near-perfect matching") {
  BenchmarkConfig config;
  config.model = bumpy_surface(3000, 17);
  config.knob_sweep = {5, 50, 100000};
  EvalReport report = run_benchmark(config);
  REQUIRE(report.pr_curve.size() == 3);
  // full-checks point is exact search on an identical scene
  const PRPoint& exact = report.pr_curve.back();
  CHECK(exact.search_precision == doctest::Approx(1.0));
  CHECK(exact.precision > 0.9);
  CHECK(exact.recall > 0.9);
  CHECK(report.auc > 0.8);
  for (const auto& p : report.pr_curve) {
    CHECK(p.precision >= 0.0);
    CHECK(p.precision <= 1.0);
    CHECK(p.recall >= 0.0);
    CHECK(p.recall <= 1.0);
    CHECK(p.search_precision >= 0.0);
    CHECK(p.search_precision <= 1.0);
  }
  for (const auto& [stage, seconds] : report.timings) {
    INFO(stage);
    CHECK(seconds > 0.0);
  }
  CHECK(report.timings.count("normals") == 1);
  CHECK(report.timings.count("keypoints_model") == 1);
  CHECK(report.timings.count("description_per_keypoint") == 1);
  CHECK(report.timings.count("matching_per_query") == 1);
  // 32 neighbors store as 48 float equivalents
  CHECK(report.compactness == doctest::Approx(report.auc / 48.0));
  CHECK(report.params.at("n_neighbors") == 32);
}

TEST_CASE("benchmark validates its sweep") {
  BenchmarkConfig config;
  config.model = bumpy_surface(500, 19);
  config.knob_sweep = {};
  CHECK_THROWS_AS(run_benchmark(config), ParameterError);
  config.knob_sweep = {50, 50};
  CHECK_THROWS_AS(run_benchmark(config), ParameterError);
  config.knob_sweep = {100, 20};
  CHECK_THROWS_AS(run_benchmark(config), ParameterError);
}

TEST_CASE("report files carry the curve") {
  EvalReport report;
  report.pr_curve = {{0.9, 0.4, 10, 0.5}, {0.8, 0.7, 100, 0.9}};
  report.auc = 0.6;
  report.compactness = 0.0125;
  report.timings["normals"] = 0.01;
  report.params["n_neighbors"] = 32;
  report.skipped_model_keypoints = {3, 7};

  TempFile json_file(".json");
  save_report_json(json_file.path(), report);
  std::ifstream in(json_file.path());
  nlohmann::json j;
  in >> j;
  REQUIRE(j["pr_curve"].size() == 2);
  CHECK(j["pr_curve"][0]["knob"] == 10);
  CHECK(j["pr_curve"][1]["precision"] == doctest::Approx(0.8));
  CHECK(j["auc"] == doctest::Approx(0.6));
  CHECK(j["compactness"] == doctest::Approx(0.0125));
  CHECK(j["timings"]["normals"] == doctest::Approx(0.01));
  CHECK(j["params"]["n_neighbors"] == 32);
  CHECK(j["skipped_model_keypoints"] == std::vector<int>{3, 7});

  TempFile csv_file(".csv");
  save_pr_csv(csv_file.path(), report);
  std::ifstream csv(csv_file.path());
  std::string line;
  std::getline(csv, line);
  CHECK(line == "knob,precision,recall");
  std::getline(csv, line);
  CHECK(line == "10,0.9,0.4");
  std::getline(csv, line);
  CHECK(line == "100,0.8,0.7");
}
