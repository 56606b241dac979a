#include "tdbs/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "tdbs/errors.hpp"

namespace tdbs {

std::pair<PointCloud, GroundTruth> synth_scene(const PointCloud& model,
                                               const Mat3& rotation,
                                               const Vec3& translation,
                                               double noise_sigma,
                                               double keep_fraction,
                                               std::uint64_t seed) {
  if (model.points.empty()) throw EmptyInputError("synth_scene needs a model");
  if (noise_sigma < 0) throw ParameterError("noise sigma must be >= 0");
  if (keep_fraction <= 0 || keep_fraction > 1) {
    throw ParameterError("keep fraction must lie in (0, 1]");
  }
  std::mt19937_64 rng(seed);
  const std::size_t n = model.points.size();
  std::vector<int> survivors(n);
  std::iota(survivors.begin(), survivors.end(), 0);
  const std::size_t keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(keep_fraction * n)));
  if (keep < n) {
    for (std::size_t j = 0; j < keep; ++j) {
      const std::size_t pick = j + rng() % (n - j);
      std::swap(survivors[j], survivors[pick]);
    }
    survivors.resize(keep);
    std::sort(survivors.begin(), survivors.end());
  }

  double sigma = 0.0;
  if (noise_sigma > 0) sigma = noise_sigma * mesh_resolution(model).mr;
  std::normal_distribution<double> gauss(0.0, 1.0);

  PointCloud scene;
  scene.id = model.id + ":scene";
  scene.points.reserve(survivors.size());
  const bool normals = model.has_normals();
  if (normals) scene.normals.reserve(survivors.size());
  for (int idx : survivors) {
    Vec3 p = rotation * model.points[idx] + translation;
    if (sigma > 0) {
      p += sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
    }
    scene.points.push_back(p);
    if (normals) {
      scene.normals.push_back((rotation * model.normals[idx]).normalized());
    }
  }

  GroundTruth gt;
  gt.rotation = rotation;
  gt.translation = translation;
  gt.model_id = model.id;
  gt.scene_id = scene.id;
  gt.scene_to_model = std::move(survivors);
  return {std::move(scene), std::move(gt)};
}

bool is_correct_match(const MatchCandidate& match,
                      const std::vector<Vec3>& model_keypoints,
                      const std::vector<Vec3>& scene_keypoints,
                      const GroundTruth& gt, const MeshResolution& mr) {
  const Vec3 expected =
      gt.rotation * model_keypoints.at(match.query_id) + gt.translation;
  const double d = (expected - scene_keypoints.at(match.target_id)).norm();
  return d <= 2.0 * mr.mr;  // boundary inclusive
}

PRPoint precision_recall(const std::vector<MatchCandidate>& matches,
                         const std::vector<bool>& correct,
                         std::size_t n_corresponding) {
  if (n_corresponding < 1) {
    throw ParameterError("precision_recall needs n_corresponding >= 1");
  }
  if (matches.size() != correct.size()) {
    throw ParameterError("match/flag size mismatch");
  }
  PRPoint point;
  if (matches.empty()) {
    point.precision = 1.0;  // zero-match convention
    point.recall = 0.0;
    return point;
  }
  const std::size_t good =
      static_cast<std::size_t>(std::count(correct.begin(), correct.end(), true));
  point.precision = static_cast<double>(good) / static_cast<double>(matches.size());
  point.recall = static_cast<double>(good) / static_cast<double>(n_corresponding);
  return point;
}

double auc_pr(std::vector<PRPoint> curve) {
  if (curve.size() < 2) {
    throw DegenerateGeometryError("AUC needs at least 2 PR points");
  }
  std::sort(curve.begin(), curve.end(),
            [](const PRPoint& a, const PRPoint& b) { return a.recall < b.recall; });
  // collapse duplicate recalls to the best precision
  std::vector<PRPoint> merged;
  for (const PRPoint& p : curve) {
    if (!merged.empty() && merged.back().recall == p.recall) {
      merged.back().precision = std::max(merged.back().precision, p.precision);
    } else {
      merged.push_back(p);
    }
  }
  double area = 0.0;
  // flat extension from recall 0 to the first observed recall
  if (merged.front().recall > 0) {
    area += merged.front().recall * merged.front().precision;
  }
  for (std::size_t i = 1; i < merged.size(); ++i) {
    const double dr = merged[i].recall - merged[i - 1].recall;
    area += dr * 0.5 * (merged[i].precision + merged[i - 1].precision);
  }
  return area;
}

double compactness(double average_auc, int n_floats) {
  if (n_floats < 1) throw ParameterError("compactness needs n_floats >= 1");
  return average_auc / static_cast<double>(n_floats);
}

namespace {

class StageTimer {
 public:
  explicit StageTimer(std::map<std::string, double>& out) : out_(out) {}
  template <class F>
  auto run(const std::string& stage, F&& f) {
    const auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record(stage, start);
    } else {
      auto result = f();
      record(stage, start);
      return result;
    }
  }

 private:
  void record(const std::string& stage,
              std::chrono::steady_clock::time_point start) {
    const std::chrono::duration<double> dt =
        std::chrono::steady_clock::now() - start;
    out_[stage] = std::max(dt.count(), 1e-9);
  }
  std::map<std::string, double>& out_;
};

}  // namespace

EvalReport run_benchmark(const BenchmarkConfig& config) {
  if (config.knob_sweep.empty()) {
    throw ParameterError("benchmark needs a max_checks sweep");
  }
  for (std::size_t i = 1; i < config.knob_sweep.size(); ++i) {
    if (config.knob_sweep[i] <= config.knob_sweep[i - 1]) {
      throw ParameterError("knob sweep must be strictly increasing");
    }
  }
  EvalReport report;
  StageTimer timer(report.timings);

  PointCloud model = config.model;
  const MeshResolution mr =
      timer.run("mesh_resolution", [&] { return mesh_resolution(model); });
  timer.run("normals", [&] {
    estimate_normals(model, config.normal_k, std::nullopt, config.threads);
  });

  auto [scene, gt] = synth_scene(model, config.rotation, config.translation,
                                 config.noise_sigma, config.keep_fraction,
                                 config.seed);

  const IssParams model_iss = config.iss ? *config.iss : iss_defaults(mr.mr);
  const IssParams scene_iss =
      config.iss ? *config.iss : iss_defaults(mesh_resolution(scene).mr);
  KeypointSet model_kps = timer.run("keypoints_model", [&] {
    return detect_iss(model, model_iss, config.threads);
  });
  KeypointSet scene_kps = timer.run("keypoints_scene", [&] {
    return detect_iss(scene, scene_iss, config.threads);
  });
  if (model_kps.indices.empty() || scene_kps.indices.empty()) {
    throw DegenerateGeometryError("no keypoints detected");
  }

  SpatialIndex model_index(model);
  SpatialIndex scene_index(scene);
  DescribeResult model_desc = timer.run("description_model", [&] {
    return describe(model, model_index, model_kps.indices, config.descriptor,
                    config.threads);
  });
  DescribeResult scene_desc = timer.run("description_scene", [&] {
    return describe(scene, scene_index, scene_kps.indices, config.descriptor,
                    config.threads);
  });
  report.skipped_model_keypoints = model_desc.skipped;
  report.skipped_scene_keypoints = scene_desc.skipped;
  if (model_desc.signatures.empty() || scene_desc.signatures.empty()) {
    throw DegenerateGeometryError("all keypoints skipped");
  }
  report.timings["description_per_keypoint"] =
      (report.timings["description_model"] +
       report.timings["description_scene"]) /
      static_cast<double>(model_desc.signatures.size() +
                          scene_desc.signatures.size());

  std::vector<Vec3> query_positions;
  for (const auto& s : model_desc.signatures) {
    query_positions.push_back(model.points[s.keypoint_index]);
  }
  std::vector<Vec3> target_positions;
  for (const auto& s : scene_desc.signatures) {
    target_positions.push_back(scene.points[s.keypoint_index]);
  }

  // corresponding queries: transformed model keypoint has a scene
  // keypoint within the 2 mr correctness sphere
  std::size_t n_corresponding = 0;
  for (const Vec3& q : query_positions) {
    const Vec3 expected = gt.rotation * q + gt.translation;
    for (const Vec3& t : target_positions) {
      if ((expected - t).norm() <= 2.0 * mr.mr) {
        ++n_corresponding;
        break;
      }
    }
  }
  if (n_corresponding == 0) {
    throw DegenerateGeometryError("no corresponding keypoints in the scene");
  }

  ClusteringForest forest = timer.run("forest_build", [&] {
    return ClusteringForest(scene_desc.signatures, config.forest);
  });

  const auto match_start = std::chrono::steady_clock::now();
  for (std::size_t knob : config.knob_sweep) {
    const std::size_t checks =
        std::max<std::size_t>(knob, static_cast<std::size_t>(config.match_k));
    std::vector<MatchCandidate> matches;
    std::vector<bool> flags;
    for (std::size_t q = 0; q < model_desc.signatures.size(); ++q) {
      auto found =
          forest.search(model_desc.signatures[q], config.match_k, checks);
      for (auto m : found.matches) {
        m.query_id = static_cast<int>(q);
        matches.push_back(m);
        flags.push_back(is_correct_match(m, query_positions, target_positions,
                                         gt, mr));
      }
    }
    PRPoint point = precision_recall(matches, flags, n_corresponding);
    point.knob = checks;
    point.search_precision = measure_search_precision(
        forest, model_desc.signatures, config.match_k, checks);
    report.pr_curve.push_back(point);
  }
  const std::chrono::duration<double> match_dt =
      std::chrono::steady_clock::now() - match_start;
  report.timings["matching"] = std::max(match_dt.count(), 1e-9);
  report.timings["matching_per_query"] =
      report.timings["matching"] /
      static_cast<double>(model_desc.signatures.size() *
                          config.knob_sweep.size());

  report.auc = report.pr_curve.size() >= 2 ? auc_pr(report.pr_curve)
                                           : report.pr_curve.front().precision *
                                                 report.pr_curve.front().recall;
  const int n_floats =
      signature_length_bits(config.descriptor.n_neighbors).second / 32;
  report.compactness = compactness(report.auc, n_floats);

  report.params["n_neighbors"] = config.descriptor.n_neighbors;
  report.params["theta"] = config.descriptor.theta;
  report.params["trees"] = config.forest.trees;
  report.params["branching"] = config.forest.branching;
  report.params["max_leaf"] = config.forest.max_leaf;
  report.params["seed"] = static_cast<double>(config.seed);
  report.params["noise_sigma"] = config.noise_sigma;
  report.params["keep_fraction"] = config.keep_fraction;
  report.params["match_k"] = config.match_k;
  report.params["mesh_resolution"] = mr.mr;
  return report;
}

void save_report_json(const std::string& path, const EvalReport& report) {
  nlohmann::json j;
  j["pr_curve"] = nlohmann::json::array();
  for (const auto& p : report.pr_curve) {
    j["pr_curve"].push_back({{"knob", p.knob},
                             {"precision", p.precision},
                             {"recall", p.recall},
                             {"search_precision", p.search_precision}});
  }
  j["auc"] = report.auc;
  j["compactness"] = report.compactness;
  j["timings"] = report.timings;
  j["params"] = report.params;
  j["skipped_model_keypoints"] = report.skipped_model_keypoints;
  j["skipped_scene_keypoints"] = report.skipped_scene_keypoints;
  std::ofstream out(path);
  if (!out) throw ParameterError(path + ": cannot open for writing");
  out << j.dump(2) << "\n";
  if (!out) throw Error(path + ": write failure");
}

void save_pr_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw ParameterError(path + ": cannot open for writing");
  out << "knob,precision,recall\n";
  for (const auto& p : report.pr_curve) {
    out << p.knob << "," << p.precision << "," << p.recall << "\n";
  }
  if (!out) throw Error(path + ": write failure");
}

}  // namespace tdbs
