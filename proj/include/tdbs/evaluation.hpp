#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tdbs/geometry.hpp"
#include "tdbs/keypoints.hpp"
#include "tdbs/matching.hpp"
#include "tdbs/point_cloud.hpp"
#include "tdbs/signature.hpp"

namespace tdbs {

struct GroundTruth {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  std::string model_id;
  std::string scene_id;
  std::vector<int> scene_to_model;  // surviving index map
};

struct PRPoint {
  double precision = 0.0;
  double recall = 0.0;
  std::size_t knob = 0;  // the max_checks value that produced it
  double search_precision = 0.0;
};

struct EvalReport {
  std::vector<PRPoint> pr_curve;
  double auc = 0.0;
  double compactness = 0.0;
  std::map<std::string, double> timings;  // stage -> seconds
  std::map<std::string, double> params;
  std::vector<int> skipped_model_keypoints;
  std::vector<int> skipped_scene_keypoints;
};

/// Rigid transform + isotropic Gaussian noise (std noise_sigma * mr) +
/// seeded random subsampling keeping keep_fraction of the points.
std::pair<PointCloud, GroundTruth> synth_scene(const PointCloud& model,
                                               const Mat3& rotation,
                                               const Vec3& translation,
                                               double noise_sigma,
                                               double keep_fraction,
                                               std::uint64_t seed);

/// Correctness: transformed model keypoint within an inclusive sphere
/// of radius 2 mr around the scene keypoint.
bool is_correct_match(const MatchCandidate& match,
                      const std::vector<Vec3>& model_keypoints,
                      const std::vector<Vec3>& scene_keypoints,
                      const GroundTruth& gt, const MeshResolution& mr);

/// precision = correct/total, recall = correct/corresponding. Zero
/// total matches: precision 1.0, recall 0.
PRPoint precision_recall(const std::vector<MatchCandidate>& matches,
                         const std::vector<bool>& correct,
                         std::size_t n_corresponding);

/// Trapezoidal area under the PR curve over recall; duplicate recalls
/// collapse to the best precision.
double auc_pr(std::vector<PRPoint> curve);

double compactness(double average_auc, int n_floats);

struct BenchmarkConfig {
  PointCloud model;
  // scene recipe
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double noise_sigma = 0.0;
  double keep_fraction = 1.0;
  std::uint64_t seed = 42;
  // pipeline parameters
  int normal_k = 10;
  std::optional<IssParams> iss;  // default: iss_defaults(mr)
  SignatureParams descriptor;
  ForestParams forest;
  std::vector<std::size_t> knob_sweep;  // max_checks values, ascending
  int match_k = 1;
  unsigned threads = 0;
};

/// End-to-end protocol: keypoints on model and scene, description,
/// forest over scene descriptors, max_checks sweep, PR/AUC/compactness
/// and per-stage wall-clock timing.
EvalReport run_benchmark(const BenchmarkConfig& config);

void save_report_json(const std::string& path, const EvalReport& report);
void save_pr_csv(const std::string& path, const EvalReport& report);

}  // namespace tdbs
