#include <CLI11.hpp>

#include <Eigen/Geometry>
#include <cmath>
#include <iostream>
#include <random>
#include <sstream>

#include "tdbs/errors.hpp"
#include "tdbs/evaluation.hpp"
#include "tdbs/io.hpp"
#include "tdbs/keypoints.hpp"
#include "tdbs/matching.hpp"
#include "tdbs/signature.hpp"

namespace {

std::vector<std::size_t> parse_sweep(const std::string& text) {
  std::vector<std::size_t> knobs;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    knobs.push_back(std::stoull(item));
  }
  if (knobs.empty()) throw tdbs::ParameterError("empty --sweep");
  for (std::size_t i = 1; i < knobs.size(); ++i) {
    if (knobs[i] <= knobs[i - 1]) {
      throw tdbs::ParameterError("--sweep values must be strictly increasing");
    }
  }
  return knobs;
}

tdbs::Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
  q.normalize();
  return q.toRotationMatrix();
}

struct CommonOpts {
  int n_neighbors = 32;
  double theta_degrees = 90.0;
  int trees = 3;
  int branching = 16;
  int max_leaf = 150;
  std::uint64_t seed = 42;
  unsigned threads = 0;
  int normal_k = 10;
};

int run_keypoints(const std::string& input, const std::string& output,
                  double salient_mr, double nms_mr, double gamma21,
                  double gamma32, int min_neighbors, unsigned threads) {
  tdbs::PointCloud cloud = tdbs::load_cloud(input);
  const double mr = tdbs::mesh_resolution(cloud).mr;
  tdbs::IssParams params;
  params.salient_radius = salient_mr * mr;
  params.nms_radius = nms_mr * mr;
  params.gamma21 = gamma21;
  params.gamma32 = gamma32;
  params.min_neighbors = min_neighbors;
  tdbs::KeypointSet kps = tdbs::detect_iss(cloud, params, threads);
  if (kps.too_few_points) {
    std::cerr << "warning: cloud smaller than min_neighbors, no keypoints\n";
  } else if (kps.indices.empty()) {
    std::cerr << "warning: no keypoints detected\n";
  }
  tdbs::save_keypoints(output, kps);
  std::cerr << "wrote " << kps.indices.size() << " keypoints to " << output
            << "\n";
  return 0;
}

int run_describe(const std::string& input, const std::string& keypoints,
                 const std::string& output, const CommonOpts& opts) {
  tdbs::PointCloud cloud = tdbs::load_cloud(input);
  tdbs::KeypointSet kps = tdbs::load_keypoints(keypoints, cloud);
  tdbs::estimate_normals(cloud, opts.normal_k, std::nullopt, opts.threads);
  tdbs::SpatialIndex index(cloud);
  tdbs::SignatureParams params;
  params.n_neighbors = opts.n_neighbors;
  params.theta = opts.theta_degrees * M_PI / 180.0;
  tdbs::DescribeResult result =
      tdbs::describe(cloud, index, kps.indices, params, opts.threads);
  for (int skipped : result.skipped) {
    std::cerr << "skipped keypoint " << skipped << "\n";
  }
  tdbs::save_descriptors(output, result.signatures, params.n_neighbors);
  std::cerr << "wrote " << result.signatures.size() << " descriptors to "
            << output << "\n";
  return 0;
}

int run_match(const std::string& input, const std::string& target,
              const std::string& output, int k, bool exact,
              std::size_t max_checks, const CommonOpts& opts) {
  auto [qn, queries] = tdbs::load_descriptors(input);
  auto [tn, targets] = tdbs::load_descriptors(target);
  if (qn != tn) {
    throw tdbs::ParameterError("descriptor files disagree on N (" +
                               std::to_string(qn) + " vs " +
                               std::to_string(tn) + ")");
  }
  std::vector<std::vector<tdbs::MatchCandidate>> matches;
  if (exact) {
    matches = tdbs::brute_force_match(queries, targets, k);
  } else {
    tdbs::ForestParams fp;
    fp.trees = opts.trees;
    fp.branching = opts.branching;
    fp.max_leaf = opts.max_leaf;
    fp.seed = opts.seed;
    tdbs::ClusteringForest forest(targets, fp);
    if (max_checks == 0) max_checks = targets.size();
    matches.resize(queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q) {
      auto found = forest.search(queries[q], k, max_checks);
      for (auto m : found.matches) {
        m.query_id = static_cast<int>(q);
        matches[q].push_back(m);
      }
    }
  }
  tdbs::save_matches(output, matches);
  std::cerr << "wrote matches for " << queries.size() << " queries to "
            << output << "\n";
  return 0;
}

int run_bench(const std::string& input, const std::string& output,
              const std::string& pr_csv, const std::string& sweep,
              double noise_sigma, double keep_fraction, bool random_transform,
              const CommonOpts& opts) {
  tdbs::BenchmarkConfig config;
  config.model = tdbs::load_cloud(input);
  config.noise_sigma = noise_sigma;
  config.keep_fraction = keep_fraction;
  config.seed = opts.seed;
  config.normal_k = opts.normal_k;
  config.descriptor.n_neighbors = opts.n_neighbors;
  config.descriptor.theta = opts.theta_degrees * M_PI / 180.0;
  config.forest.trees = opts.trees;
  config.forest.branching = opts.branching;
  config.forest.max_leaf = opts.max_leaf;
  config.forest.seed = opts.seed;
  config.threads = opts.threads;
  config.knob_sweep = parse_sweep(sweep);
  if (random_transform) {
    std::mt19937_64 rng(opts.seed);
    config.rotation = random_rotation(rng);
    std::normal_distribution<double> gauss(0.0, 1.0);
    config.translation =
        tdbs::Vec3(gauss(rng), gauss(rng), gauss(rng)) *
        config.model.bounding_box_diagonal();
  }
  tdbs::EvalReport report = tdbs::run_benchmark(config);
  tdbs::save_report_json(output, report);
  if (!pr_csv.empty()) tdbs::save_pr_csv(pr_csv, report);
  std::cerr << "auc " << report.auc << ", compactness " << report.compactness
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D binary signature toolchain"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string input, keypoints, target, output, pr_csv;
  std::string sweep = "16,64,256,1024,4096";
  double salient_mr = 6.0, nms_mr = 4.0, gamma21 = 0.975, gamma32 = 0.975;
  int min_neighbors = 5, k = 1;
  bool exact = false, random_transform = false;
  std::size_t max_checks = 0;
  double noise_sigma = 0.0, keep_fraction = 1.0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--n-neighbors", opts.n_neighbors, "descriptor N");
    cmd->add_option("--theta-degrees", opts.theta_degrees, "angular constraint");
    cmd->add_option("--trees", opts.trees, "forest tree count");
    cmd->add_option("--branching", opts.branching, "forest branching factor");
    cmd->add_option("--max-leaf", opts.max_leaf, "forest leaf threshold");
    cmd->add_option("--seed", opts.seed, "random seed");
    cmd->add_option("--threads", opts.threads, "worker thread cap");
    cmd->add_option("--normal-k", opts.normal_k, "normal estimation k");
  };

  CLI::App* kp = app.add_subcommand("keypoints", "detect ISS keypoints");
  kp->add_option("--input", input, "input cloud (ply/obj/xyz)")->required();
  kp->add_option("--output", output, "keypoint CSV")->required();
  kp->add_option("--salient-radius", salient_mr, "salient radius in mr units");
  kp->add_option("--nms-radius", nms_mr, "NMS radius in mr units");
  kp->add_option("--gamma21", gamma21, "lambda2/lambda1 threshold");
  kp->add_option("--gamma32", gamma32, "lambda3/lambda2 threshold");
  kp->add_option("--min-neighbors", min_neighbors, "minimum neighborhood size");
  kp->add_option("--threads", opts.threads, "worker thread cap");

  CLI::App* desc = app.add_subcommand("describe", "compute binary signatures");
  desc->add_option("--input", input, "input cloud")->required();
  desc->add_option("--keypoints", keypoints, "keypoint CSV")->required();
  desc->add_option("--output", output, "descriptor file")->required();
  add_common(desc);

  CLI::App* match = app.add_subcommand("match", "match descriptor files");
  match->add_option("--input", input, "query descriptor file")->required();
  match->add_option("--target", target, "target descriptor file")->required();
  match->add_option("--output", output, "match CSV")->required();
  match->add_option("-k", k, "neighbors per query");
  match->add_flag("--exact", exact, "brute-force matching");
  match->add_option("--max-checks", max_checks,
                    "approximate search budget (0 = all)");
  add_common(match);

  CLI::App* bench = app.add_subcommand("bench", "run the evaluation protocol");
  bench->add_option("--input", input, "model cloud")->required();
  bench->add_option("--output", output, "report JSON")->required();
  bench->add_option("--pr-csv", pr_csv, "PR curve CSV");
  bench->add_option("--sweep", sweep, "comma-separated max_checks sweep");
  bench->add_option("--noise-sigma", noise_sigma, "noise std in mr units");
  bench->add_option("--keep-fraction", keep_fraction, "scene subsample fraction");
  bench->add_flag("--random-transform", random_transform,
                  "apply a seeded random rigid transform");
  add_common(bench);

  CLI11_PARSE(app, argc, argv);

  try {
    if (kp->parsed()) {
      return run_keypoints(input, output, salient_mr, nms_mr, gamma21, gamma32,
                           min_neighbors, opts.threads);
    }
    if (desc->parsed()) return run_describe(input, keypoints, output, opts);
    if (match->parsed()) {
      return run_match(input, target, output, k, exact, max_checks, opts);
    }
    if (bench->parsed()) {
      return run_bench(input, output, pr_csv, sweep, noise_sigma, keep_fraction,
                       random_transform, opts);
    }
  } catch (const tdbs::ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
