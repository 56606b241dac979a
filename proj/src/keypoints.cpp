#include "tdbs/keypoints.hpp"

#include <Eigen/Eigenvalues>
#include <fstream>
#include <sstream>

#include "tdbs/errors.hpp"
#include "tdbs/parallel.hpp"

namespace tdbs {

IssParams iss_defaults(double mr) {
  IssParams p;
  p.salient_radius = 6.0 * mr;
  p.nms_radius = 4.0 * mr;
  return p;
}

KeypointSet detect_iss(const PointCloud& cloud, const IssParams& params,
                       unsigned threads) {
  if (params.salient_radius <= 0 || params.nms_radius <= 0) {
    throw ParameterError("ISS radii must be positive");
  }
  if (params.gamma21 <= 0 || params.gamma21 >= 1 || params.gamma32 <= 0 ||
      params.gamma32 >= 1) {
    throw ParameterError("ISS gamma ratios must lie in (0, 1)");
  }
  if (params.min_neighbors < 5) {
    throw ParameterError("ISS min_neighbors must be >= 5");
  }
  KeypointSet result;
  if (cloud.size() < static_cast<std::size_t>(params.min_neighbors)) {
    result.too_few_points = true;
    return result;
  }
  SpatialIndex index(cloud);
  const std::size_t n = cloud.size();

  // w_i = 1 / |ball(p_i, salient_radius)|, the density compensation of
  // the ISS scatter matrix.
  std::vector<double> weight(n);
  parallel_for(
      n,
      [&](std::size_t i) {
        auto ball = index.radius(cloud.points[i], params.salient_radius);
        weight[i] = 1.0 / static_cast<double>(ball.size());
      },
      threads);

  std::vector<double> saliency(n, -1.0);  // < 0 marks non-candidates
  parallel_for(
      n,
      [&](std::size_t i) {
        auto ball = index.radius(cloud.points[i], params.salient_radius);
        // neighbors excluding the point itself
        int count = 0;
        Mat3 scatter = Mat3::Zero();
        double wsum = 0.0;
        for (const auto& h : ball) {
          if (h.index == static_cast<int>(i)) continue;
          ++count;
          Vec3 d = cloud.points[h.index] - cloud.points[i];
          scatter += weight[h.index] * d * d.transpose();
          wsum += weight[h.index];
        }
        if (count < params.min_neighbors || wsum <= 0.0) return;
        scatter /= wsum;
        Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
        const double l1 = eig.eigenvalues()[2];
        const double l2 = eig.eigenvalues()[1];
        const double l3 = std::max(0.0, eig.eigenvalues()[0]);
        if (l1 <= 0 || l2 <= 0) return;
        // l3 at numerical zero means a flat (border) neighborhood, not
        // a salient structure
        if (l3 < 1e-9 * l1) return;
        if (l2 / l1 < params.gamma21 && l3 / l2 < params.gamma32) {
          saliency[i] = l3;
        }
      },
      threads);

  // NMS: keep a candidate iff no candidate within nms_radius dominates
  // it (greater saliency, or equal saliency at a lower index).
  for (std::size_t i = 0; i < n; ++i) {
    if (saliency[i] < 0) continue;
    auto ball = index.radius(cloud.points[i], params.nms_radius);
    bool is_max = true;
    for (const auto& h : ball) {
      if (h.index == static_cast<int>(i) || saliency[h.index] < 0) continue;
      if (saliency[h.index] > saliency[i] ||
          (saliency[h.index] == saliency[i] && h.index < static_cast<int>(i))) {
        is_max = false;
        break;
      }
    }
    if (is_max) {
      result.indices.push_back(static_cast<int>(i));
      result.saliencies.push_back(saliency[i]);
    }
  }
  return result;
}

KeypointSet load_keypoints(const std::string& path, const PointCloud& cloud) {
  std::ifstream in(path);
  if (!in) throw MalformedInputError(path + ": cannot open file");
  SpatialIndex index(cloud);
  const double snap_limit = 2.0 * mesh_resolution(cloud).mr;
  KeypointSet result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    for (char& c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream ls(line);
    double a, b, c;
    if (!(ls >> a)) continue;  // blank line
    if (ls >> b) {
      if (!(ls >> c)) {
        throw MalformedInputError(path + ":" + std::to_string(lineno) +
                                  ": expected 1 or 3 values");
      }
      auto hit = index.knn(Vec3(a, b, c), 1).front();
      if (hit.distance > snap_limit) {
        throw UnmatchedKeypointError(path + ":" + std::to_string(lineno) +
                                     ": no cloud point within 2 mr");
      }
      result.indices.push_back(hit.index);
    } else {
      const int idx = static_cast<int>(a);
      if (idx < 0 || idx >= static_cast<int>(cloud.size())) {
        throw ParameterError(path + ":" + std::to_string(lineno) +
                             ": index " + std::to_string(idx) + " out of range");
      }
      result.indices.push_back(idx);
    }
    result.saliencies.push_back(0.0);
  }
  return result;
}

void save_keypoints(const std::string& path, const KeypointSet& keypoints) {
  std::ofstream out(path);
  if (!out) throw ParameterError(path + ": cannot open for writing");
  for (int idx : keypoints.indices) out << idx << "\n";
  if (!out) throw Error(path + ": write failure");
}

}  // namespace tdbs
