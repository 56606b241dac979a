#include "tdbs/local_frame.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "tdbs/errors.hpp"

namespace tdbs {

namespace {

// Angle between two vectors, robust near 0 and pi.
double angle_between(const Vec3& a, const Vec3& b) {
  const double na = a.norm(), nb = b.norm();
  if (na < 1e-300 || nb < 1e-300) return 0.0;
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace

Plane best_fit_plane(const std::vector<Vec3>& points) {
  if (points.size() < 3) {
    throw DegenerateGeometryError("plane fit needs at least 3 points");
  }
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Mat3 scatter = Mat3::Zero();
  for (const Vec3& p : points) {
    Vec3 d = p - mean;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  const double l0 = std::max(0.0, eig.eigenvalues()[0]);
  const double l1 = eig.eigenvalues()[1];
  const double l2 = eig.eigenvalues()[2];
  if (l2 <= 0.0 || l1 / l2 < 1e-12) {
    throw DegenerateGeometryError("plane fit input is collinear");
  }
  Plane plane;
  plane.centroid = mean;
  plane.normal = eig.eigenvectors().col(0).normalized();
  plane.rms_residual = std::sqrt(l0 / static_cast<double>(points.size()));
  return plane;
}

NeighborSet select_neighbors_angular(const PointCloud& cloud,
                                     const SpatialIndex& index, int keypoint,
                                     int n_neighbors, double theta,
                                     int candidate_multiplier) {
  if (n_neighbors < 2) throw ParameterError("need N >= 2 neighbors");
  if (theta <= 0 || theta > M_PI + 1e-12) {
    throw ParameterError("theta must lie in (0, pi]");
  }
  if (candidate_multiplier < 1) throw ParameterError("candidate multiplier >= 1");

  NeighborSet result;
  result.keypoint_index = keypoint;
  const Vec3 p = cloud.points[keypoint];

  auto hits = index.knn(p, candidate_multiplier * n_neighbors + 1);
  struct Candidate {
    int index;
    double distance;
    Vec3 projection;
  };
  std::vector<Candidate> cands;
  cands.reserve(hits.size());
  for (const auto& h : hits) {
    if (h.index == keypoint) continue;
    cands.push_back({h.index, h.distance, Vec3::Zero()});
  }
  if (cands.empty()) {
    result.short_set = true;
    return result;
  }

  // Project everything onto the best-fit plane of the candidate pool;
  // the angle criterion operates on these projections.
  bool planar = true;
  Vec3 p_proj = p;
  try {
    std::vector<Vec3> pts;
    pts.reserve(cands.size());
    for (const auto& c : cands) pts.push_back(cloud.points[c.index]);
    Plane phi = best_fit_plane(pts);
    auto project = [&](const Vec3& q) {
      return q - phi.normal * (q - phi.centroid).dot(phi.normal);
    };
    p_proj = project(p);
    for (auto& c : cands) c.projection = project(cloud.points[c.index]);
  } catch (const DegenerateGeometryError&) {
    planar = false;  // collinear pool: fall back to plain kNN order
  }

  std::vector<char> used(cands.size(), 0);
  std::vector<int> accepted;
  std::vector<int> rejected;
  Vec3 last_dir = Vec3::Zero();

  if (planar) {
    while (static_cast<int>(accepted.size()) < n_neighbors) {
      // next candidate: lowest distance; equal distances order by the
      // angle made with the previously accepted neighbor's projection
      int pick = -1;
      for (std::size_t i = 0; i < cands.size(); ++i) {
        if (used[i]) continue;
        if (pick < 0) {
          pick = static_cast<int>(i);
          continue;
        }
        if (cands[i].distance < cands[pick].distance) {
          pick = static_cast<int>(i);
        } else if (cands[i].distance == cands[pick].distance &&
                   !accepted.empty()) {
          const double ai = angle_between(last_dir, cands[i].projection - p_proj);
          const double ap = angle_between(last_dir, cands[pick].projection - p_proj);
          if (ai < ap) pick = static_cast<int>(i);
        }
      }
      if (pick < 0) break;
      used[pick] = 1;
      if (accepted.empty()) {
        accepted.push_back(pick);
        last_dir = cands[pick].projection - p_proj;
      } else {
        const double a = angle_between(last_dir, cands[pick].projection - p_proj);
        if (a <= theta + 1e-12) {
          accepted.push_back(pick);
          last_dir = cands[pick].projection - p_proj;
        } else {
          rejected.push_back(pick);
        }
      }
    }
  }

  if (!planar) {
    for (std::size_t i = 0; i < cands.size() &&
                            static_cast<int>(accepted.size()) < n_neighbors;
         ++i) {
      accepted.push_back(static_cast<int>(i));
    }
    result.fallback_used = true;
  } else if (static_cast<int>(accepted.size()) < n_neighbors) {
    // angle rule starved the set: fill by ascending distance
    result.fallback_used = true;
    for (int r : rejected) {
      if (static_cast<int>(accepted.size()) >= n_neighbors) break;
      accepted.push_back(r);
    }
    std::sort(accepted.begin(), accepted.end(), [&](int a, int b) {
      return cands[a].distance < cands[b].distance ||
             (cands[a].distance == cands[b].distance &&
              cands[a].index < cands[b].index);
    });
  }

  if (static_cast<int>(accepted.size()) < n_neighbors) result.short_set = true;
  for (int i : accepted) {
    result.neighbor_indices.push_back(cands[i].index);
    result.distances.push_back(cands[i].distance);
  }
  return result;
}

double support_radius(const NeighborSet& neighbors) {
  if (neighbors.distances.empty()) {
    throw EmptyInputError("support radius of an empty neighbor set");
  }
  return *std::max_element(neighbors.distances.begin(),
                           neighbors.distances.end());
}

LocalReferenceFrame compute_lrf(const PointCloud& cloud,
                                const SpatialIndex& index, int keypoint,
                                double radius, int min_support) {
  if (radius <= 0) throw ParameterError("support radius must be positive");
  const Vec3 p = cloud.points[keypoint];
  auto support = index.radius(p, radius);
  std::vector<int> ids;
  for (const auto& h : support) {
    if (h.index != keypoint) ids.push_back(h.index);
  }
  if (static_cast<int>(ids.size()) < min_support) {
    throw DegenerateGeometryError("fewer than " + std::to_string(min_support) +
                                  " support points within the radius");
  }

  Mat3 m = Mat3::Zero();
  double wsum = 0.0;
  for (int i : ids) {
    const Vec3 d = cloud.points[i] - p;
    const double w = radius - d.norm();
    m += w * d * d.transpose();
    wsum += w;
  }
  if (wsum <= 0.0) {
    throw DegenerateGeometryError("zero total weight in covariance");
  }
  m /= wsum;

  Eigen::SelfAdjointEigenSolver<Mat3> eig(m);
  LocalReferenceFrame lrf;
  lrf.origin = p;
  lrf.support_radius = radius;
  const double scale = std::abs(eig.eigenvalues()[2]);
  if (scale <= 0.0 ||
      (eig.eigenvalues()[1] - eig.eigenvalues()[0]) / scale < 1e-9) {
    lrf.degenerate = true;
  }

  Vec3 x_axis = eig.eigenvectors().col(2);
  Vec3 z_axis = eig.eigenvectors().col(0);
  auto disambiguate = [&](Vec3 axis, const Vec3& global) {
    int pos = 0, neg = 0;
    for (int i : ids) {
      const double d = (cloud.points[i] - p).dot(axis);
      if (d > 0) ++pos;
      else if (d < 0) ++neg;
    }
    if (neg > pos) return Vec3(-axis);
    if (pos == neg && axis.dot(global) < 0) return Vec3(-axis);
    return axis;
  };
  x_axis = disambiguate(x_axis, Vec3::UnitX());
  z_axis = disambiguate(z_axis, Vec3::UnitZ());
  const Vec3 y_axis = z_axis.cross(x_axis);

  lrf.rotation.row(0) = x_axis;
  lrf.rotation.row(1) = y_axis;
  lrf.rotation.row(2) = z_axis;
  return lrf;
}

AlignedSurface align(const PointCloud& cloud, const NeighborSet& neighbors,
                     const LocalReferenceFrame& lrf) {
  if (!cloud.has_normals()) {
    throw ParameterError("align requires cloud normals");
  }
  AlignedSurface out;
  out.points.reserve(neighbors.neighbor_indices.size());
  out.normals.reserve(neighbors.neighbor_indices.size());
  for (int i : neighbors.neighbor_indices) {
    out.points.push_back(lrf.rotation * (cloud.points[i] - lrf.origin));
    out.normals.push_back((lrf.rotation * cloud.normals[i]).normalized());
  }
  return out;
}

}  // namespace tdbs
