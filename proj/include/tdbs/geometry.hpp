#pragma once

#include <optional>
#include <vector>

#include "tdbs/point_cloud.hpp"
#include "tdbs/spatial_index.hpp"

namespace tdbs {

struct MeshResolution {
  double mr = 0.0;
};

/// Average point spacing. With faces: mean length over all unique mesh
/// edges. Without: mean distance from each point to its nearest
/// distinct neighbor.
MeshResolution mesh_resolution(const PointCloud& cloud);

struct NormalEstimate {
  // one flag per point, set when the neighborhood covariance had no
  // clear smallest eigenvalue (collinear samples etc.)
  std::vector<std::uint8_t> degenerate;
  std::size_t degenerate_count = 0;
};

/// PCA normals over each point's k nearest neighbors, oriented toward
/// the viewpoint (default: centroid displaced by 10x the bounding-box
/// diagonal along +z). Overwrites existing normals.
NormalEstimate estimate_normals(PointCloud& cloud, int k,
                                std::optional<Vec3> viewpoint = std::nullopt,
                                unsigned threads = 0);

}  // namespace tdbs
