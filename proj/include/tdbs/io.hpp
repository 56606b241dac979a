#pragma once

#include <string>

#include "tdbs/point_cloud.hpp"

namespace tdbs {

enum class CloudFormat { kPly, kObj, kXyz };

/// Picks the format from the file extension (.ply/.obj/.xyz).
CloudFormat format_from_path(const std::string& path);

/// Loads a point cloud. PLY support covers ascii and
/// binary_little_endian, element "vertex" with float32/float64
/// x,y,z (+ optional nx,ny,nz) and element "face" with uchar-count int
/// lists; anything else raises UnsupportedFeatureError. OBJ honors v
/// and f records (triangles). XYZ is one whitespace-separated triple
/// per line.
PointCloud load_cloud(const std::string& path, CloudFormat format);
PointCloud load_cloud(const std::string& path);

/// Binary little-endian PLY with double precision properties;
/// round-trips coordinates bit-exactly through load_cloud.
void save_ply(const std::string& path, const PointCloud& cloud);

}  // namespace tdbs
