#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tdbs/local_frame.hpp"
#include "tdbs/point_cloud.hpp"

namespace tdbs {

/// Bit-packed binary descriptor: 3*N*(N-1)/2 payload bits padded with
/// zeros to a 128-bit block boundary. Bit for pair i and axis a lives
/// at position 3*i + offset(a); bit 0 is the least significant bit of
/// the first 64-bit word.
struct BinarySignature {
  std::uint32_t keypoint_index = 0;
  std::uint16_t n_neighbors = 0;
  std::vector<std::uint64_t> blocks;  // 2 words per 128-bit block

  int payload_bits() const {
    return 3 * n_neighbors * (n_neighbors - 1) / 2;
  }
  int stored_bits() const { return static_cast<int>(blocks.size()) * 64; }

  bool get_bit(int pos) const {
    return (blocks[pos / 64] >> (pos % 64)) & 1u;
  }
  void set_bit(int pos) { blocks[pos / 64] |= std::uint64_t{1} << (pos % 64); }

  bool operator==(const BinarySignature& other) const = default;
};

/// (payload, stored) bit counts for N neighbors.
std::pair<int, int> signature_length_bits(int n_neighbors);

struct ProjectionTriplet {
  double px = 0, py = 0, pz = 0;
};

/// Components of a unit normal expressed in LRF coordinates.
ProjectionTriplet project_normal(const Vec3& normal);

/// Eq-style per-axis comparison: bit 1 when m's component >= n's.
std::array<bool, 3> encode_pair(const ProjectionTriplet& m,
                                const ProjectionTriplet& n);

struct SignatureParams {
  int n_neighbors = 32;
  double theta = M_PI / 2;
  int candidate_multiplier = 4;
  // compare projected point positions instead of surface normals
  bool project_positions = false;
};

/// Full descriptor pipeline for one keypoint: angular neighbor
/// selection, support radius, weighted-covariance LRF, alignment, pair
/// encoding. Throws SignatureSkippedError when the neighborhood is
/// short and DegenerateGeometryError when the LRF cannot be built.
BinarySignature compute_signature(const PointCloud& cloud,
                                  const SpatialIndex& index, int keypoint,
                                  const SignatureParams& params);

struct DescribeResult {
  std::vector<BinarySignature> signatures;
  std::vector<int> skipped;  // keypoint indices that failed
};

/// Batch description; deterministic regardless of thread count.
DescribeResult describe(const PointCloud& cloud, const SpatialIndex& index,
                        const std::vector<int>& keypoints,
                        const SignatureParams& params, unsigned threads = 0);

/// Descriptor file, binary little-endian: magic "3DBS", u8 version (1),
/// u16 N, u32 count, then per signature a u32 keypoint index followed
/// by the storage blocks in ascending bit order.
void save_descriptors(const std::string& path,
                      const std::vector<BinarySignature>& signatures,
                      int n_neighbors);
std::pair<int, std::vector<BinarySignature>> load_descriptors(
    const std::string& path);

}  // namespace tdbs
