#include "tdbs/signature.hpp"

#include <cstring>
#include <fstream>

#include "tdbs/errors.hpp"
#include "tdbs/parallel.hpp"

namespace tdbs {

std::pair<int, int> signature_length_bits(int n_neighbors) {
  if (n_neighbors < 2) throw ParameterError("signature needs N >= 2");
  const int payload = 3 * n_neighbors * (n_neighbors - 1) / 2;
  const int stored = 128 * ((payload + 127) / 128);
  return {payload, stored};
}

ProjectionTriplet project_normal(const Vec3& normal) {
  return {normal[0], normal[1], normal[2]};
}

std::array<bool, 3> encode_pair(const ProjectionTriplet& m,
                                const ProjectionTriplet& n) {
  return {m.px >= n.px, m.py >= n.py, m.pz >= n.pz};
}

BinarySignature compute_signature(const PointCloud& cloud,
                                  const SpatialIndex& index, int keypoint,
                                  const SignatureParams& params) {
  if (!cloud.has_normals()) {
    throw ParameterError("descriptor requires cloud normals");
  }
  NeighborSet neighbors =
      select_neighbors_angular(cloud, index, keypoint, params.n_neighbors,
                               params.theta, params.candidate_multiplier);
  if (neighbors.short_set ||
      static_cast<int>(neighbors.neighbor_indices.size()) < params.n_neighbors) {
    throw SignatureSkippedError("keypoint " + std::to_string(keypoint) +
                                ": neighborhood shorter than N");
  }
  const double radius = support_radius(neighbors);
  LocalReferenceFrame lrf = compute_lrf(cloud, index, keypoint, radius);
  AlignedSurface surface = align(cloud, neighbors, lrf);

  const int n = params.n_neighbors;
  std::vector<ProjectionTriplet> proj(n);
  for (int i = 0; i < n; ++i) {
    proj[i] = project_normal(params.project_positions
                                 ? Vec3(surface.points[i])
                                 : surface.normals[i]);
  }

  auto [payload, stored] = signature_length_bits(n);
  (void)payload;
  BinarySignature sig;
  sig.keypoint_index = static_cast<std::uint32_t>(keypoint);
  sig.n_neighbors = static_cast<std::uint16_t>(n);
  sig.blocks.assign(stored / 64, 0);

  // ordered pairs (m, n), m < n, lexicographic; bit 3*i + axis
  int pair = 0;
  for (int m = 0; m < n; ++m) {
    for (int k = m + 1; k < n; ++k, ++pair) {
      const auto bits = encode_pair(proj[m], proj[k]);
      for (int axis = 0; axis < 3; ++axis) {
        if (bits[axis]) sig.set_bit(3 * pair + axis);
      }
    }
  }
  return sig;
}

DescribeResult describe(const PointCloud& cloud, const SpatialIndex& index,
                        const std::vector<int>& keypoints,
                        const SignatureParams& params, unsigned threads) {
  std::vector<BinarySignature> slots(keypoints.size());
  std::vector<char> ok(keypoints.size(), 0);
  parallel_for(
      keypoints.size(),
      [&](std::size_t i) {
        try {
          slots[i] = compute_signature(cloud, index, keypoints[i], params);
          ok[i] = 1;
        } catch (const SignatureSkippedError&) {
        } catch (const DegenerateGeometryError&) {
        }
      },
      threads);
  DescribeResult result;
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    if (ok[i]) {
      result.signatures.push_back(std::move(slots[i]));
    } else {
      result.skipped.push_back(keypoints[i]);
    }
  }
  return result;
}

void save_descriptors(const std::string& path,
                      const std::vector<BinarySignature>& signatures,
                      int n_neighbors) {
  auto [payload, stored] = signature_length_bits(n_neighbors);
  (void)payload;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError(path + ": cannot open for writing");
  out.write("3DBS", 4);
  const std::uint8_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), 1);
  const std::uint16_t n16 = static_cast<std::uint16_t>(n_neighbors);
  out.write(reinterpret_cast<const char*>(&n16), 2);
  const std::uint32_t count = static_cast<std::uint32_t>(signatures.size());
  out.write(reinterpret_cast<const char*>(&count), 4);
  for (const auto& sig : signatures) {
    if (sig.n_neighbors != n_neighbors ||
        sig.stored_bits() != stored) {
      throw ParameterError("signature N does not match file header");
    }
    out.write(reinterpret_cast<const char*>(&sig.keypoint_index), 4);
    out.write(reinterpret_cast<const char*>(sig.blocks.data()),
              static_cast<std::streamsize>(sig.blocks.size() * 8));
  }
  if (!out) throw Error(path + ": write failure");
}

std::pair<int, std::vector<BinarySignature>> load_descriptors(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedInputError(path + ": cannot open file");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "3DBS", 4) != 0) {
    throw MalformedInputError(path + ": bad magic");
  }
  std::uint8_t version;
  if (!in.read(reinterpret_cast<char*>(&version), 1) || version != 1) {
    throw MalformedInputError(path + ": unsupported version");
  }
  std::uint16_t n16;
  std::uint32_t count;
  if (!in.read(reinterpret_cast<char*>(&n16), 2) ||
      !in.read(reinterpret_cast<char*>(&count), 4)) {
    throw MalformedInputError(path + ": truncated header");
  }
  auto [payload, stored] = signature_length_bits(n16);
  (void)payload;
  const std::size_t words = stored / 64;
  std::vector<BinarySignature> sigs(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    sigs[i].n_neighbors = n16;
    sigs[i].blocks.resize(words);
    if (!in.read(reinterpret_cast<char*>(&sigs[i].keypoint_index), 4) ||
        !in.read(reinterpret_cast<char*>(sigs[i].blocks.data()),
                 static_cast<std::streamsize>(words * 8))) {
      throw MalformedInputError(path + ": truncated at signature " +
                                std::to_string(i));
    }
  }
  return {n16, std::move(sigs)};
}

}  // namespace tdbs
