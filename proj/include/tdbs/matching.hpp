#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tdbs/signature.hpp"

namespace tdbs {

struct MatchCandidate {
  int query_id = -1;
  int target_id = -1;
  int distance = 0;  // Hamming bit count over storage
};

/// Hamming distance over storage blocks; equals payload Hamming by the
/// zero-pad invariant. Requires equal N.
int hamming(const BinarySignature& a, const BinarySignature& b);

/// Exact k nearest targets per query, ascending distance, ties by
/// ascending target id.
std::vector<std::vector<MatchCandidate>> brute_force_match(
    const std::vector<BinarySignature>& queries,
    const std::vector<BinarySignature>& targets, int k);

struct ForestParams {
  int trees = 3;
  int branching = 16;    // K
  int max_leaf = 150;    // S_L
  std::uint64_t seed = 42;
};

/// Randomized hierarchical clustering forest over binary descriptors.
/// Each tree recursively splits the id set into K clusters around
/// randomly chosen member centers until clusters are smaller than the
/// leaf threshold. Immutable after construction; concurrent searches
/// are safe.
class ClusteringForest {
 public:
  ClusteringForest(const std::vector<BinarySignature>& descriptors,
                   const ForestParams& params);

  struct SearchResult {
    std::vector<MatchCandidate> matches;  // ascending (distance, id)
    std::size_t checks_used = 0;
  };

  /// Priority-queue search: all tree roots seed one shared queue; the
  /// nearest-center child is descended while siblings are queued; leaf
  /// members are scored until max_checks descriptors have been
  /// examined. max_checks >= size() forces exact results.
  SearchResult search(const BinarySignature& query, int k,
                      std::size_t max_checks) const;

  std::size_t size() const { return count_; }
  const std::vector<BinarySignature>& descriptors() const {
    return descriptors_;
  }

  /// Leaf id-sets of one tree (test introspection).
  std::vector<std::vector<int>> leaves(int tree) const;

 private:
  struct Node {
    std::vector<int> centers;   // ordinal-ordered center descriptor ids
    std::vector<int> children;  // matching child node indices
    std::vector<int> members;   // leaf only
  };

  int build_node(std::vector<Node>& nodes, std::vector<int> ids,
                 std::mt19937_64& rng) const;
  int distance_to(const BinarySignature& query, int id) const;

  ForestParams params_;
  std::size_t count_ = 0;
  std::vector<BinarySignature> descriptors_;
  std::vector<std::vector<Node>> trees_;
};

/// Fraction of exact neighbors among the returned ones, averaged over
/// the query set.
double measure_search_precision(const ClusteringForest& forest,
                                const std::vector<BinarySignature>& queries,
                                int k, std::size_t max_checks);

/// CSV with header query_id,target_id,distance.
void save_matches(const std::string& path,
                  const std::vector<std::vector<MatchCandidate>>& matches);

}  // namespace tdbs
