#include "tdbs/matching.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <queue>
#include <set>

#include "tdbs/errors.hpp"
#include "tdbs/kernels.hpp"

namespace tdbs {

int hamming(const BinarySignature& a, const BinarySignature& b) {
  if (a.n_neighbors != b.n_neighbors || a.blocks.size() != b.blocks.size()) {
    throw ParameterError("hamming distance requires equal signature lengths");
  }
  return static_cast<int>(
      kernels::hamming_kernel()(a.blocks.data(), b.blocks.data(),
                                a.blocks.size()));
}

namespace {

inline bool candidate_less(const MatchCandidate& a, const MatchCandidate& b) {
  return a.distance < b.distance ||
         (a.distance == b.distance && a.target_id < b.target_id);
}

}  // namespace

std::vector<std::vector<MatchCandidate>> brute_force_match(
    const std::vector<BinarySignature>& queries,
    const std::vector<BinarySignature>& targets, int k) {
  if (targets.empty()) throw ParameterError("brute force needs targets");
  if (k < 1) throw ParameterError("brute force needs k >= 1");
  std::vector<std::vector<MatchCandidate>> result(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    std::vector<MatchCandidate> all(targets.size());
    for (std::size_t t = 0; t < targets.size(); ++t) {
      all[t] = {static_cast<int>(q), static_cast<int>(t),
                hamming(queries[q], targets[t])};
    }
    const std::size_t keep = std::min<std::size_t>(k, all.size());
    std::partial_sort(all.begin(), all.begin() + keep, all.end(),
                      candidate_less);
    all.resize(keep);
    result[q] = std::move(all);
  }
  return result;
}

ClusteringForest::ClusteringForest(
    const std::vector<BinarySignature>& descriptors, const ForestParams& params)
    : params_(params), count_(descriptors.size()), descriptors_(descriptors) {
  if (params.trees < 1) throw ParameterError("forest needs >= 1 tree");
  if (params.branching < 2) throw ParameterError("branching factor K >= 2");
  if (params.max_leaf < params.branching) {
    throw ParameterError("max leaf size must be >= branching factor");
  }
  for (std::size_t i = 1; i < descriptors_.size(); ++i) {
    if (descriptors_[i].n_neighbors != descriptors_[0].n_neighbors) {
      throw ParameterError("forest descriptors must share one N");
    }
  }
  trees_.resize(params.trees);
  for (int t = 0; t < params.trees; ++t) {
    std::mt19937_64 rng(params.seed + static_cast<std::uint64_t>(t));
    std::vector<int> ids(count_);
    std::iota(ids.begin(), ids.end(), 0);
    build_node(trees_[t], std::move(ids), rng);
  }
}

int ClusteringForest::distance_to(const BinarySignature& query, int id) const {
  return static_cast<int>(kernels::hamming_kernel()(
      query.blocks.data(), descriptors_[id].blocks.data(),
      query.blocks.size()));
}

int ClusteringForest::build_node(std::vector<Node>& nodes, std::vector<int> ids,
                                 std::mt19937_64& rng) const {
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  if (static_cast<int>(ids.size()) < params_.max_leaf) {
    nodes[id].members = std::move(ids);
    return id;
  }
  // pick K distinct members uniformly at random as centers
  const int k = params_.branching;
  std::vector<int> pool = ids;
  for (int j = 0; j < k; ++j) {
    const std::size_t pick =
        j + static_cast<std::size_t>(rng() % (pool.size() - j));
    std::swap(pool[j], pool[pick]);
  }
  std::vector<int> centers(pool.begin(), pool.begin() + k);

  std::vector<std::vector<int>> clusters(k);
  for (int member : ids) {
    int best = 0;
    int best_d = hamming(descriptors_[member], descriptors_[centers[0]]);
    for (int c = 1; c < k; ++c) {
      const int d = hamming(descriptors_[member], descriptors_[centers[c]]);
      if (d < best_d) {  // ties keep the lowest center ordinal
        best_d = d;
        best = c;
      }
    }
    clusters[best].push_back(member);
  }

  // all members collapsing into one cluster cannot be split further
  // (duplicate descriptors); keep them as an oversized leaf
  bool progressed = false;
  for (const auto& cluster : clusters) {
    if (!cluster.empty() && cluster.size() < ids.size()) progressed = true;
  }
  if (!progressed) {
    nodes[id].members = std::move(ids);
    return id;
  }

  std::vector<int> kept_centers;
  std::vector<int> children;
  for (int c = 0; c < k; ++c) {
    if (clusters[c].empty()) continue;  // dropped
    kept_centers.push_back(centers[c]);
    children.push_back(build_node(nodes, std::move(clusters[c]), rng));
  }
  nodes[id].centers = std::move(kept_centers);
  nodes[id].children = std::move(children);
  return id;
}

std::vector<std::vector<int>> ClusteringForest::leaves(int tree) const {
  std::vector<std::vector<int>> out;
  for (const Node& n : trees_[tree]) {
    if (n.children.empty()) out.push_back(n.members);
  }
  return out;
}

ClusteringForest::SearchResult ClusteringForest::search(
    const BinarySignature& query, int k, std::size_t max_checks) const {
  if (k < 1) throw ParameterError("search needs k >= 1");
  if (max_checks < static_cast<std::size_t>(k)) {
    throw ParameterError("max_checks must be >= k");
  }
  SearchResult result;
  if (count_ == 0) return result;
  if (query.n_neighbors != descriptors_[0].n_neighbors) {
    throw ParameterError("query N does not match forest");
  }

  struct QueueEntry {
    int center_distance;
    int tree;
    int node;
    bool operator>(const QueueEntry& other) const {
      return center_distance > other.center_distance ||
             (center_distance == other.center_distance &&
              (tree > other.tree || (tree == other.tree && node > other.node)));
    }
  };
  std::priority_queue<QueueEntry, std::vector<QueueEntry>,
                      std::greater<QueueEntry>>
      pending;
  for (int t = 0; t < static_cast<int>(trees_.size()); ++t) {
    pending.push({0, t, 0});
  }

  std::vector<char> visited(count_, 0);
  std::vector<MatchCandidate> best;  // max-heap on (distance, id)
  auto heap_cmp = [](const MatchCandidate& a, const MatchCandidate& b) {
    return candidate_less(a, b);
  };

  while (!pending.empty() && result.checks_used < max_checks) {
    QueueEntry entry = pending.top();
    pending.pop();
    int tree = entry.tree;
    int node = entry.node;
    // descend to a leaf, queuing siblings keyed by center distance
    while (!trees_[tree][node].children.empty()) {
      const Node& n = trees_[tree][node];
      int best_child = 0;
      std::vector<int> dists(n.centers.size());
      for (std::size_t c = 0; c < n.centers.size(); ++c) {
        dists[c] = distance_to(query, n.centers[c]);
        if (dists[c] < dists[best_child]) best_child = static_cast<int>(c);
      }
      for (std::size_t c = 0; c < n.centers.size(); ++c) {
        if (static_cast<int>(c) == best_child) continue;
        pending.push({dists[c], tree, n.children[c]});
      }
      node = n.children[best_child];
    }
    for (int member : trees_[tree][node].members) {
      if (visited[member]) continue;
      visited[member] = 1;
      ++result.checks_used;
      const MatchCandidate cand{-1, member, distance_to(query, member)};
      if (static_cast<int>(best.size()) < k) {
        best.push_back(cand);
        std::push_heap(best.begin(), best.end(), heap_cmp);
      } else if (candidate_less(cand, best.front())) {
        std::pop_heap(best.begin(), best.end(), heap_cmp);
        best.back() = cand;
        std::push_heap(best.begin(), best.end(), heap_cmp);
      }
    }
  }
  std::sort(best.begin(), best.end(), candidate_less);
  result.matches = std::move(best);
  return result;
}

double measure_search_precision(const ClusteringForest& forest,
                                const std::vector<BinarySignature>& queries,
                                int k, std::size_t max_checks) {
  if (queries.empty()) return 1.0;
  auto exact = brute_force_match(queries, forest.descriptors(), k);
  std::size_t found = 0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    auto approx = forest.search(queries[q], k, max_checks);
    std::set<int> exact_ids;
    for (const auto& m : exact[q]) exact_ids.insert(m.target_id);
    for (const auto& m : approx.matches) {
      if (exact_ids.count(m.target_id)) ++found;
    }
  }
  return static_cast<double>(found) /
         (static_cast<double>(k) * static_cast<double>(queries.size()));
}

void save_matches(const std::string& path,
                  const std::vector<std::vector<MatchCandidate>>& matches) {
  std::ofstream out(path);
  if (!out) throw ParameterError(path + ": cannot open for writing");
  out << "query_id,target_id,distance\n";
  for (const auto& per_query : matches) {
    for (const auto& m : per_query) {
      out << m.query_id << "," << m.target_id << "," << m.distance << "\n";
    }
  }
  if (!out) throw Error(path + ": write failure");
}

}  // namespace tdbs
