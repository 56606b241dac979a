#include "tdbs/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tdbs/errors.hpp"

namespace tdbs {

namespace {
constexpr int kLeafSize = 16;

// Heap ordering: the worst hit (largest distance, then largest index)
// sits on top so it can be evicted first.
inline bool better(double d2a, int ia, double d2b, int ib) {
  return d2a < d2b || (d2a == d2b && ia < ib);
}
}  // namespace

SpatialIndex::SpatialIndex(const PointCloud& cloud) : points_(cloud.points) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    root_ = build(0, static_cast<int>(points_.size()));
  }
}

int SpatialIndex::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  if (end - begin <= kLeafSize) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());
  for (int i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis;
  (hi - lo).maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end, [&](int a, int b) {
                     return points_[a][axis] < points_[b][axis] ||
                            (points_[a][axis] == points_[b][axis] && a < b);
                   });
  const double split = points_[order_[mid]][axis];
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void SpatialIndex::knn_recurse(int node, const Vec3& query, int k,
                               std::vector<Hit>& heap) const {
  const Node& n = nodes_[node];
  if (n.left < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int idx = order_[i];
      const double d2 = (points_[idx] - query).squaredNorm();
      if (static_cast<int>(heap.size()) < k) {
        heap.push_back({idx, d2});
        std::push_heap(heap.begin(), heap.end(), [](const Hit& a, const Hit& b) {
          return better(a.distance, a.index, b.distance, b.index);
        });
      } else if (better(d2, idx, heap.front().distance, heap.front().index)) {
        std::pop_heap(heap.begin(), heap.end(), [](const Hit& a, const Hit& b) {
          return better(a.distance, a.index, b.distance, b.index);
        });
        heap.back() = {idx, d2};
        std::push_heap(heap.begin(), heap.end(), [](const Hit& a, const Hit& b) {
          return better(a.distance, a.index, b.distance, b.index);
        });
      }
    }
    return;
  }
  const double delta = query[n.axis] - n.split;
  const int near = delta < 0 ? n.left : n.right;
  const int far = delta < 0 ? n.right : n.left;
  knn_recurse(near, query, k, heap);
  if (static_cast<int>(heap.size()) < k ||
      delta * delta <= heap.front().distance) {
    knn_recurse(far, query, k, heap);
  }
}

std::vector<SpatialIndex::Hit> SpatialIndex::knn(const Vec3& query,
                                                 int k) const {
  if (k < 1) throw ParameterError("knn requires k >= 1");
  if (points_.empty()) throw EmptyInputError("knn on an empty cloud");
  std::vector<Hit> heap;
  heap.reserve(k);
  knn_recurse(root_, query, k, heap);
  std::sort(heap.begin(), heap.end(), [](const Hit& a, const Hit& b) {
    return better(a.distance, a.index, b.distance, b.index);
  });
  for (Hit& h : heap) h.distance = std::sqrt(h.distance);
  return heap;
}

void SpatialIndex::radius_recurse(int node, const Vec3& query, double r2,
                                  std::vector<Hit>& out) const {
  const Node& n = nodes_[node];
  if (n.left < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int idx = order_[i];
      const double d2 = (points_[idx] - query).squaredNorm();
      if (d2 <= r2) out.push_back({idx, d2});
    }
    return;
  }
  const double delta = query[n.axis] - n.split;
  const int near = delta < 0 ? n.left : n.right;
  const int far = delta < 0 ? n.right : n.left;
  radius_recurse(near, query, r2, out);
  if (delta * delta <= r2) radius_recurse(far, query, r2, out);
}

std::vector<SpatialIndex::Hit> SpatialIndex::radius(const Vec3& query,
                                                    double r) const {
  if (points_.empty()) throw EmptyInputError("radius query on an empty cloud");
  std::vector<Hit> out;
  radius_recurse(root_, query, r * r, out);
  std::sort(out.begin(), out.end(), [](const Hit& a, const Hit& b) {
    return better(a.distance, a.index, b.distance, b.index);
  });
  for (Hit& h : out) h.distance = std::sqrt(h.distance);
  return out;
}

}  // namespace tdbs
