#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "dynodom/se3.hpp"

namespace dynodom {

/// Static 3-d tree over a borrowed point array. Exact nearest-neighbour and
/// fixed-radius queries; the point array must outlive the tree.
template <typename Scalar>
class KdTree {
 public:
  using Point = Vector3<Scalar>;

  explicit KdTree(const std::vector<Point>& points, int leaf_size = 12)
      : points_(points), leaf_size_(std::max(1, leaf_size)) {
    index_.resize(points.size());
    std::iota(index_.begin(), index_.end(), 0u);
    if (!points.empty()) build(0, static_cast<std::uint32_t>(points.size()));
  }

  std::size_t size() const { return points_.size(); }

  struct Nearest {
    std::size_t index = 0;
    Scalar squared_distance = std::numeric_limits<Scalar>::infinity();
  };

  /// Nearest point; ties resolve to the lowest point index.
  Nearest nearest(const Point& q) const {
    Nearest best;
    if (!nodes_.empty()) search_nearest(0, q, best);
    return best;
  }

  /// Indices of all points with |p - q|^2 <= radius^2, in ascending order.
  void radius_search(const Point& q, Scalar radius, std::vector<std::size_t>& out) const {
    out.clear();
    if (!nodes_.empty()) search_radius(0, q, radius * radius, out);
    std::sort(out.begin(), out.end());
  }

 private:
  struct Node {
    std::uint32_t begin, end;
    std::int32_t left = -1, right = -1;
    int axis = 0;
    Scalar split = 0;
    Point lo, hi;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end) {
    Node node;
    node.begin = begin;
    node.end = end;
    node.lo = node.hi = points_[index_[begin]];
    for (std::uint32_t i = begin; i < end; ++i) {
      node.lo = node.lo.cwiseMin(points_[index_[i]]);
      node.hi = node.hi.cwiseMax(points_[index_[i]]);
    }
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= static_cast<std::uint32_t>(leaf_size_)) return id;

    int axis;
    (node.hi - node.lo).maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       return points_[a][axis] < points_[b][axis];
                     });
    const Scalar split = points_[index_[mid]][axis];
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  static Scalar box_distance2(const Node& n, const Point& q) {
    const Point d = (n.lo - q).cwiseMax(q - n.hi).cwiseMax(Point::Zero());
    return d.squaredNorm();
  }

  void search_nearest(std::int32_t id, const Point& q, Nearest& best) const {
    const Node& n = nodes_[id];
    if (box_distance2(n, q) > best.squared_distance) return;
    if (n.left < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::uint32_t idx = index_[i];
        const Scalar d2 = (points_[idx] - q).squaredNorm();
        if (d2 < best.squared_distance || (d2 == best.squared_distance && idx < best.index)) {
          best.squared_distance = d2;
          best.index = idx;
        }
      }
      return;
    }
    const bool go_left = q[n.axis] < n.split;
    search_nearest(go_left ? n.left : n.right, q, best);
    search_nearest(go_left ? n.right : n.left, q, best);
  }

  void search_radius(std::int32_t id, const Point& q, Scalar r2,
                     std::vector<std::size_t>& out) const {
    const Node& n = nodes_[id];
    if (box_distance2(n, q) > r2) return;
    if (n.left < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::uint32_t idx = index_[i];
        if ((points_[idx] - q).squaredNorm() <= r2) out.push_back(idx);
      }
      return;
    }
    search_radius(n.left, q, r2, out);
    search_radius(n.right, q, r2, out);
  }

  const std::vector<Point>& points_;
  int leaf_size_;
  std::vector<std::uint32_t> index_;
  std::vector<Node> nodes_;
};

}  // namespace dynodom
