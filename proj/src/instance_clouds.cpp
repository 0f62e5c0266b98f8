#include "dynodom/instance_clouds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>


namespace dynodom {
namespace {

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

PointCloud voxel_downsample(const PointCloud& cloud, const VoxelParams& params) {
  params.validate();
  if (cloud.empty()) throw PreconditionError("voxel_downsample: empty cloud");
  const double inv = 1.0 / params.voxel_size;
  std::unordered_map<CellKey, std::size_t, CellHash> cells;
  std::vector<Point3> sums;
  std::vector<std::size_t> counts;
  cells.reserve(cloud.size());
  for (const auto& p : cloud) {
    const CellKey key{static_cast<std::int64_t>(std::floor(p.x() * inv)),
                      static_cast<std::int64_t>(std::floor(p.y() * inv)),
                      static_cast<std::int64_t>(std::floor(p.z() * inv))};
    auto [it, inserted] = cells.try_emplace(key, sums.size());
    if (inserted) {
      sums.push_back(Point3::Zero());
      counts.push_back(0);
    }
    sums[it->second] += p;
    ++counts[it->second];
  }
  PointCloud out(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) out[i] = sums[i] / double(counts[i]);
  return out;
}

std::vector<int> dbscan(const PointCloud& cloud, const DbscanParams& params) {
  params.validate();
  if (cloud.empty()) throw PreconditionError("dbscan: empty cloud");
  const std::size_t n = cloud.size();
  const double eps2 = params.eps * params.eps;

  // Uniform grid with cells slightly wider than eps: every neighbour of a
  // point lies in one of the 27 cells around it.
  const double inv = 1.0 / (params.eps * (1.0 + 1e-9));
  std::vector<CellKey> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    keys[i] = {static_cast<std::int64_t>(std::floor(cloud[i].x() * inv)),
               static_cast<std::int64_t>(std::floor(cloud[i].y() * inv)),
               static_cast<std::int64_t>(std::floor(cloud[i].z() * inv))};
  }
  std::unordered_map<CellKey, std::uint32_t, CellHash> cell_of;
  std::vector<std::uint32_t> cell_index(n);
  std::vector<std::uint32_t> cell_size;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = cell_of.try_emplace(keys[i], static_cast<std::uint32_t>(cell_size.size()));
    if (inserted) cell_size.push_back(0);
    cell_index[i] = it->second;
    ++cell_size[it->second];
  }
  const std::size_t cells = cell_size.size();
  std::vector<std::uint32_t> start(cells + 1, 0);
  for (std::size_t c = 0; c < cells; ++c) start[c + 1] = start[c] + cell_size[c];
  std::vector<std::uint32_t> members(n);
  {
    std::vector<std::uint32_t> fill(start.begin(), start.end() - 1);
    for (std::size_t i = 0; i < n; ++i) members[fill[cell_index[i]]++] = static_cast<std::uint32_t>(i);
  }
  std::vector<std::uint32_t> adj_start(cells + 1, 0);
  std::vector<std::uint32_t> adj;
  for (std::size_t c = 0; c < cells; ++c) {
    const CellKey& k = keys[members[start[c]]];
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          const auto it = cell_of.find({k.x + dx, k.y + dy, k.z + dz});
          if (it != cell_of.end()) adj.push_back(it->second);
        }
      }
    }
    adj_start[c + 1] = static_cast<std::uint32_t>(adj.size());
  }
  // Calls fn(j) for every point in the 27 surrounding cells until fn returns false.
  auto for_each_candidate = [&](std::size_t i, auto&& fn) {
    const std::uint32_t c = cell_index[i];
    for (std::uint32_t a = adj_start[c]; a < adj_start[c + 1]; ++a) {
      const std::uint32_t other = adj[a];
      for (std::uint32_t m = start[other]; m < start[other + 1]; ++m) {
        if (!fn(members[m])) return;
      }
    }
  };
  auto within = [&](std::size_t i, std::uint32_t j) {
    return (cloud[j] - cloud[i]).squaredNorm() <= eps2;
  };

  const auto min_pts = static_cast<std::size_t>(params.min_pts);
  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t count = 0;
    for_each_candidate(i, [&](std::uint32_t j) {
      if (within(i, j)) ++count;
      return count < min_pts;
    });
    core[i] = count >= min_pts;
  }

  std::vector<std::uint32_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<std::uint32_t>(i);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    for_each_candidate(i, [&](std::uint32_t j) {
      if (j <= i || !core[j]) return true;
      const std::uint32_t a = find(static_cast<std::uint32_t>(i));
      const std::uint32_t b = find(j);
      if (a != b && within(i, j)) parent[std::max(a, b)] = std::min(a, b);
      return true;
    });
  }

  // Clusters are numbered in order of their lowest core point.
  std::vector<int> labels(n, kDbscanNoise);
  std::vector<int> root_label(n, kDbscanNoise);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    const std::uint32_t r = find(static_cast<std::uint32_t>(i));
    if (root_label[r] == kDbscanNoise) root_label[r] = next++;
    labels[i] = root_label[r];
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_j = 0;
    for_each_candidate(i, [&](std::uint32_t j) {
      if (!core[j]) return true;
      const double d2 = (cloud[j] - cloud[i]).squaredNorm();
      if (d2 <= eps2 && (d2 < best || (d2 == best && j < best_j))) {
        best = d2;
        best_j = j;
      }
      return true;
    });
    if (best < std::numeric_limits<double>::infinity()) labels[i] = labels[best_j];
  }
  return labels;
}

PointCloud reject_outliers(const PointCloud& instance_cloud, const VoxelParams& voxel,
                           const DbscanParams& db) {
  if (instance_cloud.empty()) throw PreconditionError("reject_outliers: empty cloud");
  const PointCloud down = voxel_downsample(instance_cloud, voxel);
  const std::vector<int> labels = dbscan(down, db);
  std::vector<std::size_t> sizes;
  for (int l : labels) {
    if (l == kDbscanNoise) continue;
    if (static_cast<std::size_t>(l) >= sizes.size()) sizes.resize(l + 1, 0);
    ++sizes[l];
  }
  if (sizes.empty()) throw NumericalError("reject_outliers: instance fully rejected");
  int largest = 0;
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    if (sizes[l] > sizes[largest]) largest = static_cast<int>(l);
  }
  PointCloud out;
  out.reserve(sizes[largest]);
  for (std::size_t i = 0; i < down.size(); ++i) {
    if (labels[i] == largest) out.push_back(down[i]);
  }
  return out;
}

}  // namespace dynodom
