#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "tega/vec3.hpp"

namespace tega::geometry {

// Uniform hash grid over a fixed point set. Radius queries visit the cell
// neighborhood covering the ball; results are returned in ascending index
// order so downstream consumers stay deterministic.
class SpatialGrid {
 public:
  SpatialGrid(const std::vector<float>& points, double cell_size)
      : points_(points), cell_(cell_size > 0 ? cell_size : 1.0) {
    std::size_t n = points_.size() / 3;
    for (std::size_t i = 0; i < n; ++i)
      cells_[key(point(i))].push_back(std::uint32_t(i));
  }

  Vec3 point(std::size_t i) const {
    return {points_[3 * i], points_[3 * i + 1], points_[3 * i + 2]};
  }

  // Indices with |p - center| <= radius, ascending.
  void query_radius(const Vec3& center, double radius,
                    std::vector<std::uint32_t>& out) const {
    out.clear();
    double r2 = radius * radius;
    int x0 = coord(center.x - radius), x1 = coord(center.x + radius);
    int y0 = coord(center.y - radius), y1 = coord(center.y + radius);
    int z0 = coord(center.z - radius), z1 = coord(center.z + radius);
    for (int cx = x0; cx <= x1; ++cx)
      for (int cy = y0; cy <= y1; ++cy)
        for (int cz = z0; cz <= z1; ++cz) {
          auto it = cells_.find(pack(cx, cy, cz));
          if (it == cells_.end()) continue;
          for (std::uint32_t idx : it->second)
            if (norm2(point(idx) - center) <= r2) out.push_back(idx);
        }
    std::sort(out.begin(), out.end());
  }

  // k nearest neighbors of points_[qi], excluding qi itself. Expands the cell
  // search ring until enough candidates are confirmed.
  void query_knn(std::size_t qi, int k, std::vector<std::uint32_t>& out) const {
    Vec3 q = point(qi);
    std::vector<std::pair<double, std::uint32_t>> cand;
    int ring = 1;
    std::size_t total = points_.size() / 3;
    while (true) {
      cand.clear();
      double radius = cell_ * ring;
      int x0 = coord(q.x - radius), x1 = coord(q.x + radius);
      int y0 = coord(q.y - radius), y1 = coord(q.y + radius);
      int z0 = coord(q.z - radius), z1 = coord(q.z + radius);
      for (int cx = x0; cx <= x1; ++cx)
        for (int cy = y0; cy <= y1; ++cy)
          for (int cz = z0; cz <= z1; ++cz) {
            auto it = cells_.find(pack(cx, cy, cz));
            if (it == cells_.end()) continue;
            for (std::uint32_t idx : it->second)
              if (idx != qi) cand.emplace_back(norm2(point(idx) - q), idx);
          }
      // A candidate at distance <= (ring-1)*cell is guaranteed closer than any
      // point outside the scanned box.
      double safe = cell_ * (ring - 1);
      std::size_t confirmed = 0;
      for (auto& [d2, idx] : cand)
        if (d2 <= safe * safe) ++confirmed;
      if (confirmed >= std::size_t(k) || cand.size() + 1 >= total) break;
      ++ring;
    }
    std::size_t kk = std::min<std::size_t>(k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + kk, cand.end());
    out.clear();
    for (std::size_t i = 0; i < kk; ++i) out.push_back(cand[i].second);
  }

 private:
  static std::int64_t pack(int x, int y, int z) {
    auto m = [](int v) { return std::int64_t(std::uint32_t(v) & 0x1FFFFF); };
    return (m(x) << 42) | (m(y) << 21) | m(z);
  }
  int coord(double v) const { return int(std::floor(v / cell_)); }
  std::int64_t key(const Vec3& p) const {
    return pack(coord(p.x), coord(p.y), coord(p.z));
  }

  const std::vector<float>& points_;
  double cell_;
  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> cells_;
};

}  // namespace tega::geometry
