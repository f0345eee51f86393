#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <unordered_map>
#include <vector>

#include "spatial_grid.hpp"
#include "tega/error.hpp"
#include "tega/geometry.hpp"

namespace tega::geometry {
namespace {

using std::uint32_t;

constexpr double kBallTol = 1e-6;    // relative slack on the empty-ball test
constexpr double kAngleTol = 1e-9;

struct FrontEdge {
  uint32_t s, t, o;  // directed edge s->t; o completes the owner triangle
};

inline std::uint64_t edge_key(uint32_t a, uint32_t b) {
  if (a > b) std::swap(a, b);
  return (std::uint64_t(a) << 32) | b;
}

class BallPivoter {
 public:
  BallPivoter(const PointCloud& pc, const std::vector<uint32_t>& index_map)
      : pc_(pc), index_map_(index_map) {}

  std::vector<std::array<uint32_t, 3>> run(const std::vector<double>& radii) {
    std::size_t n = index_map_.size();
    used_.assign(n, 0);
    boundary_edges_.assign(n, 0);
    pts_.resize(3 * n);
    for (std::size_t i = 0; i < n; ++i) {
      Vec3 p = pc_.point(index_map_[i]);
      pts_[3 * i] = float(p.x);
      pts_[3 * i + 1] = float(p.y);
      pts_[3 * i + 2] = float(p.z);
    }
    for (double r : radii) {
      radius_ = r;
      grid_ = std::make_unique<SpatialGrid>(pts_, r);
      reseed_front();
      uint32_t seed_cursor = 0;
      while (true) {
        while (!front_.empty()) {
          FrontEdge e = front_.front();
          front_.pop_front();
          if (edge_count(e.s, e.t) != 1) continue;  // stale: glued meanwhile
          pivot(e);
        }
        if (!find_seed(seed_cursor)) break;
      }
    }
    return triangles_;
  }

 private:
  Vec3 point(uint32_t i) const {
    return {pts_[3 * i], pts_[3 * i + 1], pts_[3 * i + 2]};
  }
  Vec3 normal(uint32_t i) const { return pc_.normal(index_map_[i]); }

  int edge_count(uint32_t a, uint32_t b) const {
    auto it = edges_.find(edge_key(a, b));
    return it == edges_.end() ? 0 : it->second;
  }

  // Center of a ball of radius r resting on p0,p1,p2 on the side pointed to by
  // the (outward) triangle normal. Returns false if the circumradius exceeds r
  // or the points are near-collinear.
  bool ball_center(const Vec3& p0, const Vec3& p1, const Vec3& p2, double r,
                   const Vec3& outward, Vec3* out) const {
    Vec3 ab = p1 - p0, ac = p2 - p0;
    Vec3 n = cross(ab, ac);
    double n2 = norm2(n);
    double scale2 = std::max(norm2(ab), norm2(ac));
    if (n2 <= 1e-18 * scale2 * scale2) return false;
    Vec3 cc =
        p0 + (cross(n, ab) * norm2(ac) + cross(ac, n) * norm2(ab)) / (2.0 * n2);
    double rc2 = norm2(cc - p0);
    double h2 = r * r - rc2;
    if (h2 <= 0.0) return false;
    Vec3 nh = normalized(n);
    if (dot(nh, outward) < 0.0) nh = -nh;
    *out = cc + nh * std::sqrt(h2);
    return true;
  }

  bool ball_empty(const Vec3& c, uint32_t a, uint32_t b, uint32_t v) {
    grid_->query_radius(c, radius_ * (1.0 - kBallTol), scratch_);
    for (uint32_t i : scratch_)
      if (i != a && i != b && i != v) return false;
    return true;
  }

  // A vertex already swallowed by the interior cannot accept new triangles.
  bool vertex_usable(uint32_t v) const {
    return !used_[v] || boundary_edges_[v] > 0;
  }

  void add_triangle(uint32_t t0, uint32_t t1, uint32_t t2) {
    triangles_.push_back({index_map_[t0], index_map_[t1], index_map_[t2]});
    used_[t0] = used_[t1] = used_[t2] = 1;
    bump_edge(t0, t1);
    bump_edge(t1, t2);
    bump_edge(t2, t0);
  }

  void bump_edge(uint32_t a, uint32_t b) {
    int& c = edges_[edge_key(a, b)];
    ++c;
    if (c == 1) {
      ++boundary_edges_[a];
      ++boundary_edges_[b];
    } else if (c == 2) {
      --boundary_edges_[a];
      --boundary_edges_[b];
    }
  }

  void push_front(uint32_t s, uint32_t t, uint32_t o) {
    front_.push_back({s, t, o});
  }

  void reseed_front() {
    front_.clear();
    for (const auto& tri : triangles_) {
      // Recover dedup-local indices; triangles_ stores original cloud indices.
      uint32_t a = local_of(tri[0]), b = local_of(tri[1]), c = local_of(tri[2]);
      if (edge_count(a, b) == 1) push_front(a, b, c);
      if (edge_count(b, c) == 1) push_front(b, c, a);
      if (edge_count(c, a) == 1) push_front(c, a, b);
    }
  }

  uint32_t local_of(uint32_t original) {
    if (local_index_.empty()) {
      for (uint32_t i = 0; i < index_map_.size(); ++i)
        local_index_[index_map_[i]] = i;
    }
    return local_index_.at(original);
  }

  void pivot(const FrontEdge& e) {
    Vec3 ps = point(e.s), pt = point(e.t), po = point(e.o);
    Vec3 owner_n = cross(pt - ps, po - ps);
    Vec3 c_old;
    if (!ball_center(ps, pt, po, radius_, owner_n, &c_old)) return;
    Vec3 m = (ps + pt) * 0.5;
    Vec3 axis = normalized(pt - ps);
    Vec3 va = normalized(c_old - m);

    grid_->query_radius(m, 2.0 * radius_, scratch2_);
    double best_angle = 4.0 * M_PI;
    uint32_t best_v = UINT32_MAX;
    Vec3 best_center{};
    for (uint32_t v : scratch2_) {
      if (v == e.s || v == e.t || v == e.o) continue;
      if (!vertex_usable(v)) continue;
      if (edge_count(e.s, v) >= 2 || edge_count(e.t, v) >= 2) continue;
      Vec3 pv = point(v);
      // New triangle keeps the winding (t, s, v); outward agrees with normals.
      Vec3 tri_n = cross(ps - pt, pv - pt);
      if (dot(tri_n, normal(e.s) + normal(e.t) + normal(v)) <= 0.0) continue;
      Vec3 c_new;
      if (!ball_center(pt, ps, pv, radius_, tri_n, &c_new)) continue;
      Vec3 vb = normalized(c_new - m);
      double cosang = std::clamp(dot(va, vb), -1.0, 1.0);
      double sinang = dot(cross(va, vb), axis);
      double ang = std::atan2(sinang, cosang);
      if (ang < -kAngleTol) ang += 2.0 * M_PI;
      if (ang < best_angle - kAngleTol ||
          (ang < best_angle + kAngleTol && v < best_v)) {
        // First-touch candidate still has to pass the empty-ball test; grazing
        // contacts at equal angle are resolved toward the lower index.
        if (!ball_empty(c_new, e.s, e.t, v)) continue;
        best_angle = ang;
        best_v = v;
        best_center = c_new;
      }
    }
    if (best_v == UINT32_MAX) return;  // boundary edge; larger radius may help

    uint32_t v = best_v;
    add_triangle(e.t, e.s, v);
    if (edge_count(e.s, v) == 1) push_front(e.s, v, e.t);
    if (edge_count(v, e.t) == 1) push_front(v, e.t, e.s);
  }

  bool find_seed(uint32_t& cursor) {
    std::size_t n = index_map_.size();
    std::vector<std::pair<double, uint32_t>> nbrs;
    for (; cursor < n; ++cursor) {
      if (used_[cursor]) continue;
      Vec3 p = point(cursor);
      grid_->query_radius(p, 2.0 * radius_, scratch2_);
      nbrs.clear();
      for (uint32_t j : scratch2_) {
        if (j == cursor || !vertex_usable(j)) continue;
        nbrs.emplace_back(norm2(point(j) - p), j);
      }
      std::sort(nbrs.begin(), nbrs.end());
      std::size_t cap = std::min<std::size_t>(nbrs.size(), 32);
      for (std::size_t i = 0; i < cap; ++i) {
        for (std::size_t j = i + 1; j < cap; ++j) {
          uint32_t a = nbrs[i].second, b = nbrs[j].second;
          if (edge_count(cursor, a) >= 2 || edge_count(cursor, b) >= 2 ||
              edge_count(a, b) >= 2)
            continue;
          Vec3 pa = point(a), pb = point(b);
          Vec3 tri_n = cross(pa - p, pb - p);
          uint32_t t0 = cursor, t1 = a, t2 = b;
          if (dot(tri_n, normal(cursor) + normal(a) + normal(b)) < 0.0) {
            std::swap(t1, t2);
            tri_n = -tri_n;
          }
          Vec3 c;
          if (!ball_center(p, point(t1), point(t2), radius_, tri_n, &c))
            continue;
          if (!ball_empty(c, t0, t1, t2)) continue;
          add_triangle(t0, t1, t2);
          if (edge_count(t0, t1) == 1) push_front(t0, t1, t2);
          if (edge_count(t1, t2) == 1) push_front(t1, t2, t0);
          if (edge_count(t2, t0) == 1) push_front(t2, t0, t1);
          return true;
        }
      }
    }
    return false;
  }

  const PointCloud& pc_;
  const std::vector<uint32_t>& index_map_;
  std::vector<float> pts_;
  std::unique_ptr<SpatialGrid> grid_;
  double radius_ = 0.0;
  std::vector<char> used_;
  std::vector<int> boundary_edges_;
  std::unordered_map<std::uint64_t, int> edges_;
  std::unordered_map<uint32_t, uint32_t> local_index_;
  std::deque<FrontEdge> front_;
  std::vector<std::array<uint32_t, 3>> triangles_;
  std::vector<uint32_t> scratch_, scratch2_;
};

}  // namespace

TriangleMesh ball_pivot_mesh(const PointCloud& pc,
                             const std::vector<double>& radii) {
  if (!pc.has_normals())
    throw Error(ErrorCode::MissingNormals, "ball pivoting needs normals");
  if (radii.empty())
    throw Error(ErrorCode::InvalidArgument, "radii list is empty");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] <= 0.0)
      throw Error(ErrorCode::InvalidArgument, "radii must be positive");
    if (i > 0 && radii[i] <= radii[i - 1])
      throw Error(ErrorCode::InvalidArgument, "radii must be ascending");
  }

  // Exact-duplicate removal; triangles reference the first occurrence.
  std::vector<uint32_t> keep;
  {
    std::map<std::array<float, 3>, uint32_t> seen;
    std::size_t n = pc.point_count();
    for (uint32_t i = 0; i < n; ++i) {
      std::array<float, 3> key = {pc.points[3 * i], pc.points[3 * i + 1],
                                  pc.points[3 * i + 2]};
      if (seen.emplace(key, i).second) keep.push_back(i);
    }
  }

  BallPivoter pivoter(pc, keep);
  auto tris = pivoter.run(radii);
  if (tris.empty())
    throw Error(ErrorCode::NoTriangles, "no seed triangle found", "meshing");

  TriangleMesh mesh;
  mesh.vertices = pc.points;
  mesh.vertex_normals = pc.normals;
  mesh.triangles = std::move(tris);
  return mesh;
}

TriangleMesh ball_pivot_mesh(const PointCloud& pc) {
  double d = mean_nn_distance(pc);
  return ball_pivot_mesh(pc, {1.5 * d, 3.0 * d, 6.0 * d});
}

}  // namespace tega::geometry
