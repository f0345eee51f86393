#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "tega/error.hpp"
#include "tega/geometry.hpp"
#include "tega/rng.hpp"

using namespace tega;

namespace {

PointCloud planar_grid(int m, int n) {
  PointCloud pc;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      pc.push_point({double(i), double(j), 0.0});
      pc.normals.insert(pc.normals.end(), {0.0f, 0.0f, 1.0f});
    }
  }
  return pc;
}

PointCloud fib_sphere(int n) {
  PointCloud pc;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(1.0 - z * z);
    pc.push_point({r * std::cos(golden * i), r * std::sin(golden * i), z});
    const Vec3 p = pc.point(pc.point_count() - 1);
    pc.set_normal(pc.point_count() - 1, p);
  }
  return pc;
}

std::map<std::pair<uint32_t, uint32_t>, int> edge_counts(
    const TriangleMesh& mesh) {
  std::map<std::pair<uint32_t, uint32_t>, int> counts;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      uint32_t a = t[e], b = t[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      ++counts[{a, b}];
    }
  }
  return counts;
}

}  // namespace

TEST_CASE("planar grid meshes to exactly 2(m-1)(n-1) triangles") {
  for (auto [m, n] : {std::pair{5, 5}, std::pair{8, 12}}) {
    PointCloud pc = planar_grid(m, n);
    TriangleMesh mesh = geometry::ball_pivot_mesh(pc, {0.8});
    CHECK(int(mesh.triangles.size()) == 2 * (m - 1) * (n - 1));
    for (const auto& [edge, count] : edge_counts(mesh)) CHECK(count <= 2);
  }
}

TEST_CASE("sphere reconstruction is closed: Euler characteristic 2") {
  PointCloud pc = fib_sphere(2000);
  TriangleMesh mesh = geometry::ball_pivot_mesh(pc);
  std::set<uint32_t> used;
  for (const auto& t : mesh.triangles) used.insert(t.begin(), t.end());
  CHECK(used.size() >= std::size_t(0.9 * pc.point_count()));

  const auto edges = edge_counts(mesh);
  const long V = long(used.size());
  const long E = long(edges.size());
  const long F = long(mesh.triangles.size());
  CHECK(V - E + F == 2);
  for (const auto& [edge, count] : edges) CHECK(count == 2);
}

TEST_CASE("manifold edge invariant holds on fuzzed clouds") {
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(900 + trial);
    PointCloud pc;
    for (int i = 0; i < 300; ++i) {
      const double z = rng.uniform(-1, 1), a = rng.uniform(0, 2 * M_PI);
      const double r = std::sqrt(1 - z * z);
      const Vec3 p{r * std::cos(a), r * std::sin(a), z};
      pc.push_point(p * rng.uniform(0.95, 1.05));
    }
    geometry::estimate_normals(pc);
    TriangleMesh mesh = geometry::ball_pivot_mesh(pc);
    for (const auto& [edge, count] : edge_counts(mesh)) CHECK(count <= 2);
  }
}

TEST_CASE("degenerate inputs are rejected") {
  PointCloud tiny;
  tiny.push_point({0, 0, 0});
  tiny.push_point({1, 0, 0});
  CHECK_THROWS_AS(geometry::ball_pivot_mesh(tiny), Error);

  PointCloud collinear;
  for (int i = 0; i < 10; ++i) {
    collinear.push_point({double(i), 0, 0});
    collinear.normals.insert(collinear.normals.end(), {0, 0, 1});
  }
  CHECK_THROWS_AS(geometry::ball_pivot_mesh(collinear, {1.5}), Error);
}
