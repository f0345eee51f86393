#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tega/vec3.hpp"

namespace tega {

/// Point positions (and optional unit normals) stored as packed xyz floats.
struct PointCloud {
  std::vector<float> points;   // 3 * point_count()
  std::vector<float> normals;  // empty or 3 * point_count()

  std::size_t point_count() const { return points.size() / 3; }
  bool has_normals() const { return !normals.empty(); }

  Vec3 point(std::size_t i) const {
    return {points[3 * i], points[3 * i + 1], points[3 * i + 2]};
  }
  Vec3 normal(std::size_t i) const {
    return {normals[3 * i], normals[3 * i + 1], normals[3 * i + 2]};
  }
  void set_point(std::size_t i, const Vec3& p) {
    points[3 * i] = float(p.x);
    points[3 * i + 1] = float(p.y);
    points[3 * i + 2] = float(p.z);
  }
  void set_normal(std::size_t i, const Vec3& n) {
    normals[3 * i] = float(n.x);
    normals[3 * i + 1] = float(n.y);
    normals[3 * i + 2] = float(n.z);
  }
  void push_point(const Vec3& p) {
    points.push_back(float(p.x));
    points.push_back(float(p.y));
    points.push_back(float(p.z));
  }
};

struct TriangleMesh {
  std::vector<float> vertices;           // packed xyz
  std::vector<float> vertex_normals;     // packed xyz, unit
  std::vector<std::array<std::uint32_t, 3>> triangles;

  std::size_t vertex_count() const { return vertices.size() / 3; }
  Vec3 vertex(std::size_t i) const {
    return {vertices[3 * i], vertices[3 * i + 1], vertices[3 * i + 2]};
  }
  Vec3 vertex_normal(std::size_t i) const {
    return {vertex_normals[3 * i], vertex_normals[3 * i + 1],
            vertex_normals[3 * i + 2]};
  }
};

namespace geometry {

// Centers the cloud at the origin and scales the farthest point to radius 1.
// Point order (and any normals) preserved. Throws EmptyCloud / DegenerateCloud.
PointCloud normalize_point_cloud(const PointCloud& pc);

// PCA normals over k nearest neighbors, oriented outward from the centroid and
// made consistent by propagation over the kNN graph. Throws TooFewPoints.
PointCloud estimate_normals(const PointCloud& pc, int k = 10);

// Mean over points of the distance to the nearest other point.
double mean_nn_distance(const PointCloud& pc);

// Symmetric average nearest-neighbor distance between two clouds.
double chamfer_distance(const PointCloud& a, const PointCloud& b);

// Multi-pass Ball Pivoting over strictly ascending radii. Output vertices are
// indexed against pc.points (exact duplicates removed first). Throws
// MissingNormals / NoTriangles.
TriangleMesh ball_pivot_mesh(const PointCloud& pc,
                             const std::vector<double>& radii);

// Default radii {1.5, 3, 6} x mean_nn_distance.
TriangleMesh ball_pivot_mesh(const PointCloud& pc);

// Rotation about the vertical (z) axis; positive degrees counter-clockwise
// viewed from +z. Applied as one matrix-vector product per point, results
// stored back to f32. All rotate_z overloads share this exact code path so
// repeated single-step rotations compose bit-stably.
void rotate_z_inplace(std::vector<float>& xyz, double degrees);
PointCloud rotate_z(const PointCloud& pc, double degrees);
TriangleMesh rotate_z(const TriangleMesh& mesh, double degrees);

// Binary "TEGAPC1\0" container, little-endian f32, bit-exact round-trip.
void write_point_cloud(const PointCloud& pc, const std::string& path);
PointCloud read_point_cloud(const std::string& path);

}  // namespace geometry
}  // namespace tega
