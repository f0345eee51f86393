#include "tega/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <queue>

#include "spatial_grid.hpp"
#include "tega/error.hpp"
#include "tega/kernels.hpp"

namespace tega {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::DegenerateCloud: return "DegenerateCloud";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::MissingNormals: return "MissingNormals";
    case ErrorCode::NoTriangles: return "NoTriangles";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::InvalidCount: return "InvalidCount";
    case ErrorCode::UnknownPrompt: return "UnknownPrompt";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::MissingViews: return "MissingViews";
    case ErrorCode::CaptionFailed: return "CaptionFailed";
    case ErrorCode::MergeFailed: return "MergeFailed";
    case ErrorCode::JudgeFailed: return "JudgeFailed";
    case ErrorCode::JudgeProtocolError: return "JudgeProtocolError";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::InsufficientSynthetic: return "InsufficientSynthetic";
    case ErrorCode::VocabularyMismatch: return "VocabularyMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EmptyVocabulary: return "EmptyVocabulary";
    case ErrorCode::NonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorCode::BackendUnreachable: return "BackendUnreachable";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "UnknownError";
}

namespace geometry {

PointCloud normalize_point_cloud(const PointCloud& pc) {
  std::size_t n = pc.point_count();
  if (n == 0) throw Error(ErrorCode::EmptyCloud, "no points to normalize");
  Vec3 centroid{};
  for (std::size_t i = 0; i < n; ++i) centroid += pc.point(i);
  centroid = centroid / double(n);
  double max_r = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    max_r = std::max(max_r, norm(pc.point(i) - centroid));
  if (max_r <= 0.0)
    throw Error(ErrorCode::DegenerateCloud, "all points coincide");
  PointCloud out = pc;
  for (std::size_t i = 0; i < n; ++i)
    out.set_point(i, (pc.point(i) - centroid) / max_r);
  return out;
}

PointCloud estimate_normals(const PointCloud& pc, int k) {
  std::size_t n = pc.point_count();
  if (k < 3) throw Error(ErrorCode::InvalidArgument, "k must be >= 3");
  if (n <= std::size_t(k))
    throw Error(ErrorCode::TooFewPoints, "need more than k points");

  double cell = std::cbrt(1.0 / double(n));  // heuristic for unit-scale clouds
  Vec3 lo = pc.point(0), hi = pc.point(0);
  for (std::size_t i = 1; i < n; ++i) {
    Vec3 p = pc.point(i);
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  double extent = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z, 1e-9});
  cell = std::max(extent * cell, extent / 64.0);
  SpatialGrid grid(pc.points, cell);

  Vec3 centroid{};
  for (std::size_t i = 0; i < n; ++i) centroid += pc.point(i);
  centroid = centroid / double(n);

  PointCloud out = pc;
  out.normals.assign(3 * n, 0.0f);
  std::vector<std::vector<std::uint32_t>> knn(n);
  std::vector<Vec3> normals(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid.query_knn(i, k, knn[i]);
    // PCA: smallest eigenvector of the neighborhood covariance.
    Vec3 mean = pc.point(i);
    for (auto j : knn[i]) mean += pc.point(j);
    mean = mean / double(knn[i].size() + 1);
    double cxx = 0, cxy = 0, cxz = 0, cyy = 0, cyz = 0, czz = 0;
    auto accumulate = [&](const Vec3& p) {
      Vec3 d = p - mean;
      cxx += d.x * d.x; cxy += d.x * d.y; cxz += d.x * d.z;
      cyy += d.y * d.y; cyz += d.y * d.z; czz += d.z * d.z;
    };
    accumulate(pc.point(i));
    for (auto j : knn[i]) accumulate(pc.point(j));

    // Smallest eigenvector by inverse power iteration substitute: use the
    // cross-product of the two dominant directions found by power iteration.
    auto matvec = [&](const Vec3& v) -> Vec3 {
      return {cxx * v.x + cxy * v.y + cxz * v.z,
              cxy * v.x + cyy * v.y + cyz * v.z,
              cxz * v.x + cyz * v.y + czz * v.z};
    };
    Vec3 v1{1.0, 0.37, 0.21};
    for (int it = 0; it < 24; ++it) v1 = normalized(matvec(v1));
    Vec3 v2{-0.24, 1.0, 0.44};
    v2 = normalized(v2 - v1 * dot(v2, v1));
    for (int it = 0; it < 24; ++it) {
      v2 = matvec(v2);
      v2 = normalized(v2 - v1 * dot(v2, v1));
    }
    Vec3 nrm = normalized(cross(v1, v2));
    if (norm2(nrm) < 0.5) nrm = {0, 0, 1};  // degenerate neighborhood
    normals[i] = nrm;
  }

  // Orientation: seed each point outward from the centroid, then propagate
  // consistency over the kNN graph (BFS, flipping to match the parent).
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 dir = pc.point(i) - centroid;
    if (dot(normals[i], dir) < 0.0) normals[i] = -normals[i];
  }
  std::vector<char> visited(n, 0);
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (visited[seed]) continue;
    std::queue<std::uint32_t> frontier;
    frontier.push(std::uint32_t(seed));
    visited[seed] = 1;
    while (!frontier.empty()) {
      std::uint32_t i = frontier.front();
      frontier.pop();
      for (auto j : knn[i]) {
        if (visited[j]) continue;
        visited[j] = 1;
        if (dot(normals[j], normals[i]) < 0.0) normals[j] = -normals[j];
        frontier.push(j);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) out.set_normal(i, normals[i]);
  return out;
}

double mean_nn_distance(const PointCloud& pc) {
  std::size_t n = pc.point_count();
  if (n < 2) throw Error(ErrorCode::TooFewPoints, "need at least 2 points");
  // Exclude self-matches by temporarily swapping the query to the end.
  double total = 0.0;
  std::vector<float> pts = pc.points;
  for (std::size_t i = 0; i < n; ++i) {
    float q[3] = {pc.points[3 * i], pc.points[3 * i + 1], pc.points[3 * i + 2]};
    std::swap_ranges(pts.begin() + 3 * i, pts.begin() + 3 * i + 3,
                     pts.begin() + 3 * (n - 1));
    float d2 = 0.0f;
    kernels::nearest_point(q, pts.data(), n - 1, &d2);
    std::swap_ranges(pts.begin() + 3 * i, pts.begin() + 3 * i + 3,
                     pts.begin() + 3 * (n - 1));
    total += std::sqrt(double(d2));
  }
  return total / double(n);
}

double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  std::size_t na = a.point_count(), nb = b.point_count();
  if (na == 0 || nb == 0)
    throw Error(ErrorCode::EmptyCloud, "chamfer over empty cloud");
  double ab = 0.0, ba = 0.0;
  for (std::size_t i = 0; i < na; ++i) {
    float q[3] = {a.points[3 * i], a.points[3 * i + 1], a.points[3 * i + 2]};
    float d2 = 0.0f;
    kernels::nearest_point(q, b.points.data(), nb, &d2);
    ab += std::sqrt(double(d2));
  }
  for (std::size_t i = 0; i < nb; ++i) {
    float q[3] = {b.points[3 * i], b.points[3 * i + 1], b.points[3 * i + 2]};
    float d2 = 0.0f;
    kernels::nearest_point(q, a.points.data(), na, &d2);
    ba += std::sqrt(double(d2));
  }
  return ab / double(na) + ba / double(nb);
}

void rotate_z_inplace(std::vector<float>& xyz, double degrees) {
  double rad = degrees * M_PI / 180.0;
  double c = std::cos(rad), s = std::sin(rad);
  for (std::size_t i = 0; i + 2 < xyz.size(); i += 3) {
    double x = xyz[i], y = xyz[i + 1];
    xyz[i] = float(c * x - s * y);
    xyz[i + 1] = float(s * x + c * y);
  }
}

PointCloud rotate_z(const PointCloud& pc, double degrees) {
  PointCloud out = pc;
  rotate_z_inplace(out.points, degrees);
  if (out.has_normals()) rotate_z_inplace(out.normals, degrees);
  return out;
}

TriangleMesh rotate_z(const TriangleMesh& mesh, double degrees) {
  TriangleMesh out = mesh;
  rotate_z_inplace(out.vertices, degrees);
  rotate_z_inplace(out.vertex_normals, degrees);
  return out;
}

namespace {
constexpr char kMagic[8] = {'T', 'E', 'G', 'A', 'P', 'C', '1', '\0'};
}

void write_point_cloud(const PointCloud& pc, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path);
  f.write(kMagic, 8);
  std::uint32_t n = std::uint32_t(pc.point_count());
  f.write(reinterpret_cast<const char*>(&n), 4);
  char flag = pc.has_normals() ? 1 : 0;
  f.write(&flag, 1);
  f.write(reinterpret_cast<const char*>(pc.points.data()),
          std::streamsize(pc.points.size() * 4));
  if (flag)
    f.write(reinterpret_cast<const char*>(pc.normals.data()),
            std::streamsize(pc.normals.size() * 4));
  if (!f) throw Error(ErrorCode::IoError, "short write to " + path);
}

PointCloud read_point_cloud(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0)
    throw Error(ErrorCode::ParseError, "bad magic in " + path);
  std::uint32_t n = 0;
  f.read(reinterpret_cast<char*>(&n), 4);
  char flag = 0;
  f.read(&flag, 1);
  if (!f || (flag != 0 && flag != 1))
    throw Error(ErrorCode::ParseError, "bad header in " + path);
  PointCloud pc;
  pc.points.resize(std::size_t(n) * 3);
  f.read(reinterpret_cast<char*>(pc.points.data()), std::streamsize(n) * 12);
  if (flag) {
    pc.normals.resize(std::size_t(n) * 3);
    f.read(reinterpret_cast<char*>(pc.normals.data()), std::streamsize(n) * 12);
  }
  if (!f) throw Error(ErrorCode::ParseError, "truncated payload in " + path);
  return pc;
}

}  // namespace geometry
}  // namespace tega
