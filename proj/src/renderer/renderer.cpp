#include "tega/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>

#include "tega/error.hpp"

namespace tega::renderer {
namespace {

constexpr double kElevationDeg = 30.0;
constexpr double kDistance = 3.0;

double quantize(double v, double step) { return std::round(v / step) * step; }

// Azimuth is applied to the geometry as repeated single-step z-rotations
// (view_index steps of azimuth/view_index degrees, f32-stored between steps).
// A mesh rotated with geometry::rotate_z by one step therefore reproduces the
// next view bit-for-bit.
void apply_azimuth(std::vector<float>& xyz, const CameraPose& cam) {
  if (cam.view_index > 0) {
    double step = cam.azimuth_deg / cam.view_index;
    for (int i = 0; i < cam.view_index; ++i)
      geometry::rotate_z_inplace(xyz, step);
  } else if (cam.azimuth_deg != 0.0) {
    geometry::rotate_z_inplace(xyz, cam.azimuth_deg);
  }
}

struct CameraBasis {
  Vec3 pos, right, up, fwd;
};

CameraBasis elevation_basis(double elevation_deg, double distance) {
  double e = elevation_deg * M_PI / 180.0;
  double ce = std::cos(e), se = std::sin(e);
  CameraBasis b;
  b.pos = {distance * ce, 0.0, distance * se};
  b.fwd = {-ce, 0.0, -se};
  b.right = {0.0, 1.0, 0.0};
  b.up = {-se, 0.0, ce};
  return b;
}

}  // namespace

std::vector<CameraPose> make_turntable_cameras(int count, double step_deg,
                                               double elevation_deg,
                                               double distance) {
  if (count < 1) throw Error(ErrorCode::InvalidCount, "count must be >= 1");
  if (step_deg <= 0.0)
    throw Error(ErrorCode::InvalidArgument, "step_deg must be positive");
  std::vector<CameraPose> cams(count);
  for (int k = 0; k < count; ++k) {
    cams[k].azimuth_deg = -step_deg * k;
    cams[k].elevation_deg = elevation_deg;
    cams[k].distance = distance;
    cams[k].focal = 0.0;
    cams[k].view_index = k;
  }
  return cams;
}

CameraPose fit_focal(const CameraPose& camera, const TriangleMesh& mesh,
                     double fill_fraction, int resolution) {
  std::size_t n = mesh.vertex_count();
  if (n == 0 || mesh.triangles.empty())
    throw Error(ErrorCode::EmptyMesh, "cannot fit focal to an empty mesh");
  if (fill_fraction <= 0.0 || fill_fraction > 1.0)
    throw Error(ErrorCode::InvalidArgument, "fill_fraction out of (0, 1]");
  Vec3 centroid{};
  for (std::size_t i = 0; i < n; ++i) centroid += mesh.vertex(i);
  centroid = centroid / double(n);
  double radius = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    radius = std::max(radius, norm(mesh.vertex(i) - centroid));
  if (radius <= 0.0)
    throw Error(ErrorCode::EmptyMesh, "mesh has zero spatial extent");

  double a = camera.azimuth_deg * M_PI / 180.0;
  double e = camera.elevation_deg * M_PI / 180.0;
  Vec3 cam_pos = {camera.distance * std::cos(e) * std::cos(a),
                  camera.distance * std::cos(e) * std::sin(a),
                  camera.distance * std::sin(e)};
  // Quantized so refits of ulp-perturbed geometry land on the same focal.
  double dist = quantize(norm(cam_pos - centroid), 1.0 / 4096.0);
  double r = quantize(radius, 1.0 / 4096.0);
  CameraPose out = camera;
  out.focal = quantize(fill_fraction * resolution * dist / (2.0 * r), 1.0 / 256.0);
  return out;
}

RenderedView render_view(const TriangleMesh& mesh, const CameraPose& camera,
                         const RenderOptions& options) {
  if (mesh.vertex_count() == 0 || mesh.triangles.empty())
    throw Error(ErrorCode::EmptyMesh, "cannot render an empty mesh", "render");
  if (camera.focal <= 0.0)
    throw Error(ErrorCode::InvalidArgument, "camera focal not set", "render");

  const int W = options.resolution, H = options.resolution;
  RenderedView view;
  view.width = W;
  view.height = H;
  view.camera = camera;
  view.pixels.assign(std::size_t(W) * H * 3, 255);

  std::vector<float> verts = mesh.vertices;
  std::vector<float> normals = mesh.vertex_normals;
  apply_azimuth(verts, camera);
  apply_azimuth(normals, camera);

  CameraBasis basis = elevation_basis(camera.elevation_deg, camera.distance);

  std::size_t n = verts.size() / 3;
  // Projected fixed-point coordinates (1/256 px), inverse depth, shade.
  std::vector<std::int64_t> px(n), py(n);
  std::vector<double> invz(n), shade(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 p = {verts[3 * i], verts[3 * i + 1], verts[3 * i + 2]};
    Vec3 rel = p - basis.pos;
    double xc = dot(rel, basis.right);
    double yc = dot(rel, basis.up);
    double depth = dot(rel, basis.fwd);
    if (depth < 1e-6) depth = 1e-6;
    double u = 0.5 * W + camera.focal * xc / depth;
    double v = 0.5 * H - camera.focal * yc / depth;
    px[i] = std::llround(u * 256.0);
    py[i] = std::llround(v * 256.0);
    invz[i] = 1.0 / depth;
    Vec3 nrm{0, 0, 1};
    if (normals.size() == verts.size())
      nrm = {normals[3 * i], normals[3 * i + 1], normals[3 * i + 2]};
    Vec3 light = normalized(Vec3{0, 0, 0} - rel);  // light sits at the camera
    double lam = std::max(0.0, std::abs(dot(nrm, light)));
    shade[i] = options.shade_base + options.shade_range * lam;
  }

  std::vector<double> zbuf(std::size_t(W) * H, 0.0);
  for (const auto& tri : mesh.triangles) {
    std::uint32_t ia = tri[0], ib = tri[1], ic = tri[2];
    std::int64_t ax = px[ia], ay = py[ia];
    std::int64_t bx = px[ib], by = py[ib];
    std::int64_t cx = px[ic], cy = py[ic];
    std::int64_t area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
    if (area == 0) continue;
    if (area < 0) {  // normalize winding for rasterization only
      std::swap(ib, ic);
      std::swap(bx, cx);
      std::swap(by, cy);
      area = -area;
    }
    std::int64_t minx = std::min({ax, bx, cx}), maxx = std::max({ax, bx, cx});
    std::int64_t miny = std::min({ay, by, cy}), maxy = std::max({ay, by, cy});
    int x0 = int(std::max<std::int64_t>(0, (minx - 128) >> 8));
    int x1 = int(std::min<std::int64_t>(W - 1, (maxx + 255) >> 8));
    int y0 = int(std::max<std::int64_t>(0, (miny - 128) >> 8));
    int y1 = int(std::min<std::int64_t>(H - 1, (maxy + 255) >> 8));

    auto edge = [](std::int64_t x0_, std::int64_t y0_, std::int64_t x1_,
                   std::int64_t y1_, std::int64_t x, std::int64_t y) {
      return (x1_ - x0_) * (y - y0_) - (y1_ - y0_) * (x - x0_);
    };
    // Top-left fill rule keeps shared edges single-owned.
    auto is_top_left = [](std::int64_t dx, std::int64_t dy) {
      return dy < 0 || (dy == 0 && dx > 0);
    };
    std::int64_t bias0 = is_top_left(cx - bx, cy - by) ? 0 : -1;
    std::int64_t bias1 = is_top_left(ax - cx, ay - cy) ? 0 : -1;
    std::int64_t bias2 = is_top_left(bx - ax, by - ay) ? 0 : -1;

    double inv_area = 1.0 / double(area);
    for (int ypix = y0; ypix <= y1; ++ypix) {
      std::int64_t sy = std::int64_t(ypix) * 256 + 128;
      for (int xpix = x0; xpix <= x1; ++xpix) {
        std::int64_t sx = std::int64_t(xpix) * 256 + 128;
        std::int64_t w0 = edge(bx, by, cx, cy, sx, sy);
        std::int64_t w1 = edge(cx, cy, ax, ay, sx, sy);
        std::int64_t w2 = edge(ax, ay, bx, by, sx, sy);
        if ((w0 + bias0) < 0 || (w1 + bias1) < 0 || (w2 + bias2) < 0) continue;
        double l0 = double(w0) * inv_area;
        double l1 = double(w1) * inv_area;
        double l2 = double(w2) * inv_area;
        double z = l0 * invz[ia] + l1 * invz[ib] + l2 * invz[ic];
        std::size_t idx = std::size_t(ypix) * W + xpix;
        if (z <= zbuf[idx]) continue;
        zbuf[idx] = z;
        double s = l0 * shade[ia] + l1 * shade[ib] + l2 * shade[ic];
        std::uint8_t g =
            std::uint8_t(std::clamp(std::lround(s), 0l, 250l));
        view.pixels[3 * idx] = g;
        view.pixels[3 * idx + 1] = g;
        view.pixels[3 * idx + 2] = g;
      }
    }
  }
  return view;
}

std::vector<RenderedView> render_all_views(const TriangleMesh& mesh,
                                           const RenderOptions& options) {
  auto cams = make_turntable_cameras(20, 18.0, kElevationDeg, kDistance);
  std::vector<RenderedView> views;
  views.reserve(cams.size());
  for (auto& cam : cams) {
    CameraPose fitted =
        fit_focal(cam, mesh, options.fill_fraction, options.resolution);
    try {
      views.push_back(render_view(mesh, fitted, options));
    } catch (const Error& e) {
      throw Error(e.code(),
                  "view " + std::to_string(cam.view_index) + ": " + e.what(),
                  "render");
    }
  }
  return views;
}

void write_ppm(const RenderedView& view, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path);
  f << "P6\n" << view.width << " " << view.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(view.pixels.data()),
          std::streamsize(view.pixels.size()));
  if (!f) throw Error(ErrorCode::IoError, "short write to " + path);
}

RenderedView read_ppm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  f >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255)
    throw Error(ErrorCode::ParseError, "bad PPM header in " + path);
  f.get();  // single whitespace after maxval
  RenderedView view;
  view.width = w;
  view.height = h;
  view.pixels.resize(std::size_t(w) * h * 3);
  f.read(reinterpret_cast<char*>(view.pixels.data()),
         std::streamsize(view.pixels.size()));
  if (!f) throw Error(ErrorCode::ParseError, "truncated PPM " + path);
  return view;
}

}  // namespace tega::renderer
