#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "tega/error.hpp"
#include "tega/geometry.hpp"
#include "tega/renderer.hpp"

using namespace tega;

namespace {

TriangleMesh sphere_mesh(int n) {
  PointCloud pc;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(1.0 - z * z);
    const double a = golden * i;
    pc.push_point({r * std::cos(a), r * std::sin(a), z});
  }
  pc = geometry::estimate_normals(pc);
  return geometry::ball_pivot_mesh(pc);
}

// A single triangle centered on the origin, facing +x (toward view-0 camera).
TriangleMesh centered_triangle() {
  TriangleMesh mesh;
  const float v[] = {0.f, -0.4f, -0.3f, 0.f, 0.4f, -0.3f, 0.f, 0.f, 0.5f};
  mesh.vertices.assign(v, v + 9);
  for (int i = 0; i < 3; ++i) {
    mesh.vertex_normals.push_back(1.f);
    mesh.vertex_normals.push_back(0.f);
    mesh.vertex_normals.push_back(0.f);
  }
  mesh.triangles.push_back({0, 1, 2});
  return mesh;
}

int non_white_count(const RenderedView& view) {
  int n = 0;
  for (std::size_t i = 0; i + 2 < view.pixels.size(); i += 3) {
    if (view.pixels[i] != 255 || view.pixels[i + 1] != 255 ||
        view.pixels[i + 2] != 255) {
      ++n;
    }
  }
  return n;
}

}  // namespace

TEST_CASE("turntable cameras: clockwise 18-degree azimuths") {
  const auto cams = renderer::make_turntable_cameras(20, 18.0, 30.0, 3.0);
  REQUIRE(cams.size() == 20);
  for (int k = 0; k < 20; ++k) {
    CHECK(cams[k].view_index == k);
    CHECK(cams[k].azimuth_deg == doctest::Approx(-18.0 * k));
    CHECK(cams[k].elevation_deg == doctest::Approx(30.0));
    CHECK(cams[k].distance == doctest::Approx(3.0));
    CHECK(cams[k].focal == 0.0);
  }
  CHECK(cams[5].azimuth_deg == doctest::Approx(-90.0));
  CHECK(cams[10].azimuth_deg == doctest::Approx(-180.0));

  const auto single = renderer::make_turntable_cameras(1, 18.0, 30.0, 3.0);
  REQUIRE(single.size() == 1);
  CHECK(single[0].azimuth_deg == 0.0);

  CHECK_THROWS_AS(renderer::make_turntable_cameras(0, 18.0, 30.0, 3.0), Error);
}

TEST_CASE("fit_focal: bounding sphere spans the fill fraction") {
  const auto mesh = sphere_mesh(600);
  CameraPose cam;
  cam.distance = 3.0;
  cam.elevation_deg = 0.0;

  const auto fitted = renderer::fit_focal(cam, mesh, 0.8, 224);
  CHECK(fitted.focal > 0.0);
  // Pinhole chord projection of a unit bounding sphere at distance 3 onto a
  // 224-pixel image at 80% fill: diameter must land in [175, 183] pixels.
  const double diameter = 2.0 * fitted.focal * (1.0 / 3.0);
  CHECK(diameter >= 175.0);
  CHECK(diameter <= 183.0);

  // Doubling the distance doubles the focal length within 2%.
  CameraPose far_cam = cam;
  far_cam.distance = 6.0;
  const auto far_fitted = renderer::fit_focal(far_cam, mesh, 0.8, 224);
  CHECK(far_fitted.focal ==
        doctest::Approx(2.0 * fitted.focal).epsilon(0.02));

  // fill 1.0: the projected sphere touches the frame edges within 2%.
  const auto full = renderer::fit_focal(cam, mesh, 1.0, 224);
  const double full_diam = 2.0 * full.focal * (1.0 / 3.0);
  CHECK(full_diam == doctest::Approx(224.0).epsilon(0.02));

  TriangleMesh empty;
  CHECK_THROWS_AS(renderer::fit_focal(cam, empty, 0.8, 224), Error);
}

TEST_CASE("render_view: centered triangle projects to the image center") {
  const auto mesh = centered_triangle();
  CameraPose cam;
  cam.distance = 3.0;
  cam = renderer::fit_focal(cam, mesh, 0.8, 224);

  const auto view = renderer::render_view(mesh, cam);
  REQUIRE(view.width == 224);
  REQUIRE(view.height == 224);
  REQUIRE(view.pixels.size() == std::size_t(224) * 224 * 3);
  CHECK(non_white_count(view) > 0);

  int min_x = view.width, max_x = -1, min_y = view.height, max_y = -1;
  for (int y = 0; y < view.height; ++y) {
    for (int x = 0; x < view.width; ++x) {
      const std::size_t i = 3 * (std::size_t(y) * view.width + x);
      if (view.pixels[i] != 255 || view.pixels[i + 1] != 255 ||
          view.pixels[i + 2] != 255) {
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
      }
    }
  }
  const double cx = 0.5 * (min_x + max_x);
  const double cy = 0.5 * (min_y + max_y);
  CHECK(std::abs(cx - 111.5) <= 2.0);
  CHECK(std::abs(cy - 111.5) <= 2.0);
}

TEST_CASE("render_view: empty mesh is an error, rendering is deterministic") {
  TriangleMesh empty;
  CameraPose cam;
  cam.distance = 3.0;
  cam.focal = 180.0;
  CHECK_THROWS_AS(renderer::render_view(empty, cam), Error);

  const auto mesh = sphere_mesh(400);
  cam = renderer::fit_focal(cam, mesh, 0.8, 224);
  const auto a = renderer::render_view(mesh, cam);
  const auto b = renderer::render_view(mesh, cam);
  CHECK(a.pixels == b.pixels);
}

TEST_CASE("render_view: sphere silhouette matches the analytic disc") {
  const auto mesh = sphere_mesh(3000);
  CameraPose cam;
  cam.distance = 3.0;
  cam.elevation_deg = 30.0;
  cam = renderer::fit_focal(cam, mesh, 0.8, 224);
  const auto view = renderer::render_view(mesh, cam);

  // Analytic silhouette: the sphere's limb circle has angular radius
  // asin(R/D); its projected radius in pixels is f*tan(asin(R/D)).
  const double radius_px =
      cam.focal * std::tan(std::asin(1.0 / cam.distance));
  const double cx = (view.width - 1) * 0.5;
  const double cy = (view.height - 1) * 0.5;
  int mismatched = 0;
  for (int y = 0; y < view.height; ++y) {
    for (int x = 0; x < view.width; ++x) {
      const std::size_t i = 3 * (std::size_t(y) * view.width + x);
      const bool lit = view.pixels[i] != 255 || view.pixels[i + 1] != 255 ||
                       view.pixels[i + 2] != 255;
      const double dx = x - cx, dy = y - cy;
      const bool inside = std::sqrt(dx * dx + dy * dy) <= radius_px;
      if (lit != inside) ++mismatched;
    }
  }
  CHECK(double(mismatched) <= 0.03 * view.width * view.height);
}

TEST_CASE("render_all_views: count, azimuths, symmetric silhouettes") {
  const auto mesh = sphere_mesh(1200);
  const auto views = renderer::render_all_views(mesh);
  REQUIRE(views.size() == 20);
  for (int k = 0; k < 20; ++k) {
    CHECK(views[k].camera.view_index == k);
    CHECK(views[k].camera.azimuth_deg == doctest::Approx(-18.0 * k));
  }
  // A sphere is mirror symmetric: front (0) and back (10) silhouette areas
  // agree within 1%.
  const int front = non_white_count(views[0]);
  const int back = non_white_count(views[10]);
  CHECK(std::abs(front - back) <= 0.01 * std::max(front, back));
}

TEST_CASE("render_all_views: turntable equivariance is pixel-exact") {
  const auto mesh = sphere_mesh(500) /* irregular enough after rotation */;
  // Build an asymmetric mesh: stretch one axis so views differ.
  TriangleMesh skewed = mesh;
  for (std::size_t i = 0; i < skewed.vertex_count(); ++i) {
    skewed.vertices[3 * i] *= 0.6f;
    skewed.vertices[3 * i + 1] *= 1.0f;
  }
  const auto base = renderer::render_all_views(skewed);
  const auto rotated = geometry::rotate_z(skewed, -18.0);  // 18 deg clockwise
  const auto shifted = renderer::render_all_views(rotated);
  for (int k = 0; k + 1 < 20; ++k) {
    CHECK(shifted[k].pixels == base[k + 1].pixels);
  }
}

TEST_CASE("two-plane occlusion: the near plane fully hides the far plane") {
  // Two parallel square planes facing the view-0 camera (+x): near at x=0.5,
  // far at x=-0.5. The far plane is shaded differently; no far-plane color
  // may survive where the near plane covers it.
  TriangleMesh mesh;
  auto add_plane = [&mesh](float x, float half, float nx) {
    const std::uint32_t base = std::uint32_t(mesh.vertex_count());
    const float v[] = {x, -half, -half, x, half, -half,
                       x, half,  half,  x, -half, half};
    mesh.vertices.insert(mesh.vertices.end(), v, v + 12);
    for (int i = 0; i < 4; ++i) {
      mesh.vertex_normals.push_back(nx);
      mesh.vertex_normals.push_back(0.f);
      mesh.vertex_normals.push_back(0.f);
    }
    mesh.triangles.push_back({base, base + 1, base + 2});
    mesh.triangles.push_back({base, base + 2, base + 3});
  };
  add_plane(0.5f, 0.4f, 1.f);    // near, lit toward camera
  add_plane(-0.5f, 0.4f, -1.f);  // far, normal away: darkest shade
  CameraPose cam;
  cam.distance = 3.0;
  cam.elevation_deg = 0.0;
  cam = renderer::fit_focal(cam, mesh, 0.8, 224);
  const auto view = renderer::render_view(mesh, cam);

  // Render the near plane alone; every pixel it covers must be identical in
  // the two-plane image (the far plane never wins the depth test there).
  TriangleMesh near_only;
  add_plane = [&near_only](float x, float half, float nx) {
    const std::uint32_t base = std::uint32_t(near_only.vertex_count());
    const float v[] = {x, -half, -half, x, half, -half,
                       x, half,  half,  x, -half, half};
    near_only.vertices.insert(near_only.vertices.end(), v, v + 12);
    for (int i = 0; i < 4; ++i) {
      near_only.vertex_normals.push_back(nx);
      near_only.vertex_normals.push_back(0.f);
      near_only.vertex_normals.push_back(0.f);
    }
    near_only.triangles.push_back({base, base + 1, base + 2});
    near_only.triangles.push_back({base, base + 2, base + 3});
  };
  add_plane(0.5f, 0.4f, 1.f);
  const auto near_view = renderer::render_view(near_only, cam);
  for (std::size_t i = 0; i < view.pixels.size(); i += 3) {
    if (near_view.pixels[i] != 255 || near_view.pixels[i + 1] != 255 ||
        near_view.pixels[i + 2] != 255) {
      REQUIRE(view.pixels[i] == near_view.pixels[i]);
    }
  }
}

TEST_CASE("PPM round-trip is bit exact") {
  const auto mesh = centered_triangle();
  CameraPose cam;
  cam.distance = 3.0;
  cam = renderer::fit_focal(cam, mesh, 0.8, 64);
  RenderOptions opt;
  opt.resolution = 64;
  const auto view = renderer::render_view(mesh, cam, opt);

  const auto path =
      (std::filesystem::temp_directory_path() / "tega_view_rt.ppm").string();
  renderer::write_ppm(view, path);
  const auto back = renderer::read_ppm(path);
  CHECK(back.width == view.width);
  CHECK(back.height == view.height);
  CHECK(back.pixels == view.pixels);
  std::remove(path.c_str());
}
