#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tega/geometry.hpp"

namespace tega {

struct CameraPose {
  double azimuth_deg = 0.0;    // clockwise-positive turntable angle is -18*k
  double elevation_deg = 0.0;
  double distance = 0.0;       // model units from origin
  double focal = 0.0;          // pixels; 0 until fit_focal
  int view_index = 0;          // 0..19 for turntable cameras
};

struct RenderedView {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB
  CameraPose camera;
};

struct RenderOptions {
  int resolution = 224;
  double fill_fraction = 0.8;
  // Lambertian shade: base + range * max(0, n . light), light at the camera.
  double shade_base = 40.0;
  double shade_range = 200.0;
};

namespace renderer {

// count cameras, camera k at azimuth -k*step_deg (clockwise), shared
// elevation/distance, focal unset.
std::vector<CameraPose> make_turntable_cameras(int count, double step_deg,
                                               double elevation_deg,
                                               double distance);

// Sets focal so the mesh bounding sphere's diameter chord spans
// fill_fraction * image width at the camera distance.
CameraPose fit_focal(const CameraPose& camera, const TriangleMesh& mesh,
                     double fill_fraction, int resolution);

// Z-buffered rasterization; white background; deterministic bytes.
RenderedView render_view(const TriangleMesh& mesh, const CameraPose& camera,
                         const RenderOptions& options = {});

// 20 views, 18-degree clockwise steps, elevation 30, distance 3.
std::vector<RenderedView> render_all_views(const TriangleMesh& mesh,
                                           const RenderOptions& options = {});

// Binary PPM (P6), bit-exact round-trip.
void write_ppm(const RenderedView& view, const std::string& path);
RenderedView read_ppm(const std::string& path);

}  // namespace renderer
}  // namespace tega
