// Parametric desk-scale shape library backing the procedural generator. Each
// class is a union of primitive surface patches sampled proportionally to
// area; per-seed jitter scales the defining dimensions.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <vector>

#include "tega/error.hpp"
#include "tega/generation.hpp"
#include "tega/rng.hpp"

namespace tega::generation {
namespace {

struct Patch {
  double area;
  std::function<Vec3(Rng&)> sample;
};

using PatchList = std::vector<Patch>;

void add_box(PatchList& out, Vec3 c, Vec3 half) {
  // Six faces, axis-aligned.
  struct Face {
    int axis, sign;
  };
  const Face faces[6] = {{0, 1}, {0, -1}, {1, 1}, {1, -1}, {2, 1}, {2, -1}};
  double hx = half.x, hy = half.y, hz = half.z;
  double areas[3] = {4 * hy * hz, 4 * hx * hz, 4 * hx * hy};
  for (const Face& f : faces) {
    out.push_back({areas[f.axis], [=](Rng& rng) {
                     double u = rng.uniform(-1, 1), v = rng.uniform(-1, 1);
                     Vec3 p = c;
                     if (f.axis == 0) {
                       p.x += f.sign * hx;
                       p.y += u * hy;
                       p.z += v * hz;
                     } else if (f.axis == 1) {
                       p.y += f.sign * hy;
                       p.x += u * hx;
                       p.z += v * hz;
                     } else {
                       p.z += f.sign * hz;
                       p.x += u * hx;
                       p.y += v * hy;
                     }
                     return p;
                   }});
  }
}

// Lateral cylinder surface, axis z, from z0 to z1.
void add_tube(PatchList& out, Vec3 c, double r, double z0, double z1) {
  double area = 2 * M_PI * r * (z1 - z0);
  out.push_back({area, [=](Rng& rng) {
                   double a = rng.uniform(0, 2 * M_PI);
                   double z = rng.uniform(z0, z1);
                   return Vec3{c.x + r * std::cos(a), c.y + r * std::sin(a),
                               c.z + z};
                 }});
}

// Horizontal tube along y (wheels, rollers).
void add_tube_y(PatchList& out, Vec3 c, double r, double y0, double y1,
                bool caps) {
  double area = 2 * M_PI * r * (y1 - y0);
  out.push_back({area, [=](Rng& rng) {
                   double a = rng.uniform(0, 2 * M_PI);
                   double y = rng.uniform(y0, y1);
                   return Vec3{c.x + r * std::cos(a), c.y + y,
                               c.z + r * std::sin(a)};
                 }});
  if (caps) {
    for (double y : {y0, y1}) {
      out.push_back({M_PI * r * r, [=](Rng& rng) {
                       double a = rng.uniform(0, 2 * M_PI);
                       double rr = r * std::sqrt(rng.uniform());
                       return Vec3{c.x + rr * std::cos(a), c.y + y,
                                   c.z + rr * std::sin(a)};
                     }});
    }
  }
}

void add_disc(PatchList& out, Vec3 c, double r) {
  out.push_back({M_PI * r * r, [=](Rng& rng) {
                   double a = rng.uniform(0, 2 * M_PI);
                   double rr = r * std::sqrt(rng.uniform());
                   return Vec3{c.x + rr * std::cos(a), c.y + rr * std::sin(a),
                               c.z};
                 }});
}

// Truncated cone shell, radius r0 at z0 to r1 at z1.
void add_cone(PatchList& out, Vec3 c, double r0, double r1, double z0,
              double z1) {
  double slant = std::hypot(r1 - r0, z1 - z0);
  double area = M_PI * (r0 + r1) * slant;
  out.push_back({area, [=](Rng& rng) {
                   double t = rng.uniform();
                   double a = rng.uniform(0, 2 * M_PI);
                   double r = r0 + (r1 - r0) * t;
                   return Vec3{c.x + r * std::cos(a), c.y + r * std::sin(a),
                               c.z + z0 + (z1 - z0) * t};
                 }});
}

void add_ellipsoid(PatchList& out, Vec3 c, Vec3 radii) {
  double area = 4 * M_PI * std::cbrt(radii.x * radii.y * radii.z);  // rough
  out.push_back({area, [=](Rng& rng) {
                   double z = rng.uniform(-1, 1);
                   double a = rng.uniform(0, 2 * M_PI);
                   double s = std::sqrt(1 - z * z);
                   return Vec3{c.x + radii.x * s * std::cos(a),
                               c.y + radii.y * s * std::sin(a),
                               c.z + radii.z * z};
                 }});
}

// Lower hemisphere shell (open bowl), radius r.
void add_bowl_shell(PatchList& out, Vec3 c, double r) {
  double area = 2 * M_PI * r * r;
  out.push_back({area, [=](Rng& rng) {
                   double z = -rng.uniform();
                   double a = rng.uniform(0, 2 * M_PI);
                   double s = std::sqrt(1 - z * z);
                   return Vec3{c.x + r * s * std::cos(a),
                               c.y + r * s * std::sin(a), c.z + r * z};
                 }});
}

// Half-torus handle in the xz-plane (mug handle).
void add_handle(PatchList& out, Vec3 c, double ring_r, double tube_r) {
  double area = 2 * M_PI * M_PI * ring_r * tube_r;  // half torus
  out.push_back({area, [=](Rng& rng) {
                   double u = rng.uniform(-M_PI / 2, M_PI / 2);  // around ring
                   double v = rng.uniform(0, 2 * M_PI);          // around tube
                   double rr = ring_r + tube_r * std::cos(v);
                   return Vec3{c.x + rr * std::cos(u), c.y + tube_r * std::sin(v),
                               c.z + rr * std::sin(u)};
                 }});
}

// j() draws one jitter factor; every dimension gets its own draw so shapes
// vary in proportion, not only in scale.
PatchList build_class(const std::string& cls, const std::function<double()>& j) {
  PatchList p;
  if (cls == "chair") {
    double sw = 0.8 * j(), sd = 0.8 * j(), sh = 0.9 * j(), bh = 0.9 * j();
    add_box(p, {0, 0, 0}, {sw / 2, sd / 2, 0.05});
    for (double sx : {-1.0, 1.0})
      for (double sy : {-1.0, 1.0})
        add_tube(p, {sx * (sw / 2 - 0.06), sy * (sd / 2 - 0.06), 0}, 0.04,
                 -sh, 0);
    add_box(p, {0, -sd / 2 + 0.05, bh / 2}, {sw / 2, 0.05, bh / 2});
  } else if (cls == "table") {
    double tw = 1.3 * j(), td = 0.8 * j(), th = 0.8 * j();
    add_box(p, {0, 0, 0}, {tw / 2, td / 2, 0.04});
    for (double sx : {-1.0, 1.0})
      for (double sy : {-1.0, 1.0})
        add_tube(p, {sx * (tw / 2 - 0.07), sy * (td / 2 - 0.07), 0}, 0.05,
                 -th, 0);
  } else if (cls == "airplane") {
    double fl = 1.2 * j(), span = 1.1 * j();
    add_ellipsoid(p, {0, 0, 0}, {fl, 0.16 * j(), 0.16 * j()});
    add_box(p, {0.1, 0, 0}, {0.18 * j(), span, 0.02});
    add_box(p, {-fl * 0.85, 0, 0}, {0.1, 0.35 * j(), 0.015});
    add_box(p, {-fl * 0.85, 0, 0.18}, {0.1, 0.02, 0.18 * j()});
  } else if (cls == "lamp") {
    double ph = 1.2 * j(), br = 0.35 * j(), sr = 0.45 * j();
    add_disc(p, {0, 0, 0}, br);
    add_tube(p, {0, 0, 0}, 0.035, 0, ph);
    add_cone(p, {0, 0, 0}, sr, 0.12 * j(), ph - 0.35, ph + 0.05);
  } else if (cls == "bottle") {
    double br = 0.28 * j(), bh = 0.85 * j(), nh = 0.3 * j();
    add_disc(p, {0, 0, 0}, br);
    add_tube(p, {0, 0, 0}, br, 0, bh);
    add_cone(p, {0, 0, 0}, br, 0.09, bh, bh + 0.18);
    add_tube(p, {0, 0, 0}, 0.09, bh + 0.18, bh + 0.18 + nh);
  } else if (cls == "sofa") {
    double sw = 1.6 * j(), sd = 0.75 * j(), bh = 0.55 * j();
    add_box(p, {0, 0, 0}, {sw / 2, sd / 2, 0.18});
    add_box(p, {0, -sd / 2 + 0.08, bh / 2 + 0.1}, {sw / 2, 0.08, bh / 2});
    for (double sx : {-1.0, 1.0})
      add_box(p, {sx * (sw / 2 + 0.07), 0, 0.12}, {0.07, sd / 2, 0.25});
  } else if (cls == "car") {
    double bl = 1.5 * j(), bw = 0.65 * j();
    add_box(p, {0, 0, 0}, {bl / 2, bw / 2, 0.16});
    add_box(p, {-0.1, 0, 0.28}, {bl / 4, bw / 2 - 0.05, 0.13});
    for (double sx : {-1.0, 1.0})
      for (double sy : {-1.0, 1.0})
        add_tube_y(p, {sx * bl * 0.3, sy * bw / 2, -0.18}, 0.18 * j(),
                   -0.05, 0.05, true);
  } else if (cls == "mug") {
    double mr = 0.38 * j(), mh = 0.6 * j();
    add_disc(p, {0, 0, 0}, mr);
    add_tube(p, {0, 0, 0}, mr, 0, mh);
    add_handle(p, {mr, 0, mh / 2}, mh * 0.32, 0.045);
  } else if (cls == "guitar") {
    double body = 0.5 * j(), waist = 0.36 * j(), neck = 1.0 * j();
    add_tube_y(p, {0, 0, 0}, body, -0.06, 0.06, true);
    add_tube_y(p, {0, 0, body * 1.1}, waist, -0.055, 0.055, true);
    add_box(p, {0, 0, body * 1.1 + waist + neck / 2}, {0.055, 0.03, neck / 2});
    add_box(p, {0, 0, body * 1.1 + waist + neck + 0.1}, {0.09, 0.035, 0.1});
  } else if (cls == "bowl") {
    add_bowl_shell(p, {0, 0, 0}, 0.6 * j());
  } else {
    throw Error(ErrorCode::UnknownPrompt, "no parametric surface for '" + cls + "'");
  }
  return p;
}

PointCloud sample_patches(const PatchList& patches, int n, Rng& rng) {
  std::vector<double> cumulative;
  cumulative.reserve(patches.size());
  double total = 0.0;
  for (const Patch& p : patches) {
    total += p.area;
    cumulative.push_back(total);
  }
  PointCloud pc;
  pc.points.reserve(3 * n);
  for (int i = 0; i < n; ++i) {
    double pick = rng.uniform() * total;
    std::size_t idx =
        std::lower_bound(cumulative.begin(), cumulative.end(), pick) -
        cumulative.begin();
    if (idx >= patches.size()) idx = patches.size() - 1;
    pc.push_point(patches[idx].sample(rng));
  }
  return pc;
}

}  // namespace

const std::vector<std::string>& procedural_vocabulary() {
  static const std::vector<std::string> vocab = {
      "chair", "table", "airplane", "lamp", "bottle",
      "sofa",  "car",   "mug",      "guitar", "bowl"};
  return vocab;
}

PointCloud sample_class_surface(const std::string& cls, int n,
                                std::uint64_t param_seed,
                                std::uint64_t sample_seed, bool jitter) {
  PatchList patches;
  if (jitter) {
    Rng jr(param_seed);
    patches = build_class(cls, [&jr] { return jr.uniform(0.85, 1.15); });
  } else {
    patches = build_class(cls, [] { return 1.0; });
  }
  Rng sr(sample_seed);
  return sample_patches(patches, n, sr);
}

const PointCloud& canonical_template(const std::string& class_name,
                                     int num_points) {
  static std::map<std::pair<std::string, int>, PointCloud> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_pair(class_name, num_points);
  auto it = cache.find(key);
  if (it == cache.end()) {
    PointCloud pc = sample_class_surface(
        class_name, num_points, 0, hash_combine(0x7E6A0001ull, class_name),
        /*jitter=*/false);
    it = cache.emplace(key, geometry::normalize_point_cloud(pc)).first;
  }
  return it->second;
}

std::string chamfer_oracle_class(const PointCloud& cloud) {
  PointCloud norm = geometry::normalize_point_cloud(cloud);
  std::string best;
  double best_d = 1e300;
  for (const std::string& cls : procedural_vocabulary()) {
    double d = geometry::chamfer_distance(norm, canonical_template(cls));
    if (d < best_d) {
      best_d = d;
      best = cls;
    }
  }
  return best;
}

}  // namespace tega::generation
