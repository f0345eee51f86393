#include "tega/generation.hpp"

#include <algorithm>
#include <cmath>

#include "tega/error.hpp"
#include "tega/rng.hpp"

namespace tega::generation {

PointCloud sample_class_surface(const std::string& cls, int n,
                                std::uint64_t param_seed,
                                std::uint64_t sample_seed,
                                bool jitter);  // shapes.cpp

double adherence_weight(double guidance_scale) {
  if (guidance_scale < 0.0)
    throw Error(ErrorCode::InvalidArgument, "guidance scale must be >= 0");
  return std::max(0.5, guidance_scale / (guidance_scale + 1.0));
}

namespace {

void validate(const GenerationRequest& request) {
  std::string trimmed = request.prompt;
  trimmed.erase(std::remove(trimmed.begin(), trimmed.end(), ' '), trimmed.end());
  if (trimmed.empty())
    throw Error(ErrorCode::InvalidArgument, "prompt is empty");
  if (request.num_points < 4)
    throw Error(ErrorCode::InvalidArgument, "num_points must be >= 4");
}

}  // namespace

PointCloud ProceduralGenerator::generate(const GenerationRequest& request) {
  validate(request);
  const auto& vocab = procedural_vocabulary();
  auto it = std::find(vocab.begin(), vocab.end(), request.prompt);
  if (it == vocab.end())
    throw Error(ErrorCode::UnknownPrompt,
                "'" + request.prompt + "' not in the procedural vocabulary",
                "generate");

  double w = adherence_weight(request.guidance_scale);
  int n = request.num_points;
  int n_class = int(std::lround(w * n));
  n_class = std::clamp(n_class, 0, n);

  // Seed-chosen distractor class; blending a fraction (1-w) of its surface in
  // gives the low-guidance ambiguity the scale is meant to control.
  Rng pick(hash_combine(request.seed, "distractor"));
  std::size_t offset = 1 + pick.below(vocab.size() - 1);
  const std::string& distractor =
      vocab[(std::size_t(it - vocab.begin()) + offset) % vocab.size()];

  // Each part is normalized in its own frame before blending so a
  // large-extent distractor cannot rescale the class surface.
  PointCloud cls_pts = sample_class_surface(
      request.prompt, n_class, hash_combine(request.seed, "params"),
      hash_combine(request.seed, "samples"), /*jitter=*/true);
  if (n_class > 0) cls_pts = geometry::normalize_point_cloud(cls_pts);
  PointCloud dis_pts = sample_class_surface(
      distractor, n - n_class, hash_combine(request.seed, "dparams"),
      hash_combine(request.seed, "dsamples"), /*jitter=*/true);
  if (n - n_class > 0) dis_pts = geometry::normalize_point_cloud(dis_pts);

  PointCloud out;
  out.points.reserve(std::size_t(n) * 3);
  out.points.insert(out.points.end(), cls_pts.points.begin(),
                    cls_pts.points.end());
  out.points.insert(out.points.end(), dis_pts.points.begin(),
                    dis_pts.points.end());
  return out;
}

std::string make_sample_id(const std::string& prompt, std::uint64_t seed) {
  std::string id;
  for (char c : prompt) id += (c == ' ') ? '-' : c;
  id += "-s" + std::to_string(seed);
  return id;
}

TripletSample synthesize_sample(const std::string& prompt, double guidance,
                                std::uint64_t seed, Generator& backend,
                                const PipelineOptions& options) {
  GenerationRequest request{prompt, guidance, options.num_points, 50, seed};
  auto staged = [](const char* stage, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw Error(e.code(), e.what(), stage);
    }
  };

  PointCloud raw = staged("generate", [&] { return backend.generate(request); });
  if (int(raw.point_count()) != request.num_points)
    throw Error(ErrorCode::GenerationFailed,
                "backend returned " + std::to_string(raw.point_count()) +
                    " points, wanted " + std::to_string(request.num_points),
                "generate");
  PointCloud normalized =
      staged("normalize", [&] { return geometry::normalize_point_cloud(raw); });
  PointCloud with_normals = staged("normals", [&] {
    return geometry::estimate_normals(normalized, options.normals_k);
  });
  TriangleMesh mesh =
      staged("meshing", [&] { return geometry::ball_pivot_mesh(with_normals); });
  std::vector<RenderedView> views = staged(
      "render", [&] { return renderer::render_all_views(mesh, options.render); });

  TripletSample sample;
  sample.sample_id = make_sample_id(prompt, seed);
  sample.text = prompt;
  sample.source = SampleSource::Synthetic;
  sample.cloud = std::move(with_normals);
  sample.views = std::move(views);
  sample.generation = request;
  return sample;
}

std::vector<TripletSample> generate_batch(
    const std::vector<std::pair<std::string, int>>& prompts, double guidance,
    std::uint64_t base_seed, Generator& backend, PipelineReport& report,
    const PipelineOptions& options) {
  std::vector<TripletSample> out;
  std::uint64_t index = 0;
  for (const auto& [prompt, count] : prompts) {
    if (count < 0)
      throw Error(ErrorCode::InvalidArgument, "negative per-prompt count");
    for (int i = 0; i < count; ++i, ++index) {
      std::uint64_t seed = base_seed + index;
      ++report.attempted;
      try {
        out.push_back(synthesize_sample(prompt, guidance, seed, backend, options));
        ++report.succeeded;
      } catch (const Error& e) {
        std::string stage = e.stage().empty() ? "unknown" : e.stage();
        ++report.failures_by_stage[stage];
        report.failures.emplace_back(make_sample_id(prompt, seed), e.what());
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const TripletSample& a, const TripletSample& b) {
              return a.generation->seed < b.generation->seed;
            });
  return out;
}

}  // namespace tega::generation
