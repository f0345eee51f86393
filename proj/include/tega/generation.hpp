#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tega/geometry.hpp"
#include "tega/renderer.hpp"

namespace tega {

struct GenerationRequest {
  std::string prompt;
  double guidance_scale = 3.0;
  int num_points = 4096;
  int steps = 50;  // forwarded to remote diffusion backends only
  std::uint64_t seed = 0;
};

enum class SampleSource { Real, Synthetic };

struct TripletSample {
  std::string sample_id;
  std::string text;
  int class_label = -1;
  SampleSource source = SampleSource::Synthetic;
  PointCloud cloud;                  // normalized, with normals
  std::vector<RenderedView> views;   // 20 for synthetic samples
  std::optional<GenerationRequest> generation;
};

/// Contract for any text-to-point-cloud backend: deterministic in
/// (prompt, guidance_scale, num_points, seed).
class Generator {
 public:
  virtual ~Generator() = default;
  virtual PointCloud generate(const GenerationRequest& request) = 0;
  virtual std::string identity() const = 0;
};

namespace generation {

// The desk-scale vocabulary of parametric classes.
const std::vector<std::string>& procedural_vocabulary();

// Canonical (jitter-free) template cloud for a class, normalized.
const PointCloud& canonical_template(const std::string& class_name,
                                     int num_points = 1024);

// Nearest canonical template by Chamfer distance over the full vocabulary.
std::string chamfer_oracle_class(const PointCloud& cloud);

class ProceduralGenerator : public Generator {
 public:
  PointCloud generate(const GenerationRequest& request) override;
  std::string identity() const override { return "procedural"; }
};

// Text-adherence weight implementing the guidance-scale semantics:
// max(0.5, w/(w+1)) so 0 maps to an even blend and large values to ~1.
double adherence_weight(double guidance_scale);

struct PipelineOptions {
  int num_points = 4096;
  int normals_k = 10;
  RenderOptions render;
};

struct PipelineReport {
  int attempted = 0;
  int succeeded = 0;
  std::map<std::string, int> failures_by_stage;
  std::vector<std::pair<std::string, std::string>> failures;  // id, message
  int failed() const { return attempted - succeeded; }
};

// generate -> normalize -> estimate_normals -> ball_pivot -> 20 views.
// Throws tega::Error with the failing stage label.
TripletSample synthesize_sample(const std::string& prompt, double guidance,
                                std::uint64_t seed, Generator& backend,
                                const PipelineOptions& options = {});

// Deterministic sample id for a (prompt, seed) pair.
std::string make_sample_id(const std::string& prompt, std::uint64_t seed);

// Seeds are base_seed + running index across the expanded prompt list.
// Per-sample failures are tallied, never fatal.
std::vector<TripletSample> generate_batch(
    const std::vector<std::pair<std::string, int>>& prompts, double guidance,
    std::uint64_t base_seed, Generator& backend, PipelineReport& report,
    const PipelineOptions& options = {});

}  // namespace generation
}  // namespace tega
