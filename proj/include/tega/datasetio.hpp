#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tega/generation.hpp"

namespace tega {

struct FilterScores {
  int s_text = 0;
  int s_sem = 0;
  int total = 0;
  bool pass = false;
};

struct GenerationEcho {
  std::string prompt;
  double guidance_scale = 3.0;
  std::uint64_t seed = 0;
};

/// One manifest line: payload paths, never payloads.
struct SampleRecord {
  std::string sample_id;
  std::string class_text;
  int class_label = -1;
  SampleSource source = SampleSource::Real;
  std::string pc_path;
  std::vector<std::string> view_paths;
  std::optional<FilterScores> filter;
  std::optional<GenerationEcho> generation;
};

enum class Split { Train, Eval };

struct DatasetManifest {
  std::string name;
  Split split = Split::Train;
  std::vector<std::string> class_vocabulary;
  std::vector<SampleRecord> records;

  int real_count() const;
  int synthetic_count() const;
};

namespace datasetio {

// Throws SchemaViolation naming the offending field.
void validate_manifest(const DatasetManifest& manifest);

// Line-delimited JSON, schema "tega-manifest/1". Lossless round-trip.
void write_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest read_manifest(const std::string& path);

// All real records plus floor(scale_factor * |real|) synthetic records,
// sampled without replacement, class-stratified while pools allow.
DatasetManifest merge_expand(const DatasetManifest& real,
                             const DatasetManifest& synthetic,
                             double scale_factor, std::uint64_t seed);

// Fixed-size replacement: floor(percent/100 * |real|) records swapped for
// synthetic ones, class-stratified with a global fallback.
DatasetManifest replace_mix(const DatasetManifest& real,
                            const DatasetManifest& synthetic,
                            int pe_sn_percent, std::uint64_t seed);

struct IngestResult {
  DatasetManifest manifest;
  std::vector<std::pair<std::string, std::string>> errors;  // path, message
};

// Loads every .tegapc under `dir` using `labels_path` (TSV:
// filename<TAB>class text). Samples without <id>_viewNN.ppm files get their
// 20 views rendered and written alongside the cloud.
IngestResult ingest_real(const std::string& dir, const std::string& labels_path,
                         const RenderOptions& render_options = {});

}  // namespace datasetio
}  // namespace tega
