#include "tega/datasetio.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tega/error.hpp"
#include "tega/geometry.hpp"
#include "tega/renderer.hpp"
#include "tega/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tega {

int DatasetManifest::real_count() const {
  return static_cast<int>(std::count_if(
      records.begin(), records.end(),
      [](const SampleRecord& r) { return r.source == SampleSource::Real; }));
}

int DatasetManifest::synthetic_count() const {
  return static_cast<int>(records.size()) - real_count();
}

namespace datasetio {
namespace {

constexpr const char* kSchema = "tega-manifest/1";

void shuffle_indices(std::vector<int>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.below(i)]);
  }
}

json record_to_json(const SampleRecord& r) {
  json j;
  j["sample_id"] = r.sample_id;
  j["class_text"] = r.class_text;
  j["class_label"] = r.class_label;
  j["source"] = r.source == SampleSource::Real ? "real" : "synthetic";
  j["pc_path"] = r.pc_path;
  j["view_paths"] = r.view_paths;
  if (r.filter) {
    j["filter"] = {{"s_text", r.filter->s_text},
                   {"s_sem", r.filter->s_sem},
                   {"total", r.filter->total},
                   {"pass", r.filter->pass}};
  }
  if (r.generation) {
    j["generation"] = {{"prompt", r.generation->prompt},
                       {"guidance_scale", r.generation->guidance_scale},
                       {"seed", r.generation->seed}};
  }
  return j;
}

SampleRecord record_from_json(const json& j, int line) {
  auto fail = [line](const std::string& what) -> Error {
    std::ostringstream os;
    os << "manifest line " << line << ": " << what;
    return Error(ErrorCode::SchemaViolation, os.str(), "datasetio");
  };
  SampleRecord r;
  try {
    r.sample_id = j.at("sample_id").get<std::string>();
    r.class_text = j.at("class_text").get<std::string>();
    r.class_label = j.at("class_label").get<int>();
    const std::string src = j.at("source").get<std::string>();
    if (src == "real") {
      r.source = SampleSource::Real;
    } else if (src == "synthetic") {
      r.source = SampleSource::Synthetic;
    } else {
      throw fail("unknown source '" + src + "'");
    }
    r.pc_path = j.at("pc_path").get<std::string>();
    r.view_paths = j.at("view_paths").get<std::vector<std::string>>();
    if (j.contains("filter")) {
      const json& f = j.at("filter");
      r.filter = FilterScores{f.at("s_text").get<int>(), f.at("s_sem").get<int>(),
                              f.at("total").get<int>(), f.at("pass").get<bool>()};
    }
    if (j.contains("generation")) {
      const json& g = j.at("generation");
      r.generation =
          GenerationEcho{g.at("prompt").get<std::string>(),
                         g.at("guidance_scale").get<double>(),
                         g.at("seed").get<std::uint64_t>()};
    }
  } catch (const json::exception& e) {
    throw fail(e.what());
  }
  return r;
}

// Remaps a record's label into `vocab`; throws VocabularyMismatch if absent.
SampleRecord remap_label(SampleRecord r, const std::vector<std::string>& vocab) {
  auto it = std::find(vocab.begin(), vocab.end(), r.class_text);
  if (it == vocab.end()) {
    throw Error(ErrorCode::VocabularyMismatch,
                "class '" + r.class_text + "' not in target vocabulary",
                "datasetio");
  }
  r.class_label = static_cast<int>(it - vocab.begin());
  return r;
}

// Per-class quotas proportional to real class counts, summing exactly to
// `want`: floor shares first, then largest fractional remainders.
std::map<std::string, int> stratified_quota(
    const std::map<std::string, int>& real_counts, int real_total, int want) {
  std::map<std::string, int> quota;
  std::vector<std::pair<double, std::string>> remainders;
  int assigned = 0;
  for (const auto& [cls, n] : real_counts) {
    const double share = real_total > 0
                             ? static_cast<double>(want) * n / real_total
                             : 0.0;
    const int base = static_cast<int>(share);
    quota[cls] = base;
    assigned += base;
    remainders.emplace_back(share - base, cls);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t i = 0; assigned < want && i < remainders.size(); ++i) {
    ++quota[remainders[i].second];
    ++assigned;
  }
  return quota;
}

// Draws `want` synthetic records: per-class quotas while pools allow, then a
// global fallback over whatever is left. Pools are consumed in seeded
// shuffled order. Throws InsufficientSynthetic if the pool is too small.
std::vector<SampleRecord> draw_synthetic(const DatasetManifest& synthetic,
                                         const std::map<std::string, int>& real_counts,
                                         int real_total, int want,
                                         std::uint64_t seed) {
  if (static_cast<int>(synthetic.records.size()) < want) {
    std::ostringstream os;
    os << "need " << want << " synthetic records, pool has "
       << synthetic.records.size();
    throw Error(ErrorCode::InsufficientSynthetic, os.str(), "datasetio");
  }
  std::map<std::string, std::vector<int>> pools;
  for (int i = 0; i < static_cast<int>(synthetic.records.size()); ++i) {
    pools[synthetic.records[i].class_text].push_back(i);
  }
  for (auto& [cls, pool] : pools) {
    Rng rng(hash_combine(hash_combine(seed, "pool"), cls));
    shuffle_indices(pool, rng);
  }
  const auto quota = stratified_quota(real_counts, real_total, want);

  std::vector<SampleRecord> out;
  for (const auto& [cls, q] : quota) {
    auto it = pools.find(cls);
    if (it == pools.end()) continue;
    auto& pool = it->second;
    const int take = std::min(q, static_cast<int>(pool.size()));
    for (int i = 0; i < take; ++i) {
      out.push_back(synthetic.records[pool.back()]);
      pool.pop_back();
    }
  }
  // Global fallback for quota shortfalls (class pool exhausted or class with
  // no real counterpart): seeded shuffle of everything left.
  std::vector<int> leftovers;
  for (auto& [cls, pool] : pools) {
    leftovers.insert(leftovers.end(), pool.begin(), pool.end());
  }
  std::sort(leftovers.begin(), leftovers.end());
  Rng rng(hash_combine(seed, "fallback"));
  shuffle_indices(leftovers, rng);
  while (static_cast<int>(out.size()) < want) {
    out.push_back(synthetic.records[leftovers.back()]);
    leftovers.pop_back();
  }
  return out;
}

}  // namespace

void validate_manifest(const DatasetManifest& manifest) {
  auto fail = [](const std::string& what) -> Error {
    return Error(ErrorCode::SchemaViolation, what, "datasetio");
  };
  if (manifest.class_vocabulary.empty()) {
    throw fail("empty class vocabulary");
  }
  std::set<std::string> ids;
  for (const SampleRecord& r : manifest.records) {
    if (r.sample_id.empty()) throw fail("record with empty sample_id");
    if (!ids.insert(r.sample_id).second) {
      throw fail("duplicate sample_id '" + r.sample_id + "'");
    }
    if (r.class_label < 0 ||
        r.class_label >= static_cast<int>(manifest.class_vocabulary.size())) {
      throw fail("sample '" + r.sample_id + "' class_label out of range");
    }
    if (manifest.class_vocabulary[r.class_label] != r.class_text) {
      throw fail("sample '" + r.sample_id +
                 "' class_text disagrees with class_label");
    }
    if (r.pc_path.empty()) {
      throw fail("sample '" + r.sample_id + "' has empty pc_path");
    }
  }
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
  validate_manifest(manifest);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot open for writing: " + path,
                "datasetio");
  }
  json header;
  header["schema"] = kSchema;
  header["name"] = manifest.name;
  header["split"] = manifest.split == Split::Train ? "train" : "eval";
  header["class_vocabulary"] = manifest.class_vocabulary;
  out << header.dump() << '\n';
  for (const SampleRecord& r : manifest.records) {
    out << record_to_json(r).dump() << '\n';
  }
  if (!out) {
    throw Error(ErrorCode::IoError, "write failed: " + path, "datasetio");
  }
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open: " + path, "datasetio");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::SchemaViolation, "empty manifest: " + path,
                "datasetio");
  }
  DatasetManifest manifest;
  try {
    const json header = json::parse(line);
    if (header.at("schema").get<std::string>() != kSchema) {
      throw Error(ErrorCode::SchemaViolation,
                  "unsupported schema in " + path, "datasetio");
    }
    manifest.name = header.at("name").get<std::string>();
    manifest.split = header.at("split").get<std::string>() == "eval"
                         ? Split::Eval
                         : Split::Train;
    manifest.class_vocabulary =
        header.at("class_vocabulary").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation,
                std::string("manifest header: ") + e.what(), "datasetio");
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      std::ostringstream os;
      os << "manifest line " << line_no << ": " << e.what();
      throw Error(ErrorCode::SchemaViolation, os.str(), "datasetio");
    }
    manifest.records.push_back(record_from_json(j, line_no));
  }
  validate_manifest(manifest);
  return manifest;
}

DatasetManifest merge_expand(const DatasetManifest& real,
                             const DatasetManifest& synthetic,
                             double scale_factor, std::uint64_t seed) {
  if (scale_factor < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "scale_factor must be >= 0",
                "datasetio");
  }
  DatasetManifest out;
  out.name = real.name + "+expand";
  out.split = real.split;
  out.class_vocabulary = real.class_vocabulary;
  out.records = real.records;

  std::map<std::string, int> real_counts;
  for (const SampleRecord& r : real.records) ++real_counts[r.class_text];
  const int want =
      static_cast<int>(scale_factor * static_cast<double>(real.records.size()));
  for (SampleRecord& r : draw_synthetic(synthetic, real_counts,
                                        static_cast<int>(real.records.size()),
                                        want, seed)) {
    out.records.push_back(remap_label(std::move(r), out.class_vocabulary));
  }
  validate_manifest(out);
  return out;
}

DatasetManifest replace_mix(const DatasetManifest& real,
                            const DatasetManifest& synthetic,
                            int pe_sn_percent, std::uint64_t seed) {
  if (pe_sn_percent < 0 || pe_sn_percent > 100) {
    throw Error(ErrorCode::InvalidArgument,
                "replacement percentage must be in [0, 100]", "datasetio");
  }
  std::map<std::string, int> real_counts;
  for (const SampleRecord& r : real.records) ++real_counts[r.class_text];
  const int total = static_cast<int>(real.records.size());
  const int want = total * pe_sn_percent / 100;

  auto drawn = draw_synthetic(synthetic, real_counts, total, want, seed);

  // Remove as many real records as drawn, matching classes where possible so
  // per-class totals stay put; fall back to any class when one runs short.
  std::map<std::string, int> remove_quota;
  for (const SampleRecord& r : drawn) ++remove_quota[r.class_text];
  std::map<std::string, std::vector<int>> real_pools;
  for (int i = 0; i < total; ++i) {
    real_pools[real.records[i].class_text].push_back(i);
  }
  for (auto& [cls, pool] : real_pools) {
    Rng rng(hash_combine(hash_combine(seed, "drop"), cls));
    shuffle_indices(pool, rng);
  }
  std::vector<bool> dropped(total, false);
  int short_by = 0;
  for (const auto& [cls, q] : remove_quota) {
    auto& pool = real_pools[cls];
    const int take = std::min(q, static_cast<int>(pool.size()));
    for (int i = 0; i < take; ++i) {
      dropped[pool.back()] = true;
      pool.pop_back();
    }
    short_by += q - take;
  }
  if (short_by > 0) {
    std::vector<int> leftovers;
    for (auto& [cls, pool] : real_pools) {
      leftovers.insert(leftovers.end(), pool.begin(), pool.end());
    }
    std::sort(leftovers.begin(), leftovers.end());
    Rng rng(hash_combine(seed, "dropfallback"));
    shuffle_indices(leftovers, rng);
    for (int i = 0; i < short_by; ++i) {
      dropped[leftovers.back()] = true;
      leftovers.pop_back();
    }
  }

  DatasetManifest out;
  out.name = real.name + "+replace";
  out.split = real.split;
  out.class_vocabulary = real.class_vocabulary;
  for (int i = 0; i < total; ++i) {
    if (!dropped[i]) out.records.push_back(real.records[i]);
  }
  for (SampleRecord& r : drawn) {
    out.records.push_back(remap_label(std::move(r), out.class_vocabulary));
  }
  validate_manifest(out);
  return out;
}

IngestResult ingest_real(const std::string& dir, const std::string& labels_path,
                         const RenderOptions& render_options) {
  IngestResult result;
  result.manifest.name = "real";

  std::map<std::string, std::string> labels;  // cloud filename -> class text
  {
    std::ifstream in(labels_path);
    if (!in) {
      throw Error(ErrorCode::IoError, "cannot open labels file: " + labels_path,
                  "datasetio");
    }
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
        std::ostringstream os;
        os << "labels line " << line_no << ": expected filename<TAB>class";
        throw Error(ErrorCode::ParseError, os.str(), "datasetio");
      }
      labels[line.substr(0, tab)] = line.substr(tab + 1);
    }
  }

  std::set<std::string> vocab_set;
  for (const auto& [file, cls] : labels) vocab_set.insert(cls);
  result.manifest.class_vocabulary.assign(vocab_set.begin(), vocab_set.end());

  std::vector<fs::path> cloud_files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".tegapc") {
      cloud_files.push_back(entry.path());
    }
  }
  std::sort(cloud_files.begin(), cloud_files.end());

  for (const fs::path& path : cloud_files) {
    const std::string file = path.filename().string();
    const std::string stem = path.stem().string();
    try {
      auto label_it = labels.find(file);
      if (label_it == labels.end()) {
        throw Error(ErrorCode::ParseError, "no label for " + file, "datasetio");
      }
      SampleRecord rec;
      rec.sample_id = stem;
      rec.class_text = label_it->second;
      rec.class_label = static_cast<int>(
          std::find(result.manifest.class_vocabulary.begin(),
                    result.manifest.class_vocabulary.end(), rec.class_text) -
          result.manifest.class_vocabulary.begin());
      rec.source = SampleSource::Real;
      rec.pc_path = path.string();

      bool views_present = true;
      for (int v = 0; v < 20; ++v) {
        std::ostringstream os;
        os << stem << "_view" << (v < 10 ? "0" : "") << v << ".ppm";
        const fs::path view_path = path.parent_path() / os.str();
        rec.view_paths.push_back(view_path.string());
        if (!fs::exists(view_path)) views_present = false;
      }
      if (!views_present) {
        PointCloud pc = geometry::read_point_cloud(path.string());
        pc = geometry::normalize_point_cloud(pc);
        if (pc.normals.empty()) geometry::estimate_normals(pc);
        TriangleMesh mesh = geometry::ball_pivot_mesh(pc);
        auto views = renderer::render_all_views(mesh, render_options);
        for (int v = 0; v < 20; ++v) {
          renderer::write_ppm(views[v], rec.view_paths[v]);
        }
      }
      result.manifest.records.push_back(std::move(rec));
    } catch (const Error& e) {
      result.errors.emplace_back(path.string(), e.what());
    }
  }
  if (!result.manifest.records.empty()) {
    validate_manifest(result.manifest);
  }
  return result;
}

}  // namespace datasetio
}  // namespace tega
