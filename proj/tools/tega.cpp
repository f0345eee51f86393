// tega: pipeline driver — generate, filter, mix, train, eval, sweep.
//
// Exit codes: 0 success (possibly with per-sample failures), 1 usage error,
// 2 backend unreachable, 3 invariant violation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tega/datasetio.hpp"
#include "tega/error.hpp"
#include "tega/evaluation.hpp"
#include "tega/filtering.hpp"
#include "tega/generation.hpp"
#include "tega/geometry.hpp"
#include "tega/net.hpp"
#include "tega/renderer.hpp"
#include "tega/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tega;

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

fs::path ensure_layout(const std::string& out) {
  fs::path root(out);
  for (const char* sub :
       {"clouds", "views", "manifests", "reports", "checkpoints"}) {
    fs::create_directories(root / sub);
  }
  return root;
}

void write_config_echo(CLI::App* sub, const fs::path& root) {
  std::ofstream f(root / "reports" /
                  ("config_echo_" + sub->get_name() + ".toml"));
  f << sub->config_to_str(true, false);
}

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

std::vector<ModalityPair> parse_pairs(const std::string& spec) {
  std::vector<ModalityPair> out;
  for (const std::string& p : split_csv(spec)) {
    if (p == "IT") {
      out.push_back(ModalityPair::ImageText);
    } else if (p == "PI") {
      out.push_back(ModalityPair::PointImage);
    } else if (p == "PT") {
      out.push_back(ModalityPair::PointText);
    } else {
      throw Error(ErrorCode::InvalidArgument,
                  "unknown modality pair '" + p + "' (expected IT, PI, PT)",
                  "cli");
    }
  }
  return out;
}

std::set<std::string> read_ledger(const fs::path& path) {
  std::set<std::string> done;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) done.insert(line);
  }
  return done;
}

// ---------------------------------------------------------------- generate

struct GenerateOptions {
  std::string classes;     // comma list; empty -> full procedural vocabulary
  int per_class = 5;
  double guidance = 3.0;
  int points = 4096;
  int steps = 50;
  std::uint64_t seed = 0;
  std::string out;
  std::string name = "generated";
  std::string backend = "procedural";
  std::string split = "train";
  int resolution = 224;
  bool no_views = false;   // clouds only (fast held-out eval sets)
  bool as_real = false;    // mark records Real (desk stand-in corpora)
};

fs::path run_generate(const GenerateOptions& opt) {
  const fs::path root = ensure_layout(opt.out);
  std::vector<std::string> classes = split_csv(opt.classes);
  if (classes.empty()) classes = generation::procedural_vocabulary();

  std::unique_ptr<Generator> backend;
  if (opt.backend == "procedural") {
    backend = std::make_unique<generation::ProceduralGenerator>();
  } else if (opt.backend == "remote") {
    net::ClientOptions copt;
    copt.endpoint = env_or_empty("TEGA_GEN_ENDPOINT");
    if (copt.endpoint.empty()) {
      throw Error(ErrorCode::BackendUnreachable,
                  "TEGA_GEN_ENDPOINT not set for --backend remote", "cli");
    }
    copt.cache_dir = (root / "reports" / "gen_cache").string();
    backend = std::make_unique<net::RemoteGenerator>(copt);
  } else {
    throw Error(ErrorCode::InvalidArgument,
                "unknown backend '" + opt.backend + "'", "cli");
  }

  generation::PipelineOptions popt;
  popt.num_points = opt.points;
  popt.render.resolution = opt.resolution;

  const fs::path ledger_path = root / "reports" / (opt.name + "_ledger.txt");
  std::set<std::string> done = read_ledger(ledger_path);
  std::ofstream ledger(ledger_path, std::ios::app);

  DatasetManifest manifest;
  manifest.name = opt.name;
  manifest.split = opt.split == "eval" ? Split::Eval : Split::Train;
  manifest.class_vocabulary = classes;

  generation::PipelineReport report;
  std::uint64_t running = 0;
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    for (int k = 0; k < opt.per_class; ++k, ++running) {
      const std::string& prompt = classes[ci];
      const std::uint64_t seed = opt.seed + running;
      const std::string id = generation::make_sample_id(prompt, seed);
      ++report.attempted;

      SampleRecord rec;
      rec.sample_id = id;
      rec.class_text = prompt;
      rec.class_label = int(ci);
      rec.source = opt.as_real ? SampleSource::Real : SampleSource::Synthetic;
      rec.pc_path = (root / "clouds" / (id + ".tegapc")).string();
      if (!opt.no_views) {
        for (int v = 0; v < 20; ++v) {
          char suffix[16];
          std::snprintf(suffix, sizeof suffix, "_view%02d.ppm", v);
          rec.view_paths.push_back((root / "views" / (id + suffix)).string());
        }
      }
      rec.generation = GenerationEcho{prompt, opt.guidance, seed};

      const bool cached = done.count(id) && fs::exists(rec.pc_path);
      try {
        if (!cached) {
          if (opt.no_views) {
            GenerationRequest req;
            req.prompt = prompt;
            req.guidance_scale = opt.guidance;
            req.num_points = opt.points;
            req.steps = opt.steps;
            req.seed = seed;
            PointCloud pc = backend->generate(req);
            pc = geometry::normalize_point_cloud(pc);
            geometry::write_point_cloud(pc, rec.pc_path);
          } else {
            TripletSample sample = generation::synthesize_sample(
                prompt, opt.guidance, seed, *backend, popt);
            geometry::write_point_cloud(sample.cloud, rec.pc_path);
            for (int v = 0; v < 20; ++v) {
              renderer::write_ppm(sample.views[v], rec.view_paths[v]);
            }
          }
          ledger << id << '\n' << std::flush;
        }
        ++report.succeeded;
        manifest.records.push_back(std::move(rec));
      } catch (const Error& e) {
        ++report.failures_by_stage[e.stage().empty() ? "generate" : e.stage()];
        report.failures.emplace_back(id, e.what());
        if (e.code() == ErrorCode::BackendUnreachable) throw;
      }
    }
  }

  const fs::path manifest_path = root / "manifests" / (opt.name + ".manifest");
  datasetio::write_manifest(manifest, manifest_path.string());

  json jr;
  jr["attempted"] = report.attempted;
  jr["succeeded"] = report.succeeded;
  jr["failures_by_stage"] = report.failures_by_stage;
  json failures = json::array();
  for (const auto& [id, msg] : report.failures) {
    failures.push_back({{"sample_id", id}, {"error", msg}});
  }
  jr["failures"] = failures;
  std::ofstream(root / "reports" / (opt.name + "_report.json"))
      << jr.dump(2) << '\n';
  return manifest_path;
}

// ------------------------------------------------------------------ filter

struct FilterOptions {
  std::string in;
  std::string out;
  double threshold = 3.5;
  std::string name = "filtered";
};

struct FilterOutputs {
  fs::path kept;
  fs::path rejected;
};

TripletSample load_triplet(const SampleRecord& rec) {
  TripletSample s;
  s.sample_id = rec.sample_id;
  s.text = rec.class_text;
  s.class_label = rec.class_label;
  s.source = rec.source;
  s.cloud = geometry::read_point_cloud(rec.pc_path);
  for (std::size_t v = 0; v < rec.view_paths.size(); ++v) {
    RenderedView view = renderer::read_ppm(rec.view_paths[v]);
    view.camera.view_index = int(v);
    s.views.push_back(std::move(view));
  }
  if (rec.generation) {
    GenerationRequest req;
    req.prompt = rec.generation->prompt;
    req.guidance_scale = rec.generation->guidance_scale;
    req.seed = rec.generation->seed;
    s.generation = req;
  }
  return s;
}

json report_to_json(const ConsistencyReport& r) {
  json j;
  j["sample_id"] = r.sample_id;
  j["merged_caption"] = r.merged_caption;
  j["s_text"] = r.s_text;
  j["s_sem"] = r.s_sem;
  j["total"] = r.total;
  j["threshold"] = r.threshold;
  j["verdict"] = r.pass ? "pass" : "reject";
  if (r.stage_failure) j["stage_failure"] = *r.stage_failure;
  return j;
}

FilterOutputs run_filter(const FilterOptions& opt) {
  const fs::path root = ensure_layout(opt.out);
  DatasetManifest in = datasetio::read_manifest(opt.in);

  filtering::StubCaptioner stub_captioner;
  filtering::StubJudge stub_judge;
  std::unique_ptr<net::RemoteCaptioner> remote_captioner;
  std::unique_ptr<net::RemoteMerger> remote_merger;
  std::unique_ptr<net::RemoteJudge> remote_judge;
  FilterBackends backends;
  backends.captioner = &stub_captioner;
  backends.judge = &stub_judge;
  const std::string caption_ep = env_or_empty("TEGA_CAPTION_ENDPOINT");
  if (!caption_ep.empty()) {
    net::ClientOptions copt;
    copt.endpoint = caption_ep;
    copt.cache_dir = (root / "reports" / "caption_cache").string();
    remote_captioner = std::make_unique<net::RemoteCaptioner>(copt);
    remote_merger = std::make_unique<net::RemoteMerger>(copt);
    backends.captioner = remote_captioner.get();
    backends.merger = remote_merger.get();
  }
  const std::string judge_ep = env_or_empty("TEGA_JUDGE_ENDPOINT");
  if (!judge_ep.empty()) {
    net::ClientOptions copt;
    copt.endpoint = judge_ep;
    copt.bearer_token = env_or_empty("TEGA_JUDGE_TOKEN");
    copt.cache_dir = (root / "reports" / "judge_cache").string();
    remote_judge = std::make_unique<net::RemoteJudge>(copt);
    backends.judge = remote_judge.get();
  }

  // Resumable: one report JSON per line, keyed by sample_id.
  const fs::path ledger_path = root / "reports" / (opt.name + "_ledger.jsonl");
  std::map<std::string, ConsistencyReport> done;
  {
    std::ifstream lin(ledger_path);
    std::string line;
    while (std::getline(lin, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      ConsistencyReport r;
      r.sample_id = j.at("sample_id").get<std::string>();
      r.merged_caption = j.at("merged_caption").get<std::string>();
      r.s_text = j.at("s_text").get<int>();
      r.s_sem = j.at("s_sem").get<int>();
      r.total = j.at("total").get<int>();
      r.threshold = j.at("threshold").get<double>();
      r.pass = j.at("verdict").get<std::string>() == "pass";
      if (j.contains("stage_failure")) {
        r.stage_failure = j.at("stage_failure").get<std::string>();
      }
      done[r.sample_id] = std::move(r);
    }
  }
  std::ofstream ledger(ledger_path, std::ios::app);

  DatasetManifest kept = in, rejected = in;
  kept.records.clear();
  rejected.records.clear();
  kept.name = opt.name + "_kept";
  rejected.name = opt.name + "_rejected";
  FilterSummary summary;
  std::vector<ConsistencyReport> reports;

  for (const SampleRecord& rec : in.records) {
    ConsistencyReport report;
    auto it = done.find(rec.sample_id);
    if (it != done.end() && it->second.threshold == opt.threshold) {
      report = it->second;
    } else {
      report = filtering::consistency_filter(load_triplet(rec), opt.threshold,
                                             backends);
      ledger << report_to_json(report).dump() << '\n' << std::flush;
    }
    SampleRecord out_rec = rec;
    out_rec.filter =
        FilterScores{report.s_text, report.s_sem, report.total, report.pass};
    ++summary.total;
    auto& [cls_kept, cls_gen] = summary.per_class[rec.class_text];
    ++cls_gen;
    if (report.pass) {
      ++summary.kept;
      ++cls_kept;
      kept.records.push_back(std::move(out_rec));
    } else {
      rejected.records.push_back(std::move(out_rec));
    }
    reports.push_back(std::move(report));
  }

  FilterOutputs paths;
  paths.kept = root / "manifests" / (opt.name + "_kept.manifest");
  paths.rejected = root / "manifests" / (opt.name + "_rejected.manifest");
  datasetio::write_manifest(kept, paths.kept.string());
  datasetio::write_manifest(rejected, paths.rejected.string());

  std::ofstream sum(root / "reports" / (opt.name + "_summary.csv"),
                    std::ios::binary);
  sum << "class,kept,generated,rate\n";
  char buf[64];
  for (const auto& [cls, counts] : summary.per_class) {
    std::snprintf(buf, sizeof buf, ",%d,%d,%.4g\n", counts.first,
                  counts.second,
                  counts.second ? double(counts.first) / counts.second : 0.0);
    sum << cls << buf;
  }
  std::ofstream rep(root / "reports" / (opt.name + "_reports.jsonl"),
                    std::ios::binary);
  for (const ConsistencyReport& r : reports) {
    rep << report_to_json(r).dump() << '\n';
  }
  return paths;
}

// --------------------------------------------------------------------- mix

struct MixOptions {
  std::string real;
  std::string synthetic;
  double expand_scale = -1.0;    // set -> merge_expand
  int replace_percent = -1;      // set -> replace_mix
  std::uint64_t seed = 0;
  std::string out;
  std::string name = "mixed";
};

fs::path run_mix(const MixOptions& opt) {
  const fs::path root = ensure_layout(opt.out);
  const DatasetManifest real = datasetio::read_manifest(opt.real);
  const DatasetManifest synth = datasetio::read_manifest(opt.synthetic);
  DatasetManifest mixed;
  if (opt.expand_scale >= 0.0 && opt.replace_percent >= 0) {
    throw Error(ErrorCode::InvalidArgument,
                "--expand-scale and --replace-percent are exclusive", "cli");
  }
  if (opt.expand_scale >= 0.0) {
    mixed = datasetio::merge_expand(real, synth, opt.expand_scale, opt.seed);
  } else if (opt.replace_percent >= 0) {
    mixed = datasetio::replace_mix(real, synth, opt.replace_percent, opt.seed);
  } else {
    throw Error(ErrorCode::InvalidArgument,
                "one of --expand-scale / --replace-percent is required", "cli");
  }
  mixed.name = opt.name;
  const fs::path path = root / "manifests" / (opt.name + ".manifest");
  datasetio::write_manifest(mixed, path.string());
  return path;
}

// ------------------------------------------------------------------- train

struct TrainOptions {
  std::string in;
  std::string out;
  int epochs = 200;
  int warmup = 10;
  int batch = 64;
  double base_lr = 1e-3;
  double weight_decay = 0.05;
  std::uint64_t seed = 0;
  double tau_init = 0.07;
  std::string pairs = "IT,PI,PT";
  int feature_dim = 64;
  int embed_dim = 32;
  int hidden = 64;
  int subsample = 512;
  std::string name = "model";
};

fs::path run_train(const TrainOptions& opt) {
  const fs::path root = ensure_layout(opt.out);
  const DatasetManifest manifest = datasetio::read_manifest(opt.in);

  EncoderConfig ec;
  ec.feature_dim = opt.feature_dim;
  ec.embed_dim = opt.embed_dim;
  ec.point_hidden = opt.hidden;
  ec.point_subsample = opt.subsample;
  ec.tau_init = opt.tau_init;
  ec.seed = opt.seed;
  EncoderStack stack(ec);

  trainer::TrainConfig tc;
  tc.pair_set = parse_pairs(opt.pairs);
  tc.epochs = opt.epochs;
  tc.warmup_epochs = opt.warmup;
  tc.batch_size = opt.batch;
  tc.base_lr = opt.base_lr;
  tc.weight_decay = opt.weight_decay;
  tc.seed = opt.seed;
  tc.tau_init = opt.tau_init;

  const trainer::FitResult result = trainer::fit(manifest, tc, stack);
  const fs::path ckpt = root / "checkpoints" / (opt.name + ".ckpt");
  trainer::save_checkpoint(stack, ckpt.string());
  trainer::write_loss_trace(
      result, (root / "reports" / (opt.name + "_loss_trace.csv")).string());
  return ckpt;
}

// -------------------------------------------------------------------- eval

struct EvalOptions {
  std::string in;
  std::string checkpoint;
  std::string out;
  std::string name = "eval";
};

EvalReport run_eval(const EvalOptions& opt) {
  const fs::path root = ensure_layout(opt.out);
  const DatasetManifest manifest = datasetio::read_manifest(opt.in);
  const EncoderStack stack = trainer::load_checkpoint(opt.checkpoint);
  EvalReport report = evaluation::evaluate(manifest, stack);
  evaluation::write_report_csv(
      {report}, (root / "reports" / (opt.name + "_report.csv")).string());
  evaluation::write_confusion_csv(
      report, manifest.class_vocabulary,
      (root / "reports" / (opt.name + "_confusion.csv")).string());
  return report;
}

// ------------------------------------------------------------------- sweep

struct SweepOptions {
  std::string axis;     // guidance | pe_sn | scale | filtering | pairs
  std::string values;   // comma list
  std::string out;
  std::string classes;
  int per_class = 20;
  int eval_per_class = 5;
  int points = 1024;
  int resolution = 64;
  int epochs = 10;
  int batch = 32;
  int subsample = 256;
  double base_lr = 1e-3;
  std::uint64_t seed = 0;
  double guidance = 3.0;
  double threshold = 3.5;
  bool filtering_on = true;
};

void run_sweep(const SweepOptions& opt) {
  const fs::path root = ensure_layout(opt.out);
  const std::vector<std::string> values = split_csv(opt.values);
  if (values.empty()) {
    throw Error(ErrorCode::InvalidArgument, "--values must be non-empty",
                "cli");
  }

  std::vector<EvalReport> reports;
  std::vector<std::string> row_status;
  std::vector<std::string> row_labels;
  for (const std::string& value : values) {
    const std::string row_name = opt.axis + "_" + value;
    const fs::path row_dir = root / "rows" / row_name;
    row_labels.push_back(row_name);
    try {
      double guidance = opt.guidance;
      bool filter_on = opt.filtering_on;
      std::string pairs = "IT,PI,PT";
      double expand_scale = -1.0;
      int replace_percent = -1;
      if (opt.axis == "guidance") {
        guidance = std::stod(value);
      } else if (opt.axis == "pe_sn") {
        replace_percent = std::stoi(value);
      } else if (opt.axis == "scale") {
        expand_scale = std::stod(value);
      } else if (opt.axis == "filtering") {
        filter_on = value == "on";
      } else if (opt.axis == "pairs") {
        pairs = value;
        // '+'-separated inside a row value so the row list stays comma-split.
        for (char& c : pairs) {
          if (c == '+') c = ',';
        }
      } else {
        throw Error(ErrorCode::InvalidArgument,
                    "unknown sweep axis '" + opt.axis + "'", "cli");
      }

      GenerateOptions gen;
      gen.classes = opt.classes;
      gen.per_class = opt.per_class;
      gen.guidance = guidance;
      gen.points = opt.points;
      gen.resolution = opt.resolution;
      gen.seed = opt.seed;
      gen.out = row_dir.string();
      gen.name = "synthetic";
      fs::path synth_manifest = run_generate(gen);

      std::string train_manifest = synth_manifest.string();
      if (filter_on) {
        FilterOptions f;
        f.in = train_manifest;
        f.out = row_dir.string();
        f.threshold = opt.threshold;
        train_manifest = run_filter(f).kept.string();
      }
      if (replace_percent >= 0 || expand_scale >= 0.0) {
        // Mixing axes need a "real" desk corpus: high-guidance procedural
        // samples marked Real.
        GenerateOptions real_gen = gen;
        real_gen.guidance = 30.0;
        real_gen.seed = opt.seed + 500000;
        real_gen.name = "real";
        real_gen.as_real = true;
        const fs::path real_manifest = run_generate(real_gen);
        MixOptions m;
        m.real = real_manifest.string();
        m.synthetic = train_manifest;
        m.expand_scale = expand_scale;
        m.replace_percent = replace_percent;
        m.seed = opt.seed;
        m.out = row_dir.string();
        train_manifest = run_mix(m).string();
      }

      TrainOptions t;
      t.in = train_manifest;
      t.out = row_dir.string();
      t.epochs = opt.epochs;
      t.warmup = std::min(10, std::max(1, opt.epochs / 5));
      t.batch = opt.batch;
      t.base_lr = opt.base_lr;
      t.seed = opt.seed;
      t.subsample = opt.subsample;
      t.pairs = pairs;
      const fs::path ckpt = run_train(t);

      GenerateOptions eval_gen = gen;
      eval_gen.per_class = opt.eval_per_class;
      eval_gen.guidance = 30.0;
      eval_gen.seed = opt.seed + 900000;
      eval_gen.name = "heldout";
      eval_gen.split = "eval";
      eval_gen.no_views = true;
      eval_gen.as_real = true;
      const fs::path eval_manifest = run_generate(eval_gen);

      EvalOptions e;
      e.in = eval_manifest.string();
      e.checkpoint = ckpt.string();
      e.out = row_dir.string();
      EvalReport report = run_eval(e);
      report.dataset = row_name;
      evaluation::write_confusion_csv(
          report, datasetio::read_manifest(e.in).class_vocabulary,
          (root / "reports" / ("sweep_confusion_" + row_name + ".csv"))
              .string());
      reports.push_back(std::move(report));
      row_status.push_back("ok");
    } catch (const Error& e) {
      std::cerr << "sweep row " << row_name << " failed: " << e.what() << "\n";
      EvalReport failed;
      failed.dataset = row_name;
      reports.push_back(std::move(failed));
      row_status.push_back("failed");
    }
  }

  std::ofstream out(root / "reports" / ("sweep_" + opt.axis + ".csv"),
                    std::ios::binary);
  out << "row,status,top1,top1_c,top3,top5,n\n";
  char buf[160];
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const EvalReport& r = reports[i];
    std::snprintf(buf, sizeof buf, ",%s,%.6g,%.6g,%.6g,%.6g,%d\n",
                  row_status[i].c_str(), r.top1, r.top1_per_class_macro,
                  r.top3, r.top5, r.sample_count);
    out << row_labels[i] << buf;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic 3D dataset expansion pipeline"};
  app.require_subcommand(1);

  GenerateOptions gen;
  CLI::App* cg = app.add_subcommand("generate", "Synthesize triplet samples");
  cg->set_config("--config");
  cg->add_option("--classes", gen.classes, "Comma-separated class prompts");
  cg->add_option("--per-class", gen.per_class, "Samples per class");
  cg->add_option("--guidance", gen.guidance, "Guidance scale")
      ->default_val(3.0);
  cg->add_option("--points", gen.points, "Points per cloud")->default_val(4096);
  cg->add_option("--steps", gen.steps, "Diffusion steps (remote backends)");
  cg->add_option("--seed", gen.seed, "Base seed");
  cg->add_option("--out", gen.out, "Output directory")->required();
  cg->add_option("--name", gen.name, "Manifest name");
  cg->add_option("--backend", gen.backend, "procedural | remote");
  cg->add_option("--split", gen.split, "train | eval");
  cg->add_option("--resolution", gen.resolution, "Render resolution");
  cg->add_flag("--no-views", gen.no_views, "Skip meshing and rendering");
  cg->add_flag("--as-real", gen.as_real, "Mark records as real");

  FilterOptions fil;
  CLI::App* cf = app.add_subcommand("filter", "Consistency-filter a manifest");
  cf->set_config("--config");
  cf->add_option("--in", fil.in, "Input manifest")->required();
  cf->add_option("--out", fil.out, "Output directory")->required();
  cf->add_option("--threshold", fil.threshold, "Keep iff total > threshold")
      ->default_val(3.5);
  cf->add_option("--name", fil.name, "Output name prefix");

  MixOptions mix;
  CLI::App* cm = app.add_subcommand("mix", "Merge real and synthetic data");
  cm->set_config("--config");
  cm->add_option("--real", mix.real, "Real manifest")->required();
  cm->add_option("--synthetic", mix.synthetic, "Synthetic manifest")
      ->required();
  cm->add_option("--expand-scale", mix.expand_scale,
                 "Add floor(scale * |real|) synthetic records");
  cm->add_option("--replace-percent", mix.replace_percent,
                 "Replace this percent of real records");
  cm->add_option("--seed", mix.seed, "Sampling seed");
  cm->add_option("--out", mix.out, "Output directory")->required();
  cm->add_option("--name", mix.name, "Manifest name");

  TrainOptions tr;
  CLI::App* ct = app.add_subcommand("train", "Train the tri-modal model");
  ct->set_config("--config");
  ct->add_option("--in", tr.in, "Training manifest")->required();
  ct->add_option("--out", tr.out, "Output directory")->required();
  ct->add_option("--epochs", tr.epochs, "Epochs")->default_val(200);
  ct->add_option("--warmup", tr.warmup, "Warmup epochs")->default_val(10);
  ct->add_option("--batch", tr.batch, "Batch size")->default_val(64);
  ct->add_option("--base-lr", tr.base_lr, "Base learning rate")
      ->default_val(1e-3);
  ct->add_option("--weight-decay", tr.weight_decay, "Weight decay");
  ct->add_option("--seed", tr.seed, "Training seed");
  ct->add_option("--tau-init", tr.tau_init, "Initial temperature");
  ct->add_option("--pairs", tr.pairs, "Modality pairs, e.g. IT,PI,PT");
  ct->add_option("--feature-dim", tr.feature_dim, "Tower feature width");
  ct->add_option("--embed-dim", tr.embed_dim, "Shared embedding width");
  ct->add_option("--hidden", tr.hidden, "Point encoder hidden width");
  ct->add_option("--subsample", tr.subsample, "Points fed to the encoder");
  ct->add_option("--name", tr.name, "Checkpoint name");

  EvalOptions ev;
  CLI::App* ce = app.add_subcommand("eval", "Zero-shot classification");
  ce->set_config("--config");
  ce->add_option("--in", ev.in, "Evaluation manifest")->required();
  ce->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")
      ->required();
  ce->add_option("--out", ev.out, "Output directory")->required();
  ce->add_option("--name", ev.name, "Report name prefix");

  EvalOptions ex;
  CLI::App* cx =
      app.add_subcommand("export-embeddings", "Dump point embeddings as CSV");
  cx->set_config("--config");
  cx->add_option("--in", ex.in, "Manifest")->required();
  cx->add_option("--checkpoint", ex.checkpoint, "Model checkpoint")
      ->required();
  cx->add_option("--out", ex.out, "Output directory")->required();
  cx->add_option("--name", ex.name, "Output name prefix");

  struct {
    std::string dir, labels, out, name = "real";
    int resolution = 224;
  } ing;
  CLI::App* ci = app.add_subcommand("ingest", "Import an on-disk corpus");
  ci->set_config("--config");
  ci->add_option("--dir", ing.dir, "Directory of .tegapc clouds")->required();
  ci->add_option("--labels", ing.labels, "TSV of filename<TAB>class")
      ->required();
  ci->add_option("--out", ing.out, "Output directory")->required();
  ci->add_option("--name", ing.name, "Manifest name");
  ci->add_option("--resolution", ing.resolution, "Render resolution");

  SweepOptions sw;
  CLI::App* cs = app.add_subcommand("sweep", "Ablation sweep harness");
  cs->set_config("--config");
  cs->add_option("--axis", sw.axis,
                 "guidance | pe_sn | scale | filtering | pairs")
      ->required();
  cs->add_option("--values", sw.values, "Comma-separated axis values")
      ->required();
  cs->add_option("--out", sw.out, "Output directory")->required();
  cs->add_option("--classes", sw.classes, "Comma-separated class prompts");
  cs->add_option("--per-class", sw.per_class, "Synthetic samples per class");
  cs->add_option("--eval-per-class", sw.eval_per_class,
                 "Held-out samples per class");
  cs->add_option("--points", sw.points, "Points per cloud");
  cs->add_option("--resolution", sw.resolution, "Render resolution");
  cs->add_option("--epochs", sw.epochs, "Training epochs per row");
  cs->add_option("--batch", sw.batch, "Batch size");
  cs->add_option("--subsample", sw.subsample, "Points fed to the encoder");
  cs->add_option("--base-lr", sw.base_lr, "Base learning rate");
  cs->add_option("--seed", sw.seed, "Shared row seed");
  cs->add_option("--guidance", sw.guidance, "Guidance for non-guidance axes");
  cs->add_option("--threshold", sw.threshold, "Filter threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (cg->parsed()) {
      write_config_echo(cg, ensure_layout(gen.out));
      run_generate(gen);
    } else if (cf->parsed()) {
      write_config_echo(cf, ensure_layout(fil.out));
      run_filter(fil);
    } else if (cm->parsed()) {
      write_config_echo(cm, ensure_layout(mix.out));
      run_mix(mix);
    } else if (ct->parsed()) {
      write_config_echo(ct, ensure_layout(tr.out));
      run_train(tr);
    } else if (ce->parsed()) {
      write_config_echo(ce, ensure_layout(ev.out));
      run_eval(ev);
    } else if (cx->parsed()) {
      write_config_echo(cx, ensure_layout(ex.out));
      const DatasetManifest manifest = datasetio::read_manifest(ex.in);
      const EncoderStack stack = trainer::load_checkpoint(ex.checkpoint);
      trainer::write_embeddings_csv(
          trainer::export_embeddings(manifest, stack),
          (fs::path(ex.out) / "reports" / (ex.name + "_embeddings.csv"))
              .string());
    } else if (ci->parsed()) {
      const fs::path root = ensure_layout(ing.out);
      write_config_echo(ci, root);
      RenderOptions ropt;
      ropt.resolution = ing.resolution;
      datasetio::IngestResult result =
          datasetio::ingest_real(ing.dir, ing.labels, ropt);
      result.manifest.name = ing.name;
      datasetio::write_manifest(
          result.manifest,
          (root / "manifests" / (ing.name + ".manifest")).string());
      json errs = json::array();
      for (const auto& [path, msg] : result.errors) {
        errs.push_back({{"path", path}, {"error", msg}});
      }
      std::ofstream(root / "reports" / (ing.name + "_ingest_errors.json"))
          << errs.dump(2) << '\n';
    } else if (cs->parsed()) {
      write_config_echo(cs, ensure_layout(sw.out));
      run_sweep(sw);
    }
  } catch (const Error& e) {
    std::cerr << "error";
    if (!e.stage().empty()) std::cerr << " [" << e.stage() << "]";
    std::cerr << ": " << e.what() << "\n";
    return e.code() == ErrorCode::BackendUnreachable ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
