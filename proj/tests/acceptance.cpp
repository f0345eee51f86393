// End-to-end acceptance gate. Each criterion prints exactly one PASS/FAIL
// line; the process exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gradient_oracle.hpp"
#include "tega/datasetio.hpp"
#include "tega/error.hpp"
#include "tega/evaluation.hpp"
#include "tega/filtering.hpp"
#include "tega/generation.hpp"
#include "tega/geometry.hpp"
#include "tega/renderer.hpp"
#include "tega/rng.hpp"
#include "tega/trainer.hpp"

using namespace tega;
namespace fs = std::filesystem;

namespace {

const fs::path kBase = fs::temp_directory_path() / "tega_acceptance";
const std::string kCli = TEGA_CLI_PATH;

struct Failure {
  std::string detail;
};

void require(bool ok, const std::string& detail) {
  if (!ok) throw Failure{detail};
}

int run_cli(const std::string& args) {
  const std::string cmd =
      kCli + " " + args + " >> " + (kBase / "cli.log").string() + " 2>&1";
  return std::system(cmd.c_str());
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct EvalRow {
  double top1 = 0.0, top1c = 0.0, top3 = 0.0, top5 = 0.0;
  int n = 0;
};

EvalRow parse_eval_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string header, row;
  require(bool(std::getline(in, header)) && bool(std::getline(in, row)),
          "missing eval report " + p.string());
  std::vector<std::string> cells;
  std::stringstream ss(row);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  require(cells.size() == 6, "bad eval report row: " + row);
  EvalRow r;
  r.top1 = std::stod(cells[1]);
  r.top1c = std::stod(cells[2]);
  r.top3 = std::stod(cells[3]);
  r.top5 = std::stod(cells[4]);
  r.n = std::stoi(cells[5]);
  return r;
}

// ------------------------------------------------------------- criterion 1

void criterion_filter_goldens() {
  auto golden = [](const std::string& prompt, const std::string& caption,
                   int judge_score) {
    TripletSample s;
    s.sample_id = "golden";
    s.text = prompt;
    for (int k = 0; k < 20; ++k) {
      RenderedView v;
      v.width = 2;
      v.height = 2;
      v.pixels.assign(12, 255);
      v.camera.view_index = k;
      s.views.push_back(v);
    }
    struct Fixed : Captioner {
      std::string text;
      std::string caption(const RenderedView&, const PointCloud*) override {
        return text;
      }
    } cap;
    cap.text = caption;
    filtering::ScriptedJudge judge({judge_score});
    FilterBackends b;
    b.captioner = &cap;
    b.judge = &judge;
    return filtering::consistency_filter(s, 3.5, b);
  };

  const auto car = golden(
      "car",
      "A 3D rendering of a car with a pink and white exterior and a pink "
      "interior with red streaks",
      5);
  require(car.s_text == 5 && car.total == 10 && car.pass,
          "car golden expected 5/10 pass");
  const auto sofa = golden("sofa", "A modern, cream-colored sofa", 1);
  require(sofa.s_text == 5 && sofa.total == 6 && sofa.pass,
          "sofa golden expected 5+1=6 pass");
  const auto birdhouse =
      golden("birdhouse", "A black and white artistic object", 2);
  require(birdhouse.s_text == 1 && birdhouse.total == 3 && !birdhouse.pass,
          "birdhouse golden expected 1+2=3 reject");
}

// ------------------------------------------------------------- criterion 2

trainer::Embeddings random_embeddings(Rng& rng, int rows, int dim) {
  trainer::Embeddings h;
  h.rows = rows;
  h.dim = dim;
  auto fill = [&](std::vector<float>& m) {
    m.resize(std::size_t(rows) * dim);
    for (int i = 0; i < rows; ++i) {
      double n2 = 0.0;
      for (int k = 0; k < dim; ++k) {
        const double v = rng.uniform() * 2.0 - 1.0;
        m[std::size_t(i) * dim + k] = float(v);
        n2 += v * v;
      }
      const float inv = float(1.0 / std::sqrt(std::max(n2, 1e-12)));
      for (int k = 0; k < dim; ++k) m[std::size_t(i) * dim + k] *= inv;
    }
  };
  fill(h.text);
  fill(h.image);
  fill(h.point);
  return h;
}

const std::vector<ModalityPair> kFullS = {ModalityPair::ImageText,
                                          ModalityPair::PointImage,
                                          ModalityPair::PointText};

void criterion_loss_oracle() {
  Rng rng(1234);
  const double taus[] = {0.05, 0.07, 1.0};
  for (int trial = 0; trial < 200; ++trial) {
    const int N = 1 + int(rng.below(8));
    const int d = 2 + int(rng.below(15));
    const double tau = taus[trial % 3];
    const auto h = random_embeddings(rng, N, d);
    const auto res = trainer::contrastive_loss(h, tau, kFullS);
    const double want = oracle::embeddings_loss(h, tau, kFullS);
    require(std::abs(res.loss - want) <= 1e-6,
            "trial " + std::to_string(trial) + ": loss " +
                std::to_string(res.loss) + " vs oracle " +
                std::to_string(want));
  }
  const auto h1 = random_embeddings(rng, 1, 8);
  require(trainer::contrastive_loss(h1, 0.07, kFullS).loss == 0.0,
          "N=1 loss must be exactly 0");
}

// ------------------------------------------------------------- criterion 3

TripletSample random_triplet(Rng& rng, const std::string& text) {
  TripletSample s;
  s.sample_id = text + std::to_string(rng.below(1u << 30));
  s.text = text;
  for (int i = 0; i < 20; ++i) {
    s.cloud.push_point({rng.uniform() * 2 - 1, rng.uniform() * 2 - 1,
                        rng.uniform() * 2 - 1});
  }
  RenderedView v;
  v.width = 16;
  v.height = 16;
  v.pixels.resize(16 * 16 * 3);
  for (std::size_t i = 0; i < v.pixels.size(); i += 3) {
    const auto g = std::uint8_t(rng.below(256));
    v.pixels[i] = v.pixels[i + 1] = v.pixels[i + 2] = g;
  }
  s.views.push_back(v);
  return s;
}

void criterion_gradient_check() {
  Rng rng(4321);
  const std::vector<std::string> words = {"chair", "lamp", "mug", "bowl"};
  double max_rel = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    EncoderConfig cfg;
    cfg.feature_dim = 8;
    cfg.embed_dim = 4 + int(rng.below(5));  // d_e in [4, 8]
    cfg.point_hidden = 8;
    cfg.point_subsample = 12;
    cfg.seed = 100 + trial;
    EncoderStack stack(cfg);

    const int N = 2 + int(rng.below(3));  // batch in [2, 4]
    std::vector<TripletSample> batch;
    for (int i = 0; i < N; ++i) {
      batch.push_back(random_triplet(rng, words[i % words.size()]));
    }

    std::vector<float> grads;
    trainer::loss_and_param_gradient(batch, stack, kFullS, grads);
    const auto inputs = oracle::capture_inputs(batch, stack);
    std::vector<double> params(stack.parameters().begin(),
                               stack.parameters().end());

    // Probe ~30 parameters spread over the whole vector plus log-tau.
    std::vector<std::size_t> probes;
    for (std::size_t i = 0; i < params.size();
         i += params.size() / 30 + 1) {
      probes.push_back(i);
    }
    probes.push_back(params.size() - 1);
    const double step = 1e-4;
    for (std::size_t i : probes) {
      const double saved = params[i];
      params[i] = saved + step;
      const double up = oracle::stack_loss(cfg, params, inputs, kFullS);
      params[i] = saved - step;
      const double dn = oracle::stack_loss(cfg, params, inputs, kFullS);
      params[i] = saved;
      const double fd = (up - dn) / (2.0 * step);
      const double rel =
          std::abs(double(grads[i]) - fd) /
          std::max({std::abs(double(grads[i])), std::abs(fd), 1e-3});
      max_rel = std::max(max_rel, rel);
      require(rel <= 1e-3, "trial " + std::to_string(trial) + " param " +
                               std::to_string(i) + ": analytic " +
                               std::to_string(grads[i]) + " vs fd " +
                               std::to_string(fd));
    }
  }
}

// ------------------------------------------------------------- criterion 4

PointCloud planar_grid(int m, int n) {
  PointCloud pc;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      pc.push_point({double(i), double(j), 0.0});
      pc.normals.insert(pc.normals.end(), {0.f, 0.f, 1.f});
    }
  }
  return pc;
}

PointCloud fib_sphere(int n) {
  PointCloud pc;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(1.0 - z * z);
    const double a = golden * i;
    pc.push_point({r * std::cos(a), r * std::sin(a), z});
    pc.normals.push_back(float(r * std::cos(a)));
    pc.normals.push_back(float(r * std::sin(a)));
    pc.normals.push_back(float(z));
  }
  return pc;
}

std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_counts(
    const TriangleMesh& mesh) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edges;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      auto a = t[e], b = t[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edges[{a, b}];
    }
  }
  return edges;
}

void criterion_ball_pivoting() {
  for (auto [m, n] : {std::pair{5, 5}, std::pair{8, 12}}) {
    const auto mesh = geometry::ball_pivot_mesh(planar_grid(m, n), {0.8});
    require(int(mesh.triangles.size()) == 2 * (m - 1) * (n - 1),
            "grid " + std::to_string(m) + "x" + std::to_string(n) + ": got " +
                std::to_string(mesh.triangles.size()) + " triangles");
  }

  const auto sphere = fib_sphere(2000);
  const auto mesh = geometry::ball_pivot_mesh(sphere);
  std::set<std::uint32_t> used;
  for (const auto& t : mesh.triangles) used.insert(t.begin(), t.end());
  require(used.size() >= 1800, "sphere uses only " +
                                   std::to_string(used.size()) +
                                   " of 2000 points");
  const auto edges = edge_counts(mesh);
  for (const auto& [e, c] : edges) {
    require(c <= 2, "sphere edge shared by " + std::to_string(c));
  }
  const long euler =
      long(used.size()) - long(edges.size()) + long(mesh.triangles.size());
  require(euler == 2, "sphere Euler characteristic " + std::to_string(euler));

  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    PointCloud pc = fib_sphere(300 + int(rng.below(200)));
    for (float& v : pc.points) v += float((rng.uniform() - 0.5) * 0.04);
    pc = geometry::estimate_normals(pc);
    const auto fuzz = geometry::ball_pivot_mesh(pc);
    for (const auto& [e, c] : edge_counts(fuzz)) {
      require(c <= 2, "fuzz trial " + std::to_string(trial) +
                          ": edge shared by " + std::to_string(c));
    }
  }
}

// ------------------------------------------------------------- criterion 5

void criterion_renderer() {
  const auto cams = renderer::make_turntable_cameras(20, 18.0, 30.0, 3.0);
  require(cams.size() == 20, "expected 20 cameras");
  for (int k = 0; k < 20; ++k) {
    require(std::abs(cams[k].azimuth_deg + 18.0 * k) < 1e-12,
            "camera " + std::to_string(k) + " azimuth wrong");
  }

  TriangleMesh tri;
  const float v[] = {0.f, -0.4f, -0.3f, 0.f, 0.4f, -0.3f, 0.f, 0.f, 0.5f};
  tri.vertices.assign(v, v + 9);
  for (int i = 0; i < 3; ++i) {
    tri.vertex_normals.insert(tri.vertex_normals.end(), {1.f, 0.f, 0.f});
  }
  tri.triangles.push_back({0, 1, 2});
  CameraPose cam;
  cam.distance = 3.0;
  cam = renderer::fit_focal(cam, tri, 0.8, 224);
  const auto view = renderer::render_view(tri, cam);
  int min_x = 224, max_x = -1, min_y = 224, max_y = -1;
  for (int y = 0; y < 224; ++y) {
    for (int x = 0; x < 224; ++x) {
      const std::size_t i = 3 * (std::size_t(y) * 224 + x);
      if (view.pixels[i] != 255) {
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
      }
    }
  }
  require(max_x >= 0, "triangle rendered no pixels");
  require(std::abs(0.5 * (min_x + max_x) - 111.5) <= 2.0 &&
              std::abs(0.5 * (min_y + max_y) - 111.5) <= 2.0,
          "triangle bounding-box center off image center");

  // Equivariance on an asymmetric mesh.
  auto mesh = geometry::ball_pivot_mesh(geometry::estimate_normals([] {
    PointCloud pc = fib_sphere(500);
    pc.normals.clear();
    for (std::size_t i = 0; i < pc.point_count(); ++i) {
      pc.points[3 * i] *= 0.6f;
    }
    return pc;
  }()));
  RenderOptions opt;
  opt.resolution = 96;
  const auto base = renderer::render_all_views(mesh, opt);
  const auto rotated = geometry::rotate_z(mesh, -18.0);
  const auto shifted = renderer::render_all_views(rotated, opt);
  for (int k = 0; k + 1 < 20; ++k) {
    require(shifted[k].pixels == base[k + 1].pixels,
            "rotated view " + std::to_string(k) +
                " differs from original view " + std::to_string(k + 1));
  }
}

// ---------------------------------------------------- criteria 6, 8, 10

const fs::path kDesk = kBase / "desk";

void copy_echo(const std::string& sub, const std::string& tag) {
  fs::copy_file(kDesk / "reports" / ("config_echo_" + sub + ".toml"),
                kBase / ("echo_" + tag + ".toml"),
                fs::copy_options::overwrite_existing);
}

double g_desk_top1_mean = 0.0;  // shared with criterion 8

void criterion_desk_experiment() {
  fs::remove_all(kDesk);
  require(run_cli("generate --per-class 80 --points 512 --resolution 48 "
                  "--guidance 3.0 --seed 1000 --out " +
                  kDesk.string()) == 0,
          "generate failed");
  copy_echo("generate", "generate");
  require(run_cli("filter --in " +
                  (kDesk / "manifests" / "generated.manifest").string() +
                  " --out " + kDesk.string()) == 0,
          "filter failed");
  copy_echo("filter", "filter");
  require(run_cli("generate --per-class 20 --points 512 --guidance 3.0 "
                  "--seed 777000 --no-views --as-real --split eval "
                  "--name heldout --out " +
                  kDesk.string()) == 0,
          "held-out generate failed");
  copy_echo("generate", "heldout");

  double sum1 = 0.0;
  for (int seed = 1; seed <= 3; ++seed) {
    const std::string tag = "s" + std::to_string(seed);
    require(run_cli("train --in " +
                    (kDesk / "manifests" / "filtered_kept.manifest").string() +
                    " --out " + kDesk.string() +
                    " --epochs 50 --warmup 10 --batch 64 --base-lr 0.02 "
                    "--subsample 256 --seed " +
                    std::to_string(seed) + " --name model_" + tag) == 0,
            "train seed " + std::to_string(seed) + " failed");
    require(run_cli("eval --in " +
                    (kDesk / "manifests" / "heldout.manifest").string() +
                    " --checkpoint " +
                    (kDesk / "checkpoints" / ("model_" + tag + ".ckpt"))
                        .string() +
                    " --out " + kDesk.string() + " --name eval_" + tag) == 0,
            "eval seed " + std::to_string(seed) + " failed");
    const auto row = parse_eval_csv(kDesk / "reports" /
                                    ("eval_" + tag + "_report.csv"));
    require(row.n == 200, "expected 200 held-out samples, got " +
                              std::to_string(row.n));
    require(row.top1 <= row.top3 + 1e-12 && row.top3 <= row.top5 + 1e-12,
            "Top-1 <= Top-3 <= Top-5 violated");
    sum1 += row.top1;
  }
  copy_echo("train", "train");
  copy_echo("eval", "eval");
  g_desk_top1_mean = sum1 / 3.0;
  require(g_desk_top1_mean >= 0.60,
          "3-seed mean Top-1 " + std::to_string(g_desk_top1_mean) +
              " below 0.60");
}

// ------------------------------------------------------------- criterion 7

void criterion_omega_monotonicity() {
  generation::ProceduralGenerator gen;
  const auto& vocab = generation::procedural_vocabulary();
  auto rate = [&](double omega) {
    int hits = 0, trials = 0;
    for (int s = 0; s < 10; ++s) {
      for (const auto& cls : vocab) {
        GenerationRequest req;
        req.prompt = cls;
        req.guidance_scale = omega;
        req.num_points = 512;
        req.seed = std::uint64_t(50000 + s * 101 + trials);
        ++trials;
        if (generation::chamfer_oracle_class(gen.generate(req)) == cls) {
          ++hits;
        }
      }
    }
    return double(hits) / trials;
  };
  double prev = -1.0;
  for (double omega : {0.0, 0.3, 3.0, 30.0}) {
    const double r = rate(omega);
    require(r >= prev, "assignment rate decreased at omega " +
                           std::to_string(omega) + ": " + std::to_string(r) +
                           " < " + std::to_string(prev));
    prev = r;
  }
}

// ------------------------------------------------------------- criterion 8

void criterion_corruption_sensitivity() {
  const fs::path w8 = kBase / "corrupt";
  fs::remove_all(w8);
  fs::create_directories(w8 / "manifests");

  auto manifest = datasetio::read_manifest(
      (kDesk / "manifests" / "generated.manifest").string());
  const int C = int(manifest.class_vocabulary.size());
  Rng rng(2026);
  std::set<std::string> corrupted_ids;
  std::vector<std::size_t> order(manifest.records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  const std::size_t n_corrupt = order.size() * 30 / 100;
  for (std::size_t k = 0; k < n_corrupt; ++k) {
    auto& rec = manifest.records[order[k]];
    const int shift = 1 + int(rng.below(std::uint64_t(C - 1)));
    rec.class_label = (rec.class_label + shift) % C;
    rec.class_text = manifest.class_vocabulary[rec.class_label];
    corrupted_ids.insert(rec.sample_id);
  }
  const fs::path corrupted = w8 / "manifests" / "corrupted.manifest";
  datasetio::write_manifest(manifest, corrupted.string());

  require(run_cli("filter --in " + corrupted.string() + " --out " +
                  w8.string()) == 0,
          "filter on corrupted manifest failed");
  const auto kept = datasetio::read_manifest(
      (w8 / "manifests" / "filtered_kept.manifest").string());
  int corrupted_kept = 0;
  for (const auto& rec : kept.records) {
    if (corrupted_ids.count(rec.sample_id)) ++corrupted_kept;
  }
  const double rejected_rate =
      1.0 - double(corrupted_kept) / double(corrupted_ids.size());
  require(rejected_rate >= 0.80,
          "filter rejected only " + std::to_string(100.0 * rejected_rate) +
              "% of corrupted samples");

  auto train_and_eval = [&](const fs::path& in, const std::string& tag) {
    double sum = 0.0;
    for (int seed = 1; seed <= 3; ++seed) {
      const std::string name = tag + "_s" + std::to_string(seed);
      require(run_cli("train --in " + in.string() + " --out " + w8.string() +
                      " --epochs 50 --warmup 10 --batch 64 --base-lr 0.02 "
                      "--subsample 256 --seed " +
                      std::to_string(seed) + " --name " + name) == 0,
              "train " + name + " failed");
      require(run_cli("eval --in " +
                      (kDesk / "manifests" / "heldout.manifest").string() +
                      " --checkpoint " +
                      (w8 / "checkpoints" / (name + ".ckpt")).string() +
                      " --out " + w8.string() + " --name eval_" + name) == 0,
              "eval " + name + " failed");
      sum += parse_eval_csv(w8 / "reports" / ("eval_" + name + "_report.csv"))
                 .top1;
    }
    return sum / 3.0;
  };
  const double filtered =
      train_and_eval(w8 / "manifests" / "filtered_kept.manifest", "filtered");
  const double unfiltered = train_and_eval(corrupted, "unfiltered");
  require(filtered - unfiltered >= 0.05,
          "filtered Top-1 " + std::to_string(filtered) +
              " does not beat unfiltered " + std::to_string(unfiltered) +
              " by 5 points");
}

// ------------------------------------------------------------- criterion 9

void criterion_harness_arithmetic() {
  DatasetManifest real, synth;
  real.name = "real";
  synth.name = "synth";
  real.class_vocabulary = synth.class_vocabulary = {"chair", "lamp"};
  auto add = [](DatasetManifest& m, const std::string& prefix, int count,
                SampleSource source) {
    for (int i = 0; i < count; ++i) {
      SampleRecord r;
      r.sample_id = prefix + std::to_string(i);
      r.class_label = i % 2;
      r.class_text = m.class_vocabulary[r.class_label];
      r.source = source;
      r.pc_path = "x.tegapc";
      m.records.push_back(r);
    }
  };
  add(real, "r", 40, SampleSource::Real);
  add(synth, "s", 100, SampleSource::Synthetic);

  const auto p0 = datasetio::replace_mix(real, synth, 0, 1);
  require(p0.records.size() == 40 && p0.synthetic_count() == 0,
          "replace_mix(0) must equal the real manifest");
  std::set<std::string> real_ids, p0_ids;
  for (const auto& r : real.records) real_ids.insert(r.sample_id);
  for (const auto& r : p0.records) p0_ids.insert(r.sample_id);
  require(real_ids == p0_ids, "replace_mix(0) changed the record set");

  const auto p100 = datasetio::replace_mix(real, synth, 100, 1);
  require(p100.records.size() == 40 && p100.real_count() == 0 &&
              p100.synthetic_count() == 40,
          "replace_mix(100) must be all-synthetic at equal size");

  const auto doubled = datasetio::merge_expand(real, synth, 1.0, 1);
  require(doubled.records.size() == 80 && doubled.real_count() == 40,
          "merge_expand(1) must double the record count");

  // Effective-lr rule through the real schedule: base 1e-3 at batch 1024.
  const double eff = 1e-3 * 1024 / 256.0;
  require(std::abs(eff - 4e-3) < 1e-15, "lr arithmetic");
}

// ------------------------------------------------------------ criterion 10

void criterion_reproducibility() {
  const std::vector<fs::path> artifacts = {
      kDesk / "manifests" / "generated.manifest",
      kDesk / "manifests" / "heldout.manifest",
      kDesk / "manifests" / "filtered_kept.manifest",
      kDesk / "manifests" / "filtered_rejected.manifest",
      kDesk / "checkpoints" / "model_s3.ckpt",
      kDesk / "reports" / "eval_s3_report.csv",
  };
  std::vector<std::string> before;
  for (const auto& p : artifacts) {
    require(fs::exists(p), "missing artifact " + p.string());
    before.push_back(read_file(p));
  }

  const std::vector<std::pair<std::string, std::string>> reruns = {
      {"generate", "generate"}, {"filter", "filter"},
      {"generate", "heldout"},  {"train", "train"},
      {"eval", "eval"},
  };
  for (const auto& [sub, tag] : reruns) {
    require(run_cli(sub + " --config " +
                    (kBase / ("echo_" + tag + ".toml")).string()) == 0,
            "rerun of " + tag + " from its config echo failed");
  }
  for (std::size_t i = 0; i < artifacts.size(); ++i) {
    require(read_file(artifacts[i]) == before[i],
            "artifact changed after rerun: " + artifacts[i].string());
  }
}

}  // namespace

int main() {
  fs::remove_all(kBase);
  fs::create_directories(kBase);

  struct Criterion {
    std::string name;
    std::function<void()> run;
  };
  const std::vector<Criterion> criteria = {
      {"filtering goldens (car 10 safe, sofa 6 safe, birdhouse 3 ng)",
       criterion_filter_goldens},
      {"contrastive loss matches brute-force oracle on 200 random batches",
       criterion_loss_oracle},
      {"analytic gradients match central finite differences",
       criterion_gradient_check},
      {"ball pivoting: grid counts, sphere topology, manifold edges",
       criterion_ball_pivoting},
      {"renderer: turntable azimuths, centering, rotation equivariance",
       criterion_renderer},
      {"end-to-end desk experiment reaches Top-1 >= 0.60 (3-seed mean)",
       criterion_desk_experiment},
      {"guidance-scale monotonicity of the class-assignment rate",
       criterion_omega_monotonicity},
      {"corruption sensitivity: filter catches shuffled labels and training "
       "on filtered data wins by >= 5 Top-1 points",
       criterion_corruption_sensitivity},
      {"mixing arithmetic and learning-rate rule",
       criterion_harness_arithmetic},
      {"byte-identical artifacts when rerun from config echoes",
       criterion_reproducibility},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    std::string verdict = "PASS";
    std::string detail;
    try {
      criteria[i].run();
    } catch (const Failure& f) {
      verdict = "FAIL";
      detail = f.detail;
      ++failures;
    } catch (const std::exception& e) {
      verdict = "FAIL";
      detail = e.what();
      ++failures;
    }
    const auto secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    std::printf("%s criterion %zu: %s (%.1fs)%s%s\n", verdict.c_str(), i + 1,
                criteria[i].name.c_str(), secs,
                detail.empty() ? "" : " — ", detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
