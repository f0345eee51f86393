#include "tega/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "tega/error.hpp"
#include "tega/geometry.hpp"
#include "tega/kernels.hpp"

namespace tega::evaluation {

std::vector<std::pair<std::string, double>> zero_shot_classify(
    const PointCloud& cloud, const std::vector<std::string>& class_names,
    const EncoderStack& stack) {
  if (class_names.empty()) {
    throw Error(ErrorCode::EmptyVocabulary, "no class names to rank against",
                "evaluation");
  }
  auto pts = trainer::subsample_points(cloud.points,
                                       stack.config().point_subsample,
                                       stack.config().seed, "eval");
  const auto hp = stack.project_point(stack.point_features(pts));
  std::vector<std::pair<std::string, double>> ranked;
  ranked.reserve(class_names.size());
  std::vector<int> order(class_names.size());
  std::vector<double> sim(class_names.size());
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    const auto ht = stack.project_text(stack.text_features(class_names[c]));
    sim[c] = kernels::dot(hp.data(), ht.data(), hp.size());
    order[c] = int(c);
  }
  std::stable_sort(order.begin(), order.end(), [&sim](int a, int b) {
    return sim[a] > sim[b];  // stable sort keeps ascending index on ties
  });
  for (int c : order) ranked.emplace_back(class_names[c], sim[c]);
  return ranked;
}

EvalReport evaluate(const DatasetManifest& manifest,
                    const EncoderStack& stack) {
  if (manifest.records.empty()) {
    throw Error(ErrorCode::EmptyDataset, "evaluation manifest is empty",
                "evaluation");
  }
  const auto& vocab = manifest.class_vocabulary;
  const int C = int(vocab.size());

  // Class-name embeddings are shared across samples; rank by raw dot.
  std::vector<std::vector<float>> class_embed(C);
  for (int c = 0; c < C; ++c) {
    class_embed[c] = stack.project_text(stack.text_features(vocab[c]));
  }

  EvalReport report;
  report.dataset = manifest.name;
  report.sample_count = int(manifest.records.size());
  report.confusion.assign(C, std::vector<int>(C, 0));
  std::vector<int> class_total(C, 0), class_hit(C, 0);
  int hit1 = 0, hit3 = 0, hit5 = 0;

  for (const SampleRecord& rec : manifest.records) {
    PointCloud pc = geometry::read_point_cloud(rec.pc_path);
    auto pts = trainer::subsample_points(pc.points,
                                         stack.config().point_subsample,
                                         stack.config().seed, rec.sample_id);
    const auto hp = stack.project_point(stack.point_features(pts));
    std::vector<int> order(C);
    std::vector<double> sim(C);
    for (int c = 0; c < C; ++c) {
      sim[c] = kernels::dot(hp.data(), class_embed[c].data(), hp.size());
      order[c] = c;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&sim](int a, int b) { return sim[a] > sim[b]; });

    const int truth = rec.class_label;
    ++class_total[truth];
    ++report.confusion[truth][order[0]];
    const auto rank_of = [&order, truth, C]() {
      for (int r = 0; r < C; ++r) {
        if (order[r] == truth) return r;
      }
      return C;
    }();
    if (rank_of < 1) { ++hit1; ++class_hit[truth]; }
    if (rank_of < 3) ++hit3;
    if (rank_of < 5) ++hit5;
  }

  const double n = double(report.sample_count);
  report.top1 = hit1 / n;
  report.top3 = hit3 / n;
  report.top5 = hit5 / n;
  double macro = 0.0;
  int seen = 0;
  for (int c = 0; c < C; ++c) {
    if (class_total[c] == 0) continue;
    const double acc = double(class_hit[c]) / class_total[c];
    report.per_class_accuracy[vocab[c]] = acc;
    macro += acc;
    ++seen;
  }
  report.top1_per_class_macro = seen > 0 ? macro / seen : 0.0;
  return report;
}

void write_report_csv(const std::vector<EvalReport>& reports,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot open " + path, "evaluation");
  }
  out << "dataset,top1,top1_c,top3,top5,n\n";
  char buf[160];
  for (const EvalReport& r : reports) {
    std::snprintf(buf, sizeof buf, ",%.6g,%.6g,%.6g,%.6g,%d\n", r.top1,
                  r.top1_per_class_macro, r.top3, r.top5, r.sample_count);
    out << r.dataset << buf;
  }
}

void write_confusion_csv(const EvalReport& report,
                         const std::vector<std::string>& class_names,
                         const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot open " + path, "evaluation");
  }
  out << "true\\pred";
  for (const std::string& c : class_names) out << ',' << c;
  out << '\n';
  for (std::size_t r = 0; r < report.confusion.size(); ++r) {
    out << class_names[r];
    for (int v : report.confusion[r]) out << ',' << v;
    out << '\n';
  }
}

}  // namespace tega::evaluation
