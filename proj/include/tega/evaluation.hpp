#pragma once

#include <map>
#include <string>
#include <vector>

#include "tega/datasetio.hpp"
#include "tega/trainer.hpp"

namespace tega {

struct EvalReport {
  std::string dataset;
  double top1 = 0.0;
  double top3 = 0.0;
  double top5 = 0.0;
  double top1_per_class_macro = 0.0;  // the "Top1-C" column
  std::map<std::string, double> per_class_accuracy;
  std::vector<std::vector<int>> confusion;  // rows true, columns predicted
  int sample_count = 0;
};

namespace evaluation {

// Classes ranked by descending cosine similarity between h^P and each class
// name's h^T; ties broken by ascending class index.
std::vector<std::pair<std::string, double>> zero_shot_classify(
    const PointCloud& cloud, const std::vector<std::string>& class_names,
    const EncoderStack& stack);

EvalReport evaluate(const DatasetManifest& manifest, const EncoderStack& stack);

void write_report_csv(const std::vector<EvalReport>& reports,
                      const std::string& path);
void write_confusion_csv(const EvalReport& report,
                         const std::vector<std::string>& class_names,
                         const std::string& path);

}  // namespace evaluation
}  // namespace tega
