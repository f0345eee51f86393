#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tega/generation.hpp"

namespace tega {

struct ConsistencyReport {
  std::string sample_id;
  std::string merged_caption;
  int s_text = 0;   // {1, 5}
  int s_sem = 0;    // [1, 5]
  int total = 0;    // s_text + s_sem
  double threshold = 3.5;
  bool pass = false;
  std::optional<std::string> stage_failure;  // caption / merge / judge
};

/// Captioner contract. `cloud_hint` carries the sample's point cloud when the
/// caller has it; offline stubs use it, wire-backed captioners ignore it.
class Captioner {
 public:
  virtual ~Captioner() = default;
  virtual std::string caption(const RenderedView& view,
                              const PointCloud* cloud_hint) = 0;
};

class CaptionMerger {
 public:
  virtual ~CaptionMerger() = default;
  virtual std::string merge(const std::vector<std::string>& captions) = 0;
};

class Judge {
 public:
  virtual ~Judge() = default;
  // Returns an integer in [1, 5].
  virtual int score(const std::string& prompt, const std::string& caption) = 0;
};

struct FilterBackends {
  Captioner* captioner = nullptr;
  CaptionMerger* merger = nullptr;  // null -> fallback concatenation
  Judge* judge = nullptr;
};

struct FilterSummary {
  int total = 0;
  int kept = 0;
  // class text -> (kept, generated)
  std::map<std::string, std::pair<int, int>> per_class;
};

namespace filtering {

// Front and back turntable views (indices 0 and 10).
std::pair<const RenderedView*, const RenderedView*> select_filter_views(
    const TripletSample& sample);

// Fallback merger: drops duplicate captions, joins the rest with "; ".
std::string merge_captions_fallback(const std::string& front,
                                    const std::string& back);

// Lowercase, punctuation-stripped, plural-folded token sequence.
std::vector<std::string> normalize_tokens(const std::string& text);

// 5 when the normalized prompt occurs as a contiguous token subsequence of
// the normalized caption, 1 otherwise.
int score_text(const std::string& merged_caption, const std::string& prompt);

int score_semantic(const std::string& merged_caption, const std::string& prompt,
                   Judge& judge);

// The verbatim judge instruction block sent ahead of each prompt/prediction.
const std::string& judge_system_prompt();
std::string judge_user_prompt(const std::string& prompt,
                              const std::string& caption);

ConsistencyReport consistency_filter(const TripletSample& sample,
                                     double threshold,
                                     const FilterBackends& backends);

struct FilterResult {
  std::vector<TripletSample> kept;
  std::vector<TripletSample> rejected;
  std::vector<ConsistencyReport> reports;
  FilterSummary summary;
};

FilterResult filter_dataset(std::vector<TripletSample> samples,
                            double threshold, const FilterBackends& backends);

// Offline deterministic stand-ins.

// Captions via the Chamfer oracle over the procedural vocabulary; a blank
// view falls back to "an empty white image".
class StubCaptioner : public Captioner {
 public:
  std::string caption(const RenderedView& view,
                      const PointCloud* cloud_hint) override;
};

// 5 on a word match, else 5 minus a bucketed token-set distance (1..4).
class StubJudge : public Judge {
 public:
  int score(const std::string& prompt, const std::string& caption) override;
};

// Fixed per-call scores for golden tests.
class ScriptedJudge : public Judge {
 public:
  explicit ScriptedJudge(std::vector<int> scores) : scores_(std::move(scores)) {}
  int score(const std::string&, const std::string&) override;

 private:
  std::vector<int> scores_;
  std::size_t next_ = 0;
};

}  // namespace filtering
}  // namespace tega
