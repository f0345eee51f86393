#include "tega/filtering.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "tega/error.hpp"

namespace tega::filtering {

std::pair<const RenderedView*, const RenderedView*> select_filter_views(
    const TripletSample& sample) {
  const RenderedView* front = nullptr;
  const RenderedView* back = nullptr;
  for (const RenderedView& v : sample.views) {
    if (v.camera.view_index == 0) front = &v;
    if (v.camera.view_index == 10) back = &v;
  }
  if (sample.views.size() < 20 || !front || !back)
    throw Error(ErrorCode::MissingViews,
                "need the full 20-view turntable, have " +
                    std::to_string(sample.views.size()));
  return {front, back};
}

std::vector<std::string> normalize_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    // Light plural fold: trailing "es" then "s".
    if (current.size() > 3 && current.ends_with("es"))
      current.erase(current.size() - 2);
    else if (current.size() > 2 && current.ends_with("s"))
      current.erase(current.size() - 1);
    tokens.push_back(current);
    current.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c))
      current += char(std::tolower(c));
    else if (std::isspace(c))
      flush();
    // punctuation dropped in place, keeping the token joined ("cream-colored")
  }
  flush();
  return tokens;
}

int score_text(const std::string& merged_caption, const std::string& prompt) {
  auto caption_toks = normalize_tokens(merged_caption);
  auto prompt_toks = normalize_tokens(prompt);
  if (prompt_toks.empty() || caption_toks.size() < prompt_toks.size()) return 1;
  for (std::size_t i = 0; i + prompt_toks.size() <= caption_toks.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < prompt_toks.size(); ++j) {
      if (caption_toks[i + j] != prompt_toks[j]) {
        match = false;
        break;
      }
    }
    if (match) return 5;
  }
  return 1;
}

std::string merge_captions_fallback(const std::string& front,
                                    const std::string& back) {
  auto trim = [](std::string s) {
    while (!s.empty() && std::isspace((unsigned char)s.front())) s.erase(0, 1);
    while (!s.empty() && std::isspace((unsigned char)s.back())) s.pop_back();
    return s;
  };
  std::string f = trim(front), b = trim(back);
  if (f.empty() && b.empty())
    throw Error(ErrorCode::MergeFailed, "both captions empty");
  std::vector<std::string> parts;
  for (const std::string& c : {f, b}) {
    if (c.empty()) continue;
    bool dup = false;
    for (const std::string& seen : parts)
      if (normalize_tokens(seen) == normalize_tokens(c)) dup = true;
    if (!dup) parts.push_back(c);
  }
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += "; ";
    out += parts[i];
  }
  return out;
}

const std::string& judge_system_prompt() {
  static const std::string prompt =
      "You are an assessment expert responsible for prompt-prediction pairs. "
      "Your task is to score the prediction according to the following "
      "requirements: 1. Evaluate the recall, or how well the prediction "
      "covers the information in the prompt. If the prediction contains "
      "information that does not appear in the prompt, it should not be "
      "considered as bad. 2. Assign a score between 1 and 5, with 5 being the "
      "highest. Do not provide a complete answer; give the score in the "
      "format: 3 3. add points if the prediction and prompt are conceptually "
      "close (e.g. similar in appearance). (e.g., bike and bycicle and table "
      "and chair are close) 4. since the prompt is at the word level, it is "
      "inevitable that some detailed information is missing, so exclude it "
      "from the point deduction.";
  return prompt;
}

std::string judge_user_prompt(const std::string& prompt,
                              const std::string& caption) {
  return "prompt: " + prompt + "\nprediction: " + caption;
}

int score_semantic(const std::string& merged_caption, const std::string& prompt,
                   Judge& judge) {
  int s = judge.score(prompt, merged_caption);
  if (s < 1 || s > 5)
    throw Error(ErrorCode::JudgeProtocolError,
                "judge score out of range: " + std::to_string(s));
  return s;
}

ConsistencyReport consistency_filter(const TripletSample& sample,
                                     double threshold,
                                     const FilterBackends& backends) {
  ConsistencyReport report;
  report.sample_id = sample.sample_id;
  report.threshold = threshold;

  std::string front_caption, back_caption;
  try {
    auto [front, back] = select_filter_views(sample);
    if (!backends.captioner)
      throw Error(ErrorCode::CaptionFailed, "no captioner configured");
    front_caption = backends.captioner->caption(*front, &sample.cloud);
    back_caption = backends.captioner->caption(*back, &sample.cloud);
    if (front_caption.empty() || back_caption.empty())
      throw Error(ErrorCode::CaptionFailed, "captioner returned empty text");
  } catch (const Error&) {
    report.stage_failure = "caption";
    return report;
  }

  try {
    report.merged_caption =
        backends.merger
            ? backends.merger->merge({front_caption, back_caption})
            : merge_captions_fallback(front_caption, back_caption);
    if (report.merged_caption.empty())
      throw Error(ErrorCode::MergeFailed, "empty merged caption");
  } catch (const Error&) {
    report.stage_failure = "merge";
    return report;
  }

  report.s_text = score_text(report.merged_caption, sample.text);
  try {
    if (!backends.judge)
      throw Error(ErrorCode::JudgeFailed, "no judge configured");
    report.s_sem = score_semantic(report.merged_caption, sample.text,
                                  *backends.judge);
  } catch (const Error&) {
    report.stage_failure = "judge";
    return report;
  }

  report.total = report.s_text + report.s_sem;
  report.pass = double(report.total) > threshold;
  return report;
}

FilterResult filter_dataset(std::vector<TripletSample> samples,
                            double threshold, const FilterBackends& backends) {
  FilterResult result;
  for (TripletSample& sample : samples) {
    ConsistencyReport report = consistency_filter(sample, threshold, backends);
    result.summary.total += 1;
    auto& [kept, generated] = result.summary.per_class[sample.text];
    generated += 1;
    if (report.pass) {
      kept += 1;
      result.summary.kept += 1;
      result.kept.push_back(std::move(sample));
    } else {
      result.rejected.push_back(std::move(sample));
    }
    result.reports.push_back(std::move(report));
  }
  return result;
}

std::string StubCaptioner::caption(const RenderedView& view,
                                   const PointCloud* cloud_hint) {
  bool blank = true;
  for (std::uint8_t b : view.pixels)
    if (b != 255) {
      blank = false;
      break;
    }
  if (blank) return "an empty white image";
  if (cloud_hint && cloud_hint->point_count() > 0)
    return "a 3d rendering of a " +
           generation::chamfer_oracle_class(*cloud_hint);
  return "an unidentified object";
}

int StubJudge::score(const std::string& prompt, const std::string& caption) {
  if (score_text(caption, prompt) == 5) return 5;
  auto pt = normalize_tokens(prompt);
  auto ct = normalize_tokens(caption);
  std::set<std::string> ps(pt.begin(), pt.end());
  std::set<std::string> cs(ct.begin(), ct.end());
  std::size_t inter = 0;
  for (const auto& t : ps)
    if (cs.count(t)) ++inter;
  std::size_t uni = ps.size() + cs.size() - inter;
  double distance = uni == 0 ? 1.0 : 1.0 - double(inter) / double(uni);
  int bucket = std::clamp(1 + int(distance * 3.999), 1, 4);
  return 5 - bucket;  // in [1, 4]
}

int ScriptedJudge::score(const std::string&, const std::string&) {
  if (next_ >= scores_.size())
    throw Error(ErrorCode::JudgeFailed, "scripted judge exhausted");
  return scores_[next_++];
}

}  // namespace tega::filtering
