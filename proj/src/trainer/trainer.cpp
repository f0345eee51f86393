#include "tega/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "tega/error.hpp"
#include "tega/filtering.hpp"
#include "tega/geometry.hpp"
#include "tega/kernels.hpp"
#include "tega/rng.hpp"

namespace tega {
namespace {

constexpr int kTextBuckets = 256;
constexpr int kImageSide = 16;       // downsampled gray image
constexpr int kConvFilters = 8;      // 3x3 filters, stride 2
constexpr int kConvOut = 7;          // (16 - 3) / 2 + 1
constexpr int kConvFeatures = kConvFilters * kConvOut * kConvOut;
constexpr double kLogTauMin = -6.907755278982137;  // ln 1e-3
constexpr double kLogTauMax = 2.302585092994046;   // ln 10

float seeded_gaussian(Rng& rng, double scale) {
  return static_cast<float>(rng.gaussian() * scale);
}

void l2_normalize(std::vector<float>& v) {
  double n2 = 0.0;
  for (float x : v) n2 += double(x) * x;
  if (n2 <= 0.0) {
    if (!v.empty()) v[0] = 1.0f;
    return;
  }
  const float inv = static_cast<float>(1.0 / std::sqrt(n2));
  for (float& x : v) x *= inv;
}

}  // namespace

// Offsets of each trainable tensor inside the flat parameter vector.
struct StackLayout {
  int h, df, de;
  std::size_t w1, b1, w2, b2, w3, b3;
  std::size_t ht, bt, hi, bi, hp, bp;
  std::size_t log_tau;
  std::size_t total;

  explicit StackLayout(const EncoderConfig& c)
      : h(c.point_hidden), df(c.feature_dim), de(c.embed_dim) {
    std::size_t off = 0;
    auto take = [&off](std::size_t n) {
      const std::size_t at = off;
      off += n;
      return at;
    };
    w1 = take(std::size_t(h) * 3);
    b1 = take(h);
    w2 = take(std::size_t(h) * h);
    b2 = take(h);
    w3 = take(std::size_t(df) * h);
    b3 = take(df);
    ht = take(std::size_t(de) * df);
    bt = take(de);
    hi = take(std::size_t(de) * df);
    bi = take(de);
    hp = take(std::size_t(de) * df);
    bp = take(de);
    log_tau = take(1);
    total = off;
  }
};

EncoderStack::EncoderStack(const EncoderConfig& config) : config_(config) {
  if (config.feature_dim < 1 || config.embed_dim < 1 ||
      config.point_hidden < 1 || config.point_subsample < 1) {
    throw Error(ErrorCode::InvalidArgument, "encoder dims must be positive",
                "trainer");
  }
  if (config.tau_init <= 0.0) {
    throw Error(ErrorCode::NonPositiveTemperature,
                "tau_init must be positive", "trainer");
  }
  const StackLayout lay(config);
  params_.assign(lay.total, 0.0f);
  decay_mask_.assign(lay.total, 0.0f);

  Rng init(hash_combine(config.seed, "trainable"));
  auto fill = [&](std::size_t off, std::size_t rows, std::size_t cols) {
    const double scale = 1.0 / std::sqrt(double(cols));
    for (std::size_t i = 0; i < rows * cols; ++i) {
      params_[off + i] = seeded_gaussian(init, scale);
      decay_mask_[off + i] = 1.0f;
    }
  };
  fill(lay.w1, lay.h, 3);
  fill(lay.w2, lay.h, lay.h);
  fill(lay.w3, lay.df, lay.h);
  fill(lay.ht, lay.de, lay.df);
  fill(lay.hi, lay.de, lay.df);
  fill(lay.hp, lay.de, lay.df);
  params_[lay.log_tau] = static_cast<float>(std::log(config.tau_init));

  Rng ftext(hash_combine(config.seed, "frozen-text"));
  frozen_text_proj_.resize(std::size_t(lay.df) * kTextBuckets);
  for (float& w : frozen_text_proj_) {
    w = seeded_gaussian(ftext, 1.0 / std::sqrt(double(kTextBuckets)));
  }
  Rng fimg(hash_combine(config.seed, "frozen-image"));
  frozen_image_conv_.resize(std::size_t(kConvFilters) * 9 +
                            std::size_t(lay.df) * kConvFeatures);
  for (std::size_t i = 0; i < std::size_t(kConvFilters) * 9; ++i) {
    frozen_image_conv_[i] = seeded_gaussian(fimg, 1.0 / 3.0);
  }
  for (std::size_t i = std::size_t(kConvFilters) * 9;
       i < frozen_image_conv_.size(); ++i) {
    frozen_image_conv_[i] =
        seeded_gaussian(fimg, 1.0 / std::sqrt(double(kConvFeatures)));
  }
}

std::vector<float> EncoderStack::text_features(const std::string& text) const {
  std::vector<float> bag(kTextBuckets, 0.0f);
  const auto tokens = filtering::normalize_tokens(text);
  for (const std::string& tok : tokens) {
    bag[hash_combine(0x9e3779b97f4a7c15ull, tok) % kTextBuckets] += 1.0f;
  }
  if (!tokens.empty()) {
    kernels::scale(1.0f / float(tokens.size()), bag.data(), bag.size());
  }
  std::vector<float> feat(config_.feature_dim, 0.0f);
  kernels::matmul_acc(frozen_text_proj_.data(), bag.data(), feat.data(),
                      config_.feature_dim, kTextBuckets, 1);
  l2_normalize(feat);
  return feat;
}

std::vector<float> EncoderStack::image_features(const RenderedView& view) const {
  // Average-pool the green channel (renders are gray) to kImageSide^2 in
  // [0,1], then one fixed random conv layer + ReLU + random projection.
  std::vector<float> img(std::size_t(kImageSide) * kImageSide, 0.0f);
  const int W = view.width, H = view.height;
  if (W < 1 || H < 1 || view.pixels.size() < std::size_t(W) * H * 3) {
    throw Error(ErrorCode::InvalidArgument, "malformed view", "trainer");
  }
  std::vector<int> counts(img.size(), 0);
  for (int y = 0; y < H; ++y) {
    const int cy = std::min(kImageSide - 1, y * kImageSide / H);
    for (int x = 0; x < W; ++x) {
      const int cx = std::min(kImageSide - 1, x * kImageSide / W);
      img[std::size_t(cy) * kImageSide + cx] +=
          float(view.pixels[(std::size_t(y) * W + x) * 3 + 1]) / 255.0f;
      ++counts[std::size_t(cy) * kImageSide + cx];
    }
  }
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (counts[i] > 0) img[i] /= float(counts[i]);
  }

  std::vector<float> conv(kConvFeatures, 0.0f);
  for (int f = 0; f < kConvFilters; ++f) {
    const float* k = frozen_image_conv_.data() + std::size_t(f) * 9;
    for (int oy = 0; oy < kConvOut; ++oy) {
      for (int ox = 0; ox < kConvOut; ++ox) {
        float acc = 0.0f;
        for (int ky = 0; ky < 3; ++ky) {
          for (int kx = 0; kx < 3; ++kx) {
            acc += k[ky * 3 + kx] *
                   img[std::size_t(oy * 2 + ky) * kImageSide + (ox * 2 + kx)];
          }
        }
        conv[(std::size_t(f) * kConvOut + oy) * kConvOut + ox] =
            std::max(0.0f, acc);
      }
    }
  }
  std::vector<float> feat(config_.feature_dim, 0.0f);
  kernels::matmul_acc(frozen_image_conv_.data() + std::size_t(kConvFilters) * 9,
                      conv.data(), feat.data(), config_.feature_dim,
                      kConvFeatures, 1);
  l2_normalize(feat);
  return feat;
}

namespace {

// Forward pass of the point tower with everything backward needs.
struct PointForward {
  int m = 0;                 // points
  std::vector<float> x;      // 3 x m, row-major
  std::vector<float> h1;     // h x m, post-ReLU
  std::vector<float> h2;     // h x m, post-ReLU
  std::vector<int> argmax;   // h, pooled column per row
  std::vector<float> pooled; // h
  std::vector<float> feat;   // df, post-ReLU
};

PointForward point_forward(const StackLayout& lay, const std::vector<float>& p,
                           const std::vector<float>& points) {
  PointForward f;
  f.m = int(points.size() / 3);
  if (f.m < 1) {
    throw Error(ErrorCode::EmptyCloud, "point tower needs at least one point",
                "trainer");
  }
  const int m = f.m, h = lay.h, df = lay.df;
  f.x.resize(std::size_t(3) * m);
  for (int c = 0; c < m; ++c) {
    for (int r = 0; r < 3; ++r) f.x[std::size_t(r) * m + c] = points[3 * c + r];
  }
  f.h1.assign(std::size_t(h) * m, 0.0f);
  kernels::matmul_acc(p.data() + lay.w1, f.x.data(), f.h1.data(), h, 3, m);
  for (int r = 0; r < h; ++r) {
    const float b = p[lay.b1 + r];
    float* row = f.h1.data() + std::size_t(r) * m;
    for (int c = 0; c < m; ++c) row[c] = std::max(0.0f, row[c] + b);
  }
  f.h2.assign(std::size_t(h) * m, 0.0f);
  kernels::matmul_acc(p.data() + lay.w2, f.h1.data(), f.h2.data(), h, h, m);
  f.argmax.resize(h);
  f.pooled.resize(h);
  for (int r = 0; r < h; ++r) {
    const float b = p[lay.b2 + r];
    float* row = f.h2.data() + std::size_t(r) * m;
    int best = 0;
    for (int c = 0; c < m; ++c) {
      row[c] = std::max(0.0f, row[c] + b);
      if (row[c] > row[best]) best = c;
    }
    f.argmax[r] = best;
    f.pooled[r] = row[best];
  }
  f.feat.assign(df, 0.0f);
  kernels::matmul_acc(p.data() + lay.w3, f.pooled.data(), f.feat.data(), df,
                      lay.h, 1);
  for (int r = 0; r < df; ++r) {
    f.feat[r] = std::max(0.0f, f.feat[r] + p[lay.b3 + r]);
  }
  return f;
}

// Affine head + L2 normalization. Returns the pre-normalization norm.
double head_forward(const StackLayout& lay, const std::vector<float>& p,
                    std::size_t w_off, std::size_t b_off,
                    const float* feat, float* out) {
  const int de = lay.de, df = lay.df;
  std::fill(out, out + de, 0.0f);
  kernels::matmul_acc(p.data() + w_off, feat, out, de, df, 1);
  double n2 = 0.0;
  for (int r = 0; r < de; ++r) {
    out[r] += p[b_off + r];
    n2 += double(out[r]) * out[r];
  }
  double n = std::sqrt(n2);
  if (n <= 0.0) {
    out[0] = 1.0f;
    n = 1.0;
  } else {
    const float inv = float(1.0 / n);
    for (int r = 0; r < de; ++r) out[r] *= inv;
  }
  return n;
}

// Gradient through normalization: d/du of u/||u|| applied to g.
void normalize_backward(const float* unit, const float* g, double norm, int n,
                        std::vector<float>& du) {
  double gdot = 0.0;
  for (int i = 0; i < n; ++i) gdot += double(g[i]) * unit[i];
  du.resize(n);
  for (int i = 0; i < n; ++i) {
    du[i] = float((double(g[i]) - gdot * unit[i]) / norm);
  }
}

// du (de) into head grads and (optionally) the feature grad.
void head_backward(const StackLayout& lay, const std::vector<float>& p,
                   std::size_t w_off, std::size_t b_off,
                   const std::vector<float>& du, const float* feat,
                   std::vector<float>& grads, std::vector<float>* d_feat) {
  const int de = lay.de, df = lay.df;
  for (int r = 0; r < de; ++r) {
    grads[b_off + r] += du[r];
    kernels::axpy(du[r], feat, grads.data() + w_off + std::size_t(r) * df, df);
  }
  if (d_feat) {
    d_feat->assign(df, 0.0f);
    for (int r = 0; r < de; ++r) {
      kernels::axpy(du[r], p.data() + w_off + std::size_t(r) * df,
                    d_feat->data(), df);
    }
  }
}

// d_feat (df) back through the point tower into grads.
void point_backward(const StackLayout& lay, const std::vector<float>& p,
                    const PointForward& f, const std::vector<float>& d_feat,
                    std::vector<float>& grads) {
  const int h = lay.h, df = lay.df, m = f.m;
  std::vector<float> dz(df);
  for (int r = 0; r < df; ++r) {
    dz[r] = f.feat[r] > 0.0f ? d_feat[r] : 0.0f;
    grads[lay.b3 + r] += dz[r];
    kernels::axpy(dz[r], f.pooled.data(),
                  grads.data() + lay.w3 + std::size_t(r) * h, h);
  }
  std::vector<float> dg(h, 0.0f);
  for (int r = 0; r < df; ++r) {
    if (dz[r] != 0.0f) {
      kernels::axpy(dz[r], p.data() + lay.w3 + std::size_t(r) * h, dg.data(),
                    h);
    }
  }
  // Max-pool routes each row's gradient to its argmax column; collect the
  // sparse dH1 contributions per column before the dense W1 update.
  std::map<int, std::vector<float>> dh1_cols;
  for (int r = 0; r < h; ++r) {
    const int c = f.argmax[r];
    if (dg[r] == 0.0f || f.h2[std::size_t(r) * m + c] <= 0.0f) continue;
    const float v = dg[r];
    grads[lay.b2 + r] += v;
    for (int j = 0; j < lay.h; ++j) {
      grads[lay.w2 + std::size_t(r) * h + j] +=
          v * f.h1[std::size_t(j) * m + c];
    }
    auto& col = dh1_cols.try_emplace(c, std::vector<float>(h, 0.0f)).first->second;
    kernels::axpy(v, p.data() + lay.w2 + std::size_t(r) * h, col.data(), h);
  }
  for (const auto& [c, col] : dh1_cols) {
    for (int j = 0; j < h; ++j) {
      if (col[j] == 0.0f || f.h1[std::size_t(j) * m + c] <= 0.0f) continue;
      grads[lay.b1 + j] += col[j];
      for (int r = 0; r < 3; ++r) {
        grads[lay.w1 + std::size_t(j) * 3 + r] +=
            col[j] * f.x[std::size_t(r) * m + c];
      }
    }
  }
}

}  // namespace

std::vector<float> EncoderStack::point_features(
    const std::vector<float>& points) const {
  const StackLayout lay(config_);
  return point_forward(lay, params_, points).feat;
}

std::vector<float> EncoderStack::project_text(
    const std::vector<float>& feat) const {
  const StackLayout lay(config_);
  std::vector<float> out(lay.de);
  head_forward(lay, params_, lay.ht, lay.bt, feat.data(), out.data());
  return out;
}

std::vector<float> EncoderStack::project_image(
    const std::vector<float>& feat) const {
  const StackLayout lay(config_);
  std::vector<float> out(lay.de);
  head_forward(lay, params_, lay.hi, lay.bi, feat.data(), out.data());
  return out;
}

std::vector<float> EncoderStack::project_point(
    const std::vector<float>& feat) const {
  const StackLayout lay(config_);
  std::vector<float> out(lay.de);
  head_forward(lay, params_, lay.hp, lay.bp, feat.data(), out.data());
  return out;
}

double EncoderStack::temperature() const {
  const StackLayout lay(config_);
  return std::exp(double(params_[lay.log_tau]));
}

namespace trainer {

std::vector<float> subsample_points(const std::vector<float>& points, int limit,
                                    std::uint64_t seed,
                                    const std::string& tag) {
  const int n = int(points.size() / 3);
  if (n <= limit) return points;
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(hash_combine(hash_combine(seed, "subsample"), tag));
  std::vector<float> out;
  out.reserve(std::size_t(limit) * 3);
  for (int i = 0; i < limit; ++i) {
    std::swap(idx[i], idx[i + int(rng.below(std::uint64_t(n - i)))]);
    out.insert(out.end(), points.begin() + std::size_t(idx[i]) * 3,
               points.begin() + std::size_t(idx[i]) * 3 + 3);
  }
  return out;
}

Embeddings embed(const std::vector<TripletSample>& batch,
                 const EncoderStack& stack,
                 const std::vector<int>& view_choice) {
  if (batch.empty()) {
    throw Error(ErrorCode::EmptyDataset, "embed needs a non-empty batch",
                "trainer");
  }
  const EncoderConfig& cfg = stack.config();
  Embeddings e;
  e.rows = int(batch.size());
  e.dim = cfg.embed_dim;
  e.text.resize(std::size_t(e.rows) * e.dim);
  e.image.resize(std::size_t(e.rows) * e.dim);
  e.point.resize(std::size_t(e.rows) * e.dim);
  for (int i = 0; i < e.rows; ++i) {
    const TripletSample& s = batch[i];
    const int view = view_choice.empty() ? 0 : view_choice[i];
    if (s.views.empty() || view < 0 || view >= int(s.views.size())) {
      throw Error(ErrorCode::MissingViews,
                  "sample '" + s.sample_id + "' lacks the selected view",
                  "trainer");
    }
    auto ht = stack.project_text(stack.text_features(s.text));
    auto hi = stack.project_image(stack.image_features(s.views[view]));
    auto pts = subsample_points(s.cloud.points, cfg.point_subsample, cfg.seed,
                                s.sample_id);
    auto hp = stack.project_point(stack.point_features(pts));
    std::copy(ht.begin(), ht.end(), e.text.begin() + std::size_t(i) * e.dim);
    std::copy(hi.begin(), hi.end(), e.image.begin() + std::size_t(i) * e.dim);
    std::copy(hp.begin(), hp.end(), e.point.begin() + std::size_t(i) * e.dim);
  }
  return e;
}

LossResult contrastive_loss(const Embeddings& h, double tau,
                            const std::vector<ModalityPair>& pair_set) {
  if (tau <= 0.0) {
    throw Error(ErrorCode::NonPositiveTemperature,
                "temperature must be positive", "trainer");
  }
  if (pair_set.empty()) {
    throw Error(ErrorCode::InvalidArgument, "pair_set must be non-empty",
                "trainer");
  }
  const int N = h.rows, d = h.dim;
  if (N < 1) {
    throw Error(ErrorCode::EmptyDataset, "empty batch", "trainer");
  }
  LossResult res;
  res.d_text.assign(std::size_t(N) * d, 0.0f);
  res.d_image.assign(std::size_t(N) * d, 0.0f);
  res.d_point.assign(std::size_t(N) * d, 0.0f);

  const double w = 1.0 / (2.0 * N);
  for (ModalityPair pair : pair_set) {
    const float* A = nullptr;
    const float* B = nullptr;
    float* dA = nullptr;
    float* dB = nullptr;
    switch (pair) {
      case ModalityPair::ImageText:
        A = h.image.data(); B = h.text.data();
        dA = res.d_image.data(); dB = res.d_text.data();
        break;
      case ModalityPair::PointImage:
        A = h.point.data(); B = h.image.data();
        dA = res.d_point.data(); dB = res.d_image.data();
        break;
      case ModalityPair::PointText:
        A = h.point.data(); B = h.text.data();
        dA = res.d_point.data(); dB = res.d_text.data();
        break;
    }
    // Logits S_ij = a_i . b_j / tau, in doubles for a stable softmax.
    std::vector<double> S(std::size_t(N) * N);
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        S[std::size_t(i) * N + j] =
            double(kernels::dot(A + std::size_t(i) * d,
                                B + std::size_t(j) * d, d)) / tau;
      }
    }
    std::vector<double> G(std::size_t(N) * N, 0.0);  // dL/dS
    for (int i = 0; i < N; ++i) {
      // Row direction: softmax over j of S_ij.
      double mx = S[std::size_t(i) * N];
      for (int j = 1; j < N; ++j) mx = std::max(mx, S[std::size_t(i) * N + j]);
      double z = 0.0;
      for (int j = 0; j < N; ++j) z += std::exp(S[std::size_t(i) * N + j] - mx);
      res.loss -= w * (S[std::size_t(i) * N + i] - mx - std::log(z));
      for (int j = 0; j < N; ++j) {
        G[std::size_t(i) * N + j] +=
            w * (std::exp(S[std::size_t(i) * N + j] - mx) / z -
                 (i == j ? 1.0 : 0.0));
      }
      // Column direction: softmax over k of S_ki.
      mx = S[std::size_t(0) * N + i];
      for (int k = 1; k < N; ++k) mx = std::max(mx, S[std::size_t(k) * N + i]);
      z = 0.0;
      for (int k = 0; k < N; ++k) z += std::exp(S[std::size_t(k) * N + i] - mx);
      res.loss -= w * (S[std::size_t(i) * N + i] - mx - std::log(z));
      for (int k = 0; k < N; ++k) {
        G[std::size_t(k) * N + i] +=
            w * (std::exp(S[std::size_t(k) * N + i] - mx) / z -
                 (k == i ? 1.0 : 0.0));
      }
    }
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        const double g = G[std::size_t(i) * N + j];
        if (g == 0.0) continue;
        kernels::axpy(float(g / tau), B + std::size_t(j) * d,
                      dA + std::size_t(i) * d, d);
        kernels::axpy(float(g / tau), A + std::size_t(i) * d,
                      dB + std::size_t(j) * d, d);
        // S = u/tau with tau = exp(s): dS/ds = -S.
        res.d_log_tau -= g * S[std::size_t(i) * N + j];
      }
    }
  }
  return res;
}

double loss_and_param_gradient(const std::vector<TripletSample>& batch,
                               const EncoderStack& stack,
                               const std::vector<ModalityPair>& pair_set,
                               std::vector<float>& grads,
                               const std::vector<int>& view_choice) {
  if (batch.empty()) {
    throw Error(ErrorCode::EmptyDataset, "empty batch", "trainer");
  }
  const StackLayout lay(stack.config());
  const std::vector<float>& params = stack.parameters();
  const int bs = int(batch.size());
  const int de = lay.de;

  Embeddings h;
  h.rows = bs;
  h.dim = de;
  h.text.resize(std::size_t(bs) * de);
  h.image.resize(std::size_t(bs) * de);
  h.point.resize(std::size_t(bs) * de);
  std::vector<PointForward> pf(bs);
  std::vector<std::vector<float>> text_feat(bs), image_feat(bs);
  std::vector<double> norm_t(bs), norm_i(bs), norm_p(bs);
  for (int b = 0; b < bs; ++b) {
    const TripletSample& s = batch[b];
    const int view = view_choice.empty() ? 0 : view_choice[b];
    if (s.views.empty() || view < 0 || view >= int(s.views.size())) {
      throw Error(ErrorCode::MissingViews,
                  "sample '" + s.sample_id + "' lacks the selected view",
                  "trainer");
    }
    text_feat[b] = stack.text_features(s.text);
    image_feat[b] = stack.image_features(s.views[view]);
    const auto pts =
        subsample_points(s.cloud.points, stack.config().point_subsample,
                         stack.config().seed, s.sample_id);
    norm_t[b] = head_forward(lay, params, lay.ht, lay.bt, text_feat[b].data(),
                             h.text.data() + std::size_t(b) * de);
    norm_i[b] = head_forward(lay, params, lay.hi, lay.bi, image_feat[b].data(),
                             h.image.data() + std::size_t(b) * de);
    pf[b] = point_forward(lay, params, pts);
    norm_p[b] = head_forward(lay, params, lay.hp, lay.bp, pf[b].feat.data(),
                             h.point.data() + std::size_t(b) * de);
  }

  const double tau = std::exp(double(params[lay.log_tau]));
  LossResult lres = contrastive_loss(h, tau, pair_set);

  grads.assign(lay.total, 0.0f);
  grads[lay.log_tau] = float(lres.d_log_tau);
  std::vector<float> du, d_feat;
  for (int b = 0; b < bs; ++b) {
    normalize_backward(h.text.data() + std::size_t(b) * de,
                       lres.d_text.data() + std::size_t(b) * de, norm_t[b], de,
                       du);
    head_backward(lay, params, lay.ht, lay.bt, du, text_feat[b].data(), grads,
                  nullptr);
    normalize_backward(h.image.data() + std::size_t(b) * de,
                       lres.d_image.data() + std::size_t(b) * de, norm_i[b],
                       de, du);
    head_backward(lay, params, lay.hi, lay.bi, du, image_feat[b].data(), grads,
                  nullptr);
    normalize_backward(h.point.data() + std::size_t(b) * de,
                       lres.d_point.data() + std::size_t(b) * de, norm_p[b],
                       de, du);
    head_backward(lay, params, lay.hp, lay.bp, du, pf[b].feat.data(), grads,
                  &d_feat);
    point_backward(lay, params, pf[b], d_feat, grads);
  }
  return lres.loss;
}

namespace {

struct LoadedSample {
  std::string sample_id;
  int class_label = 0;
  SampleSource source = SampleSource::Real;
  std::string text;
  std::vector<float> points;                   // subsampled
  std::vector<float> text_feat;                // d_f
  std::vector<std::vector<float>> view_feats;  // per view, d_f
};

std::vector<LoadedSample> load_samples(const DatasetManifest& manifest,
                                       const EncoderStack& stack) {
  std::vector<LoadedSample> out;
  out.reserve(manifest.records.size());
  for (const SampleRecord& rec : manifest.records) {
    LoadedSample s;
    s.sample_id = rec.sample_id;
    s.class_label = rec.class_label;
    s.source = rec.source;
    s.text = rec.class_text;
    PointCloud pc = geometry::read_point_cloud(rec.pc_path);
    s.points = subsample_points(pc.points, stack.config().point_subsample,
                                stack.config().seed, rec.sample_id);
    s.text_feat = stack.text_features(s.text);
    for (const std::string& vp : rec.view_paths) {
      s.view_feats.push_back(stack.image_features(renderer::read_ppm(vp)));
    }
    if (s.view_feats.empty()) {
      throw Error(ErrorCode::MissingViews,
                  "sample '" + rec.sample_id + "' has no views", "trainer");
    }
    out.push_back(std::move(s));
  }
  return out;
}

double epoch_lr(const TrainConfig& cfg, int epoch) {
  const double eff = cfg.base_lr * cfg.batch_size / 256.0;
  if (cfg.warmup_epochs > 0 && epoch < cfg.warmup_epochs) {
    return eff * double(epoch + 1) / cfg.warmup_epochs;
  }
  const int decay_span = std::max(1, cfg.epochs - cfg.warmup_epochs);
  const double t = double(epoch - cfg.warmup_epochs) / decay_span;
  return eff * 0.5 * (1.0 + std::cos(M_PI * t));
}

}  // anonymous namespace

FitResult fit(const DatasetManifest& train, const TrainConfig& config,
              EncoderStack& stack) {
  if (train.records.empty()) {
    throw Error(ErrorCode::EmptyDataset, "training manifest is empty",
                "trainer");
  }
  if (config.pair_set.empty()) {
    throw Error(ErrorCode::InvalidArgument, "pair_set must be non-empty",
                "trainer");
  }
  if (config.epochs < 1 || config.batch_size < 2) {
    throw Error(ErrorCode::InvalidArgument,
                "epochs must be >= 1 and batch_size >= 2", "trainer");
  }
  const StackLayout lay(stack.config());
  std::vector<float>& params = stack.parameters();
  const std::vector<float>& decay = stack.decay_mask();
  params[lay.log_tau] = float(std::log(config.tau_init));

  auto samples = load_samples(train, stack);
  const int n = int(samples.size());
  const int de = lay.de;

  std::vector<double> adam_m(lay.total, 0.0), adam_v(lay.total, 0.0);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  long step = 0;

  FitResult result;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = epoch_lr(config, epoch);
    Rng shuffle_rng(hash_combine(hash_combine(config.seed, "epoch"),
                                 std::uint64_t(epoch)));
    for (int i = n; i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(std::uint64_t(i))]);
    }
    Rng view_rng(hash_combine(hash_combine(config.seed, "views"),
                              std::uint64_t(epoch)));
    std::vector<int> view_of(n);
    for (int i = 0; i < n; ++i) {
      view_of[i] = int(view_rng.below(samples[i].view_feats.size()));
    }

    double loss_sum = 0.0;
    int batches = 0;
    for (int start = 0; start < n; start += config.batch_size) {
      const int bs = std::min(config.batch_size, n - start);
      if (bs < 2) break;  // a single sample contributes no contrastive term

      // Forward all three towers for the batch.
      Embeddings h;
      h.rows = bs;
      h.dim = de;
      h.text.resize(std::size_t(bs) * de);
      h.image.resize(std::size_t(bs) * de);
      h.point.resize(std::size_t(bs) * de);
      std::vector<PointForward> pf(bs);
      std::vector<double> norm_t(bs), norm_i(bs), norm_p(bs);
      for (int b = 0; b < bs; ++b) {
        const LoadedSample& s = samples[order[start + b]];
        norm_t[b] = head_forward(lay, params, lay.ht, lay.bt,
                                 s.text_feat.data(),
                                 h.text.data() + std::size_t(b) * de);
        norm_i[b] = head_forward(lay, params, lay.hi, lay.bi,
                                 s.view_feats[view_of[order[start + b]]].data(),
                                 h.image.data() + std::size_t(b) * de);
        pf[b] = point_forward(lay, params, s.points);
        norm_p[b] = head_forward(lay, params, lay.hp, lay.bp,
                                 pf[b].feat.data(),
                                 h.point.data() + std::size_t(b) * de);
      }

      const double tau =
          std::exp(double(params[lay.log_tau]));
      LossResult lres = contrastive_loss(h, tau, config.pair_set);
      loss_sum += lres.loss;
      ++batches;

      std::vector<float> grads(lay.total, 0.0f);
      grads[lay.log_tau] = float(lres.d_log_tau);
      std::vector<float> du, d_feat;
      for (int b = 0; b < bs; ++b) {
        const LoadedSample& s = samples[order[start + b]];
        normalize_backward(h.text.data() + std::size_t(b) * de,
                           lres.d_text.data() + std::size_t(b) * de,
                           norm_t[b], de, du);
        head_backward(lay, params, lay.ht, lay.bt, du, s.text_feat.data(),
                      grads, nullptr);
        normalize_backward(h.image.data() + std::size_t(b) * de,
                           lres.d_image.data() + std::size_t(b) * de,
                           norm_i[b], de, du);
        head_backward(lay, params, lay.hi, lay.bi, du,
                      s.view_feats[view_of[order[start + b]]].data(), grads,
                      nullptr);
        normalize_backward(h.point.data() + std::size_t(b) * de,
                           lres.d_point.data() + std::size_t(b) * de,
                           norm_p[b], de, du);
        head_backward(lay, params, lay.hp, lay.bp, du, pf[b].feat.data(),
                      grads, &d_feat);
        point_backward(lay, params, pf[b], d_feat, grads);
      }

      // AdamW: decoupled decay on weight matrices only.
      ++step;
      const double bc1 = 1.0 - std::pow(kBeta1, double(step));
      const double bc2 = 1.0 - std::pow(kBeta2, double(step));
      for (std::size_t i = 0; i < lay.total; ++i) {
        const double g = grads[i];
        adam_m[i] = kBeta1 * adam_m[i] + (1.0 - kBeta1) * g;
        adam_v[i] = kBeta2 * adam_v[i] + (1.0 - kBeta2) * g * g;
        const double update = (adam_m[i] / bc1) /
                              (std::sqrt(adam_v[i] / bc2) + kEps);
        params[i] = float(double(params[i]) -
                          lr * (update + config.weight_decay *
                                             double(decay[i]) *
                                             double(params[i])));
      }
      params[lay.log_tau] = float(std::clamp(double(params[lay.log_tau]),
                                             kLogTauMin, kLogTauMax));
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr;
    stats.mean_loss = batches > 0 ? loss_sum / batches : 0.0;
    stats.tau = std::exp(double(params[lay.log_tau]));
    result.trace.push_back(stats);
  }
  return result;
}

void write_loss_trace(const FitResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path, "trainer");
  out << "epoch,lr,mean_loss,tau\n";
  char buf[160];
  for (const EpochStats& e : result.trace) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g\n", e.epoch, e.lr,
                  e.mean_loss, e.tau);
    out << buf;
  }
}

std::vector<EmbeddingRow> export_embeddings(const DatasetManifest& manifest,
                                            const EncoderStack& stack) {
  std::vector<EmbeddingRow> rows;
  rows.reserve(manifest.records.size());
  for (const SampleRecord& rec : manifest.records) {
    EmbeddingRow row;
    row.sample_id = rec.sample_id;
    row.class_label = rec.class_label;
    row.source = rec.source;
    PointCloud pc = geometry::read_point_cloud(rec.pc_path);
    auto pts = subsample_points(pc.points, stack.config().point_subsample,
                                stack.config().seed, rec.sample_id);
    row.h_point = stack.project_point(stack.point_features(pts));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_embeddings_csv(const std::vector<EmbeddingRow>& rows,
                          const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path, "trainer");
  out << "sample_id,class_label,source,embedding\n";
  char buf[32];
  for (const EmbeddingRow& r : rows) {
    out << r.sample_id << ',' << r.class_label << ','
        << (r.source == SampleSource::Real ? "real" : "synthetic");
    for (float v : r.h_point) {
      std::snprintf(buf, sizeof buf, ",%.9g", double(v));
      out << buf;
    }
    out << '\n';
  }
}

namespace {
constexpr char kCheckpointMagic[8] = {'T', 'E', 'G', 'A', 'C', 'K', '0', '1'};
}

void save_checkpoint(const EncoderStack& stack, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path, "trainer");
  out.write(kCheckpointMagic, 8);
  const EncoderConfig& c = stack.config();
  auto put_i32 = [&out](std::int32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
  };
  put_i32(c.feature_dim);
  put_i32(c.embed_dim);
  put_i32(c.point_hidden);
  put_i32(c.point_subsample);
  out.write(reinterpret_cast<const char*>(&c.tau_init), 8);
  out.write(reinterpret_cast<const char*>(&c.seed), 8);
  const auto& p = stack.parameters();
  put_i32(std::int32_t(p.size()));
  out.write(reinterpret_cast<const char*>(p.data()),
            std::streamsize(p.size() * 4));
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path, "trainer");
}

EncoderStack load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path, "trainer");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw Error(ErrorCode::ParseError, "not a checkpoint: " + path, "trainer");
  }
  EncoderConfig c;
  auto get_i32 = [&in]() {
    std::int32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  c.feature_dim = get_i32();
  c.embed_dim = get_i32();
  c.point_hidden = get_i32();
  c.point_subsample = get_i32();
  in.read(reinterpret_cast<char*>(&c.tau_init), 8);
  in.read(reinterpret_cast<char*>(&c.seed), 8);
  const std::int32_t count = get_i32();
  if (!in || c.feature_dim < 1 || c.embed_dim < 1 || c.point_hidden < 1) {
    throw Error(ErrorCode::ParseError, "corrupt checkpoint header: " + path,
                "trainer");
  }
  EncoderStack stack(c);
  if (count != std::int32_t(stack.parameters().size())) {
    throw Error(ErrorCode::SchemaViolation,
                "checkpoint parameter count disagrees with dims: " + path,
                "trainer");
  }
  in.read(reinterpret_cast<char*>(stack.parameters().data()),
          std::streamsize(std::size_t(count) * 4));
  if (!in) {
    throw Error(ErrorCode::ParseError, "truncated checkpoint: " + path,
                "trainer");
  }
  return stack;
}

}  // namespace trainer
}  // namespace tega
