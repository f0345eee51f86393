#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tega/datasetio.hpp"
#include "tega/generation.hpp"
#include "tega/renderer.hpp"

namespace tega {

/// Which modality pairs contribute contrastive terms.
enum class ModalityPair { ImageText, PointImage, PointText };

struct EncoderConfig {
  int feature_dim = 64;     // d_f, shared across towers
  int embed_dim = 32;       // d_e, shared embedding space
  int point_hidden = 64;    // width of the per-point perceptron
  int point_subsample = 512;
  double tau_init = 0.07;
  std::uint64_t seed = 0;   // frozen-tower weights and trainable init
};

/// Tri-modal encoder: frozen text/image feature providers, trainable
/// point-set encoder, per-modality projection heads, learnable temperature.
/// All trainable parameters live in one flat vector.
class EncoderStack {
 public:
  explicit EncoderStack(const EncoderConfig& config);

  const EncoderConfig& config() const { return config_; }

  // Frozen, deterministic maps to d_f-vectors; never receive gradients.
  std::vector<float> text_features(const std::string& text) const;
  std::vector<float> image_features(const RenderedView& view) const;

  // Trainable point tower: subsampled cloud coordinates (xyz interleaved,
  // already normalized) -> d_f feature.
  std::vector<float> point_features(const std::vector<float>& points) const;

  // Projection heads + L2 normalization: d_f feature -> unit d_e embedding.
  std::vector<float> project_text(const std::vector<float>& feat) const;
  std::vector<float> project_image(const std::vector<float>& feat) const;
  std::vector<float> project_point(const std::vector<float>& feat) const;

  double temperature() const;

  std::vector<float>& parameters() { return params_; }
  const std::vector<float>& parameters() const { return params_; }
  // 1.0 for entries that receive weight decay (weight matrices), else 0.0.
  const std::vector<float>& decay_mask() const { return decay_mask_; }

 private:
  friend struct StackLayout;
  EncoderConfig config_;
  std::vector<float> params_;
  std::vector<float> decay_mask_;
  std::vector<float> frozen_text_proj_;   // d_f x kTextBuckets
  std::vector<float> frozen_image_conv_;  // conv filters + projection
};

namespace trainer {

struct TrainConfig {
  std::vector<ModalityPair> pair_set = {ModalityPair::ImageText,
                                        ModalityPair::PointImage,
                                        ModalityPair::PointText};
  int epochs = 200;
  int warmup_epochs = 10;
  int batch_size = 64;
  double base_lr = 1e-3;
  double weight_decay = 0.05;
  std::uint64_t seed = 0;
  double tau_init = 0.07;
};

struct Embeddings {
  int rows = 0;
  int dim = 0;
  std::vector<float> text;   // rows x dim, row-major, unit rows
  std::vector<float> image;
  std::vector<float> point;
};

// Row i of each matrix corresponds to batch[i]; image rows use view
// `view_choice[i]` (or view 0 when view_choice is empty).
Embeddings embed(const std::vector<TripletSample>& batch,
                 const EncoderStack& stack,
                 const std::vector<int>& view_choice = {});

struct LossResult {
  double loss = 0.0;
  std::vector<float> d_text;   // dL/d h^T, rows x dim
  std::vector<float> d_image;
  std::vector<float> d_point;
  double d_log_tau = 0.0;      // dL/ds where tau = exp(s)
};

// L_All restricted to pair_set: -(1/2N) sum_i sum_pairs of both softmax
// directions. Throws NonPositiveTemperature.
LossResult contrastive_loss(const Embeddings& h, double tau,
                            const std::vector<ModalityPair>& pair_set);

// Loss of one batch plus the analytic gradient with respect to every entry
// of stack.parameters(), via the exact code path of a training step. Used by
// the finite-difference gradient checks.
double loss_and_param_gradient(const std::vector<TripletSample>& batch,
                               const EncoderStack& stack,
                               const std::vector<ModalityPair>& pair_set,
                               std::vector<float>& grads,
                               const std::vector<int>& view_choice = {});

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
  double tau = 0.0;
};

struct FitResult {
  std::vector<EpochStats> trace;
};

// Trains `stack` in place on the manifest's samples (clouds and views are
// read from the referenced paths). Single-threaded, bitwise-reproducible.
FitResult fit(const DatasetManifest& train, const TrainConfig& config,
              EncoderStack& stack);

void write_loss_trace(const FitResult& result, const std::string& path);

struct EmbeddingRow {
  std::string sample_id;
  int class_label = 0;
  SampleSource source = SampleSource::Real;
  std::vector<float> h_point;  // unit d_e vector
};

std::vector<EmbeddingRow> export_embeddings(const DatasetManifest& manifest,
                                            const EncoderStack& stack);
void write_embeddings_csv(const std::vector<EmbeddingRow>& rows,
                          const std::string& path);

// Versioned binary checkpoint: dims + all trainable parameters (f32 LE) +
// config echo. Load rejects mismatched dims.
void save_checkpoint(const EncoderStack& stack, const std::string& path);
EncoderStack load_checkpoint(const std::string& path);

// Deterministic subsample of up to `limit` points, seeded by `tag`.
std::vector<float> subsample_points(const std::vector<float>& points, int limit,
                                    std::uint64_t seed, const std::string& tag);

}  // namespace trainer
}  // namespace tega
