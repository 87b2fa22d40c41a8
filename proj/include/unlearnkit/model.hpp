#pragma once

#include "unlearnkit/dataset.hpp"
#include "unlearnkit/divergence.hpp"
#include "unlearnkit/net.hpp"

#include <filesystem>
#include <optional>

namespace unlearnkit {

// Reference architectures, sized for CPU-bound runs:
//   mlp3       d -> 128 -> 64 -> c        (tabular)
//   small_cnn  1-d convnet, 8/16 channels (pre-tensorized image rows)
//   lstm_seq   LSTM(h=32) over 8-wide steps, d must divide by 8
// The *_small variants drop one hidden stage and halve the width; they are
// used as reduced-capacity incompetent teachers.
enum class ArchitectureId { mlp3, small_cnn, lstm_seq, mlp_small, cnn_small, lstm_small };

std::string to_string(ArchitectureId arch);
ArchitectureId architecture_from_string(const std::string& name);
// The reduced sibling used by the `random_init_smaller` teacher variant.
ArchitectureId smaller_sibling(ArchitectureId arch);

inline constexpr int kLstmStepWidth = 8;

struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 50;
  int batch_size = 256;
  int plateau_patience = 10;
  double plateau_factor = 0.1;
  uint64_t seed = 0;
};

// Common surface for anything that can be asked for class probabilities.
// `indices` carries dataset positions so stateless generators can answer
// reproducibly; model-backed predictors ignore it.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual Matrix predict_proba(const Matrix& batch, std::span<const int> indices) const = 0;
  virtual int class_count() const = 0;
};

// A trainable probabilistic classifier with deterministic evaluation-mode
// prediction (the spec's ClassifierHandle).
class ClassifierModel : public Predictor {
 public:
  ClassifierModel(ArchitectureId arch, int input_dim, int class_count, uint64_t init_seed);

  Matrix predict_logits(const Matrix& batch) const;
  Matrix predict_proba(const Matrix& batch, std::span<const int> indices = {}) const override;
  int class_count() const override { return class_count_; }
  int input_dim() const { return input_dim_; }
  ArchitectureId architecture() const { return arch_; }
  uint64_t init_seed() const { return init_seed_; }
  uint64_t param_hash() const { return net_.param_hash(); }

  Net& net() { return net_; }
  const Net& net() const { return net_; }

 private:
  void check_batch(const Matrix& batch) const;
  ArchitectureId arch_;
  int input_dim_;
  int class_count_;
  uint64_t init_seed_;
  Net net_;
};

// Supervised cross-entropy training on the full dataset (the original
// model). Plateau schedule monitors the epoch-mean training loss.
ClassifierModel train_classifier(const LabeledDataset& dataset, ArchitectureId arch,
                                 const TrainConfig& config);

// Same procedure restricted to a view (used by gold retraining and the
// partially trained teacher); the forget rows are never materialized.
ClassifierModel train_classifier_view(const DatasetView& view, int class_count,
                                      ArchitectureId arch, const TrainConfig& config);

// Gold model: fresh initialization, trained on D_r only.
ClassifierModel retrain_gold(const Partition& partition, const LabeledDataset& dataset,
                             ArchitectureId arch, const TrainConfig& config);

Matrix predict_proba(const ClassifierModel& model, const Matrix& batch);

// 100 * argmax-match rate; argmax ties resolve to the lowest class index.
double evaluate_accuracy(const ClassifierModel& model, const DatasetView& view);
double accuracy_from_proba(const Matrix& probs, const std::vector<int>& labels);

// ---------------------------------------------------------------- checkpoints

struct CheckpointInfo {
  std::string architecture_id;
  int input_dim = 0;
  int class_count = 0;
  std::string role;  // original | gold | unlearned | teacher
  std::string dataset_hash;
  std::string config_json;  // provenance echo, free-form
};

void save_checkpoint(const ClassifierModel& model, const std::filesystem::path& path,
                     const CheckpointInfo& info);
std::pair<ClassifierModel, CheckpointInfo> load_checkpoint(const std::filesystem::path& path);

}  // namespace unlearnkit
