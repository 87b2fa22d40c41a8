#pragma once

#include "unlearnkit/model.hpp"

namespace unlearnkit {

enum class TeacherVariant {
  competent,
  random_init_same_arch,
  random_init_smaller,
  random_generator,
  partially_trained,
};

std::string to_string(TeacherVariant variant);
TeacherVariant teacher_variant_from_string(const std::string& name);

struct TeacherSpec {
  TeacherVariant variant = TeacherVariant::random_init_same_arch;
  std::optional<ArchitectureId> arch_override;
  double noise_sigma = 0.05;      // random_generator only
  int pt_epochs = 1;              // partially_trained only
  double pt_retain_fraction = 0.5;
  uint64_t seed = 0;
};

// A frozen teacher: either a wrapped classifier or a stateless random
// prediction generator. Predictions never change after construction.
class Teacher : public Predictor {
 public:
  static Teacher wrap_model(ClassifierModel model, TeacherVariant variant);
  static Teacher generator(int class_count, double noise_sigma, uint64_t seed);

  Matrix predict_proba(const Matrix& batch, std::span<const int> indices) const override;
  // Model-backed teachers apply the temperature to their logits; the
  // generator has no logits and returns its probabilities unchanged.
  Matrix predict_proba_at(const Matrix& batch, std::span<const int> indices,
                          double temperature) const;
  int class_count() const override;
  TeacherVariant variant() const { return variant_; }
  bool is_generator() const { return !model_.has_value(); }
  const ClassifierModel* model() const { return model_ ? &*model_ : nullptr; }
  // Parameter hash for model teachers, generator state hash otherwise;
  // stable across the teacher's lifetime (frozen contract).
  uint64_t state_hash() const;

 private:
  Teacher() = default;
  TeacherVariant variant_ = TeacherVariant::random_generator;
  std::optional<ClassifierModel> model_;
  int generator_classes_ = 0;
  double noise_sigma_ = 0.0;
  uint64_t seed_ = 0;
};

// Wrap the original trained model; predictions equal the original's.
Teacher make_competent(const ClassifierModel& original);

// Construct the requested incompetent-teacher variant. partially_trained
// needs training data and goes through make_partially_trained instead.
Teacher make_incompetent(const TeacherSpec& spec, ArchitectureId student_arch, int input_dim,
                         int class_count);

// Uniform vector plus i.i.d. Gaussian noise, clamped to a small floor and
// renormalized. Per-sample noise is keyed by (seed, sample index) so a
// sample always receives the same target within a run.
ProbVector random_prediction(int class_count, double noise_sigma, uint64_t seed,
                             int sample_index);

// Fresh model trained pt_epochs on a pt_retain_fraction slice of D_r only.
Teacher make_partially_trained(const Partition& partition, const LabeledDataset& dataset,
                               ArchitectureId arch, int pt_epochs, double pt_retain_fraction,
                               uint64_t seed, const TrainConfig& base_config = {});

}  // namespace unlearnkit
