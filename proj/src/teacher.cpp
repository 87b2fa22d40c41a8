#include "unlearnkit/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace unlearnkit {

std::string to_string(TeacherVariant variant) {
  switch (variant) {
    case TeacherVariant::competent: return "competent";
    case TeacherVariant::random_init_same_arch: return "random_init_same_arch";
    case TeacherVariant::random_init_smaller: return "random_init_smaller";
    case TeacherVariant::random_generator: return "random_generator";
    case TeacherVariant::partially_trained: return "partially_trained";
  }
  throw SpecError("unknown teacher variant");
}

TeacherVariant teacher_variant_from_string(const std::string& name) {
  if (name == "competent") return TeacherVariant::competent;
  if (name == "random_init_same_arch") return TeacherVariant::random_init_same_arch;
  if (name == "random_init_smaller") return TeacherVariant::random_init_smaller;
  if (name == "random_generator") return TeacherVariant::random_generator;
  if (name == "partially_trained") return TeacherVariant::partially_trained;
  throw SpecError("unknown teacher variant: " + name);
}

Teacher Teacher::wrap_model(ClassifierModel model, TeacherVariant variant) {
  Teacher t;
  t.variant_ = variant;
  t.model_ = std::move(model);
  return t;
}

Teacher Teacher::generator(int class_count, double noise_sigma, uint64_t seed) {
  if (class_count < 2) throw SpecError("generator teacher: class_count must be at least 2");
  if (noise_sigma < 0.0) throw SpecError("generator teacher: noise_sigma must be nonnegative");
  Teacher t;
  t.variant_ = TeacherVariant::random_generator;
  t.generator_classes_ = class_count;
  t.noise_sigma_ = noise_sigma;
  t.seed_ = seed;
  return t;
}

ProbVector random_prediction(int class_count, double noise_sigma, uint64_t seed,
                             int sample_index) {
  ProbVector p = ProbVector::Constant(class_count, 1.0 / class_count);
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<uint64_t>(sample_index) + 1)));
    std::normal_distribution<double> gauss(0.0, noise_sigma);
    for (int c = 0; c < class_count; ++c) p[c] += gauss(rng);
    p = p.cwiseMax(1e-12);
    p /= p.sum();
  }
  return p;
}

Matrix Teacher::predict_proba(const Matrix& batch, std::span<const int> indices) const {
  return predict_proba_at(batch, indices, 1.0);
}

Matrix Teacher::predict_proba_at(const Matrix& batch, std::span<const int> indices,
                                 double temperature) const {
  if (model_) {
    return softmax_rows(model_->predict_logits(batch), temperature);
  }
  if (indices.size() != static_cast<size_t>(batch.rows())) {
    throw ArgumentError("generator teacher: needs one sample index per batch row");
  }
  Matrix out(batch.rows(), generator_classes_);
  for (Eigen::Index r = 0; r < batch.rows(); ++r) {
    out.row(r) =
        random_prediction(generator_classes_, noise_sigma_, seed_, indices[static_cast<size_t>(r)])
            .transpose();
  }
  return out;
}

int Teacher::class_count() const {
  return model_ ? model_->class_count() : generator_classes_;
}

uint64_t Teacher::state_hash() const {
  if (model_) return model_->param_hash();
  uint64_t h = fnv1a64("generator");
  h = fnv1a64(&generator_classes_, sizeof(generator_classes_), h);
  h = fnv1a64(&noise_sigma_, sizeof(noise_sigma_), h);
  h = fnv1a64(&seed_, sizeof(seed_), h);
  return h;
}

Teacher make_competent(const ClassifierModel& original) {
  return Teacher::wrap_model(original, TeacherVariant::competent);
}

Teacher make_incompetent(const TeacherSpec& spec, ArchitectureId student_arch, int input_dim,
                         int class_count) {
  switch (spec.variant) {
    case TeacherVariant::random_init_same_arch: {
      const auto arch = spec.arch_override.value_or(student_arch);
      return Teacher::wrap_model(
          ClassifierModel(arch, input_dim, class_count, derive_seed(spec.seed, "teacher-init")),
          TeacherVariant::random_init_same_arch);
    }
    case TeacherVariant::random_init_smaller: {
      const auto arch = spec.arch_override.value_or(smaller_sibling(student_arch));
      return Teacher::wrap_model(
          ClassifierModel(arch, input_dim, class_count, derive_seed(spec.seed, "teacher-init")),
          TeacherVariant::random_init_smaller);
    }
    case TeacherVariant::random_generator:
      return Teacher::generator(class_count, spec.noise_sigma, spec.seed);
    case TeacherVariant::partially_trained:
      throw SpecError("partially_trained teachers are built via make_partially_trained");
    case TeacherVariant::competent:
      throw SpecError("competent teachers are built via make_competent");
  }
  throw SpecError("invalid teacher spec");
}

Teacher make_partially_trained(const Partition& partition, const LabeledDataset& dataset,
                               ArchitectureId arch, int pt_epochs, double pt_retain_fraction,
                               uint64_t seed, const TrainConfig& base_config) {
  if (pt_epochs < 1) throw SpecError("partially trained teacher: pt_epochs must be at least 1");
  if (!(pt_retain_fraction > 0.0) || pt_retain_fraction > 1.0) {
    throw SpecError("partially trained teacher: pt_retain_fraction must be in (0, 1]");
  }
  partition.validate(dataset.size());

  // Sample the training slice from retain indices only.
  std::vector<int> pool = partition.retain_set;
  std::mt19937_64 rng(derive_seed(seed, "pt-subset"));
  std::shuffle(pool.begin(), pool.end(), rng);
  const auto keep = static_cast<size_t>(
      std::max<long long>(1, std::llround(pt_retain_fraction * static_cast<double>(pool.size()))));
  pool.resize(std::min(keep, pool.size()));
  std::sort(pool.begin(), pool.end());

  TrainConfig config = base_config;
  config.epochs = pt_epochs;
  config.seed = derive_seed(seed, "pt-train");
  ClassifierModel model = train_classifier_view(view_of(dataset, std::move(pool)),
                                                dataset.class_count, arch, config);
  return Teacher::wrap_model(std::move(model), TeacherVariant::partially_trained);
}

}  // namespace unlearnkit
