#include "unlearnkit/unlearn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace unlearnkit {

UnlearnConfig UnlearnConfig::defaults_for(ForgetMode mode) {
  UnlearnConfig c;
  c.learning_rate = mode == ForgetMode::full_class ? 1e-3 : 1e-4;
  return c;
}

double unlearn_loss(const ProbVector& t_s, const ProbVector& t_d, const ProbVector& s, int l_u) {
  if (l_u != 0 && l_u != 1) throw ArgumentError("unlearn_loss: l_u must be 0 or 1");
  if (t_s.size() != s.size() || t_d.size() != s.size()) {
    throw ShapeError("unlearn_loss: dimension mismatch");
  }
  // The selector picks exactly one term; the other teacher is never read.
  return l_u == 1 ? kl_divergence(t_d, s) : kl_divergence(t_s, s);
}

double unlearn_batch_loss(const Matrix& targets, const Matrix& logits, double temperature) {
  if (targets.rows() != logits.rows() || targets.cols() != logits.cols()) {
    throw ShapeError("unlearn_batch_loss: target/logit shape mismatch");
  }
  if (targets.rows() == 0) throw ArgumentError("unlearn_batch_loss: empty batch");
  const Matrix probs = softmax_rows(logits, temperature);
  double total = 0.0;
  for (Eigen::Index r = 0; r < targets.rows(); ++r) {
    total += kl_divergence(targets.row(r).transpose(), probs.row(r).transpose());
  }
  return total / static_cast<double>(targets.rows());
}

Matrix unlearn_batch_logit_grad(const Matrix& targets, const Matrix& logits, double temperature) {
  if (targets.rows() != logits.rows() || targets.cols() != logits.cols()) {
    throw ShapeError("unlearn_batch_logit_grad: target/logit shape mismatch");
  }
  const Matrix probs = softmax_rows(logits, temperature);
  return (probs - targets) / (static_cast<double>(targets.rows()) * temperature);
}

namespace {

struct StepLoop {
  std::vector<double> loss_trace;
  double seconds = 0.0;
};

// Shared descent loop: minibatch Adam on (inputs, targets) rows under the
// selective-distillation head. Targets may be refreshed per epoch.
StepLoop descend(Net& net, const Matrix& inputs,
                 const std::function<Matrix(int epoch)>& targets_for_epoch,
                 const UnlearnConfig& config) {
  StepLoop out;
  const auto t0 = std::chrono::steady_clock::now();
  AdamOptimizer opt(config.learning_rate);
  std::mt19937_64 shuffle_rng(derive_seed(config.seed, "unlearn-shuffle"));
  auto params = net.params();
  const int n = static_cast<int>(inputs.rows());
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const Matrix targets = targets_for_epoch(epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (int start = 0; start < n; start += config.batch_size) {
      const int b = std::min(config.batch_size, n - start);
      Matrix xb(b, inputs.cols());
      Matrix tb(b, targets.cols());
      for (int r = 0; r < b; ++r) {
        const int src = order[static_cast<size_t>(start + r)];
        xb.row(r) = inputs.row(src);
        tb.row(r) = targets.row(src);
      }
      const Matrix logits = net.forward(xb);
      const double loss = unlearn_batch_loss(tb, logits, config.temperature);
      if (!std::isfinite(loss)) {
        throw TrainingDivergedError("unlearning loss is not finite; original model left intact");
      }
      net.zero_grads();
      net.backward(unlearn_batch_logit_grad(tb, logits, config.temperature));
      opt.step(params);
      out.loss_trace.push_back(loss);
    }
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

Matrix gather_rows(const LabeledDataset& dataset, const std::vector<int>& indices) {
  Matrix out(static_cast<Eigen::Index>(indices.size()), dataset.feature_dim());
  for (size_t r = 0; r < indices.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = dataset.samples.row(indices[r]);
  return out;
}

Matrix teacher_targets(const Teacher& competent, const Teacher& incompetent,
                       const UnlearningSet& uset, const Matrix& inputs,
                       const std::vector<int>& indices, double temperature) {
  // Split rows by unlearning label so each teacher sees one batched query.
  std::vector<int> forget_rows, retain_rows;
  for (size_t r = 0; r < uset.entries.size(); ++r) {
    (uset.entries[r].unlearning_label ? forget_rows : retain_rows).push_back(static_cast<int>(r));
  }
  Matrix targets(inputs.rows(), incompetent.class_count());
  auto fill = [&](const Teacher& teacher, const std::vector<int>& rows) {
    if (rows.empty()) return;
    Matrix sub(static_cast<Eigen::Index>(rows.size()), inputs.cols());
    std::vector<int> sub_idx(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
      sub.row(static_cast<Eigen::Index>(r)) = inputs.row(rows[r]);
      sub_idx[r] = indices[static_cast<size_t>(rows[r])];
    }
    const Matrix probs = teacher.predict_proba_at(sub, sub_idx, temperature);
    for (size_t r = 0; r < rows.size(); ++r) targets.row(rows[r]) = probs.row(static_cast<Eigen::Index>(r));
  };
  fill(incompetent, forget_rows);
  fill(competent, retain_rows);
  return targets;
}

}  // namespace

UnlearnResult run_unlearning(const ClassifierModel& original, const Teacher& competent,
                             const Teacher& incompetent, const UnlearningSet& uset,
                             const LabeledDataset& dataset, const UnlearnConfig& config,
                             const Partition* partition_for_resample) {
  if (incompetent.class_count() != original.class_count() ||
      competent.class_count() != original.class_count()) {
    throw SpecError("run_unlearning: teacher/student class_count mismatch");
  }
  if (uset.size() == 0) throw ArgumentError("run_unlearning: empty unlearning set");
  if (config.epochs < 0) throw SpecError("run_unlearning: epochs must be nonnegative");
  if (config.resample_retain_per_epoch && partition_for_resample == nullptr) {
    throw SpecError("run_unlearning: resampling needs the source partition");
  }

  UnlearnResult result{ClassifierModel(original), 0.0, {}, config, competent.variant(),
                       incompetent.variant(), "proposed"};
  if (config.epochs == 0) return result;

  // Work on a scratch copy so a diverged run leaves `result.student`
  // (== original) untouched.
  Net scratch = original.net();

  if (!config.resample_retain_per_epoch) {
    std::vector<int> indices;
    indices.reserve(uset.entries.size());
    for (const auto& e : uset.entries) indices.push_back(e.sample_index);
    const Matrix inputs = gather_rows(dataset, indices);
    // Frozen teachers, fixed set: targets are computed once up front.
    const Matrix targets =
        teacher_targets(competent, incompetent, uset, inputs, indices, config.temperature);
    auto loop = descend(scratch, inputs, [&](int) { return targets; }, config);
    result.loss_trace = std::move(loop.loss_trace);
    result.wall_clock_seconds = loop.seconds;
  } else {
    // Per-epoch resample draws a fresh retain subset; forget entries are
    // stable. The whole set (inputs + targets) is rebuilt per epoch, so we
    // run one-epoch loops back to back.
    const auto t0 = std::chrono::steady_clock::now();
    UnlearnConfig epoch_config = config;
    epoch_config.epochs = 1;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      const UnlearningSet eset = build_unlearning_set(
          *partition_for_resample, dataset, config.retain_fraction,
          derive_seed(config.seed, "resample-" + std::to_string(epoch)), config.stratified_retain);
      std::vector<int> indices;
      indices.reserve(eset.entries.size());
      for (const auto& e : eset.entries) indices.push_back(e.sample_index);
      const Matrix inputs = gather_rows(dataset, indices);
      const Matrix targets =
          teacher_targets(competent, incompetent, eset, inputs, indices, config.temperature);
      epoch_config.seed = derive_seed(config.seed, "epoch-" + std::to_string(epoch));
      auto loop = descend(scratch, inputs, [&](int) { return targets; }, epoch_config);
      result.loss_trace.insert(result.loss_trace.end(), loop.loss_trace.begin(),
                               loop.loss_trace.end());
    }
    result.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  result.student.net() = std::move(scratch);
  return result;
}

UnlearnResult amnesiac_baseline(const ClassifierModel& original, const Partition& partition,
                                const LabeledDataset& dataset, const UnlearnConfig& config) {
  partition.validate(dataset.size());
  const int c = original.class_count();

  const UnlearningSet uset =
      build_unlearning_set(partition, dataset, config.amnesiac_retain_fraction,
                           derive_seed(config.seed, "amnesiac-retain"), config.stratified_retain);
  std::vector<int> indices;
  indices.reserve(uset.entries.size());
  for (const auto& e : uset.entries) indices.push_back(e.sample_index);
  const Matrix inputs = gather_rows(dataset, indices);

  UnlearnResult result{ClassifierModel(original), 0.0, {}, config, TeacherVariant::competent,
                       TeacherVariant::random_generator, "amnesiac"};
  result.method = "amnesiac";
  if (config.epochs == 0) return result;

  Net scratch = original.net();
  std::mt19937_64 label_rng(derive_seed(config.seed, "amnesiac-labels"));

  // One-hot targets; forget rows are redrawn (excluding the true label)
  // every epoch.
  auto targets_for_epoch = [&](int) {
    Matrix targets = Matrix::Zero(inputs.rows(), c);
    for (size_t r = 0; r < uset.entries.size(); ++r) {
      const auto& e = uset.entries[r];
      const int truth = dataset.labels[static_cast<size_t>(e.sample_index)];
      int label = truth;
      if (e.unlearning_label == 1 && c > 1) {
        std::uniform_int_distribution<int> pick(0, c - 2);
        const int draw = pick(label_rng);
        label = draw >= truth ? draw + 1 : draw;
      }
      targets(static_cast<Eigen::Index>(r), label) = 1.0;
    }
    return targets;
  };

  auto loop = descend(scratch, inputs, targets_for_epoch, config);
  result.loss_trace = std::move(loop.loss_trace);
  result.wall_clock_seconds = loop.seconds;
  result.student.net() = std::move(scratch);
  return result;
}

std::vector<UnlearnResult> sequential_unlearn(const ClassifierModel& original,
                                              const std::vector<ForgetSpec>& specs,
                                              const LabeledDataset& dataset,
                                              const IncompetentTeacherFactory& teacher_factory,
                                              const UnlearnConfig& config) {
  if (specs.empty()) throw SpecError("sequential_unlearn: no forget requests");

  // Requests must target disjoint sample sets.
  std::set<int> already_forgotten;
  std::vector<Partition> parts;
  for (const auto& spec : specs) {
    Partition p = partition(dataset, spec, derive_seed(config.seed, "seq-" + spec.describe()));
    for (int i : p.forget_set) {
      if (!already_forgotten.insert(i).second) {
        throw SpecError("sequential_unlearn: overlapping forget requests (" + spec.describe() +
                        ")");
      }
    }
    parts.push_back(std::move(p));
  }

  std::vector<UnlearnResult> results;
  results.reserve(specs.size());
  const ClassifierModel* current = &original;
  std::set<int> forgotten_so_far;
  for (size_t k = 0; k < specs.size(); ++k) {
    // Remove everything forgotten by earlier requests from this D_r.
    Partition step = parts[k];
    if (k > 0) {
      std::vector<int> retain;
      retain.reserve(step.retain_set.size());
      for (int i : step.retain_set) {
        if (!forgotten_so_far.count(i)) retain.push_back(i);
      }
      step.retain_set = std::move(retain);
    }
    for (int i : step.forget_set) forgotten_so_far.insert(i);

    const UnlearningSet uset = build_unlearning_set(
        step, dataset, config.retain_fraction,
        derive_seed(config.seed, "seq-uset-" + std::to_string(k)), config.stratified_retain);

    const Teacher competent = make_competent(*current);
    const Teacher incompetent = teacher_factory(static_cast<int>(k));
    UnlearnConfig step_config = config;
    step_config.seed = derive_seed(config.seed, "seq-run-" + std::to_string(k));
    results.push_back(
        run_unlearning(*current, competent, incompetent, uset, dataset, step_config));
    current = &results.back().student;
  }
  return results;
}

}  // namespace unlearnkit
