#pragma once

#include "unlearnkit/teacher.hpp"

#include <filesystem>
#include <map>
#include <optional>

namespace unlearnkit {

struct ZrfScore {
  double value = 0.0;  // in [0, 1]
  int n_f = 0;
  TeacherVariant reference_teacher = TeacherVariant::random_init_same_arch;
};

// 1 - mean JS (base 2) between the model and the incompetent teacher over
// the forget view. Close to 1 means the model answers as randomly as the
// reference teacher on those samples.
ZrfScore zrf_score(const Predictor& model, const Teacher& incompetent, const DatasetView& view);

// The same score over a held-out test set; reported beside the forget-set
// value as the practical target instead of 1.0.
ZrfScore ideal_zrf_proxy(const Predictor& model, const Teacher& incompetent,
                         const LabeledDataset& test_set);

// Mean base-2 JS over the view between two models' predictions.
double js_to_gold(const Predictor& unlearned, const Predictor& gold, const DatasetView& view);

// Mean Euclidean distance between two models' probability outputs on the view.
double activation_distance_on(const Predictor& a, const Predictor& b, const DatasetView& view);

// ---------------------------------------------------------------- membership attack

// Logistic classifier over per-sample output features of a target model:
// sorted probability vector, prediction entropy, max confidence and
// true-class probability. Member = 1, nonmember = 0.
class AttackModel {
 public:
  AttackModel() = default;
  Vector membership_probabilities(const Predictor& target, const DatasetView& view) const;
  int feature_dim() const { return static_cast<int>(weights_.size()); }

  friend AttackModel train_attack_model(const Predictor&, const DatasetView&, const DatasetView&,
                                        uint64_t);

 private:
  Vector weights_;
  double bias_ = 0.0;
  Vector feature_mean_;
  Vector feature_std_;
};

AttackModel train_attack_model(const Predictor& target, const DatasetView& member_view,
                               const DatasetView& nonmember_view, uint64_t seed);

// Mean predicted membership probability over the view.
double mia_probability(const AttackModel& attack, const Predictor& target,
                       const DatasetView& view);

// ---------------------------------------------------------------- report

struct MetricsReport {
  std::string experiment_id;
  std::string dataset_tag;
  std::string architecture_id;
  std::string forget_mode;
  uint64_t master_seed = 0;

  // accuracy (percent)
  std::optional<double> acc_forget_original, acc_forget_gold, acc_forget_unlearned,
      acc_forget_amnesiac;
  std::optional<double> acc_retain_original, acc_retain_gold, acc_retain_unlearned,
      acc_retain_amnesiac;

  std::optional<double> zrf_original, zrf_gold, zrf_unlearned;
  std::optional<double> zrf_test_proxy;           // unlearned model on the test set
  std::optional<double> zrf_unlearned_reference;  // vs canonical random-init teacher

  std::optional<double> mia_original, mia_gold, mia_unlearned;
  std::optional<double> activation_distance;  // unlearned vs gold on D_f
  std::optional<double> js_to_gold;

  std::optional<double> seconds_train, seconds_gold, seconds_unlearn, seconds_amnesiac;

  void validate() const;  // range checks on all present fields
};

// Fixed CSV column order shared by the table emitter and its header.
const std::vector<std::string>& metrics_csv_columns();

std::string report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const std::string& text);
std::string report_csv_row(const MetricsReport& report);

void write_report_files(const MetricsReport& report, const std::filesystem::path& json_path,
                        const std::filesystem::path& csv_table_path);

}  // namespace unlearnkit
