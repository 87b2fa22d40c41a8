#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "unlearnkit/metrics.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace unlearnkit;
namespace fs = std::filesystem;

namespace {

// Test-only predictor answering a fixed probability row for every sample.
class ConstantPredictor final : public Predictor {
 public:
  explicit ConstantPredictor(Vector row) : row_(std::move(row)) {}
  Matrix predict_proba(const Matrix& batch, std::span<const int>) const override {
    Matrix out(batch.rows(), row_.size());
    for (Eigen::Index r = 0; r < batch.rows(); ++r) out.row(r) = row_.transpose();
    return out;
  }
  int class_count() const override { return static_cast<int>(row_.size()); }

 private:
  Vector row_;
};

// Teacher whose underlying model emits (numerically) one-hot outputs.
Teacher one_hot_teacher(int class_count, int hot) {
  ClassifierModel model(ArchitectureId::mlp_small, 4, class_count, 0);
  auto params = model.net().params();
  for (auto* p : params) p->value.setZero();
  params.back()->value(0, hot) = 60.0;  // softmax saturates to the hot class
  return Teacher::wrap_model(std::move(model), TeacherVariant::random_init_same_arch);
}

LabeledDataset tiny_dataset(int n = 20, int classes = 4) {
  return make_synthetic_dataset(classes, 1, n / classes, 4, 3.0, 5);
}

}  // namespace

TEST_CASE("zrf: model identical to the teacher scores 1") {
  const auto ds = tiny_dataset();
  TeacherSpec spec;
  spec.variant = TeacherVariant::random_init_same_arch;
  spec.seed = 3;
  const Teacher td = make_incompetent(spec, ArchitectureId::mlp_small, ds.feature_dim(),
                                      ds.class_count);
  const auto score = zrf_score(*td.model(), td, view_all(ds));
  CHECK(score.value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(score.n_f == ds.size());
}

TEST_CASE("zrf: complementary one-hots score 0") {
  const auto ds = tiny_dataset();
  Vector e0 = Vector::Zero(ds.class_count);
  e0[0] = 1.0;
  const ConstantPredictor model(e0);
  const Teacher td = one_hot_teacher(ds.class_count, 1);
  const auto score = zrf_score(model, td, view_all(ds));
  CHECK(score.value == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("zrf: bounded on random model/teacher pairs, empty view throws") {
  const auto ds = tiny_dataset();
  const Teacher td = Teacher::generator(ds.class_count, 0.3, 11);
  for (uint64_t s = 0; s < 8; ++s) {
    const ClassifierModel m(ArchitectureId::mlp_small, ds.feature_dim(), ds.class_count, s);
    const auto score = zrf_score(m, td, view_all(ds));
    CHECK(score.value >= 0.0);
    CHECK(score.value <= 1.0);
  }
  const ClassifierModel m(ArchitectureId::mlp_small, ds.feature_dim(), ds.class_count, 0);
  CHECK_THROWS_AS(zrf_score(m, td, view_of(ds, {})), ArgumentError);
}

TEST_CASE("ideal zrf proxy equals zrf over the same view by definition") {
  const auto ds = tiny_dataset();
  const Teacher td = Teacher::generator(ds.class_count, 0.1, 2);
  const ClassifierModel m(ArchitectureId::mlp_small, ds.feature_dim(), ds.class_count, 9);
  const auto direct = zrf_score(m, td, view_all(ds));
  const auto proxy = ideal_zrf_proxy(m, td, ds);
  CHECK(proxy.value == doctest::Approx(direct.value).epsilon(1e-12));
}

TEST_CASE("js_to_gold: identity is zero, values bounded by 1") {
  const auto ds = tiny_dataset();
  const ClassifierModel a(ArchitectureId::mlp_small, ds.feature_dim(), ds.class_count, 1);
  const ClassifierModel b(ArchitectureId::mlp_small, ds.feature_dim(), ds.class_count, 2);
  CHECK(js_to_gold(a, a, view_all(ds)) == doctest::Approx(0.0).epsilon(1e-12));
  const double v = js_to_gold(a, b, view_all(ds));
  CHECK(v >= 0.0);
  CHECK(v <= 1.0);
  const ClassifierModel c7(ArchitectureId::mlp_small, ds.feature_dim(), 7, 1);
  CHECK_THROWS_AS(js_to_gold(a, c7, view_all(ds)), ShapeError);
}

TEST_CASE("attack on a constant-output target has no signal") {
  const auto train = make_synthetic_dataset(4, 1, 40, 8, 2.0, 1);
  const auto test = make_synthetic_dataset(4, 1, 20, 8, 2.0, 1, SplitTag::test);
  const ConstantPredictor constant(Vector::Constant(4, 0.25));

  // member features == nonmember features except the true-class column,
  // which is also constant; the fit cannot separate anything
  const AttackModel attack = train_attack_model(constant, view_all(train), view_all(test), 3);
  const double p = mia_probability(attack, constant, view_all(train));
  CHECK(p > 0.35);
  CHECK(p < 0.65);
}

TEST_CASE("attack separates members for an overfit target") {
  // Overfit fixture: heavily overlapping clusters memorized by a wide net.
  const auto train = make_synthetic_dataset(4, 1, 100, 32, 1.6, 7);
  const auto test = make_synthetic_dataset(4, 1, 50, 32, 1.6, 7, SplitTag::test);
  TrainConfig tc;
  tc.epochs = 50;
  tc.batch_size = 64;
  tc.seed = 1;
  const auto target = train_classifier(train, ArchitectureId::mlp3, tc);
  CHECK(evaluate_accuracy(target, view_all(train)) > 95.0);
  CHECK(evaluate_accuracy(target, view_all(test)) < 85.0);

  // Hold out part of each pool to measure attack accuracy fairly.
  std::vector<int> member_fit, member_holdout, nonmember_fit, nonmember_holdout;
  for (int i = 0; i < train.size(); ++i) (i % 2 ? member_fit : member_holdout).push_back(i);
  for (int i = 0; i < test.size(); ++i) (i % 2 ? nonmember_fit : nonmember_holdout).push_back(i);
  const AttackModel attack = train_attack_model(target, view_of(train, member_fit),
                                                view_of(test, nonmember_fit), 5);
  const Vector member_probs =
      attack.membership_probabilities(target, view_of(train, member_holdout));
  const Vector nonmember_probs =
      attack.membership_probabilities(target, view_of(test, nonmember_holdout));
  int correct = 0;
  for (Eigen::Index i = 0; i < member_probs.size(); ++i) correct += member_probs[i] > 0.5;
  for (Eigen::Index i = 0; i < nonmember_probs.size(); ++i) correct += nonmember_probs[i] <= 0.5;
  const double acc =
      100.0 * correct / static_cast<double>(member_probs.size() + nonmember_probs.size());
  CHECK(acc > 60.0);
  CHECK(member_probs.mean() > nonmember_probs.mean());
}

TEST_CASE("attack determinism: same inputs, same decisions") {
  const auto train = make_synthetic_dataset(3, 1, 30, 8, 2.5, 2);
  const auto test = make_synthetic_dataset(3, 1, 15, 8, 2.5, 2, SplitTag::test);
  TrainConfig tc;
  tc.epochs = 15;
  tc.batch_size = 32;
  const auto target = train_classifier(train, ArchitectureId::mlp_small, tc);
  const AttackModel a = train_attack_model(target, view_all(train), view_all(test), 9);
  const AttackModel b = train_attack_model(target, view_all(train), view_all(test), 9);
  const Vector pa = a.membership_probabilities(target, view_all(train));
  const Vector pb = b.membership_probabilities(target, view_all(train));
  CHECK((pa - pb).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("report: validation, serialization round trip, csv schema") {
  MetricsReport r;
  r.experiment_id = "unit";
  r.dataset_tag = "synthetic";
  r.architecture_id = "mlp3";
  r.forget_mode = "full_class";
  r.master_seed = 7;
  r.acc_forget_original = 99.456;
  r.acc_retain_original = 98.1;
  r.zrf_unlearned = 0.87654;
  r.mia_unlearned = 0.123456;
  r.seconds_train = 1.25;

  const std::string json_text = report_to_json(r);
  const MetricsReport back = report_from_json(json_text);
  CHECK(back.experiment_id == "unit");
  CHECK(back.acc_forget_original == doctest::Approx(99.46));  // rounded to 2 decimals
  CHECK(back.zrf_unlearned == doctest::Approx(0.877));        // rounded to 3
  CHECK_FALSE(back.acc_forget_gold.has_value());              // partial report stays partial

  // csv row cells follow the documented column order
  const auto& cols = metrics_csv_columns();
  std::vector<std::string> cells;
  std::istringstream row(report_csv_row(r));
  std::string cell;
  while (std::getline(row, cell, ',')) cells.push_back(cell);
  // trailing empty cells are allowed to collapse; never more cells than columns
  CHECK(cells.size() <= cols.size());
  CHECK(cells[0] == "unit");
  REQUIRE(cols.size() == 27);
  CHECK(cols[5] == "acc_forget_original");
  CHECK(cells[5] == "99.46");
  CHECK(cols[15] == "zrf_unlearned");
  CHECK(cells[15] == "0.877");
}

TEST_CASE("report: out-of-range fields are rejected") {
  MetricsReport r;
  r.experiment_id = "bad";
  r.zrf_unlearned = 1.5;
  CHECK_THROWS_AS(report_to_json(r), ReportError);
  r.zrf_unlearned = 0.5;
  r.acc_forget_original = -2.0;
  CHECK_THROWS_AS(report_to_json(r), ReportError);
  r.acc_forget_original.reset();
  r.experiment_id.clear();
  CHECK_THROWS_AS(report_to_json(r), ReportError);
}

TEST_CASE("write_report_files appends csv rows with a single header") {
  MetricsReport r;
  r.experiment_id = "files";
  r.acc_forget_original = 50.0;
  const fs::path dir = fs::temp_directory_path() / "ulk_metrics_test";
  fs::create_directories(dir);
  const fs::path table = dir / "reports.csv";
  fs::remove(table);
  write_report_files(r, dir / "report.json", table);
  write_report_files(r, dir / "report.json", table);
  std::ifstream in(table);
  std::string line;
  int lines = 0, headers = 0;
  while (std::getline(in, line)) {
    ++lines;
    if (line.rfind("experiment_id", 0) == 0) ++headers;
  }
  CHECK(lines == 3);
  CHECK(headers == 1);
  fs::remove_all(dir);
}
