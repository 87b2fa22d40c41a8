#include "unlearnkit/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace unlearnkit {

using nlohmann::json;

ZrfScore zrf_score(const Predictor& model, const Teacher& incompetent, const DatasetView& view) {
  if (view.size() == 0) throw ArgumentError("zrf_score: empty forget view");
  const Matrix x = view.gather_samples();
  const Matrix p_model = model.predict_proba(x, view.indices);
  const Matrix p_teacher = incompetent.predict_proba(x, view.indices);
  if (p_model.cols() != p_teacher.cols()) throw ShapeError("zrf_score: class_count mismatch");
  double js_sum = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    js_sum += js_divergence(p_model.row(r).transpose(), p_teacher.row(r).transpose());
  }
  ZrfScore score;
  score.n_f = view.size();
  score.value = 1.0 - js_sum / static_cast<double>(view.size());
  score.reference_teacher = incompetent.variant();
  return score;
}

ZrfScore ideal_zrf_proxy(const Predictor& model, const Teacher& incompetent,
                         const LabeledDataset& test_set) {
  return zrf_score(model, incompetent, view_all(test_set));
}

double js_to_gold(const Predictor& unlearned, const Predictor& gold, const DatasetView& view) {
  if (unlearned.class_count() != gold.class_count()) {
    throw ShapeError("js_to_gold: class_count mismatch");
  }
  if (view.size() == 0) throw ArgumentError("js_to_gold: empty view");
  const Matrix x = view.gather_samples();
  const Matrix a = unlearned.predict_proba(x, view.indices);
  const Matrix b = gold.predict_proba(x, view.indices);
  double total = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    total += js_divergence(a.row(r).transpose(), b.row(r).transpose());
  }
  return total / static_cast<double>(view.size());
}

double activation_distance_on(const Predictor& a, const Predictor& b, const DatasetView& view) {
  if (view.size() == 0) throw ArgumentError("activation_distance: empty view");
  const Matrix x = view.gather_samples();
  return activation_distance(a.predict_proba(x, view.indices), b.predict_proba(x, view.indices));
}

// ---------------------------------------------------------------- membership attack

namespace {

// Feature layout: [sorted probs desc (c), entropy, max confidence, true-class prob].
Matrix attack_features(const Predictor& target, const DatasetView& view) {
  const Matrix probs = target.predict_proba(view.gather_samples(), view.indices);
  const auto labels = view.gather_labels();
  const Eigen::Index c = probs.cols();
  Matrix feats(probs.rows(), c + 3);
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    std::vector<double> sorted(probs.row(r).data(), probs.row(r).data() + c);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    for (Eigen::Index k = 0; k < c; ++k) feats(r, k) = sorted[static_cast<size_t>(k)];
    feats(r, c) = entropy_nats(probs.row(r).transpose());
    feats(r, c + 1) = sorted[0];
    feats(r, c + 2) = probs(r, labels[static_cast<size_t>(r)]);
  }
  return feats;
}

}  // namespace

AttackModel train_attack_model(const Predictor& target, const DatasetView& member_view,
                               const DatasetView& nonmember_view, uint64_t seed) {
  if (member_view.size() == 0 || nonmember_view.size() == 0) {
    throw ArgumentError("train_attack_model: empty member or nonmember view");
  }

  // Balance by subsampling the larger side.
  std::mt19937_64 rng(derive_seed(seed, "attack-balance"));
  DatasetView members = member_view;
  DatasetView nonmembers = nonmember_view;
  const int keep = std::min(members.size(), nonmembers.size());
  auto trim = [&](DatasetView& v) {
    if (v.size() > keep) {
      std::shuffle(v.indices.begin(), v.indices.end(), rng);
      v.indices.resize(static_cast<size_t>(keep));
      std::sort(v.indices.begin(), v.indices.end());
    }
  };
  trim(members);
  trim(nonmembers);

  const Matrix f_member = attack_features(target, members);
  const Matrix f_nonmember = attack_features(target, nonmembers);
  const Eigen::Index dim = f_member.cols();
  const Eigen::Index n = f_member.rows() + f_nonmember.rows();

  Matrix x(n, dim);
  x.topRows(f_member.rows()) = f_member;
  x.bottomRows(f_nonmember.rows()) = f_nonmember;
  Vector y(n);
  y.head(f_member.rows()).setOnes();
  y.tail(f_nonmember.rows()).setZero();

  AttackModel attack;
  attack.feature_mean_ = x.colwise().mean();
  Vector var = (x.rowwise() - attack.feature_mean_.transpose()).array().square().colwise().mean();
  attack.feature_std_ = (var.array() + 1e-12).sqrt();
  Matrix xs = (x.rowwise() - attack.feature_mean_.transpose()).array().rowwise() /
              attack.feature_std_.transpose().array();

  // Full-batch logistic regression; the fixed step count keeps the fit
  // deterministic.
  Vector w = Vector::Zero(dim);
  double b = 0.0;
  const double lr = 0.1;
  const int iters = 400;
  for (int it = 0; it < iters; ++it) {
    Vector z = xs * w;
    z.array() += b;
    Vector p = 1.0 / (1.0 + (-z.array()).exp());
    Vector err = p - y;
    w -= lr * (xs.transpose() * err) / static_cast<double>(n);
    b -= lr * err.mean();
  }
  if (!w.allFinite() || !std::isfinite(b)) throw AttackError("attack fit diverged");
  {
    // Degenerate fit check: predictions must not collapse to a single class
    // when both labels are present.
    Vector z = xs * w;
    z.array() += b;
    const int pos = static_cast<int>((z.array() > 0.0).count());
    if (pos == 0 || pos == static_cast<int>(n)) {
      // A no-signal target legitimately yields ~0.5 everywhere; only a
      // hard single-class collapse with huge margins is an error.
      if (z.array().abs().minCoeff() > 5.0) {
        throw AttackError("attack fit collapsed to a single class");
      }
    }
  }
  attack.weights_ = w;
  attack.bias_ = b;
  return attack;
}

Vector AttackModel::membership_probabilities(const Predictor& target,
                                             const DatasetView& view) const {
  if (view.size() == 0) throw ArgumentError("attack: empty view");
  if (weights_.size() == 0) throw AttackError("attack model is untrained");
  const Matrix f = attack_features(target, view);
  if (f.cols() != weights_.size()) throw ShapeError("attack: feature dimension mismatch");
  Matrix fs = (f.rowwise() - feature_mean_.transpose()).array().rowwise() /
              feature_std_.transpose().array();
  Vector z = fs * weights_;
  z.array() += bias_;
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

double mia_probability(const AttackModel& attack, const Predictor& target,
                       const DatasetView& view) {
  return attack.membership_probabilities(target, view).mean();
}

// ---------------------------------------------------------------- report

namespace {

void check_range(const std::optional<double>& v, double lo, double hi, const char* name) {
  if (v && (!std::isfinite(*v) || *v < lo || *v > hi)) {
    throw ReportError(std::string("report field out of range: ") + name);
  }
}

double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

std::optional<double> rounded(const std::optional<double>& v, int decimals) {
  if (!v) return std::nullopt;
  return round_to(*v, decimals);
}

}  // namespace

void MetricsReport::validate() const {
  if (experiment_id.empty()) throw ReportError("report: experiment_id is mandatory");
  for (const auto* p : {&acc_forget_original, &acc_forget_gold, &acc_forget_unlearned,
                        &acc_forget_amnesiac, &acc_retain_original, &acc_retain_gold,
                        &acc_retain_unlearned, &acc_retain_amnesiac}) {
    check_range(*p, 0.0, 100.0, "accuracy");
  }
  for (const auto* p : {&zrf_original, &zrf_gold, &zrf_unlearned, &zrf_test_proxy,
                        &zrf_unlearned_reference}) {
    check_range(*p, 0.0, 1.0, "zrf");
  }
  for (const auto* p : {&mia_original, &mia_gold, &mia_unlearned}) {
    check_range(*p, 0.0, 1.0, "mia");
  }
  check_range(js_to_gold, 0.0, 1.0, "js_to_gold");
  check_range(activation_distance, 0.0, 2.0, "activation_distance");
  for (const auto* p : {&seconds_train, &seconds_gold, &seconds_unlearn, &seconds_amnesiac}) {
    if (*p && (!std::isfinite(**p) || **p < 0.0)) throw ReportError("report: negative wall clock");
  }
}

const std::vector<std::string>& metrics_csv_columns() {
  static const std::vector<std::string> cols = {
      "experiment_id", "dataset", "architecture", "forget_mode", "master_seed",
      "acc_forget_original", "acc_forget_gold", "acc_forget_unlearned", "acc_forget_amnesiac",
      "acc_retain_original", "acc_retain_gold", "acc_retain_unlearned", "acc_retain_amnesiac",
      "zrf_original", "zrf_gold", "zrf_unlearned", "zrf_test_proxy", "zrf_unlearned_reference",
      "mia_original", "mia_gold", "mia_unlearned", "activation_distance", "js_to_gold",
      "seconds_train", "seconds_gold", "seconds_unlearn", "seconds_amnesiac"};
  return cols;
}

namespace {

// Accuracies print with 2 decimals, divergences and probabilities with 3.
json report_to_json_obj(const MetricsReport& r) {
  auto put = [](json& j, const char* key, const std::optional<double>& v, int decimals) {
    if (v) j[key] = round_to(*v, decimals);
  };
  json j;
  j["experiment_id"] = r.experiment_id;
  j["dataset"] = r.dataset_tag;
  j["architecture"] = r.architecture_id;
  j["forget_mode"] = r.forget_mode;
  j["master_seed"] = r.master_seed;
  put(j, "acc_forget_original", r.acc_forget_original, 2);
  put(j, "acc_forget_gold", r.acc_forget_gold, 2);
  put(j, "acc_forget_unlearned", r.acc_forget_unlearned, 2);
  put(j, "acc_forget_amnesiac", r.acc_forget_amnesiac, 2);
  put(j, "acc_retain_original", r.acc_retain_original, 2);
  put(j, "acc_retain_gold", r.acc_retain_gold, 2);
  put(j, "acc_retain_unlearned", r.acc_retain_unlearned, 2);
  put(j, "acc_retain_amnesiac", r.acc_retain_amnesiac, 2);
  put(j, "zrf_original", r.zrf_original, 3);
  put(j, "zrf_gold", r.zrf_gold, 3);
  put(j, "zrf_unlearned", r.zrf_unlearned, 3);
  put(j, "zrf_test_proxy", r.zrf_test_proxy, 3);
  put(j, "zrf_unlearned_reference", r.zrf_unlearned_reference, 3);
  put(j, "mia_original", r.mia_original, 3);
  put(j, "mia_gold", r.mia_gold, 3);
  put(j, "mia_unlearned", r.mia_unlearned, 3);
  put(j, "activation_distance", r.activation_distance, 3);
  put(j, "js_to_gold", r.js_to_gold, 3);
  put(j, "seconds_train", r.seconds_train, 4);
  put(j, "seconds_gold", r.seconds_gold, 4);
  put(j, "seconds_unlearn", r.seconds_unlearn, 4);
  put(j, "seconds_amnesiac", r.seconds_amnesiac, 4);
  return j;
}

}  // namespace

std::string report_to_json(const MetricsReport& report) {
  report.validate();
  return report_to_json_obj(report).dump(2);
}

MetricsReport report_from_json(const std::string& text) {
  const json j = json::parse(text);
  MetricsReport r;
  r.experiment_id = j.at("experiment_id").get<std::string>();
  r.dataset_tag = j.value("dataset", "");
  r.architecture_id = j.value("architecture", "");
  r.forget_mode = j.value("forget_mode", "");
  r.master_seed = j.value("master_seed", uint64_t{0});
  auto get = [&](const char* key) -> std::optional<double> {
    if (j.contains(key)) return j.at(key).get<double>();
    return std::nullopt;
  };
  r.acc_forget_original = get("acc_forget_original");
  r.acc_forget_gold = get("acc_forget_gold");
  r.acc_forget_unlearned = get("acc_forget_unlearned");
  r.acc_forget_amnesiac = get("acc_forget_amnesiac");
  r.acc_retain_original = get("acc_retain_original");
  r.acc_retain_gold = get("acc_retain_gold");
  r.acc_retain_unlearned = get("acc_retain_unlearned");
  r.acc_retain_amnesiac = get("acc_retain_amnesiac");
  r.zrf_original = get("zrf_original");
  r.zrf_gold = get("zrf_gold");
  r.zrf_unlearned = get("zrf_unlearned");
  r.zrf_test_proxy = get("zrf_test_proxy");
  r.zrf_unlearned_reference = get("zrf_unlearned_reference");
  r.mia_original = get("mia_original");
  r.mia_gold = get("mia_gold");
  r.mia_unlearned = get("mia_unlearned");
  r.activation_distance = get("activation_distance");
  r.js_to_gold = get("js_to_gold");
  r.seconds_train = get("seconds_train");
  r.seconds_gold = get("seconds_gold");
  r.seconds_unlearn = get("seconds_unlearn");
  r.seconds_amnesiac = get("seconds_amnesiac");
  r.validate();
  return r;
}

std::string report_csv_row(const MetricsReport& r) {
  r.validate();
  auto cell = [](const std::optional<double>& v, int decimals) -> std::string {
    if (!v) return "";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, rounded(v, decimals).value());
    return buf;
  };
  std::vector<std::string> cells = {
      r.experiment_id, r.dataset_tag, r.architecture_id, r.forget_mode,
      std::to_string(r.master_seed),
      cell(r.acc_forget_original, 2), cell(r.acc_forget_gold, 2),
      cell(r.acc_forget_unlearned, 2), cell(r.acc_forget_amnesiac, 2),
      cell(r.acc_retain_original, 2), cell(r.acc_retain_gold, 2),
      cell(r.acc_retain_unlearned, 2), cell(r.acc_retain_amnesiac, 2),
      cell(r.zrf_original, 3), cell(r.zrf_gold, 3), cell(r.zrf_unlearned, 3),
      cell(r.zrf_test_proxy, 3), cell(r.zrf_unlearned_reference, 3),
      cell(r.mia_original, 3), cell(r.mia_gold, 3), cell(r.mia_unlearned, 3),
      cell(r.activation_distance, 3), cell(r.js_to_gold, 3),
      cell(r.seconds_train, 4), cell(r.seconds_gold, 4), cell(r.seconds_unlearn, 4),
      cell(r.seconds_amnesiac, 4)};
  std::string row;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) row += ",";
    row += cells[i];
  }
  return row;
}

void write_report_files(const MetricsReport& report, const std::filesystem::path& json_path,
                        const std::filesystem::path& csv_table_path) {
  {
    std::ofstream out(json_path);
    if (!out) throw IoError("cannot write " + json_path.string());
    out << report_to_json(report) << "\n";
  }
  const bool fresh = !std::filesystem::exists(csv_table_path);
  std::ofstream out(csv_table_path, std::ios::app);
  if (!out) throw IoError("cannot write " + csv_table_path.string());
  if (fresh) {
    const auto& cols = metrics_csv_columns();
    for (size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\n";
  }
  out << report_csv_row(report) << "\n";
}

}  // namespace unlearnkit
