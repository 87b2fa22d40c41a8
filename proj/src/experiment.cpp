#include "unlearnkit/experiment.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

namespace unlearnkit {

namespace fs = std::filesystem;
using nlohmann::json;

std::string DatasetSource::tag() const {
  if (kind == Kind::directory) return directory.filename().string();
  std::ostringstream os;
  os << "synthetic_c" << synthetic.class_count << "s" << synthetic.subclasses_per_class << "n"
     << synthetic.samples_per_subclass << "d" << synthetic.feature_dim << "sep"
     << synthetic.cluster_separation;
  return os.str();
}

void ExperimentConfig::validate() const {
  if (experiment_id.empty()) throw SpecError("experiment: experiment_id must not be empty");
  if (train.epochs < 0 || unlearn.epochs < 0) throw SpecError("experiment: negative epochs");
  if (train.learning_rate <= 0 || unlearn.learning_rate <= 0) {
    throw SpecError("experiment: learning rates must be positive");
  }
  if (unlearn.retain_fraction < 0 || unlearn.retain_fraction > 1) {
    throw SpecError("experiment: retain_fraction must be in [0, 1]");
  }
  if (dataset.kind == DatasetSource::Kind::directory && dataset.directory.empty()) {
    throw SpecError("experiment: dataset directory not set");
  }
}

uint64_t stage_seed(const ExperimentConfig& config, std::string_view stage) {
  return derive_seed(config.master_seed, stage);
}

// ---------------------------------------------------------------- config json

namespace {

ForgetSpec forget_spec_from_json(const json& j) {
  ForgetSpec spec;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "full_class") {
    spec.mode = ForgetMode::full_class;
    if (j.contains("class_ids")) {
      spec.class_ids = j.at("class_ids").get<std::vector<int>>();
    } else {
      spec.class_ids = {j.at("class_id").get<int>()};
    }
  } else if (mode == "subclass_within_superclass" || mode == "subclass") {
    spec.mode = ForgetMode::subclass_within_superclass;
    spec.superclass_id = j.at("superclass").get<int>();
    spec.subclass_id = j.at("subclass").get<int>();
  } else if (mode == "random_subset") {
    spec.mode = ForgetMode::random_subset;
    spec.sample_count = j.at("count").get<int>();
  } else {
    throw SpecError("forget spec: unknown mode " + mode);
  }
  return spec;
}

json forget_spec_to_json(const ForgetSpec& spec) {
  json j;
  switch (spec.mode) {
    case ForgetMode::full_class:
      j["mode"] = "full_class";
      j["class_ids"] = spec.class_ids;
      break;
    case ForgetMode::subclass_within_superclass:
      j["mode"] = "subclass_within_superclass";
      j["superclass"] = spec.superclass_id;
      j["subclass"] = spec.subclass_id;
      break;
    case ForgetMode::random_subset:
      j["mode"] = "random_subset";
      j["count"] = spec.sample_count;
      break;
  }
  return j;
}

std::string forget_mode_name(ForgetMode mode) {
  switch (mode) {
    case ForgetMode::full_class: return "full_class";
    case ForgetMode::subclass_within_superclass: return "subclass_within_superclass";
    case ForgetMode::random_subset: return "random_subset";
  }
  return "?";
}

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig c;
  c.experiment_id = j.value("experiment_id", c.experiment_id);
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    const std::string kind = d.value("type", "synthetic");
    if (kind == "synthetic") {
      c.dataset.kind = DatasetSource::Kind::synthetic;
      auto& s = c.dataset.synthetic;
      s.class_count = d.value("class_count", s.class_count);
      s.subclasses_per_class = d.value("subclasses_per_class", s.subclasses_per_class);
      s.samples_per_subclass = d.value("samples_per_subclass", s.samples_per_subclass);
      s.feature_dim = d.value("feature_dim", s.feature_dim);
      s.cluster_separation = d.value("cluster_separation", s.cluster_separation);
      s.subclass_spread = d.value("subclass_spread", s.subclass_spread);
      s.test_samples_per_subclass = d.value("test_samples_per_subclass", s.test_samples_per_subclass);
    } else if (kind == "dir" || kind == "directory") {
      c.dataset.kind = DatasetSource::Kind::directory;
      c.dataset.directory = d.at("path").get<std::string>();
    } else {
      throw SpecError("dataset source: unknown type " + kind);
    }
  }
  c.architecture = architecture_from_string(j.value("architecture", "mlp3"));
  if (j.contains("forget")) c.forget = forget_spec_from_json(j.at("forget"));
  if (j.contains("teacher")) {
    const auto& t = j.at("teacher");
    c.teacher.variant = teacher_variant_from_string(t.value("variant", "random_init_same_arch"));
    if (t.contains("arch_override")) {
      c.teacher.arch_override = architecture_from_string(t.at("arch_override").get<std::string>());
    }
    c.teacher.noise_sigma = t.value("noise_sigma", c.teacher.noise_sigma);
    c.teacher.pt_epochs = t.value("pt_epochs", c.teacher.pt_epochs);
    c.teacher.pt_retain_fraction = t.value("pt_retain_fraction", c.teacher.pt_retain_fraction);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
    c.train.epochs = t.value("epochs", c.train.epochs);
    c.train.batch_size = t.value("batch_size", c.train.batch_size);
    c.train.plateau_patience = t.value("plateau_patience", c.train.plateau_patience);
    c.train.plateau_factor = t.value("plateau_factor", c.train.plateau_factor);
  }
  c.unlearn = UnlearnConfig::defaults_for(c.forget.mode);
  if (j.contains("unlearn")) {
    const auto& u = j.at("unlearn");
    c.unlearn.learning_rate = u.value("learning_rate", c.unlearn.learning_rate);
    c.unlearn.epochs = u.value("epochs", c.unlearn.epochs);
    c.unlearn.retain_fraction = u.value("retain_fraction", c.unlearn.retain_fraction);
    c.unlearn.batch_size = u.value("batch_size", c.unlearn.batch_size);
    c.unlearn.temperature = u.value("temperature", c.unlearn.temperature);
    c.unlearn.resample_retain_per_epoch =
        u.value("resample_retain_per_epoch", c.unlearn.resample_retain_per_epoch);
    c.unlearn.stratified_retain = u.value("stratified_retain", c.unlearn.stratified_retain);
    c.unlearn.amnesiac_retain_fraction =
        u.value("amnesiac_retain_fraction", c.unlearn.amnesiac_retain_fraction);
  }
  if (j.contains("metrics")) {
    const auto& m = j.at("metrics");
    c.metrics.zrf = m.value("zrf", c.metrics.zrf);
    c.metrics.mia = m.value("mia", c.metrics.mia);
    c.metrics.activation_distance = m.value("activation_distance", c.metrics.activation_distance);
    c.metrics.js_to_gold = m.value("js_to_gold", c.metrics.js_to_gold);
    c.metrics.amnesiac = m.value("amnesiac", c.metrics.amnesiac);
  }
  c.output_dir = j.value("output_dir", c.output_dir.string());
  c.master_seed = j.value("master_seed", c.master_seed);
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return experiment_config_from_json(buf.str());
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment_id"] = c.experiment_id;
  if (c.dataset.kind == DatasetSource::Kind::synthetic) {
    const auto& s = c.dataset.synthetic;
    j["dataset"] = {{"type", "synthetic"},
                    {"class_count", s.class_count},
                    {"subclasses_per_class", s.subclasses_per_class},
                    {"samples_per_subclass", s.samples_per_subclass},
                    {"feature_dim", s.feature_dim},
                    {"cluster_separation", s.cluster_separation},
                    {"subclass_spread", s.subclass_spread},
                    {"test_samples_per_subclass", s.test_samples_per_subclass}};
  } else {
    j["dataset"] = {{"type", "dir"}, {"path", c.dataset.directory.string()}};
  }
  j["architecture"] = to_string(c.architecture);
  j["forget"] = forget_spec_to_json(c.forget);
  j["teacher"] = {{"variant", to_string(c.teacher.variant)},
                  {"noise_sigma", c.teacher.noise_sigma},
                  {"pt_epochs", c.teacher.pt_epochs},
                  {"pt_retain_fraction", c.teacher.pt_retain_fraction}};
  if (c.teacher.arch_override) j["teacher"]["arch_override"] = to_string(*c.teacher.arch_override);
  j["train"] = {{"learning_rate", c.train.learning_rate},
                {"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"plateau_patience", c.train.plateau_patience},
                {"plateau_factor", c.train.plateau_factor}};
  j["unlearn"] = {{"learning_rate", c.unlearn.learning_rate},
                  {"epochs", c.unlearn.epochs},
                  {"retain_fraction", c.unlearn.retain_fraction},
                  {"batch_size", c.unlearn.batch_size},
                  {"temperature", c.unlearn.temperature},
                  {"resample_retain_per_epoch", c.unlearn.resample_retain_per_epoch},
                  {"stratified_retain", c.unlearn.stratified_retain},
                  {"amnesiac_retain_fraction", c.unlearn.amnesiac_retain_fraction}};
  j["metrics"] = {{"zrf", c.metrics.zrf},
                  {"mia", c.metrics.mia},
                  {"activation_distance", c.metrics.activation_distance},
                  {"js_to_gold", c.metrics.js_to_gold},
                  {"amnesiac", c.metrics.amnesiac}};
  j["output_dir"] = c.output_dir.string();
  j["master_seed"] = c.master_seed;
  return j.dump(2);
}

// ---------------------------------------------------------------- run records

namespace {

void write_run_record(const fs::path& path, const UnlearnResult& result) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write run record " + path.string());
  json header = {{"event", "run_start"},
                 {"method", result.method},
                 {"competent", to_string(result.competent_variant)},
                 {"incompetent", to_string(result.incompetent_variant)},
                 {"learning_rate", result.config.learning_rate},
                 {"epochs", result.config.epochs},
                 {"retain_fraction", result.config.retain_fraction},
                 {"batch_size", result.config.batch_size},
                 {"temperature", result.config.temperature},
                 {"seed", result.config.seed}};
  out << header.dump() << "\n";
  for (size_t i = 0; i < result.loss_trace.size(); ++i) {
    out << json{{"event", "step"}, {"step", i}, {"loss", result.loss_trace[i]}}.dump() << "\n";
  }
  out << json{{"event", "run_complete"}, {"wall_clock_seconds", result.wall_clock_seconds}}.dump()
      << "\n";
}

struct LoadedData {
  LabeledDataset train;
  std::optional<LabeledDataset> test;
};

LoadedData acquire_dataset(const ExperimentConfig& config) {
  LoadedData data;
  const uint64_t seed = stage_seed(config, "dataset");
  if (config.dataset.kind == DatasetSource::Kind::synthetic) {
    const auto& s = config.dataset.synthetic;
    data.train = make_synthetic_dataset(s.class_count, s.subclasses_per_class,
                                        s.samples_per_subclass, s.feature_dim,
                                        s.cluster_separation, seed, SplitTag::train,
                                        s.subclass_spread);
    if (s.test_samples_per_subclass > 0) {
      data.test = make_synthetic_dataset(s.class_count, s.subclasses_per_class,
                                         s.test_samples_per_subclass, s.feature_dim,
                                         s.cluster_separation, seed, SplitTag::test,
                                         s.subclass_spread);
    }
  } else {
    data.train = load_dataset_dir(config.dataset.directory, SplitTag::train);
    if (dataset_dir_has_split(config.dataset.directory, SplitTag::test)) {
      data.test = load_dataset_dir(config.dataset.directory, SplitTag::test);
    }
  }
  return data;
}

template <typename Fn>
auto staged(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(std::string("stage=") + stage + ": " + e.what());
  }
}

}  // namespace

ExperimentArtifacts run_experiment(const ExperimentConfig& config) {
  config.validate();
  const fs::path run_dir = config.output_dir / config.experiment_id;
  fs::create_directories(run_dir);
  {
    std::ofstream out(run_dir / "config.json");
    out << experiment_config_to_json(config) << "\n";
  }

  const LoadedData data = staged("dataset", [&] { return acquire_dataset(config); });
  const std::string dataset_hash = hex64(data.train.content_hash());

  // Original model.
  TrainConfig train_cfg = config.train;
  train_cfg.seed = stage_seed(config, "train");
  const auto t_train0 = std::chrono::steady_clock::now();
  const ClassifierModel original = staged(
      "train", [&] { return train_classifier(data.train, config.architecture, train_cfg); });
  const double seconds_train =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_train0).count();
  save_checkpoint(original, run_dir / "original.ckpt",
                  {to_string(config.architecture), original.input_dim(), original.class_count(),
                   "original", dataset_hash, experiment_config_to_json(config)});

  // Partition and gold model.
  const Partition part = staged(
      "partition", [&] { return partition(data.train, config.forget, stage_seed(config, "sampling")); });
  TrainConfig gold_cfg = config.train;
  gold_cfg.seed = stage_seed(config, "gold");
  const auto t_gold0 = std::chrono::steady_clock::now();
  const ClassifierModel gold = staged(
      "gold", [&] { return retrain_gold(part, data.train, config.architecture, gold_cfg); });
  const double seconds_gold =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_gold0).count();
  save_checkpoint(gold, run_dir / "gold.ckpt",
                  {to_string(config.architecture), gold.input_dim(), gold.class_count(), "gold",
                   dataset_hash, experiment_config_to_json(config)});

  // Teachers.
  TeacherSpec teacher_spec = config.teacher;
  teacher_spec.seed = stage_seed(config, "teacher");
  const Teacher competent = make_competent(original);
  const Teacher incompetent = staged("teacher", [&] {
    if (teacher_spec.variant == TeacherVariant::partially_trained) {
      return make_partially_trained(part, data.train, config.architecture, teacher_spec.pt_epochs,
                                    teacher_spec.pt_retain_fraction, teacher_spec.seed,
                                    config.train);
    }
    return make_incompetent(teacher_spec, config.architecture, data.train.feature_dim(),
                            data.train.class_count);
  });
  if (const auto* m = incompetent.model()) {
    save_checkpoint(*m, run_dir / "teacher.ckpt",
                    {to_string(m->architecture()), m->input_dim(), m->class_count(), "teacher",
                     dataset_hash, experiment_config_to_json(config)});
  }

  // Unlearning run.
  UnlearnConfig unlearn_cfg = config.unlearn;
  unlearn_cfg.seed = stage_seed(config, "unlearn");
  const UnlearningSet uset = staged("unlearn", [&] {
    return build_unlearning_set(part, data.train, unlearn_cfg.retain_fraction,
                                derive_seed(unlearn_cfg.seed, "uset"),
                                unlearn_cfg.stratified_retain);
  });
  const UnlearnResult unlearned = staged("unlearn", [&] {
    return run_unlearning(original, competent, incompetent, uset, data.train, unlearn_cfg, &part);
  });
  save_checkpoint(unlearned.student, run_dir / "unlearned.ckpt",
                  {to_string(config.architecture), original.input_dim(), original.class_count(),
                   "unlearned", dataset_hash, experiment_config_to_json(config)});
  write_run_record(run_dir / "unlearn_run.jsonl", unlearned);

  // Amnesiac baseline, when toggled.
  std::optional<UnlearnResult> amnesiac;
  if (config.metrics.amnesiac) {
    UnlearnConfig am_cfg = unlearn_cfg;
    am_cfg.seed = stage_seed(config, "amnesiac");
    amnesiac = staged("amnesiac", [&] {
      return amnesiac_baseline(original, part, data.train, am_cfg);
    });
    save_checkpoint(amnesiac->student, run_dir / "amnesiac.ckpt",
                    {to_string(config.architecture), original.input_dim(), original.class_count(),
                     "unlearned", dataset_hash, experiment_config_to_json(config)});
    write_run_record(run_dir / "amnesiac_run.jsonl", *amnesiac);
  }

  // Metrics battery.
  MetricsReport report;
  report.experiment_id = config.experiment_id;
  report.dataset_tag = config.dataset.tag();
  report.architecture_id = to_string(config.architecture);
  report.forget_mode = forget_mode_name(config.forget.mode);
  report.master_seed = config.master_seed;
  report.seconds_train = seconds_train;
  report.seconds_gold = seconds_gold;
  report.seconds_unlearn = unlearned.wall_clock_seconds;
  if (amnesiac) report.seconds_amnesiac = amnesiac->wall_clock_seconds;

  staged("metrics", [&] {
    const DatasetView forget_view = view_of(data.train, part.forget_set);
    const DatasetView retain_view = view_of(data.train, part.retain_set);
    report.acc_forget_original = evaluate_accuracy(original, forget_view);
    report.acc_forget_gold = evaluate_accuracy(gold, forget_view);
    report.acc_forget_unlearned = evaluate_accuracy(unlearned.student, forget_view);
    report.acc_retain_original = evaluate_accuracy(original, retain_view);
    report.acc_retain_gold = evaluate_accuracy(gold, retain_view);
    report.acc_retain_unlearned = evaluate_accuracy(unlearned.student, retain_view);
    if (amnesiac) {
      report.acc_forget_amnesiac = evaluate_accuracy(amnesiac->student, forget_view);
      report.acc_retain_amnesiac = evaluate_accuracy(amnesiac->student, retain_view);
    }

    if (config.metrics.zrf) {
      report.zrf_original = zrf_score(original, incompetent, forget_view).value;
      report.zrf_gold = zrf_score(gold, incompetent, forget_view).value;
      report.zrf_unlearned = zrf_score(unlearned.student, incompetent, forget_view).value;
      if (data.test) {
        report.zrf_test_proxy = ideal_zrf_proxy(unlearned.student, incompetent, *data.test).value;
      }
      if (incompetent.variant() != TeacherVariant::random_init_same_arch) {
        // Canonical reference: random init of the student architecture.
        TeacherSpec ref;
        ref.variant = TeacherVariant::random_init_same_arch;
        ref.seed = stage_seed(config, "zrf-reference");
        const Teacher reference = make_incompetent(ref, config.architecture,
                                                   data.train.feature_dim(), data.train.class_count);
        report.zrf_unlearned_reference =
            zrf_score(unlearned.student, reference, forget_view).value;
      }
    }

    if (config.metrics.mia && data.test) {
      // Member pool: retain-train samples; nonmembers: the test split.
      const DatasetView nonmember_view = view_all(*data.test);
      const uint64_t attack_seed = stage_seed(config, "attack");
      auto attack_on = [&](const ClassifierModel& target) {
        const AttackModel attack =
            train_attack_model(target, retain_view, nonmember_view, attack_seed);
        return mia_probability(attack, target, forget_view);
      };
      report.mia_original = attack_on(original);
      report.mia_gold = attack_on(gold);
      report.mia_unlearned = attack_on(unlearned.student);
    }

    if (config.metrics.activation_distance) {
      report.activation_distance = activation_distance_on(unlearned.student, gold, forget_view);
    }
    if (config.metrics.js_to_gold) {
      report.js_to_gold = js_to_gold(unlearned.student, gold, forget_view);
    }
    return 0;
  });

  write_report_files(report, run_dir / "report.json", config.output_dir / "reports.csv");
  write_run_manifest(run_dir);
  return {std::move(report), run_dir};
}

// ---------------------------------------------------------------- sweep

SweepSpec sweep_spec_from_json(const std::string& text) {
  const json j = json::parse(text);
  SweepSpec spec;
  spec.base = experiment_config_from_json(j.at("base").dump());
  if (j.contains("epochs")) spec.epochs = j.at("epochs").get<std::vector<int>>();
  if (j.contains("retain_fractions")) {
    spec.retain_fractions = j.at("retain_fractions").get<std::vector<double>>();
  }
  if (j.contains("learning_rates")) {
    spec.learning_rates = j.at("learning_rates").get<std::vector<double>>();
  }
  if (j.contains("teacher_variants")) {
    for (const auto& name : j.at("teacher_variants")) {
      spec.teacher_variants.push_back(teacher_variant_from_string(name.get<std::string>()));
    }
  }
  spec.grid_cap = j.value("grid_cap", spec.grid_cap);
  return spec;
}

SweepSpec load_sweep_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sweep spec " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sweep_spec_from_json(buf.str());
}

std::vector<SweepPoint> run_sweep(const SweepSpec& spec) {
  auto epochs = spec.epochs.empty() ? std::vector<int>{spec.base.unlearn.epochs} : spec.epochs;
  auto fractions = spec.retain_fractions.empty()
                       ? std::vector<double>{spec.base.unlearn.retain_fraction}
                       : spec.retain_fractions;
  auto rates = spec.learning_rates.empty() ? std::vector<double>{spec.base.unlearn.learning_rate}
                                           : spec.learning_rates;
  auto variants = spec.teacher_variants.empty()
                      ? std::vector<TeacherVariant>{spec.base.teacher.variant}
                      : spec.teacher_variants;
  const size_t grid =
      epochs.size() * fractions.size() * rates.size() * variants.size();
  if (grid == 0) throw SpecError("sweep: empty grid");
  if (grid > static_cast<size_t>(spec.grid_cap)) {
    throw SpecError("sweep: grid size " + std::to_string(grid) + " exceeds cap " +
                    std::to_string(spec.grid_cap));
  }

  std::vector<SweepPoint> points;
  int index = 0;
  for (int e : epochs) {
    for (double f : fractions) {
      for (double lr : rates) {
        for (TeacherVariant v : variants) {
          ExperimentConfig c = spec.base;
          c.unlearn.epochs = e;
          c.unlearn.retain_fraction = f;
          c.unlearn.learning_rate = lr;
          c.teacher.variant = v;
          std::ostringstream id;
          id << spec.base.experiment_id << "_g" << index++;
          c.experiment_id = id.str();
          auto artifacts = run_experiment(c);
          points.push_back({e, f, lr, v, std::move(artifacts.report)});
        }
      }
    }
  }

  // Combined table keyed by grid coordinates.
  const fs::path table = spec.base.output_dir / (spec.base.experiment_id + "_sweep_table.csv");
  std::ofstream out(table);
  if (!out) throw IoError("cannot write " + table.string());
  out << "epochs,retain_fraction,learning_rate,teacher_variant,";
  const auto& cols = metrics_csv_columns();
  for (size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const auto& p : points) {
    out << p.epochs << "," << p.retain_fraction << "," << p.learning_rate << ","
        << to_string(p.teacher_variant) << "," << report_csv_row(p.report) << "\n";
  }
  return points;
}

// ---------------------------------------------------------------- timing

std::vector<TimingRow> timing_compare(const std::vector<std::string>& methods,
                                      const ExperimentConfig& config) {
  config.validate();
  const LoadedData data = acquire_dataset(config);

  TrainConfig train_cfg = config.train;
  train_cfg.seed = stage_seed(config, "train");
  const ClassifierModel original = train_classifier(data.train, config.architecture, train_cfg);
  const Partition part = partition(data.train, config.forget, stage_seed(config, "sampling"));

  UnlearnConfig unlearn_cfg = config.unlearn;
  unlearn_cfg.seed = stage_seed(config, "unlearn");
  const UnlearningSet uset =
      build_unlearning_set(part, data.train, unlearn_cfg.retain_fraction,
                           derive_seed(unlearn_cfg.seed, "uset"), unlearn_cfg.stratified_retain);

  double retrain_seconds = 0.0;
  std::vector<TimingRow> rows;
  for (const auto& method : methods) {
    double seconds = 0.0;
    if (method == "retrain") {
      TrainConfig gold_cfg = config.train;
      gold_cfg.seed = stage_seed(config, "gold");
      const auto t0 = std::chrono::steady_clock::now();
      (void)retrain_gold(part, data.train, config.architecture, gold_cfg);
      seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      retrain_seconds = seconds;
    } else if (method == "proposed" || method == "proposed_pt_teacher") {
      TeacherSpec spec = config.teacher;
      spec.seed = stage_seed(config, "teacher");
      const auto t0 = std::chrono::steady_clock::now();
      // Teacher construction counts toward the method's cost.
      const Teacher competent = make_competent(original);
      const Teacher incompetent =
          method == "proposed_pt_teacher"
              ? make_partially_trained(part, data.train, config.architecture, spec.pt_epochs,
                                       spec.pt_retain_fraction, spec.seed, config.train)
              : make_incompetent(spec, config.architecture, data.train.feature_dim(),
                                 data.train.class_count);
      (void)run_unlearning(original, competent, incompetent, uset, data.train, unlearn_cfg, &part);
      seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    } else if (method == "amnesiac") {
      UnlearnConfig am_cfg = unlearn_cfg;
      am_cfg.seed = stage_seed(config, "amnesiac");
      const auto t0 = std::chrono::steady_clock::now();
      (void)amnesiac_baseline(original, part, data.train, am_cfg);
      seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    } else {
      throw SpecError("timing: unknown method " + method);
    }
    rows.push_back({method, seconds, 1.0});
  }
  for (auto& row : rows) {
    row.ratio_vs_retrain = retrain_seconds > 0.0 ? row.seconds / retrain_seconds : 0.0;
    if (row.method == "retrain") row.ratio_vs_retrain = 1.0;
  }
  return rows;
}

void write_timing_csv(const std::vector<TimingRow>& rows, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "method,seconds,ratio_vs_retrain\n";
  for (const auto& r : rows) {
    out << r.method << "," << r.seconds << "," << r.ratio_vs_retrain << "\n";
  }
}

// ---------------------------------------------------------------- manifest

void write_run_manifest(const fs::path& run_dir) {
  json files = json::array();
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename() == "run_manifest.json") continue;
    paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    files.push_back({{"file", p.filename().string()},
                     {"bytes", bytes.size()},
                     {"fnv1a64", hex64(fnv1a64(bytes.data(), bytes.size()))}});
  }
  std::ofstream out(run_dir / "run_manifest.json");
  if (!out) throw IoError("cannot write manifest in " + run_dir.string());
  out << json{{"files", files}}.dump(2) << "\n";
}

}  // namespace unlearnkit
