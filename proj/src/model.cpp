#include "unlearnkit/model.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace unlearnkit {

using nlohmann::json;

std::string to_string(ArchitectureId arch) {
  switch (arch) {
    case ArchitectureId::mlp3: return "mlp3";
    case ArchitectureId::small_cnn: return "small_cnn";
    case ArchitectureId::lstm_seq: return "lstm_seq";
    case ArchitectureId::mlp_small: return "mlp_small";
    case ArchitectureId::cnn_small: return "cnn_small";
    case ArchitectureId::lstm_small: return "lstm_small";
  }
  throw SpecError("unknown architecture id");
}

ArchitectureId architecture_from_string(const std::string& name) {
  if (name == "mlp3") return ArchitectureId::mlp3;
  if (name == "small_cnn") return ArchitectureId::small_cnn;
  if (name == "lstm_seq") return ArchitectureId::lstm_seq;
  if (name == "mlp_small") return ArchitectureId::mlp_small;
  if (name == "cnn_small") return ArchitectureId::cnn_small;
  if (name == "lstm_small") return ArchitectureId::lstm_small;
  throw SpecError("unknown architecture: " + name);
}

ArchitectureId smaller_sibling(ArchitectureId arch) {
  switch (arch) {
    case ArchitectureId::mlp3: return ArchitectureId::mlp_small;
    case ArchitectureId::small_cnn: return ArchitectureId::cnn_small;
    case ArchitectureId::lstm_seq: return ArchitectureId::lstm_small;
    default: return arch;  // already a reduced variant
  }
}

namespace {

Net build_net(ArchitectureId arch, int input_dim, int class_count, uint64_t seed) {
  if (input_dim < 1) throw ShapeError("model: input_dim must be positive");
  if (class_count < 2) throw SpecError("model: need at least two classes");
  std::mt19937_64 rng(seed);
  Net net;
  switch (arch) {
    case ArchitectureId::mlp3:
      net.add(std::make_unique<DenseLayer>(input_dim, 128, rng));
      net.add(std::make_unique<ReluLayer>());
      net.add(std::make_unique<DenseLayer>(128, 64, rng));
      net.add(std::make_unique<ReluLayer>());
      net.add(std::make_unique<DenseLayer>(64, class_count, rng));
      break;
    case ArchitectureId::mlp_small:
      net.add(std::make_unique<DenseLayer>(input_dim, 64, rng));
      net.add(std::make_unique<ReluLayer>());
      net.add(std::make_unique<DenseLayer>(64, class_count, rng));
      break;
    case ArchitectureId::small_cnn:
      net.add(std::make_unique<Conv1dLayer>(1, 8, input_dim, 5, rng));
      net.add(std::make_unique<ReluLayer>());
      net.add(std::make_unique<Conv1dLayer>(8, 16, input_dim, 3, rng));
      net.add(std::make_unique<ReluLayer>());
      net.add(std::make_unique<GlobalAvgPool1dLayer>(16, input_dim));
      net.add(std::make_unique<DenseLayer>(16, class_count, rng));
      break;
    case ArchitectureId::cnn_small:
      net.add(std::make_unique<Conv1dLayer>(1, 4, input_dim, 5, rng));
      net.add(std::make_unique<ReluLayer>());
      net.add(std::make_unique<GlobalAvgPool1dLayer>(4, input_dim));
      net.add(std::make_unique<DenseLayer>(4, class_count, rng));
      break;
    case ArchitectureId::lstm_seq: {
      if (input_dim % kLstmStepWidth != 0) {
        throw ShapeError("lstm_seq: input_dim must be a multiple of " +
                         std::to_string(kLstmStepWidth));
      }
      const int steps = input_dim / kLstmStepWidth;
      net.add(std::make_unique<LstmLayer>(kLstmStepWidth, steps, 32, rng));
      net.add(std::make_unique<DenseLayer>(32, class_count, rng));
      break;
    }
    case ArchitectureId::lstm_small: {
      if (input_dim % kLstmStepWidth != 0) {
        throw ShapeError("lstm_small: input_dim must be a multiple of " +
                         std::to_string(kLstmStepWidth));
      }
      const int steps = input_dim / kLstmStepWidth;
      net.add(std::make_unique<LstmLayer>(kLstmStepWidth, steps, 16, rng));
      net.add(std::make_unique<DenseLayer>(16, class_count, rng));
      break;
    }
  }
  return net;
}

}  // namespace

ClassifierModel::ClassifierModel(ArchitectureId arch, int input_dim, int class_count,
                                 uint64_t init_seed)
    : arch_(arch), input_dim_(input_dim), class_count_(class_count), init_seed_(init_seed),
      net_(build_net(arch, input_dim, class_count, init_seed)) {}

void ClassifierModel::check_batch(const Matrix& batch) const {
  if (batch.cols() != input_dim_) {
    throw ShapeError("model: batch feature dim " + std::to_string(batch.cols()) +
                     " does not match input_dim " + std::to_string(input_dim_));
  }
}

Matrix ClassifierModel::predict_logits(const Matrix& batch) const {
  check_batch(batch);
  return net_.infer(batch);
}

Matrix ClassifierModel::predict_proba(const Matrix& batch, std::span<const int>) const {
  return softmax_rows(predict_logits(batch), 1.0);
}

Matrix predict_proba(const ClassifierModel& model, const Matrix& batch) {
  return model.predict_proba(batch);
}

namespace {

struct EpochStats {
  double mean_loss = 0.0;
};

// One epoch of minibatch cross-entropy with in-place Adam updates.
EpochStats run_ce_epoch(Net& net, AdamOptimizer& opt, const Matrix& x, const std::vector<int>& y,
                        int batch_size, std::mt19937_64& rng) {
  const int n = static_cast<int>(x.rows());
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  double loss_sum = 0.0;
  int seen = 0;
  auto params = net.params();
  for (int start = 0; start < n; start += batch_size) {
    const int b = std::min(batch_size, n - start);
    Matrix xb(b, x.cols());
    std::vector<int> yb(static_cast<size_t>(b));
    for (int r = 0; r < b; ++r) {
      xb.row(r) = x.row(order[static_cast<size_t>(start + r)]);
      yb[static_cast<size_t>(r)] = y[static_cast<size_t>(order[static_cast<size_t>(start + r)])];
    }
    Matrix logits = net.forward(xb);
    Matrix probs = softmax_rows(logits, 1.0);
    double batch_loss = 0.0;
    Matrix dlogits = probs;
    for (int r = 0; r < b; ++r) {
      const int cls = yb[static_cast<size_t>(r)];
      batch_loss -= std::log(std::max(probs(r, cls), 1e-300));
      dlogits(r, cls) -= 1.0;
    }
    batch_loss /= b;
    dlogits /= static_cast<double>(b);
    if (!std::isfinite(batch_loss)) throw TrainingDivergedError("cross-entropy loss is not finite");
    net.zero_grads();
    net.backward(dlogits);
    opt.step(params);
    loss_sum += batch_loss * b;
    seen += b;
  }
  return {loss_sum / std::max(seen, 1)};
}

ClassifierModel train_on(const Matrix& x, const std::vector<int>& y, int class_count,
                         ArchitectureId arch, const TrainConfig& config) {
  if (x.rows() == 0) throw ArgumentError("training: empty dataset");
  if (config.learning_rate <= 0.0) throw SpecError("training: learning_rate must be positive");
  if (config.epochs < 0) throw SpecError("training: epochs must be nonnegative");
  if (config.batch_size < 1) throw SpecError("training: batch_size must be at least 1");

  ClassifierModel model(arch, static_cast<int>(x.cols()), class_count,
                        derive_seed(config.seed, "init"));
  if (config.epochs == 0) return model;

  AdamOptimizer opt(config.learning_rate);
  PlateauScheduler plateau(config.plateau_patience, config.plateau_factor);
  std::mt19937_64 shuffle_rng(derive_seed(config.seed, "shuffle"));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto stats = run_ce_epoch(model.net(), opt, x, y, config.batch_size, shuffle_rng);
    plateau.observe(stats.mean_loss, opt);
  }
  return model;
}

}  // namespace

ClassifierModel train_classifier(const LabeledDataset& dataset, ArchitectureId arch,
                                 const TrainConfig& config) {
  dataset.validate();
  return train_on(dataset.samples, dataset.labels, dataset.class_count, arch, config);
}

ClassifierModel train_classifier_view(const DatasetView& view, int class_count,
                                      ArchitectureId arch, const TrainConfig& config) {
  if (view.size() == 0) throw ArgumentError("training: empty view");
  return train_on(view.gather_samples(), view.gather_labels(), class_count, arch, config);
}

ClassifierModel retrain_gold(const Partition& partition, const LabeledDataset& dataset,
                             ArchitectureId arch, const TrainConfig& config) {
  partition.validate(dataset.size());
  if (partition.retain_set.empty()) throw ArgumentError("retrain_gold: empty retain set");
  return train_classifier_view(view_of(dataset, partition.retain_set), dataset.class_count, arch,
                               config);
}

double accuracy_from_proba(const Matrix& probs, const std::vector<int>& labels) {
  if (probs.rows() == 0) throw ArgumentError("accuracy: empty view");
  int hits = 0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    int best = 0;
    for (Eigen::Index c = 1; c < probs.cols(); ++c) {
      if (probs(r, c) > probs(r, best)) best = static_cast<int>(c);  // ties keep the lowest index
    }
    if (best == labels[static_cast<size_t>(r)]) ++hits;
  }
  return 100.0 * hits / static_cast<double>(probs.rows());
}

double evaluate_accuracy(const ClassifierModel& model, const DatasetView& view) {
  if (view.size() == 0) throw ArgumentError("evaluate_accuracy: empty view");
  return accuracy_from_proba(model.predict_proba(view.gather_samples()), view.gather_labels());
}

// ---------------------------------------------------------------- checkpoints

namespace {
constexpr char kCheckpointMagic[8] = {'U', 'L', 'K', 'C', 'K', 'P', 'T', '\n'};
}

void save_checkpoint(const ClassifierModel& model, const std::filesystem::path& path,
                     const CheckpointInfo& info) {
  const Vector params = model.net().flatten_params();
  json manifest = {
      {"format_version", 1},
      {"architecture_id", to_string(model.architecture())},
      {"input_dim", model.input_dim()},
      {"class_count", model.class_count()},
      {"param_count", params.size()},
      {"init_seed", model.init_seed()},
      {"role", info.role},
      {"dataset_hash", info.dataset_hash},
      {"config", info.config_json},
      {"param_hash", hex64(model.param_hash())},
  };
  const std::string header = manifest.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const uint64_t len = header.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(params.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(params.size())));
  if (!out) throw IoError("short write on checkpoint " + path.string());
}

std::pair<ClassifierModel, CheckpointInfo> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 8, kCheckpointMagic)) {
    throw IoError(path.string() + ": not a checkpoint file");
  }
  uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError(path.string() + ": truncated checkpoint header");
  json manifest = json::parse(header);

  const auto arch = architecture_from_string(manifest.at("architecture_id").get<std::string>());
  ClassifierModel model(arch, manifest.at("input_dim").get<int>(),
                        manifest.at("class_count").get<int>(),
                        manifest.value("init_seed", uint64_t{0}));
  const auto count = manifest.at("param_count").get<Eigen::Index>();
  if (count != model.net().param_count()) {
    throw IoError(path.string() + ": parameter count does not match architecture");
  }
  Vector params(count);
  in.read(reinterpret_cast<char*>(params.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(count)));
  if (!in) throw IoError(path.string() + ": truncated parameter payload");
  model.net().unflatten_params(params);

  CheckpointInfo info;
  info.architecture_id = manifest.at("architecture_id").get<std::string>();
  info.input_dim = manifest.at("input_dim").get<int>();
  info.class_count = manifest.at("class_count").get<int>();
  info.role = manifest.value("role", "");
  info.dataset_hash = manifest.value("dataset_hash", "");
  info.config_json = manifest.value("config", "");
  return {std::move(model), std::move(info)};
}

}  // namespace unlearnkit
