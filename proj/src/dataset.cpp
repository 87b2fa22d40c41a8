#include "unlearnkit/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace unlearnkit {

namespace fs = std::filesystem;
using nlohmann::json;

void LabeledDataset::validate() const {
  const int n = size();
  if (n < 1) throw SpecError("dataset: needs at least one sample");
  if (static_cast<int>(labels.size()) != n) throw ShapeError("dataset: samples/labels length mismatch");
  if (class_count < 1) throw SpecError("dataset: class_count must be positive");
  for (int y : labels) {
    if (y < 0 || y >= class_count) throw SpecError("dataset: label out of range");
  }
  if (!subclass_labels.empty() && static_cast<int>(subclass_labels.size()) != n) {
    throw ShapeError("dataset: subclass_labels length mismatch");
  }
}

uint64_t LabeledDataset::content_hash() const {
  uint64_t h = hash_matrix(samples);
  h = fnv1a64(labels.data(), labels.size() * sizeof(int), h);
  if (!subclass_labels.empty()) {
    h = fnv1a64(subclass_labels.data(), subclass_labels.size() * sizeof(int), h);
  }
  return h;
}

std::string ForgetSpec::describe() const {
  std::ostringstream os;
  switch (mode) {
    case ForgetMode::full_class: {
      os << "full_class[";
      for (size_t i = 0; i < class_ids.size(); ++i) os << (i ? "," : "") << class_ids[i];
      os << "]";
      break;
    }
    case ForgetMode::subclass_within_superclass:
      os << "subclass[" << superclass_id << "/" << subclass_id << "]";
      break;
    case ForgetMode::random_subset:
      os << "random_subset[" << sample_count << "]";
      break;
  }
  return os.str();
}

void Partition::validate_disjoint(int n) const {
  std::vector<char> seen(static_cast<size_t>(n), 0);
  auto mark = [&](const std::vector<int>& ids) {
    for (int i : ids) {
      if (i < 0 || i >= n) throw SpecError("partition: index out of range");
      if (seen[static_cast<size_t>(i)]) throw SpecError("partition: overlapping index sets");
      seen[static_cast<size_t>(i)] = 1;
    }
  };
  mark(forget_set);
  mark(retain_set);
}

void Partition::validate(int n) const {
  validate_disjoint(n);
  if (forget_set.size() + retain_set.size() != static_cast<size_t>(n)) {
    throw SpecError("partition: forget and retain sets do not cover the dataset");
  }
}

void SuperclassMapping::validate() const {
  if (fine_to_coarse.empty()) throw SpecError("superclass mapping: empty");
  if (coarse_count < 1) throw SpecError("superclass mapping: coarse_count must be positive");
  for (int c : fine_to_coarse) {
    if (c < 0 || c >= coarse_count) throw SpecError("superclass mapping: coarse id out of range");
  }
}

Partition partition(const LabeledDataset& dataset, const ForgetSpec& spec, uint64_t seed) {
  dataset.validate();
  const int n = dataset.size();
  std::vector<char> forget(static_cast<size_t>(n), 0);

  switch (spec.mode) {
    case ForgetMode::full_class: {
      if (spec.class_ids.empty()) throw SpecError("forget spec: no target classes");
      std::set<int> targets;
      for (int c : spec.class_ids) {
        if (c < 0 || c >= dataset.class_count) {
          throw SpecError("forget spec: unknown class id " + std::to_string(c));
        }
        targets.insert(c);
      }
      bool any = false;
      for (int i = 0; i < n; ++i) {
        if (targets.count(dataset.labels[static_cast<size_t>(i)])) {
          forget[static_cast<size_t>(i)] = 1;
          any = true;
        }
      }
      if (!any) throw SpecError("forget spec: target classes have no samples");
      break;
    }
    case ForgetMode::subclass_within_superclass: {
      if (!dataset.has_subclasses()) {
        throw SpecError("forget spec: dataset carries no subclass labels");
      }
      bool any = false;
      for (int i = 0; i < n; ++i) {
        if (dataset.subclass_labels[static_cast<size_t>(i)] == spec.subclass_id) {
          if (dataset.labels[static_cast<size_t>(i)] != spec.superclass_id) {
            throw SpecError("forget spec: subclass does not belong to the given superclass");
          }
          forget[static_cast<size_t>(i)] = 1;
          any = true;
        }
      }
      if (!any) throw SpecError("forget spec: unknown subclass id " + std::to_string(spec.subclass_id));
      break;
    }
    case ForgetMode::random_subset: {
      if (spec.sample_count < 1 || spec.sample_count >= n) {
        throw SpecError("forget spec: random subset size must be in [1, n)");
      }
      std::vector<int> order(static_cast<size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      std::mt19937_64 rng(derive_seed(seed, "partition-random-subset"));
      std::shuffle(order.begin(), order.end(), rng);
      for (int k = 0; k < spec.sample_count; ++k) {
        forget[static_cast<size_t>(order[static_cast<size_t>(k)])] = 1;
      }
      break;
    }
  }

  Partition part;
  part.spec = spec;
  for (int i = 0; i < n; ++i) {
    (forget[static_cast<size_t>(i)] ? part.forget_set : part.retain_set).push_back(i);
  }
  part.validate(n);
  return part;
}

namespace {

// Proportional allocation per class, remainder assigned by largest fraction.
std::vector<int> stratified_retain_sample(const Partition& part, const LabeledDataset& dataset,
                                          int want, std::mt19937_64& rng) {
  std::vector<std::vector<int>> by_class(static_cast<size_t>(dataset.class_count));
  for (int i : part.retain_set) {
    by_class[static_cast<size_t>(dataset.labels[static_cast<size_t>(i)])].push_back(i);
  }
  const double total = static_cast<double>(part.retain_set.size());
  struct Alloc {
    size_t cls;
    int take;
    double frac;
  };
  std::vector<Alloc> allocs;
  int assigned = 0;
  for (size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty()) continue;
    const double exact = want * static_cast<double>(by_class[c].size()) / total;
    int take = static_cast<int>(std::floor(exact));
    take = std::min<int>(take, static_cast<int>(by_class[c].size()));
    allocs.push_back({c, take, exact - std::floor(exact)});
    assigned += take;
  }
  std::stable_sort(allocs.begin(), allocs.end(),
                   [](const Alloc& a, const Alloc& b) { return a.frac > b.frac; });
  for (auto& a : allocs) {
    if (assigned >= want) break;
    if (a.take < static_cast<int>(by_class[a.cls].size())) {
      ++a.take;
      ++assigned;
    }
  }
  std::vector<int> picked;
  picked.reserve(static_cast<size_t>(want));
  for (const auto& a : allocs) {
    auto& pool = by_class[a.cls];
    std::shuffle(pool.begin(), pool.end(), rng);
    picked.insert(picked.end(), pool.begin(), pool.begin() + a.take);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace

UnlearningSet build_unlearning_set(const Partition& part, const LabeledDataset& dataset,
                                   double retain_fraction, uint64_t seed, bool stratified) {
  if (retain_fraction < 0.0 || retain_fraction > 1.0) {
    throw SpecError("build_unlearning_set: retain_fraction must be in [0, 1]");
  }
  part.validate_disjoint(dataset.size());
  const int want = static_cast<int>(
      std::llround(retain_fraction * static_cast<double>(part.retain_set.size())));

  std::mt19937_64 rng(derive_seed(seed, "retain-subset"));
  std::vector<int> retain_pick;
  if (want > 0) {
    if (stratified) {
      retain_pick = stratified_retain_sample(part, dataset, want, rng);
    } else {
      std::vector<int> pool = part.retain_set;
      std::shuffle(pool.begin(), pool.end(), rng);
      pool.resize(static_cast<size_t>(want));
      std::sort(pool.begin(), pool.end());
      retain_pick = std::move(pool);
    }
  }

  UnlearningSet uset;
  uset.entries.reserve(part.forget_set.size() + retain_pick.size());
  for (int i : part.forget_set) uset.entries.push_back({i, 1});
  for (int i : retain_pick) uset.entries.push_back({i, 0});
  return uset;
}

LabeledDataset merge_to_superclasses(const LabeledDataset& dataset,
                                     const SuperclassMapping& mapping) {
  dataset.validate();
  mapping.validate();
  if (dataset.class_count != static_cast<int>(mapping.fine_to_coarse.size())) {
    throw SpecError("merge_to_superclasses: mapping domain does not match class_count");
  }
  LabeledDataset out;
  out.samples = dataset.samples;
  out.class_count = mapping.coarse_count;
  out.split_tag = dataset.split_tag;
  out.labels.reserve(dataset.labels.size());
  out.subclass_labels = dataset.labels;  // original fine labels
  for (int y : dataset.labels) {
    out.labels.push_back(mapping.fine_to_coarse[static_cast<size_t>(y)]);
  }
  out.validate();
  return out;
}

LabeledDataset make_synthetic_dataset(int class_count, int subclasses_per_class,
                                      int samples_per_subclass, int feature_dim,
                                      double cluster_separation, uint64_t seed, SplitTag split,
                                      double subclass_spread) {
  if (class_count < 1 || subclasses_per_class < 1 || samples_per_subclass < 1 || feature_dim < 1) {
    throw SpecError("make_synthetic_dataset: all counts must be positive");
  }
  // Cluster means depend on the seed only, so a test split drawn with the
  // same seed comes from the same mixture.
  std::mt19937_64 mean_rng(derive_seed(seed, "synthetic-means"));
  std::normal_distribution<double> gauss(0.0, 1.0);

  const int total_sub = class_count * subclasses_per_class;
  Matrix means(total_sub, feature_dim);
  for (int c = 0; c < class_count; ++c) {
    Vector center(feature_dim);
    for (int d = 0; d < feature_dim; ++d) center[d] = gauss(mean_rng);
    if (center.norm() > 0) center *= cluster_separation / center.norm();
    for (int s = 0; s < subclasses_per_class; ++s) {
      Vector offset(feature_dim);
      for (int d = 0; d < feature_dim; ++d) offset[d] = gauss(mean_rng);
      if (offset.norm() > 0) offset *= (subclass_spread * cluster_separation) / offset.norm();
      means.row(c * subclasses_per_class + s) = (center + offset).transpose();
    }
  }

  std::mt19937_64 noise_rng(
      derive_seed(seed, split == SplitTag::train ? "synthetic-train" : "synthetic-test"));
  const int n = total_sub * samples_per_subclass;
  LabeledDataset out;
  out.samples.resize(n, feature_dim);
  out.labels.resize(static_cast<size_t>(n));
  out.subclass_labels.resize(static_cast<size_t>(n));
  out.class_count = class_count;
  out.split_tag = split;
  int row = 0;
  for (int c = 0; c < class_count; ++c) {
    for (int s = 0; s < subclasses_per_class; ++s) {
      const int fine = c * subclasses_per_class + s;
      for (int k = 0; k < samples_per_subclass; ++k, ++row) {
        for (int d = 0; d < feature_dim; ++d) {
          out.samples(row, d) = means(fine, d) + gauss(noise_rng);
        }
        out.labels[static_cast<size_t>(row)] = c;
        out.subclass_labels[static_cast<size_t>(row)] = fine;
      }
    }
  }
  if (subclasses_per_class == 1) out.subclass_labels.clear();
  out.validate();
  return out;
}

// ---------------------------------------------------------------- ingestion

namespace {

bool looks_numeric(const std::string& tok) {
  if (tok.empty()) return false;
  char* end = nullptr;
  std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    size_t b = field.find_first_not_of(' ');
    out.push_back(b == std::string::npos ? "" : field.substr(b));
  }
  return out;
}

LabeledDataset load_csv_file(const fs::path& file, SplitTag split) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool header_checked = false;
  bool has_subclass_col = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto toks = split_csv_line(line);
    if (toks.empty()) continue;
    if (!header_checked) {
      header_checked = true;
      if (!looks_numeric(toks[0])) {
        for (const auto& t : toks) {
          if (t == "subclass") has_subclass_col = true;
        }
        continue;  // header row
      }
    }
    rows.push_back(std::move(toks));
  }
  if (rows.empty()) throw IoError(file.string() + ": no data rows");

  const size_t cols = rows[0].size();
  if (cols < 2) throw IoError(file.string() + ": need at least one feature and a label column");
  // Without a header, a trailing subclass column cannot be distinguished
  // from a feature; the header (or manifest format) is required for it.
  const size_t feature_cols = cols - 1 - (has_subclass_col ? 1 : 0);

  LabeledDataset out;
  out.split_tag = split;
  out.samples.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feature_cols));
  out.labels.resize(rows.size());
  if (has_subclass_col) out.subclass_labels.resize(rows.size());
  int max_label = 0;
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw IoError(file.string() + ": ragged row " + std::to_string(r));
    for (size_t c = 0; c < feature_cols; ++c) {
      out.samples(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          std::stod(rows[r][c]);
    }
    out.labels[r] = std::stoi(rows[r][feature_cols]);
    max_label = std::max(max_label, out.labels[r]);
    if (has_subclass_col) out.subclass_labels[r] = std::stoi(rows[r][feature_cols + 1]);
  }
  out.class_count = max_label + 1;
  out.validate();
  return out;
}

Matrix read_raw_matrix(const fs::path& file, int n, int d, const std::string& dtype) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  Matrix out(n, d);
  if (dtype == "float32") {
    std::vector<float> buf(static_cast<size_t>(n) * static_cast<size_t>(d));
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw IoError(file.string() + ": truncated tensor file");
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < d; ++c)
        out(r, c) = static_cast<double>(buf[static_cast<size_t>(r) * d + c]);
  } else if (dtype == "float64") {
    std::vector<double> buf(static_cast<size_t>(n) * static_cast<size_t>(d));
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (!in) throw IoError(file.string() + ": truncated tensor file");
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < d; ++c) out(r, c) = buf[static_cast<size_t>(r) * d + c];
  } else {
    throw IoError("unsupported dtype: " + dtype);
  }
  return out;
}

std::vector<int> read_raw_labels(const fs::path& file, int n) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::vector<int32_t> buf(static_cast<size_t>(n));
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(int32_t)));
  if (!in) throw IoError(file.string() + ": truncated label file");
  return std::vector<int>(buf.begin(), buf.end());
}

LabeledDataset load_manifest_split(const fs::path& dir, const json& manifest, SplitTag split) {
  const std::string key = split == SplitTag::train ? "train" : "test";
  if (!manifest.contains(key)) {
    throw IoError(dir.string() + ": manifest has no '" + key + "' split");
  }
  const auto& spl = manifest.at(key);
  const int n = spl.at("count").get<int>();
  const int d = manifest.at("feature_dim").get<int>();
  const std::string dtype = manifest.value("dtype", "float64");

  LabeledDataset out;
  out.split_tag = split;
  out.samples = read_raw_matrix(dir / spl.at("features").get<std::string>(), n, d, dtype);
  out.labels = read_raw_labels(dir / spl.at("labels").get<std::string>(), n);
  if (spl.contains("subclasses") && !spl.at("subclasses").is_null()) {
    out.subclass_labels = read_raw_labels(dir / spl.at("subclasses").get<std::string>(), n);
  }
  out.class_count = manifest.at("class_count").get<int>();
  out.validate();
  return out;
}

}  // namespace

bool dataset_dir_has_split(const fs::path& dir, SplitTag split) {
  if (fs::exists(dir / "manifest.json")) {
    std::ifstream in(dir / "manifest.json");
    json manifest = json::parse(in);
    return manifest.contains(split == SplitTag::train ? "train" : "test");
  }
  return fs::exists(dir / (split == SplitTag::train ? "data.csv" : "test.csv"));
}

LabeledDataset load_dataset_dir(const fs::path& dir, SplitTag split) {
  if (!fs::exists(dir)) throw IoError("dataset directory not found: " + dir.string());
  if (fs::exists(dir / "manifest.json")) {
    std::ifstream in(dir / "manifest.json");
    json manifest = json::parse(in);
    return load_manifest_split(dir, manifest, split);
  }
  const fs::path csv = dir / (split == SplitTag::train ? "data.csv" : "test.csv");
  if (!fs::exists(csv)) throw IoError("no manifest.json or " + csv.filename().string() + " in " + dir.string());
  return load_csv_file(csv, split);
}

void save_dataset_csv(const LabeledDataset& dataset, const fs::path& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot write " + csv_path.string());
  for (int c = 0; c < dataset.feature_dim(); ++c) out << "f" << c << ",";
  out << "label";
  if (dataset.has_subclasses()) out << ",subclass";
  out << "\n";
  out.precision(17);
  for (int r = 0; r < dataset.size(); ++r) {
    for (int c = 0; c < dataset.feature_dim(); ++c) out << dataset.samples(r, c) << ",";
    out << dataset.labels[static_cast<size_t>(r)];
    if (dataset.has_subclasses()) out << "," << dataset.subclass_labels[static_cast<size_t>(r)];
    out << "\n";
  }
}

SuperclassMapping load_superclass_mapping(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  SuperclassMapping m;
  std::string line;
  std::vector<std::pair<int, int>> pairs;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto toks = split_csv_line(line);
    if (toks.size() != 2) throw IoError(file.string() + ": expected two columns");
    if (first && !looks_numeric(toks[0])) {
      first = false;
      continue;
    }
    first = false;
    pairs.emplace_back(std::stoi(toks[0]), std::stoi(toks[1]));
  }
  if (pairs.empty()) throw IoError(file.string() + ": empty mapping");
  int max_fine = 0;
  for (auto& [f, c] : pairs) max_fine = std::max(max_fine, f);
  m.fine_to_coarse.assign(static_cast<size_t>(max_fine) + 1, -1);
  for (auto& [f, c] : pairs) {
    if (f < 0) throw SpecError("superclass mapping: negative fine id");
    m.fine_to_coarse[static_cast<size_t>(f)] = c;
    m.coarse_count = std::max(m.coarse_count, c + 1);
  }
  for (int c : m.fine_to_coarse) {
    if (c < 0) throw SpecError("superclass mapping: fine id gap, map must be total");
  }
  m.validate();
  return m;
}

Matrix DatasetView::gather_samples() const {
  Matrix out(size(), dataset->feature_dim());
  for (int r = 0; r < size(); ++r) out.row(r) = dataset->samples.row(indices[static_cast<size_t>(r)]);
  return out;
}

std::vector<int> DatasetView::gather_labels() const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(dataset->labels[static_cast<size_t>(i)]);
  return out;
}

DatasetView view_all(const LabeledDataset& dataset) {
  DatasetView v;
  v.dataset = &dataset;
  v.indices.resize(static_cast<size_t>(dataset.size()));
  std::iota(v.indices.begin(), v.indices.end(), 0);
  return v;
}

DatasetView view_of(const LabeledDataset& dataset, std::vector<int> indices) {
  DatasetView v;
  v.dataset = &dataset;
  v.indices = std::move(indices);
  return v;
}

}  // namespace unlearnkit
