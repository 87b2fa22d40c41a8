#pragma once

#include "unlearnkit/common.hpp"

#include <filesystem>
#include <optional>

namespace unlearnkit {

enum class SplitTag { train, test };

struct LabeledDataset {
  Matrix samples;                         // n x feature_dim
  std::vector<int> labels;                // class index per sample
  int class_count = 0;
  std::vector<int> subclass_labels;       // empty when absent
  SplitTag split_tag = SplitTag::train;

  int size() const { return static_cast<int>(samples.rows()); }
  int feature_dim() const { return static_cast<int>(samples.cols()); }
  bool has_subclasses() const { return !subclass_labels.empty(); }
  void validate() const;
  uint64_t content_hash() const;
};

enum class ForgetMode { full_class, subclass_within_superclass, random_subset };

struct ForgetSpec {
  ForgetMode mode = ForgetMode::full_class;
  std::vector<int> class_ids;   // full_class targets
  int superclass_id = -1;       // subclass mode: coarse label
  int subclass_id = -1;         // subclass mode: fine label
  int sample_count = 0;         // random_subset: k
  std::string describe() const;
};

struct Partition {
  std::vector<int> forget_set;  // D_f indices
  std::vector<int> retain_set;  // D_r indices
  ForgetSpec spec;
  // Full invariant: disjoint and jointly covering [0, n).
  void validate(int n) const;
  // Range and disjointness only; sequential requests drop previously
  // forgotten indices from D_r, so later steps no longer cover [0, n).
  void validate_disjoint(int n) const;
};

struct UnlearningEntry {
  int sample_index;
  int unlearning_label;  // 1 for forget samples, 0 for retain samples
};

struct UnlearningSet {
  std::vector<UnlearningEntry> entries;
  int size() const { return static_cast<int>(entries.size()); }
};

struct SuperclassMapping {
  std::vector<int> fine_to_coarse;  // index = fine id
  int coarse_count = 0;
  void validate() const;
};

// D_f selected per spec, D_r = complement. Deterministic per seed (the seed
// only matters for random_subset).
Partition partition(const LabeledDataset& dataset, const ForgetSpec& spec, uint64_t seed);

// All of D_f (label 1) plus a class-stratified sample of round(f * |D_r|)
// retain indices (label 0). stratified=false falls back to a uniform draw.
UnlearningSet build_unlearning_set(const Partition& partition, const LabeledDataset& dataset,
                                   double retain_fraction, uint64_t seed,
                                   bool stratified = true);

// Coarsen labels through the mapping; original fine labels are preserved in
// subclass_labels.
LabeledDataset merge_to_superclasses(const LabeledDataset& dataset,
                                     const SuperclassMapping& mapping);

// Gaussian clusters, one per subclass, labeled with the enclosing class.
// Class centers sit on a shell of radius `cluster_separation`; subclass
// means are offset from their center by `subclass_spread * separation`.
// Per-sample noise is unit isotropic. The same seed with SplitTag::test
// reuses the cluster means but draws fresh samples.
LabeledDataset make_synthetic_dataset(int class_count, int subclasses_per_class,
                                      int samples_per_subclass, int feature_dim,
                                      double cluster_separation, uint64_t seed,
                                      SplitTag split = SplitTag::train,
                                      double subclass_spread = 0.25);

// Directory ingestion: either `manifest.json` + raw tensor files, or
// `data.csv` (+ optional `test.csv`). See the README for the exact layout.
LabeledDataset load_dataset_dir(const std::filesystem::path& dir, SplitTag split = SplitTag::train);
bool dataset_dir_has_split(const std::filesystem::path& dir, SplitTag split);

void save_dataset_csv(const LabeledDataset& dataset, const std::filesystem::path& csv_path);

// Two-column text `fine_id,coarse_id`, header optional.
SuperclassMapping load_superclass_mapping(const std::filesystem::path& file);

// ---------------------------------------------------------------- views

// Indexed subset of a dataset; the backing dataset must outlive the view.
struct DatasetView {
  const LabeledDataset* dataset = nullptr;
  std::vector<int> indices;

  int size() const { return static_cast<int>(indices.size()); }
  Matrix gather_samples() const;
  std::vector<int> gather_labels() const;
};

DatasetView view_all(const LabeledDataset& dataset);
DatasetView view_of(const LabeledDataset& dataset, std::vector<int> indices);

}  // namespace unlearnkit
