#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "unlearnkit/dataset.hpp"
#include "unlearnkit/model.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

using namespace unlearnkit;
namespace fs = std::filesystem;

namespace {

bool partition_covers(const Partition& part, int n) {
  std::vector<int> all = part.forget_set;
  all.insert(all.end(), part.retain_set.begin(), part.retain_set.end());
  std::sort(all.begin(), all.end());
  if (static_cast<int>(all.size()) != n) return false;
  for (int i = 0; i < n; ++i) {
    if (all[static_cast<size_t>(i)] != i) return false;
  }
  return true;
}

// Nearest class-centroid classifier; an independent probe for separability.
double centroid_train_accuracy(const LabeledDataset& ds) {
  Matrix centroids = Matrix::Zero(ds.class_count, ds.feature_dim());
  std::vector<int> counts(static_cast<size_t>(ds.class_count), 0);
  for (int i = 0; i < ds.size(); ++i) {
    centroids.row(ds.labels[static_cast<size_t>(i)]) += ds.samples.row(i);
    counts[static_cast<size_t>(ds.labels[static_cast<size_t>(i)])]++;
  }
  for (int c = 0; c < ds.class_count; ++c) {
    if (counts[static_cast<size_t>(c)] > 0) centroids.row(c) /= counts[static_cast<size_t>(c)];
  }
  int hits = 0;
  for (int i = 0; i < ds.size(); ++i) {
    int best = 0;
    double best_d = (ds.samples.row(i) - centroids.row(0)).squaredNorm();
    for (int c = 1; c < ds.class_count; ++c) {
      const double d = (ds.samples.row(i) - centroids.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (best == ds.labels[static_cast<size_t>(i)]) ++hits;
  }
  return 100.0 * hits / ds.size();
}

}  // namespace

TEST_CASE("partition: full class pulls exactly the labeled samples") {
  const auto ds = make_synthetic_dataset(5, 1, 100, 8, 3.0, 42);
  ForgetSpec spec;
  spec.mode = ForgetMode::full_class;
  spec.class_ids = {2};
  const Partition part = partition(ds, spec, 0);
  CHECK(part.forget_set.size() == 100);
  CHECK(part.retain_set.size() == 400);
  CHECK(partition_covers(part, ds.size()));
  for (int i : part.forget_set) CHECK(ds.labels[static_cast<size_t>(i)] == 2);
}

TEST_CASE("partition: random subset of 50") {
  const auto ds = make_synthetic_dataset(5, 1, 60, 8, 3.0, 1);
  ForgetSpec spec;
  spec.mode = ForgetMode::random_subset;
  spec.sample_count = 50;
  const Partition a = partition(ds, spec, 7);
  CHECK(a.forget_set.size() == 50);
  CHECK(partition_covers(a, ds.size()));
  const Partition b = partition(ds, spec, 7);
  CHECK(a.forget_set == b.forget_set);  // deterministic per seed
  const Partition c = partition(ds, spec, 8);
  CHECK(a.forget_set != c.forget_set);
}

TEST_CASE("partition: subclass forgetting keeps superclass siblings retained") {
  const auto ds = make_synthetic_dataset(4, 3, 20, 8, 3.0, 5);
  // forget fine id 7 = class 2, sub 1
  ForgetSpec spec;
  spec.mode = ForgetMode::subclass_within_superclass;
  spec.superclass_id = 2;
  spec.subclass_id = 7;
  const Partition part = partition(ds, spec, 0);
  CHECK(part.forget_set.size() == 20);
  for (int i : part.forget_set) CHECK(ds.subclass_labels[static_cast<size_t>(i)] == 7);
  // sibling subclasses 6 and 8 stay in the retain set
  int siblings = 0;
  for (int i : part.retain_set) {
    const int fine = ds.subclass_labels[static_cast<size_t>(i)];
    if (fine == 6 || fine == 8) ++siblings;
    CHECK(fine != 7);
  }
  CHECK(siblings == 40);
}

TEST_CASE("partition errors: unknown targets and oversized subsets") {
  const auto ds = make_synthetic_dataset(3, 1, 10, 4, 2.0, 1);
  ForgetSpec bad_class;
  bad_class.mode = ForgetMode::full_class;
  bad_class.class_ids = {9};
  CHECK_THROWS_AS(partition(ds, bad_class, 0), SpecError);

  ForgetSpec bad_count;
  bad_count.mode = ForgetMode::random_subset;
  bad_count.sample_count = ds.size();
  CHECK_THROWS_AS(partition(ds, bad_count, 0), SpecError);

  ForgetSpec bad_sub;
  bad_sub.mode = ForgetMode::subclass_within_superclass;
  bad_sub.superclass_id = 0;
  bad_sub.subclass_id = 3;
  CHECK_THROWS_AS(partition(ds, bad_sub, 0), SpecError);
}

TEST_CASE("build_unlearning_set: sizes, labels, determinism") {
  const auto ds = make_synthetic_dataset(5, 1, 100, 8, 3.0, 9);
  ForgetSpec spec;
  spec.mode = ForgetMode::full_class;
  spec.class_ids = {0};
  const Partition part = partition(ds, spec, 0);

  const auto uset = build_unlearning_set(part, ds, 0.3, 7);
  const auto expected = static_cast<int>(part.forget_set.size() +
                                         std::llround(0.3 * part.retain_set.size()));
  CHECK(uset.size() == expected);

  std::set<int> forget(part.forget_set.begin(), part.forget_set.end());
  std::set<int> seen_forget;
  for (const auto& e : uset.entries) {
    if (e.unlearning_label == 1) {
      CHECK(forget.count(e.sample_index) == 1);
      CHECK(seen_forget.insert(e.sample_index).second);  // exactly once
    } else {
      CHECK(forget.count(e.sample_index) == 0);
    }
  }
  CHECK(seen_forget.size() == forget.size());

  const auto again = build_unlearning_set(part, ds, 0.3, 7);
  REQUIRE(again.size() == uset.size());
  for (int i = 0; i < uset.size(); ++i) {
    CHECK(again.entries[static_cast<size_t>(i)].sample_index ==
          uset.entries[static_cast<size_t>(i)].sample_index);
  }
}

TEST_CASE("build_unlearning_set: zero fraction gives exactly D_f") {
  const auto ds = make_synthetic_dataset(3, 1, 30, 4, 2.0, 2);
  ForgetSpec spec;
  spec.mode = ForgetMode::full_class;
  spec.class_ids = {1};
  const Partition part = partition(ds, spec, 0);
  const auto uset = build_unlearning_set(part, ds, 0.0, 1);
  CHECK(uset.size() == static_cast<int>(part.forget_set.size()));
  for (const auto& e : uset.entries) CHECK(e.unlearning_label == 1);
}

TEST_CASE("build_unlearning_set: stratified sample is class-proportional") {
  const auto ds = make_synthetic_dataset(4, 1, 100, 4, 2.0, 3);
  ForgetSpec spec;
  spec.mode = ForgetMode::full_class;
  spec.class_ids = {0};
  const Partition part = partition(ds, spec, 0);
  const auto uset = build_unlearning_set(part, ds, 0.3, 11, /*stratified=*/true);
  std::map<int, int> per_class;
  for (const auto& e : uset.entries) {
    if (e.unlearning_label == 0) per_class[ds.labels[static_cast<size_t>(e.sample_index)]]++;
  }
  // 300 retained per class, 30% of 300 retain samples => 30 per class.
  for (const auto& [cls, count] : per_class) {
    CHECK(cls != 0);
    CHECK(count == 30);
  }
}

TEST_CASE("merge_to_superclasses: CIFAR-style 100 -> 20 with 5 subclasses each") {
  // 100 fine classes, 2 samples each; mapping groups consecutive fives.
  LabeledDataset ds;
  const int fine_count = 100;
  ds.samples = Matrix::Random(fine_count * 2, 3);
  ds.class_count = fine_count;
  for (int f = 0; f < fine_count; ++f) {
    ds.labels.push_back(f);
    ds.labels.push_back(f);
  }
  SuperclassMapping mapping;
  mapping.coarse_count = 20;
  for (int f = 0; f < fine_count; ++f) mapping.fine_to_coarse.push_back(f / 5);

  const auto merged = merge_to_superclasses(ds, mapping);
  CHECK(merged.class_count == 20);
  CHECK(merged.has_subclasses());

  // Brute-force preimage oracle: distinct subclass labels under each coarse
  // label must equal the mapping preimage.
  std::map<int, std::set<int>> observed;
  for (int i = 0; i < merged.size(); ++i) {
    observed[merged.labels[static_cast<size_t>(i)]].insert(
        merged.subclass_labels[static_cast<size_t>(i)]);
  }
  std::map<int, std::set<int>> preimage;
  for (int f = 0; f < fine_count; ++f) preimage[mapping.fine_to_coarse[static_cast<size_t>(f)]].insert(f);
  CHECK(observed == preimage);
  for (const auto& [coarse, fines] : observed) CHECK(fines.size() == 5);
}

TEST_CASE("merge_to_superclasses: identity mapping keeps labels") {
  const auto ds = make_synthetic_dataset(4, 1, 10, 4, 2.0, 3);
  SuperclassMapping identity;
  identity.coarse_count = 4;
  identity.fine_to_coarse = {0, 1, 2, 3};
  const auto merged = merge_to_superclasses(ds, identity);
  CHECK(merged.labels == ds.labels);
  CHECK(merged.subclass_labels == ds.labels);
}

TEST_CASE("merge_to_superclasses: domain size mismatch is a spec error") {
  const auto ds = make_synthetic_dataset(4, 1, 10, 4, 2.0, 3);
  SuperclassMapping small;
  small.coarse_count = 2;
  small.fine_to_coarse = {0, 1};
  CHECK_THROWS_AS(merge_to_superclasses(ds, small), SpecError);
}

TEST_CASE("synthetic dataset: sizes, probe accuracy, degenerate separation") {
  const auto ds = make_synthetic_dataset(5, 1, 100, 16, 4.0, 1);
  CHECK(ds.size() == 500);
  CHECK(ds.class_count == 5);
  CHECK(ds.feature_dim() == 16);
  CHECK(centroid_train_accuracy(ds) > 95.0);

  const auto collapsed = make_synthetic_dataset(5, 1, 200, 16, 0.0, 1);
  const double acc = centroid_train_accuracy(collapsed);
  CHECK(acc < 45.0);  // chance is 20, memorized centroids stay near it

  const auto again = make_synthetic_dataset(5, 1, 100, 16, 4.0, 1);
  CHECK(again.samples == ds.samples);  // deterministic per seed

  const auto test_split = make_synthetic_dataset(5, 1, 50, 16, 4.0, 1, SplitTag::test);
  CHECK(test_split.split_tag == SplitTag::test);
  CHECK(test_split.size() == 250);
  // same mixture, fresh draws
  CHECK(centroid_train_accuracy(test_split) > 90.0);
}

TEST_CASE("csv round trip and mapping file ingestion") {
  const auto ds = make_synthetic_dataset(3, 2, 5, 4, 3.0, 8);
  const fs::path dir = fs::temp_directory_path() / "ulk_dataset_test";
  fs::create_directories(dir);
  save_dataset_csv(ds, dir / "data.csv");
  const auto loaded = load_dataset_dir(dir);
  CHECK(loaded.size() == ds.size());
  CHECK(loaded.class_count == ds.class_count);
  CHECK(loaded.labels == ds.labels);
  CHECK(loaded.subclass_labels == ds.subclass_labels);
  CHECK((loaded.samples - ds.samples).lpNorm<Eigen::Infinity>() < 1e-12);

  {
    std::ofstream map_file(dir / "mapping.csv");
    map_file << "fine_id,coarse_id\n";
    for (int f = 0; f < 6; ++f) map_file << f << "," << f / 2 << "\n";
  }
  const auto mapping = load_superclass_mapping(dir / "mapping.csv");
  CHECK(mapping.coarse_count == 3);
  CHECK(mapping.fine_to_coarse == std::vector<int>({0, 0, 1, 1, 2, 2}));
  fs::remove_all(dir);
}

TEST_CASE("partition invariants hold over random specs") {
  std::mt19937_64 rng(77);
  const auto ds = make_synthetic_dataset(6, 2, 25, 6, 2.5, 4);
  for (int it = 0; it < 40; ++it) {
    ForgetSpec spec;
    switch (rng() % 3) {
      case 0:
        spec.mode = ForgetMode::full_class;
        spec.class_ids = {static_cast<int>(rng() % 6)};
        break;
      case 1: {
        spec.mode = ForgetMode::subclass_within_superclass;
        const int fine = static_cast<int>(rng() % 12);
        spec.subclass_id = fine;
        spec.superclass_id = fine / 2;
        break;
      }
      default:
        spec.mode = ForgetMode::random_subset;
        spec.sample_count = 1 + static_cast<int>(rng() % (ds.size() - 1));
        break;
    }
    const Partition part = partition(ds, spec, rng());
    CHECK(partition_covers(part, ds.size()));
    const auto uset = build_unlearning_set(part, ds, 0.25, rng());
    std::set<int> forget(part.forget_set.begin(), part.forget_set.end());
    std::set<int> flagged;
    for (const auto& e : uset.entries) {
      if (e.unlearning_label == 1) flagged.insert(e.sample_index);
    }
    CHECK(flagged == forget);
  }
}
