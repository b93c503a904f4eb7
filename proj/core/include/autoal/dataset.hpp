#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "autoal/matrix.hpp"

namespace autoal {

// Features plus ground-truth labels. The labels here are the oracle's answers;
// the learner only sees them through Pool once an index has been queried.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int num_classes = 0;
  std::string name;

  std::size_t size() const { return labels.size(); }
};

// Gaussian clusters around deterministic, well-separated centers (on a circle
// of radius `spread` for d >= 2, equally spaced on a line for d == 1).
Dataset make_blobs(int classes, const std::vector<int>& per_class_counts, int dim,
                   double spread, double sigma, std::uint64_t seed);

// Two interleaved unit half-circles, 2 classes. At sigma = 0 every point lies
// exactly on its arc.
Dataset make_two_moons(int n, double sigma, std::uint64_t seed);

// IDX pair ingestion (big-endian magic 0x00000803 images / 0x00000801 labels).
// Pixels flattened and scaled by 1/255. Malformed files -> FormatError.
Dataset load_idx_pair(const std::string& images_path, const std::string& labels_path);

// CSV ingestion: header row with a `label` column plus numeric feature columns.
Dataset load_csv(const std::string& path);

// majority count / minority count.
double imbalance_ratio(const Dataset& dataset);

// Disjoint train/test partition, shuffled deterministically by seed.
std::pair<Dataset, Dataset> split_train_test(const Dataset& dataset,
                                             double test_fraction,
                                             std::uint64_t seed);

}  // namespace autoal
