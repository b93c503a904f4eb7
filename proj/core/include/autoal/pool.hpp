#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "autoal/dataset.hpp"

namespace autoal {

struct SplitPair {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Labeled set L and unlabeled set U over one dataset, disjoint and jointly
// exhaustive at all times. Ground-truth labels are readable only for indices
// in L; reads from U throw StateError.
class Pool {
 public:
  static Pool init(const Dataset& dataset, std::size_t seed_size,
                   std::uint64_t seed, bool stratified = false);

  const Dataset& dataset() const { return *dataset_; }
  const std::vector<std::size_t>& labeled() const { return labeled_; }
  const std::vector<std::size_t>& unlabeled() const { return unlabeled_; }
  std::size_t labeled_count() const { return labeled_.size(); }
  std::size_t unlabeled_count() const { return unlabeled_.size(); }

  bool is_labeled(std::size_t index) const;
  int label(std::size_t index) const;

  // Moves the queried indices from U to L. Every index must be in U and the
  // set must be duplicate-free; otherwise InputError and the pool is
  // unchanged.
  void commit_query(std::span<const std::size_t> selected);

 private:
  explicit Pool(const Dataset& dataset) : dataset_(&dataset) {}

  const Dataset* dataset_;
  std::vector<std::size_t> labeled_;
  std::vector<std::size_t> unlabeled_;
  std::vector<bool> labeled_mask_;
};

// Random disjoint halves of the labeled set (sizes differ by at most one).
// Needs at least 2 labeled samples, else StateError.
SplitPair split_labeled(const Pool& pool, std::uint64_t seed);

// Per-dimension z-score fitted on the labeled rows only. Near-constant
// dimensions keep scale 1 to stay finite.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Standardizer fit(const Matrix& features, std::span<const std::size_t> rows);
  Matrix apply(const Matrix& features) const;
};

// New matrix holding the chosen rows, in the given order.
Matrix gather_rows(const Matrix& features, std::span<const std::size_t> rows);

}  // namespace autoal
