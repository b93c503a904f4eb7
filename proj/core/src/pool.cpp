#include "autoal/pool.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include "autoal/errors.hpp"

namespace autoal {

Pool Pool::init(const Dataset& dataset, std::size_t seed_size, std::uint64_t seed,
                bool stratified) {
  if (seed_size == 0 || seed_size >= dataset.size())
    throw InputError("init_pool: seed size must satisfy 0 < M < dataset size");

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<std::size_t> picked;
  picked.reserve(seed_size);
  if (stratified) {
    // Round-robin over shuffled per-class index lists until M drawn.
    std::vector<std::vector<std::size_t>> by_class(
        static_cast<std::size_t>(dataset.num_classes));
    for (std::size_t i = 0; i < dataset.size(); ++i)
      by_class[static_cast<std::size_t>(dataset.labels[i])].push_back(i);
    for (auto& bucket : by_class) std::shuffle(bucket.begin(), bucket.end(), rng);
    std::size_t depth = 0;
    while (picked.size() < seed_size) {
      bool any = false;
      for (auto& bucket : by_class) {
        if (depth < bucket.size() && picked.size() < seed_size) {
          picked.push_back(bucket[depth]);
          any = true;
        }
      }
      if (!any) break;
      ++depth;
    }
  } else {
    std::shuffle(order.begin(), order.end(), rng);
    picked.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(seed_size));
  }

  Pool pool(dataset);
  pool.labeled_mask_.assign(dataset.size(), false);
  for (std::size_t i : picked) pool.labeled_mask_[i] = true;
  pool.labeled_ = std::move(picked);
  std::sort(pool.labeled_.begin(), pool.labeled_.end());
  pool.unlabeled_.reserve(dataset.size() - seed_size);
  for (std::size_t i = 0; i < dataset.size(); ++i)
    if (!pool.labeled_mask_[i]) pool.unlabeled_.push_back(i);
  return pool;
}

bool Pool::is_labeled(std::size_t index) const {
  return index < labeled_mask_.size() && labeled_mask_[index];
}

int Pool::label(std::size_t index) const {
  if (index >= labeled_mask_.size()) throw InputError("label: index out of range");
  if (!labeled_mask_[index])
    throw StateError("label: ground truth is hidden while the index is unlabeled");
  return dataset_->labels[index];
}

void Pool::commit_query(std::span<const std::size_t> selected) {
  std::unordered_set<std::size_t> seen;
  for (std::size_t idx : selected) {
    if (idx >= labeled_mask_.size())
      throw InputError("commit_query: index out of range");
    if (labeled_mask_[idx])
      throw InputError("commit_query: index is not in the unlabeled set");
    if (!seen.insert(idx).second)
      throw InputError("commit_query: duplicate index in query");
  }
  if (selected.empty()) return;

  for (std::size_t idx : selected) labeled_mask_[idx] = true;
  std::vector<std::size_t> sorted(selected.begin(), selected.end());
  std::sort(sorted.begin(), sorted.end());
  labeled_.insert(labeled_.end(), sorted.begin(), sorted.end());
  std::inplace_merge(labeled_.begin(),
                     labeled_.end() - static_cast<std::ptrdiff_t>(sorted.size()),
                     labeled_.end());
  std::erase_if(unlabeled_, [&](std::size_t i) { return labeled_mask_[i]; });
}

SplitPair split_labeled(const Pool& pool, std::uint64_t seed) {
  if (pool.labeled_count() < 2)
    throw StateError("split_labeled: need at least 2 labeled samples");
  std::vector<std::size_t> order = pool.labeled();
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t half = order.size() / 2;
  SplitPair split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
  split.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(half), order.end());
  return split;
}

Standardizer Standardizer::fit(const Matrix& features,
                               std::span<const std::size_t> rows) {
  if (rows.empty()) throw InputError("standardizer: no rows to fit on");
  Standardizer s;
  s.mean.assign(features.cols(), 0.0);
  s.stddev.assign(features.cols(), 0.0);
  for (std::size_t r : rows) {
    auto row = features.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) s.mean[j] += row[j];
  }
  for (double& m : s.mean) m /= static_cast<double>(rows.size());
  for (std::size_t r : rows) {
    auto row = features.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double d = row[j] - s.mean[j];
      s.stddev[j] += d * d;
    }
  }
  for (double& v : s.stddev) {
    v = std::sqrt(v / static_cast<double>(rows.size()));
    if (v < 1e-12) v = 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& features) const {
  if (features.cols() != mean.size())
    throw ShapeError("standardizer: feature width mismatch");
  Matrix out(features.rows(), features.cols());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    auto src = features.row(i);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < src.size(); ++j)
      dst[j] = (src[j] - mean[j]) / stddev[j];
  }
  return out;
}

Matrix gather_rows(const Matrix& features, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = features.row(rows[i]);
    auto dst = out.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

}  // namespace autoal
