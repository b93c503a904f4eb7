#include "autoal/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "autoal/errors.hpp"
#include "autoal/seeding.hpp"

namespace autoal {

namespace {

double row_entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

Matrix mean_mc_probs(const std::vector<Matrix>& stack) {
  Matrix mean(stack.front().rows(), stack.front().cols());
  for (const Matrix& m : stack) mean.add_inplace(m);
  mean.scale_inplace(1.0 / static_cast<double>(stack.size()));
  return mean;
}

void require_mc(const PredictionBundle& bundle, const char* who) {
  if (bundle.mc_probs.size() < 2)
    throw InputError(std::string(who) + ": needs an MC stack with T >= 2");
}

double sq_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

}  // namespace

std::string to_string(StrategyId id) {
  switch (id) {
    case StrategyId::kEntropy: return "entropy";
    case StrategyId::kMargin: return "margin";
    case StrategyId::kLeastConfidence: return "least_confidence";
    case StrategyId::kKMeans: return "kmeans";
    case StrategyId::kBald: return "bald";
    case StrategyId::kVarRatio: return "var_ratio";
    case StrategyId::kMeanStd: return "mean_std";
    case StrategyId::kRandom: return "random";
  }
  return "unknown";
}

std::optional<StrategyId> parse_strategy(const std::string& name) {
  for (StrategyId id :
       {StrategyId::kEntropy, StrategyId::kMargin, StrategyId::kLeastConfidence,
        StrategyId::kKMeans, StrategyId::kBald, StrategyId::kVarRatio,
        StrategyId::kMeanStd, StrategyId::kRandom})
    if (to_string(id) == name) return id;
  return std::nullopt;
}

const std::vector<StrategyId>& candidate_strategies() {
  static const std::vector<StrategyId> kAll = {
      StrategyId::kEntropy,   StrategyId::kMargin, StrategyId::kLeastConfidence,
      StrategyId::kKMeans,    StrategyId::kBald,   StrategyId::kVarRatio,
      StrategyId::kMeanStd};
  return kAll;
}

PredictionBundle predict_bundle(Mlp& net, const Matrix& x, int mc_passes,
                                std::uint64_t seed) {
  PredictionBundle bundle;
  const Mode saved = net.mode();
  net.set_mode(Mode::kEval);
  auto [logits, tape] = net.forward(x);
  bundle.eval_probs = softmax_rows(logits);
  bundle.embeddings = tape.post_acts.empty() ? x : tape.post_acts.back();
  net.set_mode(saved);
  bundle.mc_probs = mc_dropout_predict(net, x, mc_passes, seed);
  return bundle;
}

std::vector<double> score_entropy(const PredictionBundle& bundle) {
  std::vector<double> scores(bundle.eval_probs.rows());
  for (std::size_t j = 0; j < scores.size(); ++j)
    scores[j] = row_entropy(bundle.eval_probs.row(j));
  return scores;
}

std::vector<double> score_margin(const PredictionBundle& bundle) {
  if (bundle.eval_probs.cols() < 2)
    throw InputError("score_margin: need at least 2 classes");
  std::vector<double> scores(bundle.eval_probs.rows());
  for (std::size_t j = 0; j < scores.size(); ++j) {
    double top1 = -1.0, top2 = -1.0;
    for (double v : bundle.eval_probs.row(j)) {
      if (v > top1) {
        top2 = top1;
        top1 = v;
      } else if (v > top2) {
        top2 = v;
      }
    }
    scores[j] = -(top1 - top2);
  }
  return scores;
}

std::vector<double> score_least_confidence(const PredictionBundle& bundle) {
  std::vector<double> scores(bundle.eval_probs.rows());
  for (std::size_t j = 0; j < scores.size(); ++j) {
    double top = 0.0;
    for (double v : bundle.eval_probs.row(j)) top = std::max(top, v);
    scores[j] = 1.0 - top;
  }
  return scores;
}

std::vector<double> score_bald(const PredictionBundle& bundle) {
  require_mc(bundle, "score_bald");
  const Matrix mean = mean_mc_probs(bundle.mc_probs);
  std::vector<double> scores(mean.rows());
  for (std::size_t j = 0; j < scores.size(); ++j) {
    double expected_entropy = 0.0;
    for (const Matrix& pass : bundle.mc_probs)
      expected_entropy += row_entropy(pass.row(j));
    expected_entropy /= static_cast<double>(bundle.mc_probs.size());
    double s = row_entropy(mean.row(j)) - expected_entropy;
    if (s < 0.0 && s > -1e-9) s = 0.0;
    scores[j] = s;
  }
  return scores;
}

std::vector<double> score_var_ratio(const PredictionBundle& bundle) {
  require_mc(bundle, "score_var_ratio");
  const Matrix mean = mean_mc_probs(bundle.mc_probs);
  std::vector<double> scores(mean.rows());
  for (std::size_t j = 0; j < scores.size(); ++j) {
    double top = 0.0;
    for (double v : mean.row(j)) top = std::max(top, v);
    scores[j] = 1.0 - top;
  }
  return scores;
}

std::vector<double> score_mean_std(const PredictionBundle& bundle) {
  require_mc(bundle, "score_mean_std");
  const Matrix mean = mean_mc_probs(bundle.mc_probs);
  const double t = static_cast<double>(bundle.mc_probs.size());
  std::vector<double> scores(mean.rows(), 0.0);
  for (std::size_t j = 0; j < scores.size(); ++j) {
    double sum_std = 0.0;
    for (std::size_t c = 0; c < mean.cols(); ++c) {
      double var = 0.0;
      for (const Matrix& pass : bundle.mc_probs) {
        const double d = pass(j, c) - mean(j, c);
        var += d * d;
      }
      sum_std += std::sqrt(var / t);
    }
    scores[j] = sum_std / static_cast<double>(mean.cols());
  }
  return scores;
}

std::vector<double> score_random(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<double> scores(n);
  for (double& s : scores) s = dist(rng);
  return scores;
}

KMeansResult kmeans(const Matrix& points, std::size_t k, int max_iters,
                    std::uint64_t seed) {
  const std::size_t n = points.rows();
  if (k == 0 || k > n) throw InputError("kmeans: k must satisfy 1 <= k <= n");

  std::mt19937_64 rng(seed);
  KMeansResult result;
  result.centroids = Matrix(k, points.cols());

  // k-means++ seeding.
  std::vector<std::size_t> chosen;
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  chosen.push_back(first(rng));
  std::vector<double> d2(n, std::numeric_limits<double>::max());
  while (chosen.size() < k) {
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], sq_distance(points.row(i), points.row(chosen.back())));
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t next = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> pick(0.0, total);
      double r = pick(rng);
      for (std::size_t i = 0; i < n; ++i) {
        r -= d2[i];
        if (r <= 0.0) {
          next = i;
          break;
        }
      }
    } else {
      next = chosen.size() % n;  // all remaining points coincide
    }
    chosen.push_back(next);
  }
  for (std::size_t c = 0; c < k; ++c) {
    auto src = points.row(chosen[c]);
    auto dst = result.centroids.row(c);
    std::copy(src.begin(), src.end(), dst.begin());
  }

  result.assignment.assign(n, 0);
  for (int iter = 0; iter < max_iters; ++iter) {
    double inertia = 0.0;
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      std::size_t arg = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_distance(points.row(i), result.centroids.row(c));
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      if (result.assignment[i] != arg) {
        result.assignment[i] = arg;
        moved = true;
      }
      inertia += best;
    }
    result.inertia_trace.push_back(inertia);

    Matrix sums(k, points.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto src = points.row(i);
      auto dst = sums.row(result.assignment[i]);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
      counts[result.assignment[i]]++;
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // keep the stale centroid
      auto dst = result.centroids.row(c);
      for (std::size_t j = 0; j < dst.size(); ++j)
        dst[j] = sums(c, j) / static_cast<double>(counts[c]);
    }
    if (!moved && result.inertia_trace.size() > 1) break;
  }
  return result;
}

std::vector<double> score_kmeans(const PredictionBundle& bundle, std::size_t k,
                                 int max_iters, std::uint64_t seed) {
  if (bundle.embeddings.rows() == 0)
    throw InputError("score_kmeans: embeddings required");
  const KMeansResult result = kmeans(bundle.embeddings, k, max_iters, seed);
  const std::size_t n = bundle.embeddings.rows();
  std::vector<double> scores(n, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    double best = std::numeric_limits<double>::max();
    std::size_t rep = n;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = sq_distance(bundle.embeddings.row(i), result.centroids.row(c));
      if (d < best) {
        best = d;
        rep = i;
      }
    }
    if (rep < n) scores[rep] = 1.0 / (1.0 + std::sqrt(best));
  }
  return scores;
}

std::vector<double> score_strategy(StrategyId id, const PredictionBundle& bundle,
                                   std::size_t kmeans_clusters, std::uint64_t seed) {
  switch (id) {
    case StrategyId::kEntropy: return score_entropy(bundle);
    case StrategyId::kMargin: return score_margin(bundle);
    case StrategyId::kLeastConfidence: return score_least_confidence(bundle);
    case StrategyId::kKMeans:
      return score_kmeans(bundle, kmeans_clusters, 25, seed);
    case StrategyId::kBald: return score_bald(bundle);
    case StrategyId::kVarRatio: return score_var_ratio(bundle);
    case StrategyId::kMeanStd: return score_mean_std(bundle);
    case StrategyId::kRandom: return score_random(bundle.eval_probs.rows(), seed);
  }
  throw InputError("score_strategy: unknown strategy");
}

ScoreTable build_score_table(const PredictionBundle& bundle,
                             std::span<const StrategyId> strategies, double t_sim,
                             std::uint64_t seed) {
  if (strategies.empty()) throw InputError("build_score_table: empty strategy list");
  if (t_sim <= 0.0 || t_sim >= 1.0)
    throw InputError("build_score_table: t_sim must lie in (0, 1)");
  const std::size_t n = bundle.eval_probs.rows();
  const std::size_t top =
      static_cast<std::size_t>(std::ceil(t_sim * static_cast<double>(n)));

  ScoreTable table;
  table.order.assign(strategies.begin(), strategies.end());
  table.raw = Matrix(n, strategies.size());
  table.binary = Matrix(n, strategies.size());

  for (std::size_t s = 0; s < strategies.size(); ++s) {
    const std::vector<double> scores =
        score_strategy(strategies[s], bundle, std::max<std::size_t>(top, 1),
                       mix_seed(seed, s));

    double lo = scores[0], hi = scores[0];
    for (double v : scores) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const bool constant = hi - lo <= 0.0;
    for (std::size_t j = 0; j < n; ++j)
      table.raw(j, s) = constant ? 0.5 : (scores[j] - lo) / (hi - lo);

    const std::vector<std::size_t> selected = top_k_indices(scores, top);
    for (std::size_t j : selected) table.binary(j, s) = 1.0;
  }
  return table;
}

std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t b) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
    return scores[a] > scores[c];
  });
  order.resize(std::min(b, order.size()));
  return order;
}

}  // namespace autoal
