#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "autoal/matrix.hpp"
#include "autoal/mlp.hpp"

namespace autoal {

enum class StrategyId {
  kEntropy,
  kMargin,
  kLeastConfidence,
  kKMeans,
  kBald,
  kVarRatio,
  kMeanStd,
  kRandom,
};

std::string to_string(StrategyId id);
std::optional<StrategyId> parse_strategy(const std::string& name);

// The seven candidate strategies, in canonical order (random excluded; it is
// a harness baseline, not a candidate).
const std::vector<StrategyId>& candidate_strategies();

// Model outputs every strategy consumes. Probability rows are normalized;
// embeddings are the last hidden layer activations.
struct PredictionBundle {
  Matrix eval_probs;
  std::vector<Matrix> mc_probs;
  Matrix embeddings;
};

// Eval probabilities, an MC-dropout stack and embeddings from one network.
// `x` must already be standardized.
PredictionBundle predict_bundle(Mlp& net, const Matrix& x, int mc_passes,
                                std::uint64_t seed);

// Per-sample scores, higher = more informative.
std::vector<double> score_entropy(const PredictionBundle& bundle);
std::vector<double> score_margin(const PredictionBundle& bundle);
std::vector<double> score_least_confidence(const PredictionBundle& bundle);
std::vector<double> score_bald(const PredictionBundle& bundle);
std::vector<double> score_var_ratio(const PredictionBundle& bundle);
std::vector<double> score_mean_std(const PredictionBundle& bundle);
std::vector<double> score_random(std::size_t n, std::uint64_t seed);

// Lloyd's algorithm with k-means++ seeding; deterministic given seed.
struct KMeansResult {
  Matrix centroids;
  std::vector<std::size_t> assignment;
  std::vector<double> inertia_trace;  // non-increasing across iterations
};
KMeansResult kmeans(const Matrix& points, std::size_t k, int max_iters,
                    std::uint64_t seed);

// Cluster-representative scores: for each centroid the nearest point gets
// 1/(1 + distance), all other points 0.
std::vector<double> score_kmeans(const PredictionBundle& bundle, std::size_t k,
                                 int max_iters, std::uint64_t seed);

// One score per requested strategy, in list order, by id; the seed feeds the
// stochastic strategies.
std::vector<double> score_strategy(StrategyId id, const PredictionBundle& bundle,
                                   std::size_t kmeans_clusters, std::uint64_t seed);

// Per-sample, per-strategy scores: `raw` columns min-max normalized to [0,1]
// (constant columns map to 0.5), `binary` marks each strategy's top
// ceil(t_sim * n) rows (ties -> lower index).
struct ScoreTable {
  Matrix raw;
  Matrix binary;
  std::vector<StrategyId> order;
};

ScoreTable build_score_table(const PredictionBundle& bundle,
                             std::span<const StrategyId> strategies, double t_sim,
                             std::uint64_t seed);

// Indices of the b largest scores, ties broken by lower index.
std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t b);

}  // namespace autoal
