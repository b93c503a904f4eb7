#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "autoal/gmm.hpp"
#include "autoal/matrix.hpp"
#include "autoal/mlp.hpp"
#include "autoal/pool.hpp"
#include "autoal/strategies.hpp"

namespace autoal {

enum class ScoreMode { kContinuous, kBinary };
enum class GmmInput { kPooled, kPerSampleSum };

// Knobs of the bi-level strategy search. Defaults are the desk-scale
// protocol; lr values follow the reference optimizer setup (SGD for the
// search net and loss-prediction head, Adam for the fit net, both at 0.005).
struct SearchConfig {
  std::size_t budget = 50;
  int rounds = 8;
  int cycles = 1;
  double lambda_scale = 1.0;    // sigmoid mixing scale
  double lambda_reg = 1.0;      // regularizer scale
  int warmup_epochs = 20;       // full-scale setting would be 200
  int joint_epochs = 40;        // full-scale setting would be 400
  std::size_t batch_size = 10;  // must be even and >= 2
  double lr_search = 0.005;
  double lr_fit = 0.005;
  ScoreMode score_mode = ScoreMode::kContinuous;
  GmmInput gmm_input = GmmInput::kPooled;
  std::size_t gmm_components = 0;  // 0 -> number of candidates
  int gmm_max_iters = 200;
  double gmm_tol = 1e-6;
  std::size_t gmm_sample_factor = 10;  // draws = factor * |L|
  bool loss_pred_enabled = true;
  double ranking_margin = 1.0;
  double soft_count_temperature = 0.1;
  int mc_passes = 10;
  double dropout_rate = 0.2;
  std::vector<std::size_t> hidden_dims = {64, 64};
  Activation activation = Activation::kTanh;
  bool persist_nets = false;
  // 0 -> use budget / pool size; also used as the per-strategy top fraction.
  double t_override = 0.0;

  std::vector<StrategyId> candidates = candidate_strategies();

  void validate() const;  // throws InputError
  double selection_ratio(std::size_t pool_size) const;
};

// Search network plus the loss-prediction head: one linear probe per hidden
// layer, summed into a scalar predicted loss.
struct SearchHead {
  Mlp network;
  std::vector<std::vector<double>> loss_pred_weights;
  double loss_pred_bias = 0.0;

  SearchHead(std::size_t input_dim, const std::vector<std::size_t>& hidden_dims,
             std::size_t num_strategies, Activation activation, double dropout_rate,
             std::uint64_t seed);

  std::vector<double> predict_losses(const Tape& tape) const;

  std::vector<double> flat_head_params() const;
  void set_flat_head_params(std::span<const double> params);
};

std::uint64_t head_parameter_hash(const SearchHead& head);

// ---- Score shaping and mixing ----------------------------------------------

// (score - threshold) * W, elementwise. W entries are strategy probabilities.
Matrix shape_scores(const Matrix& scores, double threshold, const Matrix& weights);

// mixed_j = sum_k lambda * sigmoid(theta_jk) * shaped_jk.
std::vector<double> mix_scores(const Matrix& shaped, const Matrix& theta,
                               double lambda);

// Full chain from strategy-net logits: W = sigmoid(theta), then shaping, then
// sigmoid mixing. Equals mix_scores(shape_scores(...), theta, lambda).
std::vector<double> mixed_scores_from_logits(const Matrix& scores, double threshold,
                                             const Matrix& theta, double lambda);

// d mixed_j / d theta_jk for the full chain above.
Matrix mixed_scores_logit_grad(const Matrix& scores, double threshold,
                               const Matrix& theta, double lambda);

// Differentiable surrogate for "number of selected samples":
// sum_j sigmoid(mixed_j / temperature).
double soft_select_count(std::span<const double> mixed, double temperature);

// 1/(1 + exp(0.5 * |alpha - t*B|)) - 0.5; maximum 0 at alpha = t*B.
double regularization_loss(double alpha, double t, std::size_t batch_size);
double regularization_loss_grad(double alpha, double t, std::size_t batch_size);

// Scalar training objectives (value only; gradient flow is handled by the
// training steps, whose detachment the contracts below verify).
double fitnet_loss(std::span<const double> per_sample_loss,
                   std::span<const double> mixed_detached, double lambda_reg,
                   double reg_value);
double searchnet_loss(std::span<const double> per_sample_loss_detached,
                      std::span<const double> mixed, double lambda_reg,
                      double reg_value);

// Pairwise ranking loss over (i, i + B/2) pairs:
// mean of max(0, -sign(l_i - l_j) * (p_i - p_j) + margin). Odd batch ->
// InputError.
double loss_prediction_loss(std::span<const double> predicted,
                            std::span<const double> actual_detached, double margin);

// ---- Bi-level training ------------------------------------------------------

struct CycleDiagnostics {
  double threshold = 0.0;
  std::vector<double> fit_loss;     // one entry per joint step
  std::vector<double> search_loss;  // one entry per joint step
  std::vector<double> soft_count;
  std::vector<double> reg_loss;
  std::vector<double> warmup_loss;  // one entry per warmup epoch
  bool gmm_converged = false;
};

// Fired before and after every optimizer step of the joint phase so callers
// can verify the detachment contracts.
struct StepEvent {
  enum class Phase { kFitStep, kSearchStep };
  Phase phase;
  bool before;
  const Mlp& fitnet;
  const SearchHead& head;
};
using StepObserver = std::function<void(const StepEvent&)>;

struct RoundArtifacts {
  SearchHead head;
  Mlp fitnet;
  Standardizer standardizer;
  GaussianMixture score_mixture;
  double threshold = 0.0;
  double selection_ratio = 0.0;
  std::vector<CycleDiagnostics> cycles;
  // Filled by select_query: per-candidate normalized mean mixing scores over
  // the scored unlabeled pool.
  std::vector<double> query_strategy_scores;
};

// One AL iteration of net training: per cycle, a fresh labeled split, a
// warm-up phase for the fit net on the validation half, a strategy score
// table + mixture fit on that half, then alternating fit/search steps over
// batch windows. Requires |L| >= 2 * batch_size. When `warm_start` is given
// its nets are trained further instead of fresh ones.
RoundArtifacts bilevel_train_round(const Pool& pool, const SearchConfig& config,
                                   std::uint64_t seed,
                                   const StepObserver& observer = {},
                                   const RoundArtifacts* warm_start = nullptr);

// Scores every unlabeled sample with the round's nets and threshold, returns
// the top-b indices (ties -> lower dataset index). |U| < b -> InputError.
std::vector<std::size_t> select_query(const Pool& pool, RoundArtifacts& artifacts,
                                      const SearchConfig& config,
                                      std::uint64_t seed);

// Per-strategy mean of sigmoid(theta) * shaped score over the scored pool,
// min-max normalized (constant rows map to all-ones so the per-round maximum
// stays 1).
std::vector<double> normalized_strategy_scores(const Matrix& shaped,
                                               const Matrix& theta);

// ---- Full loop ---------------------------------------------------------------

struct RunProtocol {
  std::size_t seed_size = 40;
  double test_fraction = 0.3;
  int task_epochs = 100;
  std::size_t task_batch_size = 32;
  std::vector<std::size_t> task_hidden_dims = {64, 64};
  double task_dropout = 0.2;
  double task_learning_rate = 0.005;
};

struct RoundRow {
  int round = 0;
  std::size_t labeled_count = 0;
  double test_accuracy = 0.0;
};

struct RunRecord {
  std::vector<RoundRow> rounds;
  // strategy_scores[r] aligns with strategy_order; rounds with queries only.
  std::vector<std::vector<double>> strategy_scores;
  std::vector<int> strategy_score_rounds;
  std::vector<StrategyId> strategy_order;
  double train_ms = 0.0;
  double query_ms = 0.0;
  double eval_ms = 0.0;
};

// Task-model helpers shared by the full loop and the baseline runners.
Mlp train_task_model(const Pool& pool, const Standardizer& standardizer,
                     const RunProtocol& protocol, int num_classes,
                     std::uint64_t seed);
double evaluate_accuracy(Mlp& model, const Matrix& features,
                         std::span<const int> labels,
                         const Standardizer& standardizer);

// The full query-train-evaluate loop: round 0 records the seed-set accuracy,
// then each round trains the nets, queries a batch, commits it, retrains the
// task model from scratch and evaluates.
RunRecord run_autoal(const Dataset& dataset, const SearchConfig& config,
                     const RunProtocol& protocol, std::uint64_t seed);

}  // namespace autoal
