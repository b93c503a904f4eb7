#include "autoal/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include "autoal/errors.hpp"
#include "autoal/optimizer.hpp"
#include "autoal/seeding.hpp"

namespace autoal {

namespace {

std::vector<int> labels_for(const Pool& pool, std::span<const std::size_t> indices) {
  std::vector<int> y;
  y.reserve(indices.size());
  for (std::size_t i : indices) y.push_back(pool.label(i));
  return y;
}

Matrix score_matrix(const ScoreTable& table, ScoreMode mode) {
  return mode == ScoreMode::kContinuous ? table.raw : table.binary;
}

Matrix gather_positions(const Matrix& m, std::span<const std::size_t> positions) {
  Matrix out(positions.size(), m.cols());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    auto src = m.row(positions[i]);
    auto dst = out.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

// B consecutive positions starting at window * B, wrapped circularly so the
// trailing window of the alternation always exists.
std::vector<std::size_t> circular_window(std::size_t count, std::size_t window,
                                         std::size_t batch) {
  std::vector<std::size_t> pos(batch);
  for (std::size_t i = 0; i < batch; ++i) pos[i] = (window * batch + i) % count;
  return pos;
}

struct RankingGrad {
  double value = 0.0;
  std::vector<double> d_pred;
};

// Value and subgradient of the pairwise ranking loss, pairs drawn from
// shuffled halves of the batch.
RankingGrad ranking_loss_grad(std::span<const double> predicted,
                              std::span<const double> actual, double margin,
                              std::mt19937_64& rng) {
  const std::size_t n = predicted.size();
  RankingGrad out;
  out.d_pred.assign(n, 0.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t pairs = n / 2;
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::size_t i = order[p];
    const std::size_t j = order[p + pairs];
    const double s = actual[i] > actual[j] ? 1.0 : (actual[i] < actual[j] ? -1.0 : 0.0);
    const double hinge = -s * (predicted[i] - predicted[j]) + margin;
    if (hinge > 0.0) {
      out.value += hinge;
      out.d_pred[i] += -s / static_cast<double>(pairs);
      out.d_pred[j] += s / static_cast<double>(pairs);
    }
  }
  out.value /= static_cast<double>(pairs);
  return out;
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v))
    throw TrainingError(std::string("non-finite ") + what + " during training");
}

}  // namespace

void SearchConfig::validate() const {
  if (budget < 1) throw InputError("config: budget must be >= 1");
  if (rounds < 0) throw InputError("config: rounds must be >= 0");
  if (cycles < 1) throw InputError("config: cycles must be >= 1");
  if (batch_size < 2 || batch_size % 2 != 0)
    throw InputError("config: batch size must be even and >= 2");
  if (lambda_scale <= 0.0) throw InputError("config: lambda must be > 0");
  if (lr_search <= 0.0 || lr_fit <= 0.0)
    throw InputError("config: learning rates must be > 0");
  if (candidates.empty()) throw InputError("config: candidate list is empty");
  if (mc_passes < 2) throw InputError("config: mc passes must be >= 2");
  if (soft_count_temperature <= 0.0)
    throw InputError("config: soft count temperature must be > 0");
  if (t_override < 0.0 || t_override >= 1.0)
    throw InputError("config: t override must lie in [0, 1)");
}

double SearchConfig::selection_ratio(std::size_t pool_size) const {
  if (t_override > 0.0) return t_override;
  if (pool_size == 0) throw InputError("config: empty pool");
  const double t = static_cast<double>(budget) / static_cast<double>(pool_size);
  if (t <= 0.0 || t >= 1.0)
    throw InputError("config: budget/pool ratio must lie in (0, 1)");
  return t;
}

SearchHead::SearchHead(std::size_t input_dim,
                       const std::vector<std::size_t>& hidden_dims,
                       std::size_t num_strategies, Activation activation,
                       double dropout_rate, std::uint64_t seed)
    : network([&] {
        std::vector<std::size_t> dims;
        dims.push_back(input_dim);
        dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
        dims.push_back(num_strategies);
        return Mlp(dims, activation, dropout_rate, seed);
      }()) {
  std::mt19937_64 rng(mix_seed(seed, 0x10ad));
  for (std::size_t h : hidden_dims) {
    const double bound = std::sqrt(6.0 / static_cast<double>(h + 1));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> w(h);
    for (double& v : w) v = dist(rng);
    loss_pred_weights.push_back(std::move(w));
  }
}

std::vector<double> SearchHead::predict_losses(const Tape& tape) const {
  if (tape.post_acts.size() != loss_pred_weights.size())
    throw ShapeError("predict_losses: tape does not match the head layout");
  const std::size_t batch = tape.input.rows();
  std::vector<double> pred(batch, loss_pred_bias);
  for (std::size_t l = 0; l < loss_pred_weights.size(); ++l) {
    const Matrix& h = tape.post_acts[l];
    for (std::size_t j = 0; j < batch; ++j) {
      auto row = h.row(j);
      double dot = 0.0;
      for (std::size_t i = 0; i < row.size(); ++i)
        dot += row[i] * loss_pred_weights[l][i];
      pred[j] += dot;
    }
  }
  return pred;
}

std::vector<double> SearchHead::flat_head_params() const {
  std::vector<double> flat;
  for (const auto& w : loss_pred_weights) flat.insert(flat.end(), w.begin(), w.end());
  flat.push_back(loss_pred_bias);
  return flat;
}

void SearchHead::set_flat_head_params(std::span<const double> params) {
  std::size_t k = 0;
  for (auto& w : loss_pred_weights)
    for (double& v : w) v = params[k++];
  loss_pred_bias = params[k++];
  if (k != params.size()) throw ShapeError("set_flat_head_params: size mismatch");
}

std::uint64_t head_parameter_hash(const SearchHead& head) {
  std::uint64_t h = parameter_hash(head.network);
  for (double v : head.flat_head_params()) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    h ^= bits + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

Matrix shape_scores(const Matrix& scores, double threshold, const Matrix& weights) {
  if (scores.rows() != weights.rows() || scores.cols() != weights.cols())
    throw ShapeError("shape_scores: score/weight shape mismatch");
  Matrix shaped(scores.rows(), scores.cols());
  for (std::size_t i = 0; i < scores.size(); ++i)
    shaped.data()[i] = (scores.data()[i] - threshold) * weights.data()[i];
  return shaped;
}

std::vector<double> mix_scores(const Matrix& shaped, const Matrix& theta,
                               double lambda) {
  if (shaped.rows() != theta.rows() || shaped.cols() != theta.cols())
    throw ShapeError("mix_scores: shape mismatch");
  std::vector<double> mixed(shaped.rows(), 0.0);
  for (std::size_t j = 0; j < shaped.rows(); ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < shaped.cols(); ++k)
      acc += lambda * sigmoid(theta(j, k)) * shaped(j, k);
    mixed[j] = acc;
  }
  return mixed;
}

std::vector<double> mixed_scores_from_logits(const Matrix& scores, double threshold,
                                             const Matrix& theta, double lambda) {
  Matrix weights(theta.rows(), theta.cols());
  for (std::size_t i = 0; i < theta.size(); ++i)
    weights.data()[i] = sigmoid(theta.data()[i]);
  return mix_scores(shape_scores(scores, threshold, weights), theta, lambda);
}

Matrix mixed_scores_logit_grad(const Matrix& scores, double threshold,
                               const Matrix& theta, double lambda) {
  if (scores.rows() != theta.rows() || scores.cols() != theta.cols())
    throw ShapeError("mixed_scores_logit_grad: shape mismatch");
  Matrix grad(theta.rows(), theta.cols());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double w = sigmoid(theta.data()[i]);
    grad.data()[i] =
        2.0 * lambda * w * w * (1.0 - w) * (scores.data()[i] - threshold);
  }
  return grad;
}

double soft_select_count(std::span<const double> mixed, double temperature) {
  double alpha = 0.0;
  for (double s : mixed) alpha += sigmoid(s / temperature);
  return alpha;
}

double regularization_loss(double alpha, double t, std::size_t batch_size) {
  const double dev = std::abs(alpha - t * static_cast<double>(batch_size));
  return 1.0 / (1.0 + std::exp(0.5 * dev)) - 0.5;
}

double regularization_loss_grad(double alpha, double t, std::size_t batch_size) {
  const double delta = alpha - t * static_cast<double>(batch_size);
  const double s = sigmoid(-0.5 * std::abs(delta));
  const double sign = delta > 0.0 ? 1.0 : (delta < 0.0 ? -1.0 : 0.0);
  return -0.5 * sign * s * (1.0 - s);
}

double fitnet_loss(std::span<const double> per_sample_loss,
                   std::span<const double> mixed_detached, double lambda_reg,
                   double reg_value) {
  if (per_sample_loss.size() != mixed_detached.size())
    throw ShapeError("fitnet_loss: size mismatch");
  double acc = 0.0;
  for (std::size_t j = 0; j < per_sample_loss.size(); ++j)
    acc += mixed_detached[j] * per_sample_loss[j];
  return acc / static_cast<double>(per_sample_loss.size()) + lambda_reg * reg_value;
}

double searchnet_loss(std::span<const double> per_sample_loss_detached,
                      std::span<const double> mixed, double lambda_reg,
                      double reg_value) {
  if (per_sample_loss_detached.size() != mixed.size())
    throw ShapeError("searchnet_loss: size mismatch");
  double acc = 0.0;
  for (std::size_t j = 0; j < mixed.size(); ++j)
    acc += mixed[j] * per_sample_loss_detached[j];
  return -acc / static_cast<double>(mixed.size()) - lambda_reg * reg_value;
}

double loss_prediction_loss(std::span<const double> predicted,
                            std::span<const double> actual_detached, double margin) {
  if (predicted.size() != actual_detached.size())
    throw ShapeError("loss_prediction_loss: size mismatch");
  if (predicted.size() < 2 || predicted.size() % 2 != 0)
    throw InputError("loss_prediction_loss: batch size must be even");
  const std::size_t pairs = predicted.size() / 2;
  double acc = 0.0;
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::size_t i = p;
    const std::size_t j = p + pairs;
    const double s = actual_detached[i] > actual_detached[j]
                         ? 1.0
                         : (actual_detached[i] < actual_detached[j] ? -1.0 : 0.0);
    acc += std::max(0.0, -s * (predicted[i] - predicted[j]) + margin);
  }
  return acc / static_cast<double>(pairs);
}

namespace {

// Shared machinery: builds the prediction bundle, the strategy score table,
// the score mixture and the top-t threshold for one sample set.
struct ScoringContext {
  ScoreTable table;
  Matrix scores;  // score_mode-selected matrix
  GaussianMixture mixture;
  bool mixture_converged = false;
  double threshold = 0.0;
};

ScoringContext build_scoring_context(Mlp& fitnet, const Matrix& x,
                                     const SearchConfig& config, double ratio,
                                     std::size_t labeled_count, std::uint64_t seed) {
  ScoringContext ctx;
  PredictionBundle bundle =
      predict_bundle(fitnet, x, config.mc_passes, mix_seed(seed, 1));
  ctx.table = build_score_table(bundle, config.candidates, ratio, mix_seed(seed, 2));
  ctx.scores = score_matrix(ctx.table, config.score_mode);

  std::vector<double> observations;
  if (config.gmm_input == GmmInput::kPooled) {
    observations = ctx.scores.data();
  } else {
    observations.reserve(ctx.scores.rows());
    for (std::size_t j = 0; j < ctx.scores.rows(); ++j) {
      double sum = 0.0;
      for (double v : ctx.scores.row(j)) sum += v;
      observations.push_back(sum);
    }
  }
  std::size_t k = config.gmm_components > 0 ? config.gmm_components
                                            : config.candidates.size();
  k = std::min(k, observations.size());
  auto [gm, report] = fit_em(observations, k, config.gmm_max_iters, config.gmm_tol,
                             mix_seed(seed, 3));
  ctx.mixture = std::move(gm);
  ctx.mixture_converged = report.converged;

  const std::size_t draws = std::max<std::size_t>(
      config.gmm_sample_factor * std::max<std::size_t>(labeled_count, 1), 16);
  const std::vector<double> sampled = sample(ctx.mixture, draws, mix_seed(seed, 4));
  ctx.threshold = threshold_top_t(sampled, ratio);
  return ctx;
}

}  // namespace

RoundArtifacts bilevel_train_round(const Pool& pool, const SearchConfig& config,
                                   std::uint64_t seed, const StepObserver& observer,
                                   const RoundArtifacts* warm_start) {
  config.validate();
  const std::size_t labeled = pool.labeled_count();
  if (labeled < 2 * config.batch_size)
    throw StateError("bilevel_train_round: need |L| >= 2 * batch size");

  const Dataset& dataset = pool.dataset();
  const std::size_t input_dim = dataset.features.cols();
  const std::size_t num_strategies = config.candidates.size();
  const double ratio = config.selection_ratio(dataset.size());

  RoundArtifacts artifacts{
      warm_start ? warm_start->head
                 : SearchHead(input_dim, config.hidden_dims, num_strategies,
                              config.activation, config.dropout_rate,
                              mix_seed(seed, 11)),
      warm_start ? warm_start->fitnet
                 : Mlp([&] {
                         std::vector<std::size_t> dims;
                         dims.push_back(input_dim);
                         dims.insert(dims.end(), config.hidden_dims.begin(),
                                     config.hidden_dims.end());
                         dims.push_back(
                             static_cast<std::size_t>(dataset.num_classes));
                         return dims;
                       }(),
                       config.activation, config.dropout_rate, mix_seed(seed, 12)),
      Standardizer::fit(dataset.features, pool.labeled()),
      GaussianMixture{},
  };
  artifacts.selection_ratio = ratio;

  Mlp& fitnet = artifacts.fitnet;
  SearchHead& head = artifacts.head;

  Optimizer fit_opt = Optimizer::adam({.learning_rate = config.lr_fit});
  Optimizer search_opt = Optimizer::sgd({.learning_rate = config.lr_search});
  Optimizer head_opt = Optimizer::sgd({.learning_rate = config.lr_search});

  const double batch_target = ratio;  // t in the regularizer, per batch window

  for (int cycle = 0; cycle < config.cycles; ++cycle) {
    CycleDiagnostics diag;
    const std::uint64_t cycle_seed = mix_seed(seed, 0x100 + cycle);
    const SplitPair split = split_labeled(pool, mix_seed(cycle_seed, 1));
    const std::vector<std::size_t>& validation = split.validation;

    const Matrix x_val = artifacts.standardizer.apply(
        gather_rows(dataset.features, validation));
    const std::vector<int> y_val = labels_for(pool, validation);

    // Warm-up: plain cross-entropy on the validation half.
    fitnet.set_mode(Mode::kTrain);
    const std::vector<double> unit_weights(validation.size(), 1.0);
    for (int epoch = 0; epoch < config.warmup_epochs; ++epoch) {
      auto [logits, tape] = fitnet.forward(x_val);
      const Matrix probs = softmax_rows(logits);
      const CrossEntropy ce = cross_entropy(probs, y_val);
      check_finite(ce.mean, "warmup loss");
      diag.warmup_loss.push_back(ce.mean);
      const Matrix upstream = softmax_ce_logit_grad(
          probs, y_val, unit_weights, 1.0 / static_cast<double>(validation.size()));
      fit_opt.step(fitnet, fitnet.backward(tape, upstream));
    }

    // Strategy scores, mixture and threshold for this cycle.
    ScoringContext ctx =
        build_scoring_context(fitnet, x_val, config, ratio, labeled,
                              mix_seed(cycle_seed, 2));
    diag.threshold = ctx.threshold;
    diag.gmm_converged = ctx.mixture_converged;
    artifacts.score_mixture = ctx.mixture;
    artifacts.threshold = ctx.threshold;

    // Joint phase: alternate fit/search updates over circular batch windows.
    std::mt19937_64 pair_rng(mix_seed(cycle_seed, 3));
    const std::size_t windows = labeled / (2 * config.batch_size);
    for (int epoch = 0; epoch < config.joint_epochs; ++epoch) {
      for (std::size_t n = 0; n <= windows; ++n) {
        // --- Fit step (window n+1) ---
        {
          const std::vector<std::size_t> pos =
              circular_window(validation.size(), n + 1, config.batch_size);
          const Matrix x = gather_positions(x_val, pos);
          std::vector<int> y(pos.size());
          for (std::size_t i = 0; i < pos.size(); ++i) y[i] = y_val[pos[i]];
          const Matrix scores = gather_positions(ctx.scores, pos);

          head.network.set_mode(Mode::kEval);
          const Matrix theta = head.network.forward(x).first;
          const std::vector<double> mixed_detached = mixed_scores_from_logits(
              scores, ctx.threshold, theta, config.lambda_scale);
          const double alpha =
              soft_select_count(mixed_detached, config.soft_count_temperature);
          const double reg =
              regularization_loss(alpha, batch_target, config.batch_size);

          fitnet.set_mode(Mode::kTrain);
          auto [logits, tape] = fitnet.forward(x);
          const Matrix probs = softmax_rows(logits);
          const CrossEntropy ce = cross_entropy(probs, y);
          const double loss =
              fitnet_loss(ce.per_sample, mixed_detached, config.lambda_reg, reg);
          check_finite(loss, "fit loss");
          diag.fit_loss.push_back(loss);

          const Matrix upstream = softmax_ce_logit_grad(
              probs, y, mixed_detached,
              1.0 / static_cast<double>(config.batch_size));
          const Gradients grads = fitnet.backward(tape, upstream);
          if (observer)
            observer({StepEvent::Phase::kFitStep, true, fitnet, head});
          fit_opt.step(fitnet, grads);
          if (observer)
            observer({StepEvent::Phase::kFitStep, false, fitnet, head});
        }

        // --- Search step (window n) ---
        {
          const std::vector<std::size_t> pos =
              circular_window(validation.size(), n, config.batch_size);
          const Matrix x = gather_positions(x_val, pos);
          std::vector<int> y(pos.size());
          for (std::size_t i = 0; i < pos.size(); ++i) y[i] = y_val[pos[i]];
          const Matrix scores = gather_positions(ctx.scores, pos);

          fitnet.set_mode(Mode::kEval);
          const Matrix fit_probs = softmax_rows(fitnet.forward(x).first);
          const CrossEntropy ce = cross_entropy(fit_probs, y);  // detached

          head.network.set_mode(Mode::kTrain);
          auto [theta, tape] = head.network.forward(x);
          const std::vector<double> mixed = mixed_scores_from_logits(
              scores, ctx.threshold, theta, config.lambda_scale);
          const double alpha =
              soft_select_count(mixed, config.soft_count_temperature);
          const double reg =
              regularization_loss(alpha, batch_target, config.batch_size);
          double loss = searchnet_loss(ce.per_sample, mixed, config.lambda_reg, reg);

          // dLoss/dMixed: the score term plus the soft-count/regularizer path.
          const double reg_grad =
              -config.lambda_reg *
              regularization_loss_grad(alpha, batch_target, config.batch_size);
          std::vector<double> d_mixed(mixed.size());
          for (std::size_t j = 0; j < mixed.size(); ++j) {
            const double sc = sigmoid(mixed[j] / config.soft_count_temperature);
            d_mixed[j] =
                -ce.per_sample[j] / static_cast<double>(config.batch_size) +
                reg_grad * sc * (1.0 - sc) / config.soft_count_temperature;
          }
          Matrix upstream = mixed_scores_logit_grad(scores, ctx.threshold, theta,
                                                    config.lambda_scale);
          for (std::size_t j = 0; j < upstream.rows(); ++j) {
            auto row = upstream.row(j);
            for (double& v : row) v *= d_mixed[j];
          }

          std::vector<Matrix> hidden_upstream;
          std::vector<double> head_grads;
          if (config.loss_pred_enabled) {
            const std::vector<double> predicted = head.predict_losses(tape);
            const RankingGrad rank = ranking_loss_grad(
                predicted, ce.per_sample, config.ranking_margin, pair_rng);
            loss += rank.value;
            hidden_upstream.reserve(tape.post_acts.size());
            for (std::size_t l = 0; l < tape.post_acts.size(); ++l) {
              Matrix inj(tape.post_acts[l].rows(), tape.post_acts[l].cols());
              for (std::size_t j = 0; j < inj.rows(); ++j) {
                auto row = inj.row(j);
                for (std::size_t i = 0; i < row.size(); ++i)
                  row[i] = rank.d_pred[j] * head.loss_pred_weights[l][i];
              }
              hidden_upstream.push_back(std::move(inj));
            }
            for (std::size_t l = 0; l < tape.post_acts.size(); ++l) {
              const Matrix& h = tape.post_acts[l];
              for (std::size_t i = 0; i < h.cols(); ++i) {
                double g = 0.0;
                for (std::size_t j = 0; j < h.rows(); ++j)
                  g += rank.d_pred[j] * h(j, i);
                head_grads.push_back(g);
              }
            }
            head_grads.push_back(
                std::accumulate(rank.d_pred.begin(), rank.d_pred.end(), 0.0));
          }
          check_finite(loss, "search loss");
          diag.search_loss.push_back(loss);
          diag.soft_count.push_back(alpha);
          diag.reg_loss.push_back(reg);

          const Gradients grads = head.network.backward(
              tape, upstream,
              config.loss_pred_enabled ? &hidden_upstream : nullptr);
          if (observer)
            observer({StepEvent::Phase::kSearchStep, true, fitnet, head});
          search_opt.step(head.network, grads);
          if (config.loss_pred_enabled) {
            std::vector<double> head_params = head.flat_head_params();
            head_opt.step(head_params, head_grads);
            head.set_flat_head_params(head_params);
          }
          if (observer)
            observer({StepEvent::Phase::kSearchStep, false, fitnet, head});
        }
      }
    }
    artifacts.cycles.push_back(std::move(diag));
  }

  fitnet.set_mode(Mode::kEval);
  head.network.set_mode(Mode::kEval);
  return artifacts;
}

std::vector<std::size_t> select_query(const Pool& pool, RoundArtifacts& artifacts,
                                      const SearchConfig& config,
                                      std::uint64_t seed) {
  const std::vector<std::size_t>& unlabeled = pool.unlabeled();
  if (unlabeled.size() < config.budget)
    throw InputError("select_query: unlabeled pool smaller than budget");

  const Dataset& dataset = pool.dataset();
  const double ratio = config.selection_ratio(dataset.size());
  const Matrix x = artifacts.standardizer.apply(
      gather_rows(dataset.features, unlabeled));

  PredictionBundle bundle =
      predict_bundle(artifacts.fitnet, x, config.mc_passes, mix_seed(seed, 1));
  const ScoreTable table =
      build_score_table(bundle, config.candidates, ratio, mix_seed(seed, 2));
  const Matrix scores = score_matrix(table, config.score_mode);

  artifacts.head.network.set_mode(Mode::kEval);
  const Matrix theta = artifacts.head.network.forward(x).first;

  Matrix weights(theta.rows(), theta.cols());
  for (std::size_t i = 0; i < theta.size(); ++i)
    weights.data()[i] = sigmoid(theta.data()[i]);
  const Matrix shaped = shape_scores(scores, artifacts.threshold, weights);
  const std::vector<double> mixed =
      mix_scores(shaped, theta, config.lambda_scale);

  artifacts.query_strategy_scores = normalized_strategy_scores(shaped, theta);

  const std::vector<std::size_t> top = top_k_indices(mixed, config.budget);
  std::vector<std::size_t> query;
  query.reserve(top.size());
  for (std::size_t pos : top) query.push_back(unlabeled[pos]);
  return query;
}

std::vector<double> normalized_strategy_scores(const Matrix& shaped,
                                               const Matrix& theta) {
  if (shaped.rows() != theta.rows() || shaped.cols() != theta.cols())
    throw ShapeError("normalized_strategy_scores: shape mismatch");
  std::vector<double> means(shaped.cols(), 0.0);
  for (std::size_t j = 0; j < shaped.rows(); ++j)
    for (std::size_t k = 0; k < shaped.cols(); ++k)
      means[k] += sigmoid(theta(j, k)) * shaped(j, k);
  for (double& v : means) v /= static_cast<double>(shaped.rows());

  const auto [lo, hi] = std::minmax_element(means.begin(), means.end());
  if (*hi - *lo <= 0.0) return std::vector<double>(means.size(), 1.0);
  std::vector<double> normalized(means.size());
  for (std::size_t k = 0; k < means.size(); ++k)
    normalized[k] = (means[k] - *lo) / (*hi - *lo);
  return normalized;
}

Mlp train_task_model(const Pool& pool, const Standardizer& standardizer,
                     const RunProtocol& protocol, int num_classes,
                     std::uint64_t seed) {
  const Dataset& dataset = pool.dataset();
  std::vector<std::size_t> dims;
  dims.push_back(dataset.features.cols());
  dims.insert(dims.end(), protocol.task_hidden_dims.begin(),
              protocol.task_hidden_dims.end());
  dims.push_back(static_cast<std::size_t>(num_classes));
  Mlp model(dims, Activation::kTanh, protocol.task_dropout, mix_seed(seed, 1));

  const Matrix x_all =
      standardizer.apply(gather_rows(dataset.features, pool.labeled()));
  const std::vector<int> y_all = labels_for(pool, pool.labeled());

  Optimizer opt = Optimizer::adam({.learning_rate = protocol.task_learning_rate});
  std::mt19937_64 rng(mix_seed(seed, 2));
  std::vector<std::size_t> order(pool.labeled_count());
  std::iota(order.begin(), order.end(), 0);

  model.set_mode(Mode::kTrain);
  for (int epoch = 0; epoch < protocol.task_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += protocol.task_batch_size) {
      const std::size_t end =
          std::min(start + protocol.task_batch_size, order.size());
      const std::span<const std::size_t> pos(order.data() + start, end - start);
      const Matrix x = gather_positions(x_all, pos);
      std::vector<int> y(pos.size());
      for (std::size_t i = 0; i < pos.size(); ++i) y[i] = y_all[pos[i]];

      auto [logits, tape] = model.forward(x);
      const Matrix probs = softmax_rows(logits);
      const std::vector<double> unit(pos.size(), 1.0);
      const Matrix upstream = softmax_ce_logit_grad(
          probs, y, unit, 1.0 / static_cast<double>(pos.size()));
      opt.step(model, model.backward(tape, upstream));
    }
  }
  model.set_mode(Mode::kEval);
  return model;
}

double evaluate_accuracy(Mlp& model, const Matrix& features,
                         std::span<const int> labels,
                         const Standardizer& standardizer) {
  const Mode saved = model.mode();
  model.set_mode(Mode::kEval);
  const Matrix logits = model.forward(standardizer.apply(features)).first;
  model.set_mode(saved);
  std::size_t hits = 0;
  for (std::size_t j = 0; j < logits.rows(); ++j) {
    auto row = logits.row(j);
    std::size_t arg = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
      if (row[c] > row[arg]) arg = c;
    if (static_cast<int>(arg) == labels[j]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

RunRecord run_autoal(const Dataset& dataset, const SearchConfig& config,
                     const RunProtocol& protocol, std::uint64_t seed) {
  config.validate();
  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point start) {
    return std::chrono::duration<double, std::milli>(clock::now() - start).count();
  };

  auto [train, test] = split_train_test(dataset, protocol.test_fraction,
                                        mix_seed(seed, seed_stream::kTestSplit));
  Pool pool = Pool::init(train, protocol.seed_size,
                         mix_seed(seed, seed_stream::kPoolInit));

  RunRecord record;
  record.strategy_order = config.candidates;

  auto record_round = [&](int round) {
    const auto start = clock::now();
    const Standardizer standardizer =
        Standardizer::fit(train.features, pool.labeled());
    Mlp model = train_task_model(pool, standardizer, protocol, train.num_classes,
                                 round_seed(seed, seed_stream::kTaskModel,
                                            static_cast<std::uint64_t>(round)));
    const double accuracy =
        evaluate_accuracy(model, test.features, test.labels, standardizer);
    record.eval_ms += ms_since(start);
    record.rounds.push_back({round, pool.labeled_count(), accuracy});
  };

  record_round(0);

  RoundArtifacts* previous = nullptr;
  std::vector<RoundArtifacts> kept;  // only used when persist_nets is set
  for (int round = 1; round <= config.rounds; ++round) {
    auto start = clock::now();
    RoundArtifacts artifacts = bilevel_train_round(
        pool, config, round_seed(seed, seed_stream::kBilevel,
                                 static_cast<std::uint64_t>(round)),
        {}, config.persist_nets ? previous : nullptr);
    record.train_ms += ms_since(start);

    start = clock::now();
    const std::vector<std::size_t> query = select_query(
        pool, artifacts, config,
        round_seed(seed, seed_stream::kQuery, static_cast<std::uint64_t>(round)));
    record.query_ms += ms_since(start);

    record.strategy_scores.push_back(artifacts.query_strategy_scores);
    record.strategy_score_rounds.push_back(round);
    pool.commit_query(query);
    record_round(round);

    if (config.persist_nets) {
      kept.clear();
      kept.push_back(std::move(artifacts));
      previous = &kept.back();
    }
  }
  return record;
}

}  // namespace autoal
