#include "autoal/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "autoal/errors.hpp"
#include "autoal/seeding.hpp"

namespace autoal {

namespace {

std::string format_accuracy(double v) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(6);
  ss << v;
  return ss.str();
}

std::vector<std::size_t> random_query(const Pool& pool, std::size_t budget,
                                      std::uint64_t seed) {
  std::vector<std::size_t> candidates = pool.unlabeled();
  std::mt19937_64 rng(seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  candidates.resize(budget);
  return candidates;
}

// Scores U with the given model and one strategy, returns the top-b dataset
// indices. KMeans selects its b cluster representatives.
std::vector<std::size_t> strategy_query(const Pool& pool, Mlp& model,
                                        const Standardizer& standardizer,
                                        StrategyId id, std::size_t budget,
                                        int mc_passes, std::uint64_t seed) {
  const std::vector<std::size_t>& unlabeled = pool.unlabeled();
  const Matrix x =
      standardizer.apply(gather_rows(pool.dataset().features, unlabeled));
  const PredictionBundle bundle =
      predict_bundle(model, x, mc_passes, mix_seed(seed, 1));
  const std::vector<double> scores =
      score_strategy(id, bundle, budget, mix_seed(seed, 2));
  std::vector<std::size_t> query;
  query.reserve(budget);
  for (std::size_t pos : top_k_indices(scores, budget))
    query.push_back(unlabeled[pos]);
  return query;
}

RunRecord run_baseline(const Dataset& dataset, const MethodSpec& method,
                       const SearchConfig& search, const RunProtocol& protocol,
                       std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point start) {
    return std::chrono::duration<double, std::milli>(clock::now() - start).count();
  };

  auto [train, test] = split_train_test(dataset, protocol.test_fraction,
                                        mix_seed(seed, seed_stream::kTestSplit));
  Pool pool = Pool::init(train, protocol.seed_size,
                         mix_seed(seed, seed_stream::kPoolInit));

  RunRecord record;
  Standardizer standardizer = Standardizer::fit(train.features, pool.labeled());
  Mlp model = train_task_model(pool, standardizer, protocol, train.num_classes,
                               round_seed(seed, seed_stream::kTaskModel, 0));
  record.rounds.push_back(
      {0, pool.labeled_count(),
       evaluate_accuracy(model, test.features, test.labels, standardizer)});

  for (int round = 1; round <= search.rounds; ++round) {
    const auto query_start = clock::now();
    std::vector<std::size_t> query;
    if (method.kind == MethodSpec::Kind::kRandom) {
      query = random_query(pool, search.budget,
                           round_seed(seed, seed_stream::kRandomBaseline,
                                      static_cast<std::uint64_t>(round)));
    } else {
      // Score with the previous round's task model, the newest model trained
      // before this query.
      query = strategy_query(pool, model, standardizer, method.strategy,
                             search.budget, search.mc_passes,
                             round_seed(seed, seed_stream::kBaselineScore,
                                        static_cast<std::uint64_t>(round)));
    }
    record.query_ms += ms_since(query_start);
    pool.commit_query(query);

    const auto eval_start = clock::now();
    standardizer = Standardizer::fit(train.features, pool.labeled());
    model = train_task_model(pool, standardizer, protocol, train.num_classes,
                             round_seed(seed, seed_stream::kTaskModel,
                                        static_cast<std::uint64_t>(round)));
    record.eval_ms += ms_since(eval_start);
    record.rounds.push_back(
        {round, pool.labeled_count(),
         evaluate_accuracy(model, test.features, test.labels, standardizer)});
  }
  return record;
}

}  // namespace

RunRecord run_method(const Dataset& dataset, const MethodSpec& method,
                     const SearchConfig& search, const RunProtocol& protocol,
                     std::uint64_t seed) {
  if (method.kind == MethodSpec::Kind::kAutoAl)
    return run_autoal(dataset, search, protocol, seed);
  return run_baseline(dataset, method, search, protocol, seed);
}

void write_rounds_csv(const std::string& path,
                      const std::vector<CompletedRun>& runs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << "run_id,method,seed,round,labeled_count,test_accuracy\n";
  for (const CompletedRun& run : runs) {
    for (const RoundRow& row : run.record.rounds)
      out << run.run_id << ',' << run.method << ',' << run.seed << ','
          << row.round << ',' << row.labeled_count << ','
          << format_accuracy(row.test_accuracy) << '\n';
    if (run.failed)
      out << run.run_id << ',' << run.method << ',' << run.seed << ','
          << run.record.rounds.size() << ",0,failed\n";
  }
}

void write_strategy_scores_csv(const std::string& path,
                               const std::vector<CompletedRun>& runs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << "run_id,seed,round,strategy,normalized_score\n";
  for (const CompletedRun& run : runs) {
    const RunRecord& record = run.record;
    for (std::size_t r = 0; r < record.strategy_scores.size(); ++r)
      for (std::size_t k = 0; k < record.strategy_order.size(); ++k)
        out << run.run_id << ',' << run.seed << ','
            << record.strategy_score_rounds[r] << ','
            << to_string(record.strategy_order[k]) << ','
            << format_accuracy(record.strategy_scores[r][k]) << '\n';
  }
}

void write_compare_csv(const std::string& path,
                       const std::vector<CompletedRun>& runs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << "method,round,labeled_count,mean_accuracy,std_accuracy,n_seeds\n";

  std::vector<std::string> method_order;
  for (const CompletedRun& run : runs)
    if (std::find(method_order.begin(), method_order.end(), run.method) ==
        method_order.end())
      method_order.push_back(run.method);

  for (const std::string& method : method_order) {
    std::vector<const CompletedRun*> group;
    for (const CompletedRun& run : runs)
      if (run.method == method && !run.failed) group.push_back(&run);
    if (group.empty()) continue;
    const std::size_t rounds = group.front()->record.rounds.size();
    for (std::size_t r = 0; r < rounds; ++r) {
      double mean = 0.0;
      for (const CompletedRun* run : group)
        mean += run->record.rounds[r].test_accuracy;
      mean /= static_cast<double>(group.size());
      double var = 0.0;
      for (const CompletedRun* run : group) {
        const double d = run->record.rounds[r].test_accuracy - mean;
        var += d * d;
      }
      var /= static_cast<double>(group.size());
      out << method << ',' << group.front()->record.rounds[r].round << ','
          << group.front()->record.rounds[r].labeled_count << ','
          << format_accuracy(mean) << ',' << format_accuracy(std::sqrt(var))
          << ',' << group.size() << '\n';
    }
  }
}

void write_manifest(const std::string& path, const ExperimentConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  for (const auto& [key, value] : config.resolved_keys())
    out << key << " = " << value << '\n';
}

ExperimentResult run_experiment(const ExperimentConfig& config, bool compare) {
  config.validate();
  std::filesystem::create_directories(config.out_dir);

  ExperimentResult result;
  bool any_autoal = false;
  for (const MethodSpec& method : config.methods) {
    for (std::uint64_t seed : config.seeds) {
      CompletedRun run;
      run.method = method.name();
      run.seed = seed;
      run.run_id = run.method + "-s" + std::to_string(seed);
      try {
        const Dataset dataset = config.materialize_dataset(seed);
        run.record = run_method(dataset, method, config.search, config.protocol,
                                seed);
      } catch (const TrainingError& e) {
        run.failed = true;
        run.failure = e.what();
        result.any_failed = true;
      }
      if (method.kind == MethodSpec::Kind::kAutoAl) any_autoal = true;
      result.runs.push_back(std::move(run));
    }
  }

  const std::filesystem::path dir(config.out_dir);
  write_rounds_csv((dir / "rounds.csv").string(), result.runs);
  if (any_autoal)
    write_strategy_scores_csv((dir / "strategy_scores.csv").string(), result.runs);
  if (compare) write_compare_csv((dir / "compare.csv").string(), result.runs);
  write_manifest((dir / "manifest.txt").string(), config);
  return result;
}

}  // namespace autoal
