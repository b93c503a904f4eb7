#pragma once

#include <string>
#include <vector>

#include "autoal/config.hpp"
#include "autoal/search.hpp"

namespace autoal {

// One (method, seed) execution. AutoAL runs the bi-level loop; random and
// single-strategy methods run the same query-train-evaluate loop with their
// own selection rule. All methods share pool initialization and the
// task-model seed stream, so round-0 accuracy is paired across methods.
RunRecord run_method(const Dataset& dataset, const MethodSpec& method,
                     const SearchConfig& search, const RunProtocol& protocol,
                     std::uint64_t seed);

struct CompletedRun {
  std::string run_id;
  std::string method;
  std::uint64_t seed = 0;
  RunRecord record;
  bool failed = false;
  std::string failure;
};

// rounds.csv: run_id,method,seed,round,labeled_count,test_accuracy
void write_rounds_csv(const std::string& path,
                      const std::vector<CompletedRun>& runs);

// strategy_scores.csv: run_id,seed,round,strategy,normalized_score
void write_strategy_scores_csv(const std::string& path,
                               const std::vector<CompletedRun>& runs);

// compare.csv: method,round,labeled_count,mean_accuracy,std_accuracy,n_seeds
void write_compare_csv(const std::string& path,
                       const std::vector<CompletedRun>& runs);

void write_manifest(const std::string& path, const ExperimentConfig& config);

// Executes every configured (method, seed) pair and writes the files above
// into config.out_dir. A training failure stops the affected run, records a
// `failed` marker row and makes the call report failure.
struct ExperimentResult {
  std::vector<CompletedRun> runs;
  bool any_failed = false;
};
ExperimentResult run_experiment(const ExperimentConfig& config, bool compare);

}  // namespace autoal
