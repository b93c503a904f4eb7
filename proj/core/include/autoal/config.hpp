#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "autoal/dataset.hpp"
#include "autoal/search.hpp"
#include "autoal/strategies.hpp"

namespace autoal {

inline constexpr const char* kVersionString = "autoal 0.1.0";

struct DatasetSpec {
  enum class Kind { kBlobs, kMoons, kIdx, kCsv };
  Kind kind = Kind::kBlobs;
  // blobs
  int classes = 4;
  int dim = 2;
  std::size_t points = 2000;
  double spread = 3.0;
  double sigma = 1.1;
  std::vector<int> per_class_counts;  // empty -> points split evenly
  // moons
  double moons_sigma = 0.15;
  // files
  std::string data_path;
  std::string labels_path;
};

struct MethodSpec {
  enum class Kind { kAutoAl, kRandom, kStrategy };
  Kind kind = Kind::kAutoAl;
  StrategyId strategy = StrategyId::kEntropy;

  std::string name() const;
};

// Parses "autoal", "random" or a strategy id; nullopt for anything else.
std::optional<MethodSpec> parse_method(const std::string& name);
std::vector<std::string> valid_method_names();

struct ExperimentConfig {
  DatasetSpec dataset;
  std::vector<MethodSpec> methods;  // run uses exactly one
  SearchConfig search;
  RunProtocol protocol;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string out_dir = "out";

  void validate() const;  // throws InputError / FormatError
  Dataset materialize_dataset(std::uint64_t seed) const;

  // Every resolved key, sorted; written to the manifest and printable by
  // validate-config.
  std::map<std::string, std::string> resolved_keys() const;
};

// Flat `key = value` file; '#' starts a comment. Unknown keys -> FormatError.
void apply_config_file(ExperimentConfig& config, const std::string& path);
void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value);

}  // namespace autoal
