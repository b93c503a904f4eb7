#include "autoal/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "autoal/errors.hpp"

namespace autoal {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw FormatError("config: key `" + key + "` needs a number, got `" + value + "`");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw FormatError("config: key `" + key + "` needs an integer, got `" + value +
                      "`");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw FormatError("config: key `" + key + "` needs true/false, got `" + value + "`");
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += items[i];
  }
  return out;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

}  // namespace

std::string MethodSpec::name() const {
  switch (kind) {
    case Kind::kAutoAl: return "autoal";
    case Kind::kRandom: return "random";
    case Kind::kStrategy: return to_string(strategy);
  }
  return "unknown";
}

std::optional<MethodSpec> parse_method(const std::string& name) {
  if (name == "autoal") return MethodSpec{MethodSpec::Kind::kAutoAl, {}};
  if (name == "random") return MethodSpec{MethodSpec::Kind::kRandom, {}};
  if (auto id = parse_strategy(name); id && *id != StrategyId::kRandom)
    return MethodSpec{MethodSpec::Kind::kStrategy, *id};
  return std::nullopt;
}

std::vector<std::string> valid_method_names() {
  std::vector<std::string> names = {"autoal", "random"};
  for (StrategyId id : candidate_strategies()) names.push_back(to_string(id));
  return names;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw InputError("config: seed list is empty");
  if (methods.empty()) throw InputError("config: no method selected");
  search.validate();
  if (protocol.test_fraction <= 0.0 || protocol.test_fraction >= 1.0)
    throw InputError("config: test fraction must lie in (0, 1)");
  if (protocol.seed_size == 0) throw InputError("config: seed size must be >= 1");
  if (protocol.task_epochs < 1) throw InputError("config: task epochs must be >= 1");
  if (dataset.kind == DatasetSpec::Kind::kIdx &&
      (dataset.data_path.empty() || dataset.labels_path.empty()))
    throw InputError("config: idx dataset needs --data-path and --labels-path");
  if (dataset.kind == DatasetSpec::Kind::kCsv && dataset.data_path.empty())
    throw InputError("config: csv dataset needs --data-path");
}

Dataset ExperimentConfig::materialize_dataset(std::uint64_t seed) const {
  switch (dataset.kind) {
    case DatasetSpec::Kind::kBlobs: {
      std::vector<int> counts = dataset.per_class_counts;
      if (counts.empty()) {
        const int base = static_cast<int>(dataset.points) / dataset.classes;
        counts.assign(static_cast<std::size_t>(dataset.classes), base);
        for (std::size_t i = 0;
             i < dataset.points - static_cast<std::size_t>(base) *
                                      static_cast<std::size_t>(dataset.classes);
             ++i)
          counts[i]++;
      }
      return make_blobs(dataset.classes, counts, dataset.dim, dataset.spread,
                        dataset.sigma, seed);
    }
    case DatasetSpec::Kind::kMoons:
      return make_two_moons(static_cast<int>(dataset.points), dataset.moons_sigma,
                            seed);
    case DatasetSpec::Kind::kIdx:
      return load_idx_pair(dataset.data_path, dataset.labels_path);
    case DatasetSpec::Kind::kCsv:
      return load_csv(dataset.data_path);
  }
  throw InputError("config: unknown dataset kind");
}

std::map<std::string, std::string> ExperimentConfig::resolved_keys() const {
  std::map<std::string, std::string> keys;
  keys["version"] = kVersionString;

  switch (dataset.kind) {
    case DatasetSpec::Kind::kBlobs: keys["dataset"] = "blobs"; break;
    case DatasetSpec::Kind::kMoons: keys["dataset"] = "moons"; break;
    case DatasetSpec::Kind::kIdx: keys["dataset"] = "idx"; break;
    case DatasetSpec::Kind::kCsv: keys["dataset"] = "csv"; break;
  }
  keys["blobs_classes"] = std::to_string(dataset.classes);
  keys["blobs_dim"] = std::to_string(dataset.dim);
  keys["points"] = std::to_string(dataset.points);
  keys["blobs_spread"] = format_double(dataset.spread);
  keys["blobs_sigma"] = format_double(dataset.sigma);
  keys["moons_sigma"] = format_double(dataset.moons_sigma);
  keys["data_path"] = dataset.data_path;
  keys["labels_path"] = dataset.labels_path;

  std::vector<std::string> method_names;
  for (const MethodSpec& m : methods) method_names.push_back(m.name());
  keys["methods"] = join(method_names);

  std::vector<std::string> seed_strings;
  for (std::uint64_t s : seeds) seed_strings.push_back(std::to_string(s));
  keys["seeds"] = join(seed_strings);
  keys["out"] = out_dir;

  keys["budget"] = std::to_string(search.budget);
  keys["rounds"] = std::to_string(search.rounds);
  keys["cycles"] = std::to_string(search.cycles);
  keys["lambda"] = format_double(search.lambda_scale);
  keys["lambda_bar"] = format_double(search.lambda_reg);
  keys["warmup_epochs"] = std::to_string(search.warmup_epochs);
  keys["joint_epochs"] = std::to_string(search.joint_epochs);
  keys["batch_size"] = std::to_string(search.batch_size);
  keys["lr_search"] = format_double(search.lr_search);
  keys["lr_fit"] = format_double(search.lr_fit);
  keys["score_mode"] =
      search.score_mode == ScoreMode::kContinuous ? "continuous" : "binary";
  keys["gmm_input"] =
      search.gmm_input == GmmInput::kPooled ? "pooled" : "per_sample_sum";
  keys["gmm_components"] = std::to_string(search.gmm_components);
  keys["gmm_sample_factor"] = std::to_string(search.gmm_sample_factor);
  keys["loss_pred"] = search.loss_pred_enabled ? "true" : "false";
  keys["ranking_margin"] = format_double(search.ranking_margin);
  keys["mc_passes"] = std::to_string(search.mc_passes);
  keys["dropout"] = format_double(search.dropout_rate);
  keys["persist_nets"] = search.persist_nets ? "true" : "false";
  keys["t_override"] = format_double(search.t_override);

  std::vector<std::string> candidate_names;
  for (StrategyId id : search.candidates) candidate_names.push_back(to_string(id));
  keys["candidates"] = join(candidate_names);

  std::vector<std::string> hidden;
  for (std::size_t h : search.hidden_dims) hidden.push_back(std::to_string(h));
  keys["hidden_dims"] = join(hidden);

  keys["seed_size"] = std::to_string(protocol.seed_size);
  keys["test_fraction"] = format_double(protocol.test_fraction);
  keys["task_epochs"] = std::to_string(protocol.task_epochs);
  keys["task_batch_size"] = std::to_string(protocol.task_batch_size);
  return keys;
}

void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value) {
  if (key == "dataset") {
    if (value == "blobs") config.dataset.kind = DatasetSpec::Kind::kBlobs;
    else if (value == "moons") config.dataset.kind = DatasetSpec::Kind::kMoons;
    else if (value == "idx") config.dataset.kind = DatasetSpec::Kind::kIdx;
    else if (value == "csv") config.dataset.kind = DatasetSpec::Kind::kCsv;
    else throw FormatError("config: unknown dataset `" + value + "`");
  } else if (key == "blobs_classes") {
    config.dataset.classes = static_cast<int>(parse_int(key, value));
  } else if (key == "blobs_dim") {
    config.dataset.dim = static_cast<int>(parse_int(key, value));
  } else if (key == "points") {
    config.dataset.points = static_cast<std::size_t>(parse_int(key, value));
  } else if (key == "blobs_spread") {
    config.dataset.spread = parse_double(key, value);
  } else if (key == "blobs_sigma") {
    config.dataset.sigma = parse_double(key, value);
  } else if (key == "moons_sigma") {
    config.dataset.moons_sigma = parse_double(key, value);
  } else if (key == "data_path") {
    config.dataset.data_path = value;
  } else if (key == "labels_path") {
    config.dataset.labels_path = value;
  } else if (key == "methods" || key == "method") {
    config.methods.clear();
    for (const std::string& name : split_list(value)) {
      auto m = parse_method(name);
      if (!m) throw FormatError("config: unknown method `" + name + "`");
      config.methods.push_back(*m);
    }
  } else if (key == "seeds") {
    config.seeds.clear();
    for (const std::string& s : split_list(value))
      config.seeds.push_back(static_cast<std::uint64_t>(parse_int(key, s)));
  } else if (key == "out") {
    config.out_dir = value;
  } else if (key == "budget") {
    config.search.budget = static_cast<std::size_t>(parse_int(key, value));
  } else if (key == "rounds") {
    config.search.rounds = static_cast<int>(parse_int(key, value));
  } else if (key == "cycles") {
    config.search.cycles = static_cast<int>(parse_int(key, value));
  } else if (key == "lambda") {
    config.search.lambda_scale = parse_double(key, value);
  } else if (key == "lambda_bar") {
    config.search.lambda_reg = parse_double(key, value);
  } else if (key == "warmup_epochs") {
    config.search.warmup_epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "joint_epochs") {
    config.search.joint_epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "batch_size") {
    config.search.batch_size = static_cast<std::size_t>(parse_int(key, value));
  } else if (key == "lr_search") {
    config.search.lr_search = parse_double(key, value);
  } else if (key == "lr_fit") {
    config.search.lr_fit = parse_double(key, value);
  } else if (key == "score_mode") {
    if (value == "continuous") config.search.score_mode = ScoreMode::kContinuous;
    else if (value == "binary") config.search.score_mode = ScoreMode::kBinary;
    else throw FormatError("config: score_mode must be continuous or binary");
  } else if (key == "gmm_input") {
    if (value == "pooled") config.search.gmm_input = GmmInput::kPooled;
    else if (value == "per_sample_sum")
      config.search.gmm_input = GmmInput::kPerSampleSum;
    else throw FormatError("config: gmm_input must be pooled or per_sample_sum");
  } else if (key == "gmm_components") {
    config.search.gmm_components = static_cast<std::size_t>(parse_int(key, value));
  } else if (key == "gmm_sample_factor") {
    config.search.gmm_sample_factor =
        static_cast<std::size_t>(parse_int(key, value));
  } else if (key == "loss_pred") {
    config.search.loss_pred_enabled = parse_bool(key, value);
  } else if (key == "ranking_margin") {
    config.search.ranking_margin = parse_double(key, value);
  } else if (key == "mc_passes") {
    config.search.mc_passes = static_cast<int>(parse_int(key, value));
  } else if (key == "dropout") {
    config.search.dropout_rate = parse_double(key, value);
  } else if (key == "persist_nets") {
    config.search.persist_nets = parse_bool(key, value);
  } else if (key == "t_override") {
    config.search.t_override = parse_double(key, value);
  } else if (key == "candidates") {
    config.search.candidates.clear();
    for (const std::string& name : split_list(value)) {
      auto id = parse_strategy(name);
      if (!id || *id == StrategyId::kRandom)
        throw FormatError("config: `" + name + "` is not a candidate strategy");
      config.search.candidates.push_back(*id);
    }
  } else if (key == "hidden_dims") {
    config.search.hidden_dims.clear();
    for (const std::string& h : split_list(value))
      config.search.hidden_dims.push_back(
          static_cast<std::size_t>(parse_int(key, h)));
  } else if (key == "seed_size") {
    config.protocol.seed_size = static_cast<std::size_t>(parse_int(key, value));
  } else if (key == "test_fraction") {
    config.protocol.test_fraction = parse_double(key, value);
  } else if (key == "task_epochs") {
    config.protocol.task_epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "task_batch_size") {
    config.protocol.task_batch_size =
        static_cast<std::size_t>(parse_int(key, value));
  } else if (key == "version") {
    // accepted for manifest round-trips; informational only
  } else {
    throw FormatError("config: unknown key `" + key + "`");
  }
}

void apply_config_file(ExperimentConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("config: cannot open file " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("config: line " + std::to_string(line_no) +
                        " is not `key = value`");
    apply_config_entry(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

}  // namespace autoal
