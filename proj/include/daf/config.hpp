#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "daf/assembly.hpp"
#include "daf/error.hpp"
#include "daf/features.hpp"
#include "daf/perturb.hpp"
#include "daf/text.hpp"

namespace daf {

/// Complete run configuration: feature pipeline, training loop, optional
/// train-time augmentation, and the evaluation threshold. Defaults follow
/// the reference operating point (256 input, 16x16 grid, windows 8/4/2/1,
/// l=3, A=B=2, v=3, p=0.1, N=10, theta=1.5).
struct RunConfig {
  int input_size = 256;
  PatchConfig patch;
  TrainConfig train;
  AugmentSpec augment;
  double threshold = 0.5;

  void validate() const {
    patch.validate(input_size);
    train.validate();
    augment.validate();
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
      throw ConfigError("threshold must lie in [0, 1]");
    }
  }

  std::size_t feature_dim() const { return feature_dimension(patch, input_size); }
};

namespace detail {

inline std::string windows_to_string(const std::vector<Window>& windows) {
  std::ostringstream out;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (i) out << ',';
    out << windows[i].size;
    if (windows[i].stride != windows[i].size) out << ':' << windows[i].stride;
  }
  return out.str();
}

inline std::vector<Window> windows_from_string(const std::string& text) {
  std::vector<Window> windows;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string entry = strip(item);
    if (entry.empty()) throw ConfigError("empty window entry in '" + text + "'");
    Window w;
    const std::size_t colon = entry.find(':');
    try {
      if (colon == std::string::npos) {
        w.size = std::stoi(entry);
        w.stride = w.size;  // non-overlapping by default
      } else {
        w.size = std::stoi(entry.substr(0, colon));
        w.stride = std::stoi(entry.substr(colon + 1));
      }
    } catch (const std::exception&) {
      throw ConfigError("bad window entry '" + entry + "'");
    }
    windows.push_back(w);
  }
  if (windows.empty()) throw ConfigError("windows list is empty");
  return windows;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("key '" + key + "' expects true/false, got '" + value + "'");
}

inline int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects an integer, got '" + value + "'");
  }
}

inline double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects a number, got '" + value + "'");
  }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects an unsigned integer, got '" +
                      value + "'");
  }
}

}  // namespace detail

/// Applies one key=value assignment. Unknown keys are rejected.
inline void apply_config_entry(RunConfig& cfg, const std::string& key,
                               const std::string& value) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_int;
  using detail::parse_u64;

  if (key == "input_size") {
    cfg.input_size = parse_int(key, value);
  } else if (key == "grid") {
    cfg.patch.grid = parse_int(key, value);
  } else if (key == "hog_cell") {
    cfg.patch.hog_cell = parse_int(key, value);
  } else if (key == "hog_bins") {
    cfg.patch.hog_bins = parse_int(key, value);
  } else if (key == "freq_bands") {
    cfg.patch.freq_bands = parse_int(key, value);
  } else if (key == "windows") {
    cfg.patch.windows = detail::windows_from_string(value);
  } else if (key == "multiscale_mode") {
    if (value == "average") {
      cfg.patch.recalc_windows = false;
    } else if (value == "recalc") {
      cfg.patch.recalc_windows = true;
    } else {
      throw ConfigError("multiscale_mode must be 'average' or 'recalc'");
    }
  } else if (key == "sampling_ratio") {
    cfg.train.sampling_ratio = parse_double(key, value);
  } else if (key == "candidates") {
    cfg.train.candidates_per_round = parse_int(key, value);
  } else if (key == "layers") {
    cfg.train.cascade.n_layers = parse_int(key, value);
  } else if (key == "random_forests") {
    cfg.train.cascade.n_random = parse_int(key, value);
  } else if (key == "completely_random_forests") {
    cfg.train.cascade.n_completely_random = parse_int(key, value);
  } else if (key == "max_rounds") {
    cfg.train.max_rounds = parse_int(key, value);
  } else if (key == "weight_factor") {
    cfg.train.weight_factor = parse_double(key, value);
  } else if (key == "epsilon") {
    cfg.train.epsilon = parse_double(key, value);
  } else if (key == "val_fraction") {
    cfg.train.val_fraction = parse_double(key, value);
  } else if (key == "ws_cap") {
    cfg.train.ws_cap = static_cast<std::size_t>(parse_u64(key, value));
  } else if (key == "folds") {
    cfg.train.cascade.cv_folds = parse_int(key, value);
  } else if (key == "cross_fit") {
    cfg.train.cascade.cross_fit = parse_bool(key, value);
  } else if (key == "condition_on_assembled") {
    cfg.train.condition_on_assembled = parse_bool(key, value);
  } else if (key == "trees") {
    cfg.train.cascade.forest.n_trees = parse_int(key, value);
  } else if (key == "max_depth") {
    cfg.train.cascade.forest.max_depth = parse_int(key, value);
  } else if (key == "min_samples_split") {
    cfg.train.cascade.forest.min_samples_split = parse_int(key, value);
  } else if (key == "candidate_features") {
    cfg.train.cascade.forest.candidate_features = parse_int(key, value);
  } else if (key == "bootstrap") {
    cfg.train.cascade.forest.bootstrap = parse_bool(key, value);
  } else if (key == "seed") {
    cfg.train.seed = parse_u64(key, value);
  } else if (key == "threads") {
    cfg.train.threads = parse_int(key, value);
  } else if (key == "threshold") {
    cfg.threshold = parse_double(key, value);
  } else if (key == "augment") {
    cfg.augment.enabled = parse_bool(key, value);
  } else if (key == "flip_prob") {
    cfg.augment.flip_prob = parse_double(key, value);
  } else if (key == "crop_prob") {
    cfg.augment.crop_prob = parse_double(key, value);
  } else if (key == "noise_prob") {
    cfg.augment.noise_prob = parse_double(key, value);
  } else if (key == "crop_factor") {
    cfg.augment.crop_factor = parse_double(key, value);
  } else if (key == "noise_sigma") {
    cfg.augment.noise_sigma = parse_double(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

/// Parses the flat key=value format ('#' starts a comment). Keys not
/// present keep their defaults; unknown keys are errors.
inline RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::strip(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_number) +
                        " is not key=value: '" + line + "'");
    }
    const std::string key = detail::strip(line.substr(0, eq));
    const std::string value = detail::strip(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("empty key at line " + std::to_string(line_number));
    }
    apply_config_entry(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

/// Canonical JSON snapshot embedded in model files.
inline nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["input_size"] = cfg.input_size;
  nlohmann::ordered_json patch;
  patch["grid"] = cfg.patch.grid;
  patch["hog_cell"] = cfg.patch.hog_cell;
  patch["hog_bins"] = cfg.patch.hog_bins;
  patch["freq_bands"] = cfg.patch.freq_bands;
  patch["windows"] = detail::windows_to_string(cfg.patch.windows);
  patch["multiscale_mode"] = cfg.patch.recalc_windows ? "recalc" : "average";
  j["patch"] = patch;
  nlohmann::ordered_json train;
  train["sampling_ratio"] = cfg.train.sampling_ratio;
  train["candidates"] = cfg.train.candidates_per_round;
  train["max_rounds"] = cfg.train.max_rounds;
  train["weight_factor"] = cfg.train.weight_factor;
  train["epsilon"] = cfg.train.epsilon;
  train["val_fraction"] = cfg.train.val_fraction;
  train["ws_cap"] = cfg.train.ws_cap;
  train["condition_on_assembled"] = cfg.train.condition_on_assembled;
  train["layers"] = cfg.train.cascade.n_layers;
  train["random_forests"] = cfg.train.cascade.n_random;
  train["completely_random_forests"] = cfg.train.cascade.n_completely_random;
  train["folds"] = cfg.train.cascade.cv_folds;
  train["cross_fit"] = cfg.train.cascade.cross_fit;
  train["trees"] = cfg.train.cascade.forest.n_trees;
  train["max_depth"] = cfg.train.cascade.forest.max_depth;
  train["min_samples_split"] = cfg.train.cascade.forest.min_samples_split;
  train["candidate_features"] = cfg.train.cascade.forest.candidate_features;
  train["bootstrap"] = cfg.train.cascade.forest.bootstrap;
  train["seed"] = cfg.train.seed;
  j["train"] = train;
  nlohmann::ordered_json augment;
  augment["enabled"] = cfg.augment.enabled;
  augment["flip_prob"] = cfg.augment.flip_prob;
  augment["crop_prob"] = cfg.augment.crop_prob;
  augment["noise_prob"] = cfg.augment.noise_prob;
  augment["crop_factor"] = cfg.augment.crop_factor;
  augment["noise_sigma"] = cfg.augment.noise_sigma;
  j["augment"] = augment;
  j["threshold"] = cfg.threshold;
  return j;
}

inline RunConfig config_from_json(const nlohmann::ordered_json& j) {
  RunConfig cfg;
  try {
    cfg.input_size = j.at("input_size").get<int>();
    const auto& patch = j.at("patch");
    cfg.patch.grid = patch.at("grid").get<int>();
    cfg.patch.hog_cell = patch.at("hog_cell").get<int>();
    cfg.patch.hog_bins = patch.at("hog_bins").get<int>();
    cfg.patch.freq_bands = patch.at("freq_bands").get<int>();
    cfg.patch.windows = detail::windows_from_string(patch.at("windows").get<std::string>());
    cfg.patch.recalc_windows = patch.at("multiscale_mode").get<std::string>() == "recalc";
    const auto& train = j.at("train");
    cfg.train.sampling_ratio = train.at("sampling_ratio").get<double>();
    cfg.train.candidates_per_round = train.at("candidates").get<int>();
    cfg.train.max_rounds = train.at("max_rounds").get<int>();
    cfg.train.weight_factor = train.at("weight_factor").get<double>();
    cfg.train.epsilon = train.at("epsilon").get<double>();
    cfg.train.val_fraction = train.at("val_fraction").get<double>();
    cfg.train.ws_cap = train.at("ws_cap").get<std::size_t>();
    cfg.train.condition_on_assembled = train.at("condition_on_assembled").get<bool>();
    cfg.train.cascade.n_layers = train.at("layers").get<int>();
    cfg.train.cascade.n_random = train.at("random_forests").get<int>();
    cfg.train.cascade.n_completely_random =
        train.at("completely_random_forests").get<int>();
    cfg.train.cascade.cv_folds = train.at("folds").get<int>();
    cfg.train.cascade.cross_fit = train.at("cross_fit").get<bool>();
    cfg.train.cascade.forest.n_trees = train.at("trees").get<int>();
    cfg.train.cascade.forest.max_depth = train.at("max_depth").get<int>();
    cfg.train.cascade.forest.min_samples_split =
        train.at("min_samples_split").get<int>();
    cfg.train.cascade.forest.candidate_features =
        train.at("candidate_features").get<int>();
    cfg.train.cascade.forest.bootstrap = train.at("bootstrap").get<bool>();
    cfg.train.seed = train.at("seed").get<std::uint64_t>();
    const auto& augment = j.at("augment");
    cfg.augment.enabled = augment.at("enabled").get<bool>();
    cfg.augment.flip_prob = augment.at("flip_prob").get<double>();
    cfg.augment.crop_prob = augment.at("crop_prob").get<double>();
    cfg.augment.noise_prob = augment.at("noise_prob").get<double>();
    cfg.augment.crop_factor = augment.at("crop_factor").get<double>();
    cfg.augment.noise_sigma = augment.at("noise_sigma").get<double>();
    cfg.threshold = j.at("threshold").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad config snapshot: ") + e.what());
  }
  return cfg;
}

}  // namespace daf
