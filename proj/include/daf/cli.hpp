#pragma once

#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "daf/assembly.hpp"
#include "daf/config.hpp"
#include "daf/fixture.hpp"
#include "daf/manifest.hpp"
#include "daf/metrics.hpp"
#include "daf/pipeline.hpp"
#include "daf/store.hpp"
#include "daf/text.hpp"

namespace daf::cli {

// Exit-code contract shared by every subcommand:
//   0 success, 1 runtime/data failure, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Parses "blur:SIGMA" or "jpeg:QUALITY". Raises ConfigError on anything
/// else (callers map that to a usage error).
inline PerturbSpec parse_perturb(const std::string& text) {
  const std::size_t colon = text.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("--perturb expects blur:SIGMA or jpeg:QUALITY");
  }
  const std::string kind = text.substr(0, colon);
  const std::string value = text.substr(colon + 1);
  try {
    if (kind == "blur") {
      const double sigma = std::stod(value);
      if (!(sigma > 0.0)) throw ConfigError("blur sigma must be > 0");
      return PerturbSpec::blur(sigma);
    }
    if (kind == "jpeg") {
      const int quality = std::stoi(value);
      if (quality < 1 || quality > 100) {
        throw ConfigError("jpeg quality must be in [1, 100]");
      }
      return PerturbSpec::jpeg(quality);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("bad --perturb value '" + text + "'");
  }
  throw ConfigError("unknown perturbation kind '" + kind + "'");
}

inline RunConfig load_config_or_default(const std::string& config_path) {
  if (config_path.empty()) {
    RunConfig cfg;
    cfg.validate();
    return cfg;
  }
  return load_config(config_path);
}

namespace detail {

inline bool file_has_magic(const std::string& path, const char magic[4]) {
  std::ifstream in(path, std::ios::binary);
  char head[4] = {0, 0, 0, 0};
  in.read(head, 4);
  return in.gcount() == 4 && std::equal(head, head + 4, magic);
}

inline void report_failures(const std::vector<ExtractionFailure>& failures,
                            std::ostream& err) {
  for (const ExtractionFailure& failure : failures) {
    err << "error: " << failure.path << ": " << failure.message << '\n';
  }
}

}  // namespace detail

struct FixtureOptions {
  std::string out_dir;
  FixtureSpec spec;
};

inline int cmd_fixture(const FixtureOptions& options, std::ostream& out,
                       std::ostream& err) {
  try {
    const Manifest manifest = generate_fixture(options.out_dir, options.spec);
    out << "wrote " << manifest.rows.size() << " images and manifest.csv to "
        << options.out_dir << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

struct ExtractOptions {
  std::string manifest_path;
  std::string config_path;  // empty = defaults
  std::string out_cache;
  int threads = 0;
};

inline int cmd_extract(const ExtractOptions& options, std::ostream& out,
                       std::ostream& err) {
  try {
    const RunConfig cfg = load_config_or_default(options.config_path);
    const Manifest manifest = load_manifest(options.manifest_path);
    if (manifest.rows.empty()) {
      err << "error: manifest has no rows\n";
      return kExitFailure;
    }
    out << "extracting " << manifest.rows.size() << " images (dim "
        << cfg.feature_dim() << ") -> " << options.out_cache << '\n';
    const ExtractionResult result = extract_manifest_to_cache(
        manifest, cfg, options.out_cache, std::nullopt, options.threads);
    detail::report_failures(result.failures, err);
    out << "cached " << result.succeeded << "/" << result.attempted << " rows\n";
    return result.failures.empty() ? kExitOk : kExitFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

struct TrainOptions {
  std::string input_path;  // feature cache or manifest CSV
  std::string config_path;
  std::string out_model;
  std::string log_path;        // optional copy of the training log
  bool account_memory = false;
};

inline int cmd_train(const TrainOptions& options, std::ostream& out,
                     std::ostream& err) {
  try {
    const RunConfig cfg = load_config_or_default(options.config_path);

    std::unique_ptr<DataSource> source;
    if (detail::file_has_magic(options.input_path, kCacheMagic)) {
      auto cache = std::make_unique<CacheFileSource>(options.input_path);
      if (cache->dim() != cfg.feature_dim()) {
        throw ConfigError("config feature dimension (" +
                          std::to_string(cfg.feature_dim()) +
                          ") does not match cache dimension (" +
                          std::to_string(cache->dim()) + ")");
      }
      source = std::move(cache);
    } else {
      source = std::make_unique<ManifestSource>(load_manifest(options.input_path), cfg);
    }

    ResidencyAccounting accounting;
    std::ofstream log_file;
    std::ostringstream log_copy;
    RunHooks hooks;
    hooks.log = &log_copy;
    if (options.account_memory) hooks.accounting = &accounting;
    hooks.on_round = [&](const RoundRecord& record) {
      std::ostringstream line;
      daf::detail::log_round(&line, record);
      out << line.str();
      if (log_file.is_open()) log_file << line.str();
    };
    if (!options.log_path.empty()) {
      log_file.open(options.log_path, std::ios::trunc);
      if (!log_file) throw IoError("cannot open log file: " + options.log_path);
    }
    hooks.log = nullptr;  // on_round already routes the lines

    const DafResult result = run_daf(*source, cfg.train, hooks);

    ModelBundle bundle;
    bundle.model = result.model;
    bundle.config_snapshot = config_to_json(cfg);
    save_model(bundle, options.out_model);

    out << std::fixed << std::setprecision(4) << "final b_val accuracy "
        << result.best_accuracy << " (round " << result.best_round
        << ") | stop: " << result.stop_reason << '\n';
    out << "peak_resident_rows=" << describe_peak(hooks) << '\n';
    out << "model written to " << options.out_model << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

struct PredictOptions {
  std::string model_path;
  std::vector<std::string> inputs;
};

inline int cmd_predict(const PredictOptions& options, std::ostream& out,
                       std::ostream& err) {
  try {
    const ModelBundle bundle = load_model(options.model_path);
    const RunConfig cfg = config_from_json(bundle.config_snapshot);
    if (cfg.feature_dim() != bundle.model.base_dim) {
      throw DimensionMismatch(
          "config feature dimension " + std::to_string(cfg.feature_dim()) +
          " != model base dimension " + std::to_string(bundle.model.base_dim));
    }
    bool any_failed = false;
    for (const std::string& path : options.inputs) {
      try {
        const std::vector<double> features =
            extract_from_file(path, cfg, std::nullopt);
        const double score = predict_score(bundle.model, features);
        out << path << '\t' << std::fixed << std::setprecision(6) << score << '\n';
      } catch (const Error& e) {
        err << "error: " << path << ": " << e.what() << '\n';
        any_failed = true;
      }
    }
    return any_failed ? kExitFailure : kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

struct EvalOptions {
  std::string model_path;
  std::string manifest_path;
  std::optional<PerturbSpec> perturbation;
  std::string json_path;  // optional report copy
  std::optional<double> threshold;
  int threads = 0;
};

inline int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const ModelBundle bundle = load_model(options.model_path);
    const RunConfig cfg = config_from_json(bundle.config_snapshot);
    const Manifest manifest = load_manifest(options.manifest_path);
    if (!manifest.has_both_classes()) {
      err << "error: both classes required\n";
      return kExitFailure;
    }

    const ScoredManifest scored = score_manifest(
        bundle.model, cfg, manifest, options.perturbation, options.threads);
    detail::report_failures(scored.failures, err);
    if (!scored.failures.empty()) return kExitFailure;

    const double threshold = options.threshold.value_or(cfg.threshold);
    const EvalReport report =
        evaluate(scored.scores, scored.labels, scored.tags, threshold);
    report.print_table(out);
    if (!options.json_path.empty()) {
      std::ofstream json_out(options.json_path, std::ios::trunc);
      if (!json_out) throw IoError("cannot write report: " + options.json_path);
      json_out << report.to_json().dump(2) << '\n';
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

struct InspectOptions {
  std::string model_path;
  std::string dump_manifest;  // optional: emit last-layer features per row
};

inline int cmd_inspect(const InspectOptions& options, std::ostream& out,
                       std::ostream& err) {
  try {
    const ModelBundle bundle = load_model(options.model_path);
    out << model_summary(bundle).dump(2) << '\n';

    if (!options.dump_manifest.empty()) {
      const RunConfig cfg = config_from_json(bundle.config_snapshot);
      const Manifest manifest = load_manifest(options.dump_manifest);
      bool any_failed = false;
      for (const ManifestRow& row : manifest.rows) {
        try {
          const std::vector<double> features =
              extract_from_file(manifest.resolve(row), cfg, std::nullopt);
          const std::vector<double> last =
              last_layer_features(bundle.model, features);
          out << row.path << '\t' << row.label;
          out << std::fixed << std::setprecision(6);
          for (double v : last) out << '\t' << v;
          out << '\n';
        } catch (const Error& e) {
          err << "error: " << row.path << ": " << e.what() << '\n';
          any_failed = true;
        }
      }
      if (any_failed) return kExitFailure;
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

struct ManifestFromDirsOptions {
  std::vector<std::string> real_dirs;
  std::vector<std::string> fake_dirs;
  std::string out_path;
};

inline int cmd_manifest_from_dirs(const ManifestFromDirsOptions& options,
                                  std::ostream& out, std::ostream& err) {
  try {
    const Manifest manifest = manifest_from_dirs(
        options.real_dirs, options.fake_dirs,
        std::filesystem::path(options.out_path).parent_path());
    save_manifest(manifest, options.out_path);
    out << "wrote " << manifest.rows.size() << " rows to " << options.out_path << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace daf::cli
