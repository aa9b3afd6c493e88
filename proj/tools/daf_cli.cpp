#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "daf/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Dynamic assembly forest detector for generated images"};
  app.require_subcommand(1);

  // fixture -------------------------------------------------------------
  daf::cli::FixtureOptions fixture;
  auto* fixture_cmd =
      app.add_subcommand("fixture", "Generate the synthetic labeled corpus");
  fixture_cmd->add_option("out_dir", fixture.out_dir, "Output directory")->required();
  fixture_cmd->add_option("--count", fixture.spec.count, "Total image count (even)")
      ->capture_default_str();
  fixture_cmd->add_option("--size", fixture.spec.size, "Image side in pixels")
      ->capture_default_str();
  fixture_cmd
      ->add_option("--amplitude", fixture.spec.artifact_amplitude,
                   "High-frequency artifact amplitude (0 = null corpus)")
      ->capture_default_str();
  fixture_cmd->add_option("--seed", fixture.spec.seed, "Corpus seed")
      ->capture_default_str();
  fixture_cmd->add_option("--threads", fixture.spec.threads, "Worker threads (0 = auto)")
      ->capture_default_str();

  // extract -------------------------------------------------------------
  daf::cli::ExtractOptions extract;
  auto* extract_cmd =
      app.add_subcommand("extract", "Extract manifest images into a feature cache");
  extract_cmd->add_option("manifest", extract.manifest_path, "Manifest CSV")->required();
  extract_cmd->add_option("out_cache", extract.out_cache, "Output cache file")->required();
  extract_cmd->add_option("--config", extract.config_path, "Config file (key=value)");
  extract_cmd->add_option("--threads", extract.threads, "Worker threads (0 = auto)")
      ->capture_default_str();

  // train ---------------------------------------------------------------
  daf::cli::TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train a detector");
  train_cmd->add_option("input", train.input_path, "Feature cache or manifest CSV")
      ->required();
  train_cmd->add_option("out_model", train.out_model, "Output model file")->required();
  train_cmd->add_option("--config", train.config_path, "Config file (key=value)");
  train_cmd->add_option("--log", train.log_path, "Also write the training log here");
  train_cmd->add_flag("--account-memory", train.account_memory,
                      "Track peak resident feature rows");

  // predict -------------------------------------------------------------
  daf::cli::PredictOptions predict;
  auto* predict_cmd = app.add_subcommand("predict", "Score images with a model");
  predict_cmd->add_option("model", predict.model_path, "Model file")->required();
  predict_cmd->add_option("inputs", predict.inputs, "Image files")->required();

  // eval ----------------------------------------------------------------
  daf::cli::EvalOptions eval;
  std::string eval_perturb;
  double eval_threshold = -1.0;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a manifest");
  eval_cmd->add_option("model", eval.model_path, "Model file")->required();
  eval_cmd->add_option("manifest", eval.manifest_path, "Manifest CSV")->required();
  eval_cmd->add_option("--perturb", eval_perturb,
                       "Degrade inputs first: blur:SIGMA or jpeg:QUALITY");
  eval_cmd->add_option("--json", eval.json_path, "Write the report as JSON here");
  eval_cmd->add_option("--threshold", eval_threshold,
                       "Decision threshold (default: from the model config)");
  eval_cmd->add_option("--threads", eval.threads, "Worker threads (0 = auto)")
      ->capture_default_str();

  // inspect ---------------------------------------------------------------
  daf::cli::InspectOptions inspect;
  auto* inspect_cmd = app.add_subcommand("inspect", "Print a model summary as JSON");
  inspect_cmd->add_option("model", inspect.model_path, "Model file")->required();
  inspect_cmd->add_option("--dump-last-layer", inspect.dump_manifest,
                          "Manifest whose rows get last-layer feature dumps");

  // manifest-from-dirs ----------------------------------------------------
  daf::cli::ManifestFromDirsOptions from_dirs;
  auto* dirs_cmd = app.add_subcommand(
      "manifest-from-dirs", "Build a manifest from real/ and fake/ directory trees");
  dirs_cmd->add_option("--real", from_dirs.real_dirs, "Directory of real images")
      ->required();
  dirs_cmd->add_option("--fake", from_dirs.fake_dirs,
                       "Directory of fake images (tag = basename)");
  dirs_cmd->add_option("out_manifest", from_dirs.out_path, "Output manifest CSV")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return daf::cli::kExitUsage;
  }

  try {
    if (*fixture_cmd) return daf::cli::cmd_fixture(fixture, std::cout, std::cerr);
    if (*extract_cmd) return daf::cli::cmd_extract(extract, std::cout, std::cerr);
    if (*train_cmd) return daf::cli::cmd_train(train, std::cout, std::cerr);
    if (*predict_cmd) return daf::cli::cmd_predict(predict, std::cout, std::cerr);
    if (*eval_cmd) {
      if (!eval_perturb.empty()) {
        try {
          eval.perturbation = daf::cli::parse_perturb(eval_perturb);
        } catch (const daf::ConfigError& e) {
          std::cerr << "usage error: " << e.what() << '\n';
          return daf::cli::kExitUsage;
        }
      }
      if (eval_threshold >= 0.0) eval.threshold = eval_threshold;
      return daf::cli::cmd_eval(eval, std::cout, std::cerr);
    }
    if (*inspect_cmd) return daf::cli::cmd_inspect(inspect, std::cout, std::cerr);
    if (*dirs_cmd) {
      return daf::cli::cmd_manifest_from_dirs(from_dirs, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return daf::cli::kExitFailure;
  }
  return daf::cli::kExitUsage;
}
