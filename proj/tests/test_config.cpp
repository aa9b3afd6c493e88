#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "daf/config.hpp"

namespace {

void check_reference_values(const daf::RunConfig& cfg) {
  CHECK(cfg.train.cascade.n_layers == 3);
  CHECK(cfg.train.cascade.n_random == 2);
  CHECK(cfg.train.cascade.n_completely_random == 2);
  CHECK(cfg.train.candidates_per_round == 3);
  CHECK(cfg.train.sampling_ratio == 0.1);
  CHECK(cfg.train.max_rounds == 10);
  CHECK(cfg.train.weight_factor == 1.5);
  CHECK(cfg.input_size == 256);
  CHECK(cfg.patch.grid == 16);
  REQUIRE(cfg.patch.windows.size() == 4);
  CHECK(cfg.patch.windows[0].size == 8);
  CHECK(cfg.patch.windows[1].size == 4);
  CHECK(cfg.patch.windows[2].size == 2);
  CHECK(cfg.patch.windows[3].size == 1);
  for (const auto& w : cfg.patch.windows) CHECK(w.stride == w.size);
}

}  // namespace

TEST_CASE("built-in defaults carry the reference operating point") {
  daf::RunConfig cfg;
  cfg.validate();
  check_reference_values(cfg);
  CHECK(cfg.patch.hog_cell == 8);
  CHECK(cfg.patch.hog_bins == 9);
  CHECK(cfg.patch.freq_bands == 3);
  CHECK(cfg.feature_dim() == 28560);
  CHECK(cfg.augment.enabled == false);
  CHECK(cfg.threshold == 0.5);
}

TEST_CASE("shipped default config file matches the built-in defaults") {
  const daf::RunConfig cfg = daf::load_config(DAF_DEFAULT_CONFIG);
  check_reference_values(cfg);
  const daf::RunConfig defaults;
  CHECK(daf::config_to_json(cfg) == daf::config_to_json(defaults));
}

TEST_CASE("key=value parsing with comments and blank lines") {
  const std::string text = R"(
# a comment
grid = 8          # trailing comment
windows = 2,1
sampling_ratio = 0.2
cross_fit = false
seed = 12345
)";
  const daf::RunConfig cfg = daf::parse_config_text(text);
  CHECK(cfg.patch.grid == 8);
  REQUIRE(cfg.patch.windows.size() == 2);
  CHECK(cfg.patch.windows[0].size == 2);
  CHECK(cfg.train.sampling_ratio == 0.2);
  CHECK(cfg.train.cascade.cross_fit == false);
  CHECK(cfg.train.seed == 12345);
  // Untouched keys keep defaults.
  CHECK(cfg.train.max_rounds == 10);
}

TEST_CASE("windows accept explicit strides") {
  const daf::RunConfig cfg = daf::parse_config_text("grid = 8\nwindows = 4:2,2:1,1\n");
  REQUIRE(cfg.patch.windows.size() == 3);
  CHECK(cfg.patch.windows[0].size == 4);
  CHECK(cfg.patch.windows[0].stride == 2);
  CHECK(cfg.patch.windows[1].size == 2);
  CHECK(cfg.patch.windows[1].stride == 1);
  CHECK(cfg.patch.windows[2].stride == 1);
}

TEST_CASE("unknown keys are rejected") {
  REQUIRE_THROWS_AS(daf::parse_config_text("not_a_key = 5\n"), daf::ConfigError);
}

TEST_CASE("malformed lines and values are rejected") {
  REQUIRE_THROWS_AS(daf::parse_config_text("just some words\n"), daf::ConfigError);
  REQUIRE_THROWS_AS(daf::parse_config_text("grid = banana\n"), daf::ConfigError);
  REQUIRE_THROWS_AS(daf::parse_config_text("cross_fit = maybe\n"), daf::ConfigError);
  REQUIRE_THROWS_AS(daf::parse_config_text("windows = \n"), daf::ConfigError);
  REQUIRE_THROWS_AS(daf::parse_config_text("= 5\n"), daf::ConfigError);
}

TEST_CASE("invalid combinations fail validation") {
  // 256 not divisible by grid 7.
  REQUIRE_THROWS_AS(daf::parse_config_text("grid = 7\n"), daf::GeometryError);
  REQUIRE_THROWS_AS(daf::parse_config_text("sampling_ratio = 0\n"), daf::ConfigError);
  REQUIRE_THROWS_AS(daf::parse_config_text("weight_factor = 1.0\n"), daf::ConfigError);
  REQUIRE_THROWS_AS(daf::parse_config_text("threshold = 1.5\n"), daf::ConfigError);
}

TEST_CASE("config json snapshot round trips") {
  const std::string text =
      "grid = 8\nwindows = 2,1\nsampling_ratio = 0.2\ntrees = 25\nseed = 7\n"
      "augment = true\nnoise_sigma = 0.01\nmultiscale_mode = recalc\n";
  const daf::RunConfig cfg = daf::parse_config_text(text);
  const auto snapshot = daf::config_to_json(cfg);
  const daf::RunConfig back = daf::config_from_json(snapshot);
  CHECK(daf::config_to_json(back) == snapshot);
  CHECK(back.patch.grid == 8);
  CHECK(back.patch.recalc_windows == true);
  CHECK(back.train.cascade.forest.n_trees == 25);
  CHECK(back.augment.enabled == true);
  CHECK(back.augment.noise_sigma == 0.01);
}

TEST_CASE("missing config file raises IoError") {
  REQUIRE_THROWS_AS(daf::load_config("/nonexistent/daf.conf"), daf::IoError);
}
