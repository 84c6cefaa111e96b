// gtda: rasterize, resample, train, evaluate or run the ablation grid.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gtda/config.hpp"
#include "gtda/error.hpp"
#include "gtda/pipeline.hpp"

namespace {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const gtda::ConfigError*>(&e)) return 1;
  if (dynamic_cast<const gtda::NumericalError*>(&e)) return 3;
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Imbalanced time-series anomaly detection via series-to-image conversion"};
  app.require_subcommand(1, 1);

  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "Config file (key = value lines under [section] headers)");
  app.add_option("--seed", seed, "Seed for clustering, oversampling, weight init and shuffling");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--override", overrides, "section.key=value, applied after the config file")->allow_extra_args(false);

  struct Command {
    const char* name;
    const char* help;
  };
  const Command commands[] = {
      {"rasterize", "Render every sample to images/<split>/<id>.pgm and write the manifest"},
      {"resample", "Apply CRD to the training split and write the resampled manifest and plan"},
      {"train", "Train on the resampled manifest and write the checkpoint and history"},
      {"evaluate", "Score the checkpoint on the test split"},
      {"experiment", "Run the ablation grid over every configured seed"},
  };
  for (const auto& c : commands) app.add_subcommand(c.name, c.help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    gtda::RunConfig config = config_path ? gtda::load_config(*config_path) : gtda::RunConfig{};
    for (const auto& o : overrides) gtda::apply_override(config, o);
    if (seed) config.seed = *seed;
    if (out_dir) config.out_dir = *out_dir;

    if (command == "rasterize") {
      gtda::stage_rasterize(config, std::cout);
    } else if (command == "resample") {
      gtda::stage_resample(config, std::cout);
    } else if (command == "train") {
      gtda::stage_train(config, std::cout);
    } else if (command == "evaluate") {
      gtda::stage_evaluate(config, std::cout);
    } else {
      gtda::stage_experiment(config, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "gtda " << command << ": " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
