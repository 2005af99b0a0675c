// Command-line front end: gen-data, train, eval, ablate, visualize, erase-preview.
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "rfm/error.hpp"
#include "rfm/harness/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::int64_t> seed;
  std::string out;
  std::string checkpoint;
  std::string data;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "Experiment config (JSON)");
  cmd->add_option("--seed", flags.seed, "Master seed (overrides the config)");
  cmd->add_option("--out", flags.out, "Run directory (overrides output_dir)");
  cmd->add_option("--checkpoint", flags.checkpoint, "Detector checkpoint");
  cmd->add_option("--data", flags.data, "Dataset directory written by gen-data");
}

rfm::ExperimentConfig resolve(const CommonFlags& flags) {
  json overrides = json::object();
  if (flags.seed) {
    rfm::require(*flags.seed >= 0, rfm::ErrorCategory::kConfig, "seed must be non-negative");
    overrides["seed"] = static_cast<std::uint64_t>(*flags.seed);
  }
  if (!flags.out.empty()) overrides["output_dir"] = flags.out;
  if (!flags.data.empty()) {
    const fs::path dir = flags.data;
    overrides["data"] = {{"source", "manifest"},
                         {"train_manifest", (dir / "train" / "manifest.csv").string()},
                         {"test_manifest", (dir / "test" / "manifest.csv").string()}};
  }
  return rfm::load_config(flags.config, overrides);
}

fs::path checkpoint_for(const CommonFlags& flags, const rfm::ExperimentConfig& config) {
  if (!flags.checkpoint.empty()) return flags.checkpoint;
  return fs::path(config.output_dir) / "checkpoints" / "final.ckpt";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Representative forgery mining laboratory"};
  app.require_subcommand(1);
  CommonFlags flags;
  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic train/test splits");
  auto* train = app.add_subcommand("train", "Train a detector");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  auto* ablate = app.add_subcommand("ablate", "Run an ablation grid");
  auto* vis = app.add_subcommand("visualize", "Average FAM, correlation and CAM figures");
  auto* preview = app.add_subcommand("erase-preview", "Show erasing on a few test images");
  for (auto* cmd : {gen, train, eval, ablate, vis, preview}) add_common(cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: config: " << e.what() << '\n';
    return 2;
  }

  try {
    const rfm::ExperimentConfig config = resolve(flags);
    if (gen->parsed()) {
      const auto result = rfm::run_gen_data(config);
      std::cout << "train manifest: " << result.train_manifest.string() << '\n'
                << "test manifest: " << result.test_manifest.string() << '\n';
    } else if (train->parsed()) {
      const auto manifest = rfm::run_training(config);
      std::cout << "checkpoints: " << manifest.checkpoints.size() << ", manifest: "
                << (fs::path(config.output_dir) / "manifest.json").string() << '\n';
    } else if (eval->parsed()) {
      for (const auto& report : rfm::run_evaluation(config, checkpoint_for(flags, config)))
        std::cout << report.to_key_value() << '\n';
    } else if (ablate->parsed()) {
      const auto cells = rfm::run_ablation(config);
      std::cout << cells.size() << " cells written to "
                << (fs::path(config.output_dir) / "ablation.csv").string() << '\n';
    } else if (vis->parsed()) {
      const auto result = rfm::run_visualization(config, checkpoint_for(flags, config));
      std::cout << result.techniques.size() << " technique groups visualized\n";
    } else if (preview->parsed()) {
      const fs::path ckpt = flags.checkpoint.empty() ? fs::path() : fs::path(flags.checkpoint);
      rfm::run_erase_preview(config, ckpt);
      std::cout << "preview written to " << (fs::path(config.output_dir) / "preview").string() << '\n';
    }
  } catch (const rfm::Error& e) {
    std::cerr << "error: " << rfm::category_name(e.category()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: io: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
