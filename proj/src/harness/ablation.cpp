#include <fstream>

#include "rfm/error.hpp"
#include "rfm/harness/pipeline.hpp"

namespace rfm {
namespace fs = std::filesystem;
using nlohmann::json;

std::vector<json> expand_grid(const ExperimentConfig& config) {
  const json& ablation = config.snapshot.at("ablation");
  const json& axes = ablation.at("axes");
  require(axes.is_object(), ErrorCategory::kConfig, "ablation.axes must map dotted keys to value lists");

  json base = config.snapshot;
  base["ablation"] = default_config_json()["ablation"];
  std::vector<json> cells{base};
  for (const auto& [key, values] : axes.items()) {
    require(key != "seed" && key.rfind("ablation", 0) != 0, ErrorCategory::kConfig,
            "ablation axis '" + key + "' is not allowed; use ablation.seeds");
    require(values.is_array() && !values.empty(), ErrorCategory::kConfig,
            "ablation axis '" + key + "' needs a non-empty list of values");
    std::vector<json> next;
    for (const json& cell : cells)
      for (const json& value : values) {
        json c = cell;
        set_dotted(c, key, value);
        c["ablation"]["axes"][key] = value;  // remembered for the table
        next.push_back(std::move(c));
      }
    cells = std::move(next);
  }

  std::vector<std::uint64_t> seeds = ablation.at("seeds").get<std::vector<std::uint64_t>>();
  if (seeds.empty()) seeds.push_back(config.seed);
  std::vector<json> out;
  for (const json& cell : cells)
    for (std::uint64_t seed : seeds) {
      json c = cell;
      c["seed"] = seed;
      char name[32];
      std::snprintf(name, sizeof name, "cell-%03zu", out.size());
      c["output_dir"] = (fs::path(config.output_dir) / "cells" / name).generic_string();
      out.push_back(std::move(c));
    }
  return out;
}

std::vector<AblationCell> run_ablation(const ExperimentConfig& config) {
  std::vector<AblationCell> cells;
  for (json doc : expand_grid(config)) {
    AblationCell cell;
    for (const auto& [key, value] : doc["ablation"]["axes"].items()) cell.axes[key] = value;
    doc["ablation"] = default_config_json()["ablation"];
    const ExperimentConfig cfg = parse_config(doc);
    cell.seed = cfg.seed;
    cell.variant = cfg.mode == AugmentationMode::kRfm ? variant_label(cfg.erase) : std::string(mode_name(cfg.mode));

    const Datasets data = load_datasets(cfg);
    require(!data.train.empty(), ErrorCategory::kEmptyDataset, "training set is empty");
    auto detector = build_detector(cfg, data.train.front().image.channels);
    train_detector(cfg, data.train, *detector);
    cell.reports = evaluate_detector(cfg, *detector, data.test);
    cells.push_back(std::move(cell));
  }

  const fs::path out = config.output_dir;
  fs::create_directories(out);
  write_ablation_table(out / "ablation.csv", cells, config.evaluation.fdr_levels);
  RunManifest manifest = RunManifest::load_or_empty(out);
  if (manifest.config.is_null()) manifest.config = config.snapshot;
  manifest.add_file(out, "ablation.csv");
  manifest.write(out);
  return cells;
}

void write_ablation_table(const fs::path& path, std::span<const AblationCell> cells,
                          std::span<const double> levels) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCategory::kIo, "cannot write " + path.string());
  out << "cell,seed,variant";
  if (!cells.empty()) {
    for (const auto& [key, value] : cells.front().axes) out << ',' << key;
    for (const EvalReport& r : cells.front().reports) {
      out << ',' << r.name << ":auc";
      for (double level : levels) out << ',' << r.name << ":tdr@" << format_double(level);
      if (r.coverage >= 0.0) out << ',' << r.name << ":coverage";
    }
  }
  out << '\n';
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const AblationCell& cell = cells[i];
    out << i << ',' << cell.seed << ',' << cell.variant;
    for (const auto& [key, value] : cell.axes) out << ',' << (value.is_string() ? value.get<std::string>() : value.dump());
    for (const EvalReport& r : cell.reports) {
      out << ',' << format_double(r.auc);
      for (double level : levels) out << ',' << format_double(r.tdr.at(level));
      if (r.coverage >= 0.0) out << ',' << format_double(r.coverage);
    }
    out << '\n';
  }
}

}  // namespace rfm
