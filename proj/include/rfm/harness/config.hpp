#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rfm/data.hpp"
#include "rfm/detector.hpp"
#include "rfm/erasing.hpp"
#include "rfm/imaging.hpp"

namespace rfm {

enum class AugmentationMode { kNone, kRfm, kPsfe, kRandomErasing, kAdversarialErasing };

std::string_view mode_name(AugmentationMode mode);
AugmentationMode parse_mode(std::string_view text);

enum class DataSource { kSynthetic, kManifest, kDirectory };

struct DataConfig {
  DataSource source = DataSource::kSynthetic;
  SyntheticSpec synthetic;  // real_count / fake_count unused; see the per-split counts
  int train_per_class = 2000;
  int test_per_class = 500;
  std::filesystem::path train_manifest;  // manifest source
  std::filesystem::path test_manifest;
  std::filesystem::path train_root;  // directory source
  std::filesystem::path test_root;
  std::filesystem::path layout;
};

struct EvaluationConfig {
  std::vector<double> fdr_levels{0.001, 0.0001};
  std::vector<std::string> less_forgery_regions;
  bool coverage = true;
};

struct VisualizationConfig {
  std::vector<int> frame_counts{4, 16, 64, 256};
  std::string frame_technique;  // empty: the first FAKE technique in the test set
  int max_images_per_group = 256;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "run";
  DataConfig data;
  std::string architecture = ReferenceCnn::kArchitecture;
  std::vector<int> widths{8, 16, 16, 16};
  PreprocessConfig preprocess{32, 32, 0.5};
  TrainConfig train;
  int checkpoint_interval = 0;  // 0: final checkpoint only
  AugmentationMode mode = AugmentationMode::kNone;
  EraseConfig erase;
  RandomErasingParams random_erasing;
  AdversarialErasingParams adversarial_erasing;
  EvaluationConfig evaluation;
  VisualizationConfig visualization;

  // The effective configuration as loaded, used for snapshots and grid cells.
  nlohmann::json snapshot;
};

// The documented key schema with every default filled in.
nlohmann::json default_config_json();

// Merges `overrides` into the defaults, rejects unknown keys and parses the
// result. A missing seed is a config error.
ExperimentConfig parse_config(const nlohmann::json& overrides);
ExperimentConfig load_config(const std::filesystem::path& path, const nlohmann::json& cli_overrides = {});

// Sets the value at a dotted key path ("augmentation.blocks"); the key must
// already exist in the schema.
void set_dotted(nlohmann::json& doc, const std::string& dotted, const nlohmann::json& value);

}  // namespace rfm
