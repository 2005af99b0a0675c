#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "rfm/data.hpp"
#include "rfm/detector.hpp"
#include "rfm/harness/config.hpp"
#include "rfm/metrics.hpp"

namespace rfm {

// Named random streams derived from the master seed, one per concern.
struct Streams {
  static constexpr const char* kInit = "init";
  static constexpr const char* kDataTrain = "data-train";
  static constexpr const char* kDataTest = "data-test";
  static constexpr const char* kOrder = "order";
  static constexpr const char* kPreprocess = "preprocess";
  static constexpr const char* kAugment = "augment";
};

struct Datasets {
  std::vector<SampleRecord> train;
  std::vector<SampleRecord> test;
};

Datasets load_datasets(const ExperimentConfig& config);
// Synthetic splits only; REAL and FAKE counts are the per-class sizes.
Datasets generate_datasets(const ExperimentConfig& config);

// Weights come from the init stream. `channels` defaults to the synthetic spec.
std::unique_ptr<Detector> build_detector(const ExperimentConfig& config, int channels = 0);

struct StreamAudit {
  std::uint64_t order = 0;
  std::uint64_t preprocess = 0;
  std::uint64_t augment = 0;
};

struct TrainingOptions {
  // Called after each iteration with the 1-based iteration and its loss.
  std::function<void(int, double)> on_iteration;
  // Checkpoint directory; empty disables intermediate checkpoints.
  std::filesystem::path checkpoint_dir;
};

struct TrainingResult {
  std::vector<double> losses;
  std::vector<std::filesystem::path> checkpoints;
  StreamAudit audit;
};

// One training run on `detector` (updated in place). Per iteration: draw a
// balanced batch, preprocess it, apply the configured augmentation and take
// one flooded cross-entropy step. Under RFM the batch FAMs come from one
// batched forward/backward pass before erasing.
TrainingResult train_detector(const ExperimentConfig& config, std::span<const SampleRecord> train,
                              Detector& detector, const TrainingOptions& options = {});

// Scores the standard test set and every configured less-forgery variant.
std::vector<EvalReport> evaluate_detector(const ExperimentConfig& config, const Detector& detector,
                                          std::span<const SampleRecord> test);

// All REAL test samples plus every FAKE with `region` replaced by the pixels
// of a REAL sample (paired in order, cycling). Fakes without that region mask
// are skipped.
std::vector<SampleRecord> less_forgery_set(std::span<const SampleRecord> test, const std::string& region);

// Mean attention coverage of FAKE-image FAMs over the union of each sample's
// region masks (its forgery mask when it has none).
double mean_fake_coverage(const ExperimentConfig& config, const Detector& detector,
                          std::span<const SampleRecord> samples);

std::vector<ScoredSample> score_samples(const ExperimentConfig& config, const Detector& detector,
                                        std::span<const SampleRecord> samples);

// --- persisted runs --------------------------------------------------------

struct FileEntry {
  std::string path;  // relative to the run directory
  std::string sha256;
};

// manifest.json in the run directory. Each command merges its files and
// reports in, so a gen-data/train/eval/visualize sequence accumulates into
// one manifest.
struct RunManifest {
  nlohmann::json config;
  std::vector<std::string> checkpoints;
  std::map<std::string, nlohmann::json> reports;
  std::vector<FileEntry> files;
  std::vector<std::string> warnings;

  static RunManifest load_or_empty(const std::filesystem::path& run_dir);
  // Hashes `relative` (under run_dir) and records or replaces its entry.
  void add_file(const std::filesystem::path& run_dir, const std::string& relative);
  void write(const std::filesystem::path& run_dir) const;
  // Every listed file exists and matches its checksum.
  bool verify(const std::filesystem::path& run_dir, std::string* problem = nullptr) const;
};

struct GenDataResult {
  std::filesystem::path train_manifest;
  std::filesystem::path test_manifest;
};
GenDataResult run_gen_data(const ExperimentConfig& config);

RunManifest run_training(const ExperimentConfig& config);
RunManifest run_training(const ExperimentConfig& config, Detector& detector);

nlohmann::json report_json(const EvalReport& report);

std::vector<EvalReport> run_evaluation(const ExperimentConfig& config, const std::filesystem::path& checkpoint);

struct VisualizationResult {
  std::vector<std::string> techniques;
  CorrelationMatrix correlation;
  std::vector<int> frame_counts;  // after clipping
  std::vector<std::string> warnings;
};
VisualizationResult run_visualization(const ExperimentConfig& config, const std::filesystem::path& checkpoint);
// Core of run_visualization on in-memory inputs; writes under `out_dir`.
VisualizationResult visualize(const ExperimentConfig& config, const Detector& detector,
                              std::span<const SampleRecord> images, const std::filesystem::path& out_dir);

struct AblationCell {
  std::map<std::string, nlohmann::json> axes;  // dotted key -> value
  std::uint64_t seed = 0;
  std::string variant;
  std::vector<EvalReport> reports;
};

// Cartesian product of ablation.axes (dotted keys of the schema) and
// ablation.seeds (the master seed when empty). Throws config on an unknown
// or empty axis.
std::vector<nlohmann::json> expand_grid(const ExperimentConfig& config);
std::vector<AblationCell> run_ablation(const ExperimentConfig& config);
void write_ablation_table(const std::filesystem::path& path, std::span<const AblationCell> cells,
                          std::span<const double> levels);

// Writes the original and erased images side by side plus the erase trace.
void run_erase_preview(const ExperimentConfig& config, const std::filesystem::path& checkpoint);

}  // namespace rfm
