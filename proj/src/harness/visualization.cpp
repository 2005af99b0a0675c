#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>

#include "rfm/error.hpp"
#include "rfm/harness/pipeline.hpp"
#include "rfm/image_io.hpp"
#include "rfm/saliency.hpp"

namespace rfm {
namespace fs = std::filesystem;

namespace {

std::string file_stem(const std::string& name) {
  std::string out;
  for (char ch : name) out += std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' ? ch : '_';
  return out;
}

ForgeryAttentionMap average_fam_of(const ExperimentConfig& config, const Detector& detector,
                                   std::span<const SampleRecord* const> group) {
  std::vector<Image> images;
  for (const SampleRecord* s : group) images.push_back(preprocess_eval(s->image, config.preprocess));
  return average_fam(detector, images);
}

// Writes <stem>.npy and <stem>.png and returns their relative paths.
std::vector<std::string> emit_map(const fs::path& out_dir, const std::string& stem, const ScalarMap& map) {
  write_npy(out_dir / (stem + ".npy"), map);
  write_png(out_dir / (stem + ".png"), render_heatmap(map));
  return {stem + ".npy", stem + ".png"};
}

}  // namespace

VisualizationResult visualize(const ExperimentConfig& config, const Detector& detector,
                              std::span<const SampleRecord> images, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  VisualizationResult result;

  std::vector<std::string> order;
  std::map<std::string, std::vector<const SampleRecord*>> groups;
  for (const SampleRecord& s : images) {
    auto& group = groups[s.technique];
    if (group.empty()) order.push_back(s.technique);
    group.push_back(&s);
  }

  std::vector<ForgeryAttentionMap> averages;
  for (const std::string& technique : order) {
    auto& group = groups[technique];
    const auto cap = static_cast<std::size_t>(std::max(0, config.visualization.max_images_per_group));
    if (group.size() > cap) group.resize(cap);
    if (group.empty()) {
      result.warnings.push_back("technique group '" + technique + "' has no images; skipped");
      continue;
    }
    averages.push_back(average_fam_of(config, detector, group));
    averages.back().source_id = technique;
    result.techniques.push_back(technique);
    emit_map(out_dir, "fam_" + file_stem(technique), averages.back());
  }
  require(!averages.empty(), ErrorCategory::kEmptyAggregate, "no images to visualize");
  result.correlation = fam_correlation_matrix(averages, result.techniques);
  write_correlation_csv(out_dir / "correlation.csv", result.correlation);

  // Frame-count study on one designated sequence.
  std::string frame_technique = config.visualization.frame_technique;
  if (frame_technique.empty()) {
    for (const SampleRecord& s : images)
      if (s.label == Label::kFake) {
        frame_technique = s.technique;
        break;
      }
  }
  std::vector<const SampleRecord*> frames;
  for (const SampleRecord& s : images)
    if (s.technique == frame_technique) frames.push_back(&s);
  if (frames.empty()) {
    result.warnings.push_back("frame sequence '" + frame_technique + "' has no images; skipped");
  } else {
    for (int requested : config.visualization.frame_counts) {
      int n = requested;
      if (static_cast<std::size_t>(n) > frames.size()) {
        n = static_cast<int>(frames.size());
        result.warnings.push_back("frame count " + std::to_string(requested) + " clipped to " +
                                  std::to_string(n) + " available frames");
      }
      result.frame_counts.push_back(n);
      const auto avg = average_fam_of(config, detector, std::span(frames).first(static_cast<std::size_t>(n)));
      emit_map(out_dir, "frames_" + std::to_string(requested), avg);
    }
  }

  if (detector.has_cam_head()) {
    for (Label label : {Label::kReal, Label::kFake}) {
      std::vector<ScalarMap> cams;
      for (const SampleRecord& s : images) {
        if (s.label != label) continue;
        const Image img = preprocess_eval(s.image, config.preprocess);
        cams.push_back(compute_cam(detector, img, label, /*upsample=*/true));
      }
      if (cams.empty()) {
        result.warnings.push_back("no " + std::string(label_name(label)) + " images for the average CAM");
        continue;
      }
      ScalarMap mean = cams.front();
      for (std::size_t i = 1; i < cams.size(); ++i)
        for (std::size_t j = 0; j < mean.values.size(); ++j) mean.values[j] += cams[i].values[j];
      for (double& v : mean.values) v /= static_cast<double>(cams.size());
      emit_map(out_dir, "cam_" + std::string(label_name(label)), mean);
    }
  } else {
    result.warnings.push_back(detector.architecture() + " has no CAM head; average CAM skipped");
  }
  for (const std::string& w : result.warnings) std::cerr << "warning: " << w << '\n';
  return result;
}

VisualizationResult run_visualization(const ExperimentConfig& config, const fs::path& checkpoint) {
  require(!checkpoint.empty() && fs::exists(checkpoint), ErrorCategory::kIo,
          "checkpoint not found: " + checkpoint.string());
  const auto detector = load_checkpoint(checkpoint);
  const Datasets data = load_datasets(config);
  const fs::path out = config.output_dir;
  const VisualizationResult result = visualize(config, *detector, data.test, out / "visualization");

  RunManifest manifest = RunManifest::load_or_empty(out);
  if (manifest.config.is_null()) manifest.config = config.snapshot;
  std::vector<std::string> produced;
  for (const auto& entry : fs::directory_iterator(out / "visualization"))
    produced.push_back("visualization/" + entry.path().filename().string());
  std::sort(produced.begin(), produced.end());
  for (const std::string& rel : produced) manifest.add_file(out, rel);
  for (const std::string& w : result.warnings) manifest.warnings.push_back(w);
  manifest.write(out);
  return result;
}

void run_erase_preview(const ExperimentConfig& config, const fs::path& checkpoint) {
  const Datasets data = load_datasets(config);
  require(!data.test.empty(), ErrorCategory::kEmptyDataset, "test set is empty");
  std::unique_ptr<Detector> detector =
      checkpoint.empty() ? build_detector(config, data.test.front().image.channels) : load_checkpoint(checkpoint);

  const fs::path out = fs::path(config.output_dir) / "preview";
  fs::create_directories(out);
  Rng rng(derive_seed(config.seed, Streams::kAugment));
  nlohmann::json traces = nlohmann::json::array();
  constexpr std::size_t kPreviewCount = 8;
  for (std::size_t i = 0; i < std::min(kPreviewCount, data.test.size()); ++i) {
    const SampleRecord& s = data.test[i * data.test.size() / std::min(kPreviewCount, data.test.size())];
    const Image original = preprocess_eval(s.image, config.preprocess);
    const ForgeryAttentionMap fam = compute_fam(*detector, original, s.id);
    const EraseResult erased = config.mode == AugmentationMode::kPsfe
                                   ? psfe(*detector, original, config.erase, rng)
                                   : sfe(original, fam, config.erase, rng);

    // original | erased | FAM heatmap
    const Image heat = render_heatmap(fam);
    Image panel(3, original.height, original.width * 3);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < original.height; ++y)
        for (int x = 0; x < original.width; ++x) {
          const int src_c = original.channels == 3 ? c : 0;
          panel.at(c, y, x) = original.at(src_c, y, x);
          panel.at(c, y, x + original.width) = erased.image.at(src_c, y, x);
          panel.at(c, y, x + 2 * original.width) = heat.at(c, y, x);
        }
    const std::string stem = file_stem(s.id);
    write_png(out / (stem + ".png"), panel);

    nlohmann::json trace{{"id", s.id}, {"applied", erased.trace.applied}};
    for (const char* key : {"placed", "skipped"}) {
      trace[key] = nlohmann::json::array();
      for (const Anchor& a : key[0] == 'p' ? erased.trace.placed : erased.trace.skipped)
        trace[key].push_back({a.row, a.col});
    }
    trace["blocks"] = nlohmann::json::array();
    for (const Rect& r : erased.trace.blocks) trace["blocks"].push_back({r.top, r.left, r.bottom, r.right});
    traces.push_back(std::move(trace));
  }
  std::ofstream(out / "traces.json") << traces.dump(2) << '\n';
}

}  // namespace rfm
