#include <fstream>

#include "rfm/error.hpp"
#include "rfm/harness/pipeline.hpp"
#include "rfm/saliency.hpp"

namespace rfm {
namespace fs = std::filesystem;

namespace {
constexpr std::size_t kChunk = 64;
}

std::vector<ScoredSample> score_samples(const ExperimentConfig& config, const Detector& detector,
                                        std::span<const SampleRecord> samples) {
  std::vector<ScoredSample> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += kChunk) {
    const std::size_t end = std::min(samples.size(), start + kChunk);
    std::vector<Tensor> inputs;
    for (std::size_t i = start; i < end; ++i)
      inputs.push_back(to_network_input(preprocess_eval(samples[i].image, config.preprocess)));
    const auto logits = detector.forward(inputs);
    for (std::size_t i = start; i < end; ++i) out.push_back({fake_score(logits[i - start]), samples[i].label});
  }
  return out;
}

std::vector<SampleRecord> less_forgery_set(std::span<const SampleRecord> test, const std::string& region) {
  std::vector<const SampleRecord*> reals;
  for (const SampleRecord& r : test)
    if (r.label == Label::kReal) reals.push_back(&r);
  require(!reals.empty(), ErrorCategory::kEmptyDataset, "less-forgery set needs REAL samples");

  std::vector<SampleRecord> out;
  for (const SampleRecord* r : reals) out.push_back(*r);
  std::size_t next_real = 0;
  for (const SampleRecord& s : test) {
    if (s.label != Label::kFake || !s.region_masks.count(region)) continue;
    out.push_back(make_less_forgery(s, *reals[next_real], region));
    next_real = (next_real + 1) % reals.size();
  }
  require(out.size() > reals.size(), ErrorCategory::kEmptyDataset,
          "no FAKE test sample carries region '" + region + "'");
  return out;
}

double mean_fake_coverage(const ExperimentConfig& config, const Detector& detector,
                          std::span<const SampleRecord> samples) {
  std::vector<Tensor> inputs;
  std::vector<Mask> masks;
  double sum = 0.0;
  std::size_t count = 0;
  const auto flush = [&] {
    if (inputs.empty()) return;
    const auto fams = compute_fam_batch(detector, std::span<const Tensor>(inputs));
    for (std::size_t k = 0; k < fams.size(); ++k) sum += attention_coverage(fams[k], masks[k]);
    count += fams.size();
    inputs.clear();
    masks.clear();
  };
  for (const SampleRecord& s : samples) {
    if (s.label != Label::kFake) continue;
    Mask truth;
    if (!s.region_masks.empty()) {
      truth = Mask(s.image.height, s.image.width);
      for (const auto& [name, mask] : s.region_masks) truth = mask_union(truth, mask);
    } else if (s.forgery_mask) {
      truth = *s.forgery_mask;
    } else {
      continue;
    }
    truth = preprocess_eval(truth, config.preprocess);
    if (truth.empty()) continue;
    inputs.push_back(to_network_input(preprocess_eval(s.image, config.preprocess)));
    masks.push_back(std::move(truth));
    if (inputs.size() == kChunk) flush();
  }
  flush();
  require(count > 0, ErrorCategory::kUndefinedCoverage, "no FAKE sample has a ground-truth mask");
  return sum / static_cast<double>(count);
}

std::vector<EvalReport> evaluate_detector(const ExperimentConfig& config, const Detector& detector,
                                          std::span<const SampleRecord> test) {
  require(!test.empty(), ErrorCategory::kEmptyDataset, "test set is empty");
  std::vector<EvalReport> reports;
  const auto standard = score_samples(config, detector, test);
  reports.push_back(make_report("standard", standard, config.evaluation.fdr_levels));

  bool has_masks = false;
  for (const SampleRecord& s : test)
    has_masks |= s.label == Label::kFake && (s.forgery_mask || !s.region_masks.empty());
  if (config.evaluation.coverage && has_masks && detector.differentiable())
    reports.back().coverage = mean_fake_coverage(config, detector, test);

  for (const std::string& region : config.evaluation.less_forgery_regions) {
    const auto variant = less_forgery_set(test, region);
    const auto scores = score_samples(config, detector, variant);
    reports.push_back(make_report("less-" + region, scores, config.evaluation.fdr_levels));
  }
  return reports;
}

nlohmann::json report_json(const EvalReport& report) {
  nlohmann::json doc{{"auc", report.auc},
                     {"real_count", report.real_count},
                     {"fake_count", report.fake_count},
                     {"warnings", report.warnings}};
  for (const auto& [level, value] : report.tdr) doc["tdr@" + format_double(level)] = value;
  if (report.coverage >= 0.0) doc["coverage"] = report.coverage;
  return doc;
}

std::vector<EvalReport> run_evaluation(const ExperimentConfig& config, const fs::path& checkpoint) {
  require(!checkpoint.empty() && fs::exists(checkpoint), ErrorCategory::kIo,
          "checkpoint not found: " + checkpoint.string());
  const auto detector = load_checkpoint(checkpoint);
  const Datasets data = load_datasets(config);
  const auto reports = evaluate_detector(config, *detector, data.test);

  const fs::path out = config.output_dir;
  fs::create_directories(out / "eval");
  RunManifest manifest = RunManifest::load_or_empty(out);
  if (manifest.config.is_null()) manifest.config = config.snapshot;
  std::ofstream table(out / "eval" / "eval.csv");
  table << EvalReport::csv_header(config.evaluation.fdr_levels) << '\n';
  for (const EvalReport& r : reports) {
    table << r.csv_row(config.evaluation.fdr_levels) << '\n';
    const std::string rel = "eval/" + r.name + ".txt";
    std::ofstream(out / rel) << r.to_key_value();
    manifest.add_file(out, rel);
    manifest.reports[r.name] = report_json(r);
  }
  table.close();
  require(static_cast<bool>(table), ErrorCategory::kIo, "cannot write evaluation table");
  manifest.add_file(out, "eval/eval.csv");
  manifest.write(out);
  return reports;
}

}  // namespace rfm
