#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "rfm/error.hpp"
#include "rfm/harness/pipeline.hpp"

using namespace rfm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json tiny_config(std::uint64_t seed = 3) {
  return json{
      {"seed", seed},
      {"data",
       {{"synthetic",
         {{"train_per_class", 12},
          {"test_per_class", 8},
          {"height", 16},
          {"width", 16},
          {"regions",
           {{{"name", "dominant"}, {"rect", {2, 2, 6, 6}}},
            {{"name", "secondary"}, {"rect", {10, 10, 14, 14}}, {"probability", 0.5}}}}}}}},
      {"detector", {{"widths", {3, 4}}}},
      {"preprocess", {{"resize", 18}, {"crop", 16}}},
      {"train", {{"iterations", 6}, {"batch_size", 4}, {"learning_rate", 0.001}}},
      {"augmentation", {{"max_height", 4}, {"max_width", 4}}},
      {"evaluation", {{"fdr_levels", {0.1}}, {"less_forgery_regions", {"dominant"}}}},
  };
}

// Dotted keys address the fully merged document, so overrides go through a snapshot.
ExperimentConfig with(const json& doc, const std::string& dotted, const json& value) {
  json full = parse_config(doc).snapshot;
  set_dotted(full, dotted, value);
  return parse_config(full);
}


std::vector<double> train_params(const ExperimentConfig& cfg, StreamAudit* audit = nullptr) {
  const Datasets data = load_datasets(cfg);
  auto det = build_detector(cfg);
  const TrainingResult r = train_detector(cfg, data.train, *det);
  if (audit) *audit = r.audit;
  return {det->parameters().begin(), det->parameters().end()};
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rfm-harness-" + name);
  fs::remove_all(dir);
  return dir;
}

ErrorCategory category_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.category();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCategory::kIo;
}

// O_real = 0, O_fake = ½·Σx², so the FAM of an image is max_c |x|.
class QuadraticDetector final : public Detector {
 public:
  std::string architecture() const override { return "quadratic"; }
  std::vector<int> hyperparameters() const override { return {}; }
  std::unique_ptr<Detector> clone() const override { return std::make_unique<QuadraticDetector>(); }
  std::vector<LogitPair> forward(std::span<const Tensor> batch) const override {
    std::vector<LogitPair> out;
    for (const Tensor& t : batch) {
      double s = 0.0;
      for (double v : t.data) s += 0.5 * v * v;
      out.push_back({0.0, s});
    }
    return out;
  }
  std::vector<Tensor> input_gradients(std::span<const Tensor> batch,
                                      std::span<const LogitWeights> seeds) const override {
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      Tensor g = batch[i];
      for (double& v : g.data) v *= seeds[i].fake;
      out.push_back(std::move(g));
    }
    return out;
  }
  double parameter_gradient(std::span<const Tensor>, const LossFunction&, std::vector<double>& grad) const override {
    grad.clear();
    return 0.0;
  }
  std::span<const double> parameters() const override { return {}; }
  void set_parameters(std::span<const double>) override {}
  void apply_update(std::span<const double>) override {}
};

SampleRecord half_image(const std::string& technique, bool left, int i) {
  SampleRecord s;
  s.id = technique + std::to_string(i);
  s.technique = technique;
  s.label = technique == "real" ? Label::kReal : Label::kFake;
  s.image = Image(1, 8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      if ((x < 4) == left) s.image.at(0, y, x) = static_cast<std::uint8_t>(40 + 10 * i + y + x);
  return s;
}

}  // namespace

TEST(Config, SeedIsMandatoryAndKeysAreChecked) {
  json doc = tiny_config();
  doc.erase("seed");
  EXPECT_EQ(category_of([&] { parse_config(doc); }), ErrorCategory::kConfig);
  json unknown = tiny_config();
  unknown["train"]["epochs"] = 3;
  EXPECT_EQ(category_of([&] { parse_config(unknown); }), ErrorCategory::kConfig);
  EXPECT_EQ(category_of([&] { with(tiny_config(), "augmentation.mode", "mixup"); }), ErrorCategory::kConfig);
  EXPECT_EQ(category_of([&] { with(tiny_config(), "detector.architecture", "transformer"); }), ErrorCategory::kConfig);
  json too_big = tiny_config();
  too_big["augmentation"]["mode"] = "rfm";
  too_big["augmentation"]["max_height"] = 17;
  EXPECT_EQ(category_of([&] { parse_config(too_big); }), ErrorCategory::kConfig);
  const ExperimentConfig ok = parse_config(tiny_config());
  EXPECT_EQ(ok.seed, 3u);
  EXPECT_EQ(ok.erase.blocks, 3);
  EXPECT_EQ(ok.evaluation.fdr_levels, std::vector<double>{0.1});
  EXPECT_EQ(ok.snapshot["train"]["iterations"], 6);
}

TEST(Config, LoadsFileWithOverrides) {
  const fs::path dir = temp_dir("config");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << tiny_config().dump();
  const auto cfg = load_config(dir / "c.json", json{{"seed", 11}, {"output_dir", "elsewhere"}});
  EXPECT_EQ(cfg.seed, 11u);
  EXPECT_EQ(cfg.output_dir, "elsewhere");
  EXPECT_EQ(category_of([&] { load_config(dir / "missing.json"); }), ErrorCategory::kIo);
}

TEST(Training, DeterministicAcrossRuns) {
  const auto cfg = parse_config(tiny_config());
  EXPECT_EQ(train_params(cfg), train_params(cfg));
}

TEST(Training, RfmWithZeroProbabilityEqualsNone) {
  json doc = tiny_config();
  const auto none = parse_config(doc);
  doc["augmentation"]["mode"] = "rfm";
  doc["augmentation"]["probability"] = 0.0;
  const auto rfm = parse_config(doc);
  StreamAudit a, b;
  EXPECT_EQ(train_params(none, &a), train_params(rfm, &b));
  EXPECT_EQ(a.order, b.order);
  EXPECT_EQ(a.preprocess, b.preprocess);
  EXPECT_EQ(a.augment, 0u);
  EXPECT_EQ(b.augment, static_cast<std::uint64_t>(6 * 4));  // one gate per image
}

TEST(Training, AugmentationDoesNotPerturbOtherStreams) {
  StreamAudit none, re;
  train_params(parse_config(tiny_config()), &none);
  train_params(with(tiny_config(), "augmentation.mode", "random_erasing"), &re);
  EXPECT_EQ(none.order, re.order);
  EXPECT_EQ(none.preprocess, re.preprocess);
  EXPECT_GT(re.augment, 0u);
}

TEST(Training, RfmIterationPropagatesTwice) {
  const auto cfg = with(tiny_config(), "augmentation.mode", "rfm");
  const Datasets data = load_datasets(cfg);
  InstrumentedDetector det(build_detector(cfg));
  train_detector(cfg, data.train, det);
  EXPECT_EQ(det.forward_passes(), 2u * 6);
  EXPECT_EQ(det.backward_passes(), 2u * 6);
  EXPECT_EQ(det.updates(), 6u);
}

TEST(Training, EveryModeRuns) {
  for (const char* mode : {"psfe", "random_erasing", "adversarial_erasing"}) {
    const auto cfg = with(tiny_config(), "augmentation.mode", mode);
    const Datasets data = load_datasets(cfg);
    auto det = build_detector(cfg);
    const auto result = train_detector(cfg, data.train, *det);
    EXPECT_EQ(result.losses.size(), 6u) << mode;
  }
}

TEST(Evaluation, ConstantDetectorScoresHalf) {
  const auto cfg = parse_config(tiny_config());
  const Datasets data = load_datasets(cfg);
  LinearDetector det(3, 16, 16);  // all-zero weights
  auto cfg_no_cov = cfg;
  cfg_no_cov.evaluation.coverage = false;
  const auto reports = evaluate_detector(cfg_no_cov, det, data.test);
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_DOUBLE_EQ(reports[0].auc, 0.5);
  EXPECT_EQ(reports[1].name, "less-dominant");
}

TEST(Evaluation, IdempotentAndLessForgerySetComposition) {
  const auto cfg = parse_config(tiny_config());
  const Datasets data = load_datasets(cfg);
  auto det = build_detector(cfg);
  const auto a = evaluate_detector(cfg, *det, data.test);
  const auto b = evaluate_detector(cfg, *det, data.test);
  EXPECT_EQ(a[0].to_key_value(), b[0].to_key_value());
  EXPECT_EQ(a[1].to_key_value(), b[1].to_key_value());
  EXPECT_GE(a[0].coverage, 0.0);
  EXPECT_LE(a[0].coverage, 1.0);
  const auto less = less_forgery_set(data.test, "dominant");
  EXPECT_EQ(less.size(), data.test.size());
  for (const SampleRecord& s : less)
    if (s.label == Label::kFake) {
      EXPECT_EQ(s.technique, "synthetic-one-stage+DominantReal");
    }
  EXPECT_EQ(category_of([&] { less_forgery_set(data.test, "ears"); }), ErrorCategory::kEmptyDataset);
}

TEST(Evaluation, MissingCheckpoint) {
  auto cfg = parse_config(tiny_config());
  cfg.output_dir = temp_dir("missing");
  EXPECT_EQ(category_of([&] { run_evaluation(cfg, cfg.output_dir / "none.ckpt"); }), ErrorCategory::kIo);
}

TEST(Ablation, VariantGridLabels) {
  json doc = tiny_config();
  doc["augmentation"]["mode"] = "rfm";
  doc["train"]["iterations"] = 2;
  doc["ablation"] = {{"axes", {{"augmentation.blocks", {3, 1}}, {"augmentation.guidance", {"fam", "random"}}}}};
  auto cfg = parse_config(doc);
  cfg.output_dir = temp_dir("ablation");
  const auto cells = run_ablation(cfg);
  ASSERT_EQ(cells.size(), 4u);
  std::set<std::string> labels;
  for (const auto& c : cells) labels.insert(c.variant);
  EXPECT_EQ(labels, (std::set<std::string>{"FAM&MEB", "MEB", "FAM", "none"}));
  EXPECT_TRUE(fs::exists(cfg.output_dir / "ablation.csv"));
}

TEST(Ablation, CellsMatchIndividualRuns) {
  json doc = tiny_config();
  doc["augmentation"]["mode"] = "rfm";
  doc["train"]["iterations"] = 3;
  doc["ablation"] = {{"axes", {{"augmentation.max_height", {4, 8}}, {"augmentation.probability", {0.5, 1.0}}}}};
  auto cfg = parse_config(doc);
  cfg.output_dir = temp_dir("grid");
  const auto cells = run_ablation(cfg);
  ASSERT_EQ(cells.size(), 4u);
  for (const auto& cell : cells) {
    json single = tiny_config();
    single["augmentation"]["mode"] = "rfm";
    single["train"]["iterations"] = 3;
    json full = parse_config(single).snapshot;
    for (const auto& [key, value] : cell.axes) set_dotted(full, key, value);
    const auto c = parse_config(full);
    const Datasets data = load_datasets(c);
    auto det = build_detector(c);
    train_detector(c, data.train, *det);
    const auto reports = evaluate_detector(c, *det, data.test);
    EXPECT_EQ(reports[0].to_key_value(), cell.reports[0].to_key_value());
  }
}

TEST(Ablation, SingleCellEqualsDirectRun) {
  json doc = tiny_config();
  doc["ablation"] = {{"axes", {{"train.iterations", {4}}}}};
  auto cfg = parse_config(doc);
  cfg.output_dir = temp_dir("single");
  const auto cells = run_ablation(cfg);
  ASSERT_EQ(cells.size(), 1u);
  json direct = tiny_config();
  direct["train"]["iterations"] = 4;
  const auto c = parse_config(direct);
  const Datasets data = load_datasets(c);
  auto det = build_detector(c);
  train_detector(c, data.train, *det);
  EXPECT_EQ(evaluate_detector(c, *det, data.test)[0].to_key_value(), cells[0].reports[0].to_key_value());
}

TEST(Ablation, UnknownAxisIsConfigError) {
  json doc = tiny_config();
  doc["ablation"] = {{"axes", {{"augmentation.size", {8, 16}}}}};
  const auto cfg = parse_config(doc);
  EXPECT_EQ(category_of([&] { expand_grid(cfg); }), ErrorCategory::kConfig);
  json empty = tiny_config();
  empty["ablation"] = {{"axes", {{"augmentation.blocks", json::array()}}}};
  EXPECT_EQ(category_of([&] { expand_grid(parse_config(empty)); }), ErrorCategory::kConfig);
}

TEST(Visualization, PlantedOrthogonalGroupsAndClipping) {
  json doc = tiny_config();
  doc["data"]["synthetic"]["channels"] = 1;
  doc["preprocess"] = {{"resize", 8}, {"crop", 8}, {"flip_probability", 0.0}};
  doc["visualization"] = {{"frame_counts", {2, 1000}}, {"frame_technique", "left"}};
  const auto cfg = parse_config(doc);
  std::vector<SampleRecord> images;
  for (int i = 0; i < 5; ++i) images.push_back(half_image("left", true, i));
  for (int i = 0; i < 3; ++i) images.push_back(half_image("right", false, i));
  QuadraticDetector det;
  const fs::path out = temp_dir("vis");
  const auto result = visualize(cfg, det, images, out);
  ASSERT_EQ(result.correlation.size(), 2u);
  EXPECT_DOUBLE_EQ(result.correlation.at(0, 1), 0.0);
  EXPECT_EQ(result.frame_counts, (std::vector<int>{2, 5}));
  EXPECT_GE(result.warnings.size(), 2u);  // clipping and missing CAM head
  EXPECT_TRUE(fs::exists(out / "correlation.csv"));
  EXPECT_TRUE(fs::exists(out / "fam_left.npy"));
  EXPECT_TRUE(fs::exists(out / "frames_1000.png"));

  const auto single = visualize(cfg, det, std::span(images).first(5), temp_dir("vis1"));
  ASSERT_EQ(single.correlation.size(), 1u);
  EXPECT_DOUBLE_EQ(single.correlation.at(0, 0), 1.0);
}

TEST(Manifest, TrainingRunIsVerifiable) {
  auto cfg = parse_config(tiny_config());
  cfg.output_dir = temp_dir("manifest");
  cfg.checkpoint_interval = 2;
  const RunManifest m = run_training(cfg);
  EXPECT_EQ(m.checkpoints.size(), 3u);  // iterations 2 and 4 plus final
  const RunManifest loaded = RunManifest::load_or_empty(cfg.output_dir);
  std::string problem;
  EXPECT_TRUE(loaded.verify(cfg.output_dir, &problem)) << problem;
  std::ofstream(cfg.output_dir / "loss.csv", std::ios::app) << "tampered\n";
  EXPECT_FALSE(loaded.verify(cfg.output_dir, &problem));
  EXPECT_NE(problem.find("loss.csv"), std::string::npos);
}

TEST(Manifest, ReportsSurviveReload) {
  auto cfg = parse_config(tiny_config());
  cfg.output_dir = temp_dir("reports");
  run_training(cfg);
  run_evaluation(cfg, cfg.output_dir / "checkpoints" / "final.ckpt");
  const RunManifest loaded = RunManifest::load_or_empty(cfg.output_dir);
  ASSERT_EQ(loaded.reports.size(), 2u);
  EXPECT_TRUE(loaded.reports.count("standard"));
  EXPECT_TRUE(loaded.reports.count("less-dominant"));
  EXPECT_TRUE(loaded.verify(cfg.output_dir));
}
