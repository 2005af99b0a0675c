#include "rfm/harness/config.hpp"

#include <fstream>

#include "rfm/error.hpp"

namespace rfm {
using nlohmann::json;

std::string_view mode_name(AugmentationMode mode) {
  switch (mode) {
    case AugmentationMode::kNone: return "none";
    case AugmentationMode::kRfm: return "rfm";
    case AugmentationMode::kPsfe: return "psfe";
    case AugmentationMode::kRandomErasing: return "random_erasing";
    case AugmentationMode::kAdversarialErasing: return "adversarial_erasing";
  }
  return "none";
}

AugmentationMode parse_mode(std::string_view text) {
  for (auto m : {AugmentationMode::kNone, AugmentationMode::kRfm, AugmentationMode::kPsfe,
                 AugmentationMode::kRandomErasing, AugmentationMode::kAdversarialErasing})
    if (text == mode_name(m)) return m;
  if (text == "re") return AugmentationMode::kRandomErasing;
  if (text == "ae") return AugmentationMode::kAdversarialErasing;
  fail(ErrorCategory::kConfig, "unknown augmentation mode '" + std::string(text) + "'");
}

json default_config_json() {
  const SyntheticSpec spec;
  const TrainConfig train;
  const RandomErasingParams re;
  return json{
      {"seed", nullptr},
      {"output_dir", "run"},
      {"data",
       {{"source", "synthetic"},
        {"train_manifest", ""},
        {"test_manifest", ""},
        {"train_root", ""},
        {"test_root", ""},
        {"layout", ""},
        {"synthetic",
         {{"train_per_class", 2000},
          {"test_per_class", 500},
          {"height", spec.height},
          {"width", spec.width},
          {"channels", spec.channels},
          {"family", "global"},
          {"strength", spec.strength},
          {"boundary_band", spec.boundary_band},
          {"technique", ""},
          {"regions", json::array()}}}}},
      {"detector", {{"architecture", ReferenceCnn::kArchitecture}, {"widths", {8, 16, 16, 16}}}},
      {"preprocess", {{"resize", 32}, {"crop", 32}, {"flip_probability", 0.5}}},
      {"train",
       {{"learning_rate", train.learning_rate},
        {"batch_size", train.batch_size},
        {"flood_level", train.flood_level},
        {"iterations", train.iterations},
        {"checkpoint_interval", 0}}},
      {"augmentation",
       {{"mode", "none"},
        {"blocks", 3},
        {"probability", 1.0},
        {"max_height", 8},
        {"max_width", 8},
        {"guidance", "fam"},
        {"anchor_budget", 0},
        {"random_erasing",
         {{"probability", re.probability},
          {"area_min", re.area_min},
          {"area_max", re.area_max},
          {"aspect_min", re.aspect_min},
          {"aspect_max", re.aspect_max},
          {"max_attempts", re.max_attempts}}},
        {"adversarial_erasing", {{"quantile", 0.15}}}}},
      {"evaluation", {{"fdr_levels", {0.001, 0.0001}}, {"less_forgery_regions", json::array()}, {"coverage", true}}},
      {"visualization",
       {{"frame_counts", {4, 16, 64, 256}}, {"frame_technique", ""}, {"max_images_per_group", 256}}},
      {"ablation", {{"axes", json::object()}, {"seeds", json::array()}}},
  };
}

namespace {

void check_keys(const json& given, const json& schema, const std::string& path) {
  if (!given.is_object() || !schema.is_object()) return;
  for (const auto& [key, value] : given.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    require(schema.contains(key), ErrorCategory::kConfig, "unknown config key '" + here + "'");
    if (here == "ablation.axes") continue;
    check_keys(value, schema.at(key), here);
  }
}

template <typename T>
T get(const json& doc, const char* key, const std::string& where) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCategory::kConfig, "config key '" + where + "." + key + "': " + e.what());
  }
}

ArtifactRegion parse_region(const json& r) {
  ArtifactRegion region;
  try {
    region.name = r.at("name").get<std::string>();
    const auto rect = r.at("rect").get<std::vector<int>>();
    require(rect.size() == 4, ErrorCategory::kConfig, "region rect must be [top, left, bottom, right]");
    region.rect = Rect{rect[0], rect[1], rect[2], rect[3]};
    region.probability = r.value("probability", 1.0);
    region.strength_scale = r.value("strength_scale", 1.0);
  } catch (const json::exception& e) {
    fail(ErrorCategory::kConfig, std::string("malformed artifact region: ") + e.what());
  }
  return region;
}

}  // namespace

void set_dotted(json& doc, const std::string& dotted, const json& value) {
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    require(node->is_object() && node->contains(key), ErrorCategory::kConfig,
            "unknown config key '" + dotted + "'");
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

ExperimentConfig parse_config(const json& overrides) {
  require(overrides.is_null() || overrides.is_object(), ErrorCategory::kConfig, "config must be an object");
  json doc = default_config_json();
  if (overrides.is_object()) {
    check_keys(overrides, doc, "");
    doc.merge_patch(overrides);
  }

  ExperimentConfig cfg;
  require(doc.contains("seed") && doc["seed"].is_number_integer(), ErrorCategory::kConfig,
          "a master seed is required (config key 'seed' or --seed)");
  cfg.seed = doc["seed"].get<std::uint64_t>();
  cfg.output_dir = get<std::string>(doc, "output_dir", "");

  const json& data = doc["data"];
  const std::string source = get<std::string>(data, "source", "data");
  if (source == "synthetic") cfg.data.source = DataSource::kSynthetic;
  else if (source == "manifest") cfg.data.source = DataSource::kManifest;
  else if (source == "directory") cfg.data.source = DataSource::kDirectory;
  else fail(ErrorCategory::kConfig, "unknown data source '" + source + "'");
  cfg.data.train_manifest = get<std::string>(data, "train_manifest", "data");
  cfg.data.test_manifest = get<std::string>(data, "test_manifest", "data");
  cfg.data.train_root = get<std::string>(data, "train_root", "data");
  cfg.data.test_root = get<std::string>(data, "test_root", "data");
  cfg.data.layout = get<std::string>(data, "layout", "data");

  const json& syn = data["synthetic"];
  SyntheticSpec& spec = cfg.data.synthetic;
  cfg.data.train_per_class = get<int>(syn, "train_per_class", "data.synthetic");
  cfg.data.test_per_class = get<int>(syn, "test_per_class", "data.synthetic");
  spec.height = get<int>(syn, "height", "data.synthetic");
  spec.width = get<int>(syn, "width", "data.synthetic");
  spec.channels = get<int>(syn, "channels", "data.synthetic");
  spec.family = parse_family(get<std::string>(syn, "family", "data.synthetic"));
  spec.strength = get<double>(syn, "strength", "data.synthetic");
  spec.boundary_band = get<int>(syn, "boundary_band", "data.synthetic");
  spec.technique = get<std::string>(syn, "technique", "data.synthetic");
  for (const json& r : syn["regions"]) spec.regions.push_back(parse_region(r));
  spec.real_count = cfg.data.train_per_class;
  spec.fake_count = cfg.data.train_per_class;
  if (cfg.data.source == DataSource::kSynthetic) {
    require(cfg.data.train_per_class >= 1 && cfg.data.test_per_class >= 1, ErrorCategory::kEmptyDataset,
            "synthetic splits need at least one sample per class");
    spec.validate();
  }

  const json& det = doc["detector"];
  cfg.architecture = get<std::string>(det, "architecture", "detector");
  require(cfg.architecture == ReferenceCnn::kArchitecture || cfg.architecture == LinearDetector::kArchitecture,
          ErrorCategory::kConfig, "unknown detector architecture '" + cfg.architecture + "'");
  cfg.widths = get<std::vector<int>>(det, "widths", "detector");

  const json& pre = doc["preprocess"];
  cfg.preprocess.resize = get<int>(pre, "resize", "preprocess");
  cfg.preprocess.crop = get<int>(pre, "crop", "preprocess");
  cfg.preprocess.flip_probability = get<double>(pre, "flip_probability", "preprocess");
  require(cfg.preprocess.crop >= 1 && cfg.preprocess.crop <= cfg.preprocess.resize, ErrorCategory::kConfig,
          "preprocess crop must lie in [1, resize]");
  require(cfg.preprocess.flip_probability >= 0.0 && cfg.preprocess.flip_probability <= 1.0,
          ErrorCategory::kConfig, "flip probability must lie in [0, 1]");

  const json& tr = doc["train"];
  cfg.train.learning_rate = get<double>(tr, "learning_rate", "train");
  cfg.train.batch_size = get<int>(tr, "batch_size", "train");
  cfg.train.flood_level = get<double>(tr, "flood_level", "train");
  cfg.train.iterations = get<int>(tr, "iterations", "train");
  cfg.checkpoint_interval = get<int>(tr, "checkpoint_interval", "train");
  cfg.train.validate();
  require(cfg.checkpoint_interval >= 0, ErrorCategory::kConfig, "checkpoint interval must be >= 0");

  const json& aug = doc["augmentation"];
  cfg.mode = parse_mode(get<std::string>(aug, "mode", "augmentation"));
  cfg.erase.blocks = get<int>(aug, "blocks", "augmentation");
  cfg.erase.probability = get<double>(aug, "probability", "augmentation");
  cfg.erase.max_height = get<int>(aug, "max_height", "augmentation");
  cfg.erase.max_width = get<int>(aug, "max_width", "augmentation");
  cfg.erase.guidance = parse_guidance(get<std::string>(aug, "guidance", "augmentation"));
  cfg.erase.anchor_budget = get<std::size_t>(aug, "anchor_budget", "augmentation");
  const json& re = aug["random_erasing"];
  cfg.random_erasing.probability = get<double>(re, "probability", "augmentation.random_erasing");
  cfg.random_erasing.area_min = get<double>(re, "area_min", "augmentation.random_erasing");
  cfg.random_erasing.area_max = get<double>(re, "area_max", "augmentation.random_erasing");
  cfg.random_erasing.aspect_min = get<double>(re, "aspect_min", "augmentation.random_erasing");
  cfg.random_erasing.aspect_max = get<double>(re, "aspect_max", "augmentation.random_erasing");
  cfg.random_erasing.max_attempts = get<int>(re, "max_attempts", "augmentation.random_erasing");
  cfg.adversarial_erasing.quantile = get<double>(aug["adversarial_erasing"], "quantile",
                                                 "augmentation.adversarial_erasing");
  try {
    if (cfg.mode == AugmentationMode::kRfm || cfg.mode == AugmentationMode::kPsfe)
      cfg.erase.validate(cfg.preprocess.crop, cfg.preprocess.crop);
    if (cfg.mode == AugmentationMode::kRandomErasing) cfg.random_erasing.validate();
    if (cfg.mode == AugmentationMode::kAdversarialErasing)
      require(cfg.adversarial_erasing.quantile >= 0.0 && cfg.adversarial_erasing.quantile <= 1.0,
              ErrorCategory::kConfig, "adversarial erasing quantile must lie in [0, 1]");
  } catch (const Error& e) {
    fail(ErrorCategory::kConfig, std::string("augmentation: ") + e.what());
  }

  const json& ev = doc["evaluation"];
  cfg.evaluation.fdr_levels = get<std::vector<double>>(ev, "fdr_levels", "evaluation");
  for (double level : cfg.evaluation.fdr_levels)
    require(level > 0.0 && level < 1.0, ErrorCategory::kConfig, "FDR levels must lie in (0, 1)");
  cfg.evaluation.less_forgery_regions = get<std::vector<std::string>>(ev, "less_forgery_regions", "evaluation");
  cfg.evaluation.coverage = get<bool>(ev, "coverage", "evaluation");

  const json& vis = doc["visualization"];
  cfg.visualization.frame_counts = get<std::vector<int>>(vis, "frame_counts", "visualization");
  cfg.visualization.frame_technique = get<std::string>(vis, "frame_technique", "visualization");
  cfg.visualization.max_images_per_group = get<int>(vis, "max_images_per_group", "visualization");
  for (int n : cfg.visualization.frame_counts)
    require(n >= 1, ErrorCategory::kConfig, "frame counts must be >= 1");

  cfg.snapshot = std::move(doc);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const json& cli_overrides) {
  json doc = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCategory::kIo, "cannot open config " + path.string());
    try {
      doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
      fail(ErrorCategory::kConfig, "cannot parse " + path.string() + ": " + e.what());
    }
  }
  if (cli_overrides.is_object()) doc.merge_patch(cli_overrides);
  return parse_config(doc);
}

}  // namespace rfm
