#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "rfm/error.hpp"
#include "rfm/harness/pipeline.hpp"
#include "rfm/saliency.hpp"

namespace rfm {
namespace fs = std::filesystem;

Datasets generate_datasets(const ExperimentConfig& config) {
  SyntheticSpec spec = config.data.synthetic;
  Datasets out;
  spec.real_count = spec.fake_count = config.data.train_per_class;
  out.train = generate_synthetic_dataset(spec, derive_seed(config.seed, Streams::kDataTrain));
  spec.real_count = spec.fake_count = config.data.test_per_class;
  out.test = generate_synthetic_dataset(spec, derive_seed(config.seed, Streams::kDataTest));
  return out;
}

Datasets load_datasets(const ExperimentConfig& config) {
  switch (config.data.source) {
    case DataSource::kSynthetic:
      return generate_datasets(config);
    case DataSource::kManifest:
      return {read_dataset(config.data.train_manifest), read_dataset(config.data.test_manifest)};
    case DataSource::kDirectory: {
      const auto layout = read_layout_manifest(config.data.layout);
      Datasets out;
      for (auto [root, dest] : {std::pair{config.data.train_root, &out.train},
                                std::pair{config.data.test_root, &out.test}}) {
        IngestReport report = ingest_directory(root, layout);
        for (const std::string& w : report.warnings) std::cerr << "warning: " << w << '\n';
        *dest = std::move(report.records);
      }
      return out;
    }
  }
  fail(ErrorCategory::kConfig, "unsupported data source");
}

std::unique_ptr<Detector> build_detector(const ExperimentConfig& config, int channels) {
  if (channels <= 0) channels = config.data.synthetic.channels;
  Rng init(derive_seed(config.seed, Streams::kInit));
  std::vector<int> hyper;
  if (config.architecture == ReferenceCnn::kArchitecture) {
    hyper.push_back(channels);
    hyper.insert(hyper.end(), config.widths.begin(), config.widths.end());
  } else {
    hyper = {channels, config.preprocess.crop, config.preprocess.crop};
  }
  return make_detector(config.architecture, hyper, &init);
}

TrainingResult train_detector(const ExperimentConfig& config, std::span<const SampleRecord> train,
                              Detector& detector, const TrainingOptions& options) {
  config.train.validate();
  require(!train.empty(), ErrorCategory::kEmptyDataset, "training set is empty");
  std::vector<Label> labels;
  for (const SampleRecord& r : train) labels.push_back(r.label);

  BatchSampler sampler(labels, config.train.batch_size, derive_seed(config.seed, Streams::kOrder));
  Rng preprocess_rng(derive_seed(config.seed, Streams::kPreprocess));
  Rng augment_rng(derive_seed(config.seed, Streams::kAugment));
  AdamState optimizer;
  TrainingResult result;

  const std::size_t batch = static_cast<std::size_t>(config.train.batch_size);
  std::vector<Image> images(batch);
  std::vector<Tensor> inputs(batch);
  std::vector<Label> batch_labels(batch);

  for (int iteration = 1; iteration <= config.train.iterations; ++iteration) {
    const std::vector<std::size_t> indices = sampler.next();
    for (std::size_t k = 0; k < batch; ++k) {
      images[k] = preprocess_train(train[indices[k]].image, preprocess_rng, config.preprocess);
      batch_labels[k] = train[indices[k]].label;
    }

    switch (config.mode) {
      case AugmentationMode::kNone:
        break;
      case AugmentationMode::kRfm: {
        for (std::size_t k = 0; k < batch; ++k) inputs[k] = to_network_input(images[k]);
        const auto fams = compute_fam_batch(detector, std::span<const Tensor>(inputs));
        for (std::size_t k = 0; k < batch; ++k)
          images[k] = sfe(images[k], fams[k], config.erase, augment_rng).image;
        break;
      }
      case AugmentationMode::kPsfe:
        for (std::size_t k = 0; k < batch; ++k)
          images[k] = psfe(detector, images[k], config.erase, augment_rng).image;
        break;
      case AugmentationMode::kRandomErasing:
        for (std::size_t k = 0; k < batch; ++k)
          images[k] = random_erasing(images[k], config.random_erasing, augment_rng).image;
        break;
      case AugmentationMode::kAdversarialErasing:
        for (std::size_t k = 0; k < batch; ++k) {
          AdversarialErasingParams params = config.adversarial_erasing;
          params.label = batch_labels[k];
          images[k] = adversarial_erasing(detector, images[k], params, augment_rng).image;
        }
        break;
    }

    for (std::size_t k = 0; k < batch; ++k) inputs[k] = to_network_input(images[k]);
    const double loss = train_step(detector, inputs, batch_labels, config.train, optimizer);
    result.losses.push_back(loss);
    if (options.on_iteration) options.on_iteration(iteration, loss);

    if (!options.checkpoint_dir.empty() && config.checkpoint_interval > 0 &&
        iteration % config.checkpoint_interval == 0 && iteration != config.train.iterations) {
      char name[32];
      std::snprintf(name, sizeof name, "iter-%06d.ckpt", iteration);
      save_checkpoint(detector, options.checkpoint_dir / name);
      result.checkpoints.push_back(options.checkpoint_dir / name);
    }
  }
  result.audit = {sampler.draws(), preprocess_rng.draws(), augment_rng.draws()};
  return result;
}

namespace {

RunManifest train_and_save(const ExperimentConfig& config, const Datasets& data, Detector& detector) {
  const fs::path out = config.output_dir;
  fs::create_directories(out / "checkpoints");

  RunManifest manifest = RunManifest::load_or_empty(out);
  manifest.config = config.snapshot;

  std::ofstream log(out / "loss.csv");
  require(static_cast<bool>(log), ErrorCategory::kIo, "cannot write " + (out / "loss.csv").string());
  log << "iteration,loss\n";
  TrainingOptions options;
  options.checkpoint_dir = out / "checkpoints";
  options.on_iteration = [&](int iteration, double loss) { log << iteration << ',' << format_double(loss) << '\n'; };

  const auto finish = [&](const std::vector<fs::path>& checkpoints) {
    log.close();
    manifest.add_file(out, "loss.csv");
    for (const fs::path& ckpt : checkpoints) {
      const std::string rel = fs::relative(ckpt, out).generic_string();
      manifest.add_file(out, rel);
      if (std::find(manifest.checkpoints.begin(), manifest.checkpoints.end(), rel) == manifest.checkpoints.end())
        manifest.checkpoints.push_back(rel);
    }
    manifest.write(out);
  };

  TrainingResult result;
  try {
    result = train_detector(config, data.train, detector, options);
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::kTrainingDiverged) {
      manifest.warnings.push_back(std::string("training diverged: ") + e.what());
      finish({});
    }
    throw;
  }
  const fs::path final_ckpt = out / "checkpoints" / "final.ckpt";
  save_checkpoint(detector, final_ckpt);
  result.checkpoints.push_back(final_ckpt);
  finish(result.checkpoints);
  return manifest;
}

}  // namespace

RunManifest run_training(const ExperimentConfig& config) {
  const Datasets data = load_datasets(config);
  require(!data.train.empty(), ErrorCategory::kEmptyDataset, "training set is empty");
  auto detector = build_detector(config, data.train.front().image.channels);
  return train_and_save(config, data, *detector);
}

RunManifest run_training(const ExperimentConfig& config, Detector& detector) {
  return train_and_save(config, load_datasets(config), detector);
}

}  // namespace rfm

namespace rfm {

GenDataResult run_gen_data(const ExperimentConfig& config) {
  require(config.data.source == DataSource::kSynthetic, ErrorCategory::kConfig,
          "gen-data needs data.source = synthetic");
  const Datasets data = generate_datasets(config);
  const fs::path out = config.output_dir;
  RunManifest manifest = RunManifest::load_or_empty(out);
  manifest.config = config.snapshot;
  GenDataResult result;
  for (auto [split, records] : {std::pair{"train", &data.train}, std::pair{"test", &data.test}}) {
    const fs::path dir = out / "data" / split;
    if (fs::exists(dir)) fs::remove_all(dir);
    const std::string prefix = "data/" + std::string(split) + "/";
    std::erase_if(manifest.files, [&](const FileEntry& f) { return f.path.rfind(prefix, 0) == 0; });
    write_dataset(dir, *records);
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
      if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), out).generic_string());
    std::sort(files.begin(), files.end());
    for (const std::string& rel : files) manifest.add_file(out, rel);
    (std::string(split) == "train" ? result.train_manifest : result.test_manifest) = dir / "manifest.csv";
  }
  manifest.write(out);
  return result;
}

}  // namespace rfm
