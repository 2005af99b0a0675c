#include "rfm/detector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rfm/error.hpp"

namespace rfm {

std::string_view label_name(Label label) { return label == Label::kReal ? "real" : "fake"; }

Label parse_label(std::string_view text) {
  if (text == "real" || text == "REAL" || text == "0") return Label::kReal;
  if (text == "fake" || text == "FAKE" || text == "1") return Label::kFake;
  fail(ErrorCategory::kConfig, "unknown label '" + std::string(text) + "'");
}

double fake_score(const LogitPair& logits) {
  // softmax(o)[fake] = 1 / (1 + exp(o_real - o_fake))
  return 1.0 / (1.0 + std::exp(logits.real - logits.fake));
}

LogitWeights weights_for(LogitCombination combination) {
  switch (combination) {
    case LogitCombination::kFakeMinusReal: return {-1.0, 1.0};
    case LogitCombination::kReal: return {1.0, 0.0};
    case LogitCombination::kFake: return {0.0, 1.0};
  }
  return {};
}

std::vector<ScalarMap> Detector::feature_maps(const Tensor&) const {
  fail(ErrorCategory::kUnsupportedArchitecture,
       architecture() + " has no global-average-pool + linear head");
}

std::vector<double> Detector::head_weights(Label) const {
  fail(ErrorCategory::kUnsupportedArchitecture,
       architecture() + " has no global-average-pool + linear head");
}

void validate_batch(std::span<const Tensor> batch) {
  require(!batch.empty(), ErrorCategory::kBatchShape, "empty batch");
  for (const Tensor& t : batch) {
    require(t.same_shape(batch.front()), ErrorCategory::kBatchShape,
            "batch images differ in shape");
    require(t.size() == static_cast<std::size_t>(t.channels) * t.height * t.width && t.size() > 0,
            ErrorCategory::kBatchShape, "malformed tensor in batch");
  }
}

std::vector<LogitPair> forward(const Detector& detector, std::span<const Image> batch) {
  std::vector<Tensor> inputs;
  inputs.reserve(batch.size());
  for (const Image& image : batch) inputs.push_back(to_network_input(image));
  return detector.forward(inputs);
}

std::vector<Tensor> input_gradients(const Detector& detector, std::span<const Tensor> batch,
                                    LogitCombination combination) {
  require(detector.differentiable(), ErrorCategory::kGradientUnavailable,
          detector.architecture() + " is not differentiable");
  const std::vector<LogitWeights> seeds(batch.size(), weights_for(combination));
  auto grads = detector.input_gradients(batch, seeds);
  for (const Tensor& g : grads)
    for (double v : g.data)
      require(std::isfinite(v), ErrorCategory::kGradientUnavailable, "non-finite input gradient");
  return grads;
}

Tensor input_gradient(const Detector& detector, const Tensor& input, LogitCombination combination) {
  return std::move(input_gradients(detector, std::span<const Tensor>(&input, 1), combination).front());
}

Tensor input_gradient(const Detector& detector, const Image& image, LogitCombination combination) {
  return input_gradient(detector, to_network_input(image), combination);
}

ScalarMap compute_cam(const Detector& detector, const Tensor& input, Label label, bool upsample) {
  require(detector.has_cam_head(), ErrorCategory::kUnsupportedArchitecture,
          detector.architecture() + " has no global-average-pool + linear head");
  const std::vector<ScalarMap> features = detector.feature_maps(input);
  const std::vector<double> weights = detector.head_weights(label);
  require(!features.empty() && features.size() == weights.size(),
          ErrorCategory::kUnsupportedArchitecture, "feature channels do not match head weights");
  ScalarMap cam(features.front().height, features.front().width);
  for (std::size_t k = 0; k < features.size(); ++k)
    for (std::size_t i = 0; i < cam.values.size(); ++i) cam.values[i] += weights[k] * features[k].values[i];
  return upsample ? resize_bilinear(cam, input.height, input.width) : cam;
}

ScalarMap compute_cam(const Detector& detector, const Image& image, Label label, bool upsample) {
  return compute_cam(detector, to_network_input(image), label, upsample);
}

// --- instrumentation -------------------------------------------------------

std::unique_ptr<Detector> InstrumentedDetector::clone() const {
  return std::make_unique<InstrumentedDetector>(inner_->clone());
}

std::vector<LogitPair> InstrumentedDetector::forward(std::span<const Tensor> batch) const {
  ++forward_passes_;
  return inner_->forward(batch);
}

std::vector<Tensor> InstrumentedDetector::input_gradients(std::span<const Tensor> batch,
                                                          std::span<const LogitWeights> seeds) const {
  ++forward_passes_;
  ++backward_passes_;
  return inner_->input_gradients(batch, seeds);
}

double InstrumentedDetector::parameter_gradient(std::span<const Tensor> batch,
                                                const LossFunction& loss,
                                                std::vector<double>& grad) const {
  ++forward_passes_;
  ++backward_passes_;
  return inner_->parameter_gradient(batch, loss, grad);
}

void InstrumentedDetector::apply_update(std::span<const double> delta) {
  ++updates_;
  inner_->apply_update(delta);
}

std::vector<ScalarMap> InstrumentedDetector::feature_maps(const Tensor& input) const {
  ++forward_passes_;
  return inner_->feature_maps(input);
}

std::unique_ptr<Detector> make_detector(const std::string& architecture,
                                        const std::vector<int>& hyperparameters, Rng* rng) {
  if (architecture == ReferenceCnn::kArchitecture) {
    require(hyperparameters.size() >= 2, ErrorCategory::kConfig,
            "reference-cnn needs input channels and at least one width");
    auto net = std::make_unique<ReferenceCnn>(
        hyperparameters.front(), std::vector<int>(hyperparameters.begin() + 1, hyperparameters.end()));
    if (rng) net->initialize(*rng);
    return net;
  }
  if (architecture == LinearDetector::kArchitecture) {
    require(hyperparameters.size() == 3, ErrorCategory::kConfig, "linear needs channels, height, width");
    auto net = std::make_unique<LinearDetector>(hyperparameters[0], hyperparameters[1], hyperparameters[2]);
    if (rng) net->initialize(*rng);
    return net;
  }
  fail(ErrorCategory::kUnsupportedArchitecture, "unknown detector architecture '" + architecture + "'");
}

// --- training --------------------------------------------------------------

void TrainConfig::validate() const {
  require(learning_rate > 0.0, ErrorCategory::kConfig, "learning rate must be positive");
  require(batch_size >= 2 && batch_size % 2 == 0, ErrorCategory::kConfig,
          "batch size must be even and at least 2");
  require(flood_level >= 0.0, ErrorCategory::kConfig, "flood level must be non-negative");
  require(iterations >= 0, ErrorCategory::kConfig, "iterations must be non-negative");
}

std::vector<double> AdamState::update(std::span<const double> grad, double learning_rate) {
  if (first_moment.size() != grad.size()) {
    first_moment.assign(grad.size(), 0.0);
    second_moment.assign(grad.size(), 0.0);
    step = 0;
  }
  ++step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  std::vector<double> delta(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    first_moment[i] = beta1 * first_moment[i] + (1.0 - beta1) * grad[i];
    second_moment[i] = beta2 * second_moment[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double m_hat = first_moment[i] / c1;
    const double v_hat = second_moment[i] / c2;
    delta[i] = -learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
  }
  return delta;
}

double cross_entropy(std::span<const LogitPair> logits, std::span<const Label> labels,
                     std::span<LogitWeights> grads) {
  require(logits.size() == labels.size() && grads.size() == logits.size() && !logits.empty(),
          ErrorCategory::kContractViolation, "logits, labels and gradient buffers differ in size");
  const double n = static_cast<double>(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double m = std::max(logits[i].real, logits[i].fake);
    const double er = std::exp(logits[i].real - m);
    const double ef = std::exp(logits[i].fake - m);
    const double lse = m + std::log(er + ef);
    const bool fake = labels[i] == Label::kFake;
    total += lse - (fake ? logits[i].fake : logits[i].real);
    const double p_real = er / (er + ef);
    const double p_fake = ef / (er + ef);
    grads[i].real = (p_real - (fake ? 0.0 : 1.0)) / n;
    grads[i].fake = (p_fake - (fake ? 1.0 : 0.0)) / n;
  }
  return total / n;
}

double flooded_loss(double cross_entropy, double flood_level) {
  return std::abs(cross_entropy - flood_level) + flood_level;
}

double flood_gradient_sign(double cross_entropy, double flood_level) {
  return cross_entropy >= flood_level ? 1.0 : -1.0;
}

double train_step(Detector& detector, std::span<const Tensor> batch, std::span<const Label> labels,
                  const TrainConfig& config, AdamState& optimizer) {
  config.validate();
  validate_batch(batch);
  require(labels.size() == batch.size(), ErrorCategory::kContractViolation,
          "label count differs from batch size");
  const auto fakes = std::count(labels.begin(), labels.end(), Label::kFake);
  require(fakes * 2 == static_cast<std::ptrdiff_t>(labels.size()), ErrorCategory::kContractViolation,
          "training batch must hold equal numbers of REAL and FAKE images");

  double raw_ce = 0.0;
  const LossFunction loss = [&](std::span<const LogitPair> logits, std::span<LogitWeights> grads) {
    raw_ce = cross_entropy(logits, labels, grads);
    if (!std::isfinite(raw_ce)) return raw_ce;
    const double sign = flood_gradient_sign(raw_ce, config.flood_level);
    for (LogitWeights& g : grads) {
      g.real *= sign;
      g.fake *= sign;
    }
    return flooded_loss(raw_ce, config.flood_level);
  };
  std::vector<double> grad;
  const double loss_value = detector.parameter_gradient(batch, loss, grad);
  if (!std::isfinite(loss_value) || !std::isfinite(raw_ce))
    fail(ErrorCategory::kTrainingDiverged,
         "non-finite training loss (cross-entropy " + std::to_string(raw_ce) + ")");
  for (double g : grad)
    require(std::isfinite(g), ErrorCategory::kTrainingDiverged, "non-finite parameter gradient");
  detector.apply_update(optimizer.update(grad, config.learning_rate));
  return loss_value;
}

}  // namespace rfm
