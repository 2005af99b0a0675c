#include <string>

#include "rfm/detector.hpp"
#include "rfm/error.hpp"

namespace rfm {

LinearDetector::LinearDetector(int channels, int height, int width)
    : channels_(channels), height_(height), width_(width) {
  require(channels >= 1 && height >= 1 && width >= 1, ErrorCategory::kConfig,
          "linear detector needs a positive input shape");
  params_.assign(2 * plane() + 2, 0.0);
}

void LinearDetector::initialize(Rng& rng) {
  for (std::size_t i = 0; i < 2 * plane(); ++i) params_[i] = 0.01 * rng.normal();
}

double& LinearDetector::weight(Label label, int c, int h, int w) {
  const std::size_t base = label == Label::kReal ? 0 : plane();
  return params_[base + (static_cast<std::size_t>(c) * height_ + h) * width_ + w];
}

double& LinearDetector::bias(Label label) { return params_[2 * plane() + (label == Label::kReal ? 0 : 1)]; }

void LinearDetector::check_input(const Tensor& input) const {
  require(input.channels == channels_ && input.height == height_ && input.width == width_,
          ErrorCategory::kBatchShape,
          "linear detector expects " + std::to_string(channels_) + "x" + std::to_string(height_) +
              "x" + std::to_string(width_) + " input");
}

std::vector<LogitPair> LinearDetector::forward(std::span<const Tensor> batch) const {
  validate_batch(batch);
  std::vector<LogitPair> out;
  for (const Tensor& t : batch) {
    check_input(t);
    LogitPair o{params_[2 * plane()], params_[2 * plane() + 1]};
    for (std::size_t i = 0; i < plane(); ++i) {
      o.real += params_[i] * t.data[i];
      o.fake += params_[plane() + i] * t.data[i];
    }
    out.push_back(o);
  }
  return out;
}

std::vector<Tensor> LinearDetector::input_gradients(std::span<const Tensor> batch,
                                                    std::span<const LogitWeights> seeds) const {
  validate_batch(batch);
  require(seeds.size() == batch.size(), ErrorCategory::kContractViolation,
          "one gradient seed per image required");
  std::vector<Tensor> out;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    check_input(batch[n]);
    Tensor g(channels_, height_, width_);
    for (std::size_t i = 0; i < plane(); ++i)
      g.data[i] = seeds[n].real * params_[i] + seeds[n].fake * params_[plane() + i];
    out.push_back(std::move(g));
  }
  return out;
}

double LinearDetector::parameter_gradient(std::span<const Tensor> batch, const LossFunction& loss,
                                          std::vector<double>& grad) const {
  const std::vector<LogitPair> logits = forward(batch);
  std::vector<LogitWeights> upstream(batch.size());
  const double value = loss(logits, upstream);
  grad.assign(params_.size(), 0.0);
  for (std::size_t n = 0; n < batch.size(); ++n) {
    for (std::size_t i = 0; i < plane(); ++i) {
      grad[i] += upstream[n].real * batch[n].data[i];
      grad[plane() + i] += upstream[n].fake * batch[n].data[i];
    }
    grad[2 * plane()] += upstream[n].real;
    grad[2 * plane() + 1] += upstream[n].fake;
  }
  return value;
}

void LinearDetector::set_parameters(std::span<const double> values) {
  require(values.size() == params_.size(), ErrorCategory::kContractViolation,
          "parameter count mismatch for linear detector");
  params_.assign(values.begin(), values.end());
}

void LinearDetector::apply_update(std::span<const double> delta) {
  require(delta.size() == params_.size(), ErrorCategory::kContractViolation,
          "update size mismatch for linear detector");
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i] += delta[i];
}

}  // namespace rfm
