#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rfm/imaging.hpp"
#include "rfm/random.hpp"
#include "rfm/tensor.hpp"

namespace rfm {

enum class Label { kReal = 0, kFake = 1 };

std::string_view label_name(Label label);
Label parse_label(std::string_view text);

// Raw two-class output of a detector.
struct LogitPair {
  double real = 0.0;
  double fake = 0.0;

  // Ties resolve to REAL.
  Label predicted() const noexcept { return fake > real ? Label::kFake : Label::kReal; }
};

// Softmax probability of the FAKE class; the score used by all metrics.
double fake_score(const LogitPair& logits);

// Coefficients of the scalar s = real * O_real + fake * O_fake whose input
// gradient is requested. Also used as the upstream gradient dL/dO in training.
struct LogitWeights {
  double real = 0.0;
  double fake = 0.0;
};

enum class LogitCombination { kFakeMinusReal, kReal, kFake };

LogitWeights weights_for(LogitCombination combination);

// Maps a batch of logits to a scalar loss and writes dLoss/dO per sample.
using LossFunction = std::function<double(std::span<const LogitPair>, std::span<LogitWeights>)>;

// Differentiable two-logit detector. Inputs are C×H×W tensors with pixels
// scaled to [0, 1]. Every method that is documented as "one pass" counts as a
// single batched forward and/or backward propagation.
class Detector {
 public:
  virtual ~Detector() = default;

  virtual std::string architecture() const = 0;
  // Integer hyperparameters sufficient to rebuild the architecture.
  virtual std::vector<int> hyperparameters() const = 0;
  virtual std::unique_ptr<Detector> clone() const = 0;

  // One forward pass.
  virtual std::vector<LogitPair> forward(std::span<const Tensor> batch) const = 0;

  // One forward and one backward pass: d(seed · O)/dInput for every image.
  virtual std::vector<Tensor> input_gradients(std::span<const Tensor> batch,
                                              std::span<const LogitWeights> seeds) const = 0;

  // One forward and one backward pass down to the parameters. `grad` is
  // resized to the parameter count and receives dLoss/dParams.
  virtual double parameter_gradient(std::span<const Tensor> batch, const LossFunction& loss,
                                    std::vector<double>& grad) const = 0;

  virtual std::span<const double> parameters() const = 0;
  virtual void set_parameters(std::span<const double> values) = 0;
  // params += delta; one optimizer update.
  virtual void apply_update(std::span<const double> delta) = 0;

  virtual bool differentiable() const { return true; }

  // Global-average-pool + linear-head architectures expose their last
  // convolutional activations and per-class head weights (for CAM).
  virtual bool has_cam_head() const { return false; }
  virtual std::vector<ScalarMap> feature_maps(const Tensor& input) const;
  virtual std::vector<double> head_weights(Label label) const;
};

// Throws batch-shape unless the batch is non-empty and uniformly shaped.
void validate_batch(std::span<const Tensor> batch);

std::vector<LogitPair> forward(const Detector& detector, std::span<const Image> batch);

// Gradient of the selected logit combination with respect to the normalized
// input. Throws gradient-unavailable for non-differentiable detectors.
Tensor input_gradient(const Detector& detector, const Tensor& input, LogitCombination combination);
Tensor input_gradient(const Detector& detector, const Image& image, LogitCombination combination);
std::vector<Tensor> input_gradients(const Detector& detector, std::span<const Tensor> batch,
                                    LogitCombination combination);

// Class activation map on the last convolutional layer: Σ_k w_k^class F_k.
// With `upsample`, bilinearly resized to the input resolution.
ScalarMap compute_cam(const Detector& detector, const Image& image, Label label, bool upsample = false);
ScalarMap compute_cam(const Detector& detector, const Tensor& input, Label label, bool upsample = false);

// --- architectures ---------------------------------------------------------

// Four stride-2 3×3 conv blocks with SiLU, global average pooling and a
// linear two-class head (row 0 = REAL, row 1 = FAKE).
class ReferenceCnn final : public Detector {
 public:
  static constexpr const char* kArchitecture = "reference-cnn";

  ReferenceCnn(int in_channels, std::vector<int> widths);
  // He-normal conv weights, small normal head weights, zero biases.
  void initialize(Rng& rng);

  std::string architecture() const override { return kArchitecture; }
  std::vector<int> hyperparameters() const override;
  std::unique_ptr<Detector> clone() const override { return std::make_unique<ReferenceCnn>(*this); }

  std::vector<LogitPair> forward(std::span<const Tensor> batch) const override;
  std::vector<Tensor> input_gradients(std::span<const Tensor> batch,
                                      std::span<const LogitWeights> seeds) const override;
  double parameter_gradient(std::span<const Tensor> batch, const LossFunction& loss,
                            std::vector<double>& grad) const override;

  std::span<const double> parameters() const override { return params_; }
  void set_parameters(std::span<const double> values) override;
  void apply_update(std::span<const double> delta) override;

  bool has_cam_head() const override { return true; }
  std::vector<ScalarMap> feature_maps(const Tensor& input) const override;
  std::vector<double> head_weights(Label label) const override;

  int in_channels() const noexcept { return in_channels_; }
  const std::vector<int>& widths() const noexcept { return widths_; }

 private:
  struct ConvLayer {
    int in = 0;
    int out = 0;
    std::size_t weight_offset = 0;  // [out][in][3][3]
    std::size_t bias_offset = 0;
  };
  struct Activations {
    std::vector<Tensor> pre;   // pre-activation per layer
    std::vector<Tensor> post;  // SiLU output per layer
    LogitPair logits;
  };

  Activations run(const Tensor& input) const;
  // Backpropagates dL/dO through the network. Either output may be null.
  void backprop(const Tensor& input, const Activations& acts, const LogitWeights& upstream,
                Tensor* input_grad, std::vector<double>* param_grad) const;
  void check_input(const Tensor& input) const;

  int in_channels_;
  std::vector<int> widths_;
  std::vector<ConvLayer> layers_;
  std::size_t head_weight_offset_ = 0;  // [2][widths.back()]
  std::size_t head_bias_offset_ = 0;
  std::vector<double> params_;
};

// O_class = Σ w_class · x + b_class over a fixed input shape. Has no
// convolutional layer, so it does not support CAM.
class LinearDetector final : public Detector {
 public:
  static constexpr const char* kArchitecture = "linear";

  LinearDetector(int channels, int height, int width);
  void initialize(Rng& rng);

  std::string architecture() const override { return kArchitecture; }
  std::vector<int> hyperparameters() const override { return {channels_, height_, width_}; }
  std::unique_ptr<Detector> clone() const override { return std::make_unique<LinearDetector>(*this); }

  std::vector<LogitPair> forward(std::span<const Tensor> batch) const override;
  std::vector<Tensor> input_gradients(std::span<const Tensor> batch,
                                      std::span<const LogitWeights> seeds) const override;
  double parameter_gradient(std::span<const Tensor> batch, const LossFunction& loss,
                            std::vector<double>& grad) const override;

  std::span<const double> parameters() const override { return params_; }
  void set_parameters(std::span<const double> values) override;
  void apply_update(std::span<const double> delta) override;

  // Weight of `label`'s logit for input element (c, h, w).
  double& weight(Label label, int c, int h, int w);
  double& bias(Label label);

 private:
  void check_input(const Tensor& input) const;
  std::size_t plane() const noexcept { return static_cast<std::size_t>(channels_) * height_ * width_; }

  int channels_;
  int height_;
  int width_;
  std::vector<double> params_;  // [real weights][fake weights][b_real][b_fake]
};

// Builds an architecture by id; initializes from `rng` when given.
std::unique_ptr<Detector> make_detector(const std::string& architecture,
                                        const std::vector<int>& hyperparameters, Rng* rng);

// Forwards to another detector and counts passes and updates.
class InstrumentedDetector final : public Detector {
 public:
  explicit InstrumentedDetector(std::unique_ptr<Detector> inner) : inner_(std::move(inner)) {}

  std::string architecture() const override { return inner_->architecture(); }
  std::vector<int> hyperparameters() const override { return inner_->hyperparameters(); }
  std::unique_ptr<Detector> clone() const override;

  std::vector<LogitPair> forward(std::span<const Tensor> batch) const override;
  std::vector<Tensor> input_gradients(std::span<const Tensor> batch,
                                      std::span<const LogitWeights> seeds) const override;
  double parameter_gradient(std::span<const Tensor> batch, const LossFunction& loss,
                            std::vector<double>& grad) const override;
  std::span<const double> parameters() const override { return inner_->parameters(); }
  void set_parameters(std::span<const double> values) override { inner_->set_parameters(values); }
  void apply_update(std::span<const double> delta) override;
  bool differentiable() const override { return inner_->differentiable(); }
  bool has_cam_head() const override { return inner_->has_cam_head(); }
  std::vector<ScalarMap> feature_maps(const Tensor& input) const override;
  std::vector<double> head_weights(Label label) const override { return inner_->head_weights(label); }

  std::uint64_t forward_passes() const noexcept { return forward_passes_; }
  std::uint64_t backward_passes() const noexcept { return backward_passes_; }
  std::uint64_t updates() const noexcept { return updates_; }
  void reset_counters() noexcept { forward_passes_ = backward_passes_ = updates_ = 0; }

 private:
  std::unique_ptr<Detector> inner_;
  mutable std::uint64_t forward_passes_ = 0;
  mutable std::uint64_t backward_passes_ = 0;
  std::uint64_t updates_ = 0;
};

// --- training --------------------------------------------------------------

struct TrainConfig {
  double learning_rate = 0.0002;
  int batch_size = 16;  // half REAL, half FAKE
  double flood_level = 0.04;
  int iterations = 1000;

  void validate() const;
};

// Adaptive moment estimation with the usual default coefficients.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;

  // Returns the parameter delta for `grad` and advances the moments.
  std::vector<double> update(std::span<const double> grad, double learning_rate);
};

// Mean softmax cross-entropy; writes dCE/dO per sample.
double cross_entropy(std::span<const LogitPair> logits, std::span<const Label> labels,
                     std::span<LogitWeights> grads);

// |ce - b| + b.
double flooded_loss(double cross_entropy, double flood_level);
// d flooded / d ce; +1 at ce == b.
double flood_gradient_sign(double cross_entropy, double flood_level);

// One flooded cross-entropy step: forward, backward and one Adam update.
// Returns the flooded loss of the pre-update forward. Throws
// training-diverged on a non-finite loss and contract-violation on an
// unbalanced batch.
double train_step(Detector& detector, std::span<const Tensor> batch, std::span<const Label> labels,
                  const TrainConfig& config, AdamState& optimizer);

// --- checkpoints -----------------------------------------------------------

// Binary container: magic, version, architecture id, hyperparameters,
// float64 parameters and a trailing SHA-256 of everything before it.
void save_checkpoint(const Detector& detector, const std::filesystem::path& path);
std::unique_ptr<Detector> load_checkpoint(const std::filesystem::path& path);

}  // namespace rfm
