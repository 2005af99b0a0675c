#include <cmath>
#include <string>

#include "rfm/detector.hpp"
#include "rfm/error.hpp"

namespace rfm {
namespace {

constexpr int kKernel = 3;
constexpr int kStride = 2;
constexpr int kPad = 1;

int conv_out(int n) { return (n + 2 * kPad - kKernel) / kStride + 1; }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Output columns x whose input column 2x - 1 + kx lies inside [0, width).
struct ColumnRange {
  int begin;
  int end;
};

ColumnRange valid_columns(int kx, int in_width, int out_width) {
  const int offset = kx - kPad;
  int begin = offset < 0 ? (-offset + kStride - 1) / kStride : 0;
  int end = (in_width - 1 - offset) / kStride + 1;
  if (in_width - 1 - offset < 0) end = 0;
  if (end > out_width) end = out_width;
  return {begin, end};
}

}  // namespace

ReferenceCnn::ReferenceCnn(int in_channels, std::vector<int> widths)
    : in_channels_(in_channels), widths_(std::move(widths)) {
  require(in_channels_ == 1 || in_channels_ == 3, ErrorCategory::kConfig,
          "reference-cnn input must have 1 or 3 channels");
  require(!widths_.empty(), ErrorCategory::kConfig, "reference-cnn needs at least one conv block");
  std::size_t offset = 0;
  int in = in_channels_;
  for (int out : widths_) {
    require(out >= 1, ErrorCategory::kConfig, "conv width must be positive");
    ConvLayer layer{in, out, offset, 0};
    offset += static_cast<std::size_t>(out) * in * kKernel * kKernel;
    layer.bias_offset = offset;
    offset += static_cast<std::size_t>(out);
    layers_.push_back(layer);
    in = out;
  }
  head_weight_offset_ = offset;
  offset += 2 * static_cast<std::size_t>(widths_.back());
  head_bias_offset_ = offset;
  offset += 2;
  params_.assign(offset, 0.0);
}

void ReferenceCnn::initialize(Rng& rng) {
  for (const ConvLayer& layer : layers_) {
    const double stddev = std::sqrt(2.0 / (layer.in * kKernel * kKernel));
    const std::size_t count = static_cast<std::size_t>(layer.out) * layer.in * kKernel * kKernel;
    for (std::size_t i = 0; i < count; ++i) params_[layer.weight_offset + i] = stddev * rng.normal();
    for (int o = 0; o < layer.out; ++o) params_[layer.bias_offset + o] = 0.0;
  }
  const double head_std = 1.0 / std::sqrt(static_cast<double>(widths_.back()));
  for (int i = 0; i < 2 * widths_.back(); ++i) params_[head_weight_offset_ + i] = head_std * rng.normal();
  params_[head_bias_offset_] = params_[head_bias_offset_ + 1] = 0.0;
}

std::vector<int> ReferenceCnn::hyperparameters() const {
  std::vector<int> h{in_channels_};
  h.insert(h.end(), widths_.begin(), widths_.end());
  return h;
}

void ReferenceCnn::check_input(const Tensor& input) const {
  require(input.channels == in_channels_ && input.height >= 1 && input.width >= 1,
          ErrorCategory::kBatchShape,
          "reference-cnn expects " + std::to_string(in_channels_) + " input channels, got " +
              std::to_string(input.channels));
}

ReferenceCnn::Activations ReferenceCnn::run(const Tensor& input) const {
  Activations acts;
  acts.pre.reserve(layers_.size());
  acts.post.reserve(layers_.size());
  const Tensor* in = &input;
  for (const ConvLayer& layer : layers_) {
    const int ho = conv_out(in->height);
    const int wo = conv_out(in->width);
    Tensor z(layer.out, ho, wo);
    for (int o = 0; o < layer.out; ++o) {
      double* out_plane = z.data.data() + static_cast<std::size_t>(o) * ho * wo;
      const double b = params_[layer.bias_offset + o];
      for (int p = 0; p < ho * wo; ++p) out_plane[p] = b;
      for (int i = 0; i < layer.in; ++i) {
        const double* in_plane = in->data.data() + static_cast<std::size_t>(i) * in->height * in->width;
        const double* w = params_.data() + layer.weight_offset +
                          (static_cast<std::size_t>(o) * layer.in + i) * kKernel * kKernel;
        for (int ky = 0; ky < kKernel; ++ky) {
          for (int kx = 0; kx < kKernel; ++kx) {
            const double wv = w[ky * kKernel + kx];
            const ColumnRange cols = valid_columns(kx, in->width, wo);
            for (int y = 0; y < ho; ++y) {
              const int iy = kStride * y - kPad + ky;
              if (iy < 0 || iy >= in->height) continue;
              const double* in_row = in_plane + static_cast<std::size_t>(iy) * in->width + (kx - kPad);
              double* out_row = out_plane + static_cast<std::size_t>(y) * wo;
              for (int x = cols.begin; x < cols.end; ++x) out_row[x] += wv * in_row[kStride * x];
            }
          }
        }
      }
    }
    Tensor a(layer.out, ho, wo);
    for (std::size_t k = 0; k < z.data.size(); ++k) a.data[k] = z.data[k] * sigmoid(z.data[k]);
    acts.pre.push_back(std::move(z));
    acts.post.push_back(std::move(a));
    in = &acts.post.back();
  }
  const Tensor& last = acts.post.back();
  const int channels = last.channels;
  const double area = static_cast<double>(last.height) * last.width;
  double real = params_[head_bias_offset_];
  double fake = params_[head_bias_offset_ + 1];
  for (int k = 0; k < channels; ++k) {
    double sum = 0.0;
    const double* plane = last.data.data() + static_cast<std::size_t>(k) * last.height * last.width;
    for (int p = 0; p < last.height * last.width; ++p) sum += plane[p];
    const double pooled = sum / area;
    real += params_[head_weight_offset_ + k] * pooled;
    fake += params_[head_weight_offset_ + channels + k] * pooled;
  }
  acts.logits = {real, fake};
  return acts;
}

void ReferenceCnn::backprop(const Tensor& input, const Activations& acts, const LogitWeights& upstream,
                            Tensor* input_grad, std::vector<double>* param_grad) const {
  const Tensor& last = acts.post.back();
  const int channels = last.channels;
  const int area = last.height * last.width;

  // Head and global average pool.
  Tensor d_post(channels, last.height, last.width);
  for (int k = 0; k < channels; ++k) {
    const double* plane = last.data.data() + static_cast<std::size_t>(k) * area;
    const double dg = upstream.real * params_[head_weight_offset_ + k] +
                      upstream.fake * params_[head_weight_offset_ + channels + k];
    double* d_plane = d_post.data.data() + static_cast<std::size_t>(k) * area;
    for (int p = 0; p < area; ++p) d_plane[p] = dg / area;
    if (param_grad) {
      double sum = 0.0;
      for (int p = 0; p < area; ++p) sum += plane[p];
      const double pooled = sum / area;
      (*param_grad)[head_weight_offset_ + k] += upstream.real * pooled;
      (*param_grad)[head_weight_offset_ + channels + k] += upstream.fake * pooled;
    }
  }
  if (param_grad) {
    (*param_grad)[head_bias_offset_] += upstream.real;
    (*param_grad)[head_bias_offset_ + 1] += upstream.fake;
  }

  for (std::size_t l = layers_.size(); l-- > 0;) {
    const ConvLayer& layer = layers_[l];
    const Tensor& z = acts.pre[l];
    const Tensor& in = l == 0 ? input : acts.post[l - 1];
    const bool need_input_grad = l > 0 || input_grad != nullptr;

    // SiLU derivative.
    Tensor dz(z.channels, z.height, z.width);
    for (std::size_t k = 0; k < z.data.size(); ++k) {
      const double s = sigmoid(z.data[k]);
      dz.data[k] = d_post.data[k] * s * (1.0 + z.data[k] * (1.0 - s));
    }

    Tensor d_in;
    if (need_input_grad) d_in = Tensor(in.channels, in.height, in.width);
    const int ho = z.height;
    const int wo = z.width;
    for (int o = 0; o < layer.out; ++o) {
      const double* dz_plane = dz.data.data() + static_cast<std::size_t>(o) * ho * wo;
      if (param_grad) {
        double sum = 0.0;
        for (int p = 0; p < ho * wo; ++p) sum += dz_plane[p];
        (*param_grad)[layer.bias_offset + o] += sum;
      }
      for (int i = 0; i < layer.in; ++i) {
        const std::size_t in_off = static_cast<std::size_t>(i) * in.height * in.width;
        const double* in_plane = in.data.data() + in_off;
        double* d_in_plane = need_input_grad ? d_in.data.data() + in_off : nullptr;
        const std::size_t w_off = layer.weight_offset +
                                  (static_cast<std::size_t>(o) * layer.in + i) * kKernel * kKernel;
        for (int ky = 0; ky < kKernel; ++ky) {
          for (int kx = 0; kx < kKernel; ++kx) {
            const double wv = params_[w_off + ky * kKernel + kx];
            const ColumnRange cols = valid_columns(kx, in.width, wo);
            double dw = 0.0;
            for (int y = 0; y < ho; ++y) {
              const int iy = kStride * y - kPad + ky;
              if (iy < 0 || iy >= in.height) continue;
              const std::size_t row_off = static_cast<std::size_t>(iy) * in.width + (kx - kPad);
              const double* dz_row = dz_plane + static_cast<std::size_t>(y) * wo;
              if (param_grad) {
                const double* in_row = in_plane + row_off;
                for (int x = cols.begin; x < cols.end; ++x) dw += dz_row[x] * in_row[kStride * x];
              }
              if (d_in_plane) {
                double* d_row = d_in_plane + row_off;
                for (int x = cols.begin; x < cols.end; ++x) d_row[kStride * x] += wv * dz_row[x];
              }
            }
            if (param_grad) (*param_grad)[w_off + ky * kKernel + kx] += dw;
          }
        }
      }
    }
    if (l == 0) {
      if (input_grad) *input_grad = std::move(d_in);
    } else {
      d_post = std::move(d_in);
    }
  }
}

std::vector<LogitPair> ReferenceCnn::forward(std::span<const Tensor> batch) const {
  validate_batch(batch);
  std::vector<LogitPair> out;
  out.reserve(batch.size());
  for (const Tensor& t : batch) {
    check_input(t);
    out.push_back(run(t).logits);
  }
  return out;
}

std::vector<Tensor> ReferenceCnn::input_gradients(std::span<const Tensor> batch,
                                                  std::span<const LogitWeights> seeds) const {
  validate_batch(batch);
  require(seeds.size() == batch.size(), ErrorCategory::kContractViolation,
          "one gradient seed per image required");
  std::vector<Tensor> out(batch.size());
  for (std::size_t n = 0; n < batch.size(); ++n) {
    check_input(batch[n]);
    const Activations acts = run(batch[n]);
    backprop(batch[n], acts, seeds[n], &out[n], nullptr);
  }
  return out;
}

double ReferenceCnn::parameter_gradient(std::span<const Tensor> batch, const LossFunction& loss,
                                        std::vector<double>& grad) const {
  validate_batch(batch);
  std::vector<Activations> acts;
  acts.reserve(batch.size());
  std::vector<LogitPair> logits;
  for (const Tensor& t : batch) {
    check_input(t);
    acts.push_back(run(t));
    logits.push_back(acts.back().logits);
  }
  std::vector<LogitWeights> upstream(batch.size());
  const double value = loss(logits, upstream);
  grad.assign(params_.size(), 0.0);
  for (std::size_t n = 0; n < batch.size(); ++n) backprop(batch[n], acts[n], upstream[n], nullptr, &grad);
  return value;
}

void ReferenceCnn::set_parameters(std::span<const double> values) {
  require(values.size() == params_.size(), ErrorCategory::kContractViolation,
          "parameter count mismatch for reference-cnn");
  params_.assign(values.begin(), values.end());
}

void ReferenceCnn::apply_update(std::span<const double> delta) {
  require(delta.size() == params_.size(), ErrorCategory::kContractViolation,
          "update size mismatch for reference-cnn");
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i] += delta[i];
}

std::vector<ScalarMap> ReferenceCnn::feature_maps(const Tensor& input) const {
  check_input(input);
  const Activations acts = run(input);
  const Tensor& last = acts.post.back();
  std::vector<ScalarMap> maps;
  for (int k = 0; k < last.channels; ++k) {
    ScalarMap m(last.height, last.width);
    for (int y = 0; y < last.height; ++y)
      for (int x = 0; x < last.width; ++x) m.at(y, x) = last.at(k, y, x);
    maps.push_back(std::move(m));
  }
  return maps;
}

std::vector<double> ReferenceCnn::head_weights(Label label) const {
  const int channels = widths_.back();
  const std::size_t row = label == Label::kReal ? 0 : 1;
  const auto begin = params_.begin() + static_cast<std::ptrdiff_t>(head_weight_offset_ + row * channels);
  return {begin, begin + channels};
}

}  // namespace rfm
