#include "rfm/saliency.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "rfm/error.hpp"

namespace rfm {

ForgeryAttentionMap fam_from_gradient(const Tensor& gradient, std::string source_id) {
  ForgeryAttentionMap fam;
  static_cast<ScalarMap&>(fam) = ScalarMap(gradient.height, gradient.width);
  fam.source_id = std::move(source_id);
  for (int c = 0; c < gradient.channels; ++c)
    for (int h = 0; h < gradient.height; ++h)
      for (int w = 0; w < gradient.width; ++w)
        fam.at(h, w) = std::max(fam.at(h, w), std::abs(gradient.at(c, h, w)));
  return fam;
}

std::vector<ForgeryAttentionMap> compute_fam_batch(const Detector& detector,
                                                   std::span<const Tensor> batch) {
  const std::vector<Tensor> grads = input_gradients(detector, batch, LogitCombination::kFakeMinusReal);
  std::vector<ForgeryAttentionMap> maps;
  maps.reserve(grads.size());
  for (const Tensor& g : grads) maps.push_back(fam_from_gradient(g));
  return maps;
}

std::vector<ForgeryAttentionMap> compute_fam_batch(const Detector& detector,
                                                   std::span<const Image> batch) {
  std::vector<Tensor> inputs;
  inputs.reserve(batch.size());
  for (const Image& image : batch) inputs.push_back(to_network_input(image));
  return compute_fam_batch(detector, inputs);
}

ForgeryAttentionMap compute_fam(const Detector& detector, const Tensor& input, std::string source_id) {
  ForgeryAttentionMap fam = compute_fam_batch(detector, std::span<const Tensor>(&input, 1)).front();
  fam.source_id = std::move(source_id);
  return fam;
}

ForgeryAttentionMap compute_fam(const Detector& detector, const Image& image, std::string source_id) {
  return compute_fam(detector, to_network_input(image), std::move(source_id));
}

ForgeryAttentionMap average_maps(std::span<const ForgeryAttentionMap> maps) {
  require(!maps.empty(), ErrorCategory::kEmptyAggregate, "cannot average an empty list of maps");
  ForgeryAttentionMap mean;
  static_cast<ScalarMap&>(mean) = ScalarMap(maps.front().height, maps.front().width);
  mean.source_id = "mean";
  for (const ForgeryAttentionMap& m : maps) {
    require(m.height == mean.height && m.width == mean.width, ErrorCategory::kContractViolation,
            "maps differ in shape");
    for (std::size_t i = 0; i < m.values.size(); ++i) mean.values[i] += m.values[i];
  }
  const double n = static_cast<double>(maps.size());
  for (double& v : mean.values) v /= n;
  return mean;
}

ForgeryAttentionMap average_fam(const Detector& detector, std::span<const Image> images) {
  require(!images.empty(), ErrorCategory::kEmptyAggregate, "cannot average FAMs of no images");
  for (const Image& image : images)
    require(image.same_shape(images.front()), ErrorCategory::kBatchShape, "images differ in shape");
  return average_maps(compute_fam_batch(detector, images));
}

ScalarMap min_max_normalize(const ScalarMap& map) {
  require(!map.values.empty(), ErrorCategory::kDegenerateMap, "empty map");
  const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
  const double range = *hi - *lo;
  require(range > 0.0 && std::isfinite(range), ErrorCategory::kDegenerateMap,
          "map has zero value range");
  ScalarMap out(map.height, map.width);
  const double low = *lo;
  for (std::size_t i = 0; i < map.values.size(); ++i) out.values[i] = (map.values[i] - low) / range;
  return out;
}

CorrelationMatrix fam_correlation_matrix(std::span<const ForgeryAttentionMap> maps,
                                         std::vector<std::string> techniques) {
  require(!maps.empty(), ErrorCategory::kEmptyAggregate, "no maps to correlate");
  require(techniques.size() == maps.size(), ErrorCategory::kContractViolation,
          "one technique name per map required");
  std::vector<ScalarMap> normalized;
  for (const ForgeryAttentionMap& m : maps) {
    require(m.height == maps.front().height && m.width == maps.front().width,
            ErrorCategory::kContractViolation, "maps differ in shape");
    normalized.push_back(min_max_normalize(m));
  }
  const std::size_t k = maps.size();
  CorrelationMatrix out{std::move(techniques), std::vector<double>(k * k, 0.0)};
  std::vector<double> norms(k);
  for (std::size_t a = 0; a < k; ++a) {
    double s = 0.0;
    for (double v : normalized[a].values) s += v * v;
    norms[a] = std::sqrt(s);
  }
  for (std::size_t a = 0; a < k; ++a) {
    out.values[a * k + a] = 1.0;
    for (std::size_t b = a + 1; b < k; ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < normalized[a].values.size(); ++i)
        dot += normalized[a].values[i] * normalized[b].values[i];
      const double cosine = std::clamp(dot / (norms[a] * norms[b]), -1.0, 1.0);
      out.values[a * k + b] = out.values[b * k + a] = cosine;
    }
  }
  return out;
}

void write_correlation_csv(const std::filesystem::path& path, const CorrelationMatrix& matrix) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorCategory::kIo, "cannot write " + path.string());
  out << "technique";
  for (const std::string& t : matrix.techniques) out << ',' << t;
  out << '\n' << std::setprecision(17);
  for (std::size_t a = 0; a < matrix.size(); ++a) {
    out << matrix.techniques[a];
    for (std::size_t b = 0; b < matrix.size(); ++b) out << ',' << matrix.at(a, b);
    out << '\n';
  }
}

namespace {

// Polynomial fit of matplotlib's viridis.
std::array<double, 3> viridis(double t) {
  static constexpr double c[7][3] = {
      {0.2777273272234177, 0.005407344544966578, 0.3340998053353061},
      {0.1050930431085774, 1.404613529898575, 1.384590162594685},
      {-0.3308618287255563, 0.214847559468213, 0.09509516302823659},
      {-4.634230498983486, -5.799100973351585, -19.33244095627987},
      {6.228269936347081, 14.17993336680509, 56.69055260068105},
      {4.776384997670288, -13.74514537774601, -65.35303263337234},
      {-5.435455855934631, 4.645852612178535, 26.3124352495832}};
  std::array<double, 3> rgb{};
  for (int ch = 0; ch < 3; ++ch) {
    double v = c[6][ch];
    for (int k = 5; k >= 0; --k) v = c[k][ch] + t * v;
    rgb[ch] = std::clamp(v, 0.0, 1.0);
  }
  return rgb;
}

}  // namespace

Image render_heatmap(const ScalarMap& map) {
  require(map.height >= 1 && map.width >= 1, ErrorCategory::kInvalidImage, "empty map");
  const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
  const double range = *hi - *lo;
  Image out(3, map.height, map.width);
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const double t = range > 0.0 ? (map.at(y, x) - *lo) / range : 0.0;
      const auto rgb = viridis(t);
      for (int ch = 0; ch < 3; ++ch)
        out.at(ch, y, x) = static_cast<std::uint8_t>(std::lround(rgb[ch] * 255.0));
    }
  }
  return out;
}

}  // namespace rfm
