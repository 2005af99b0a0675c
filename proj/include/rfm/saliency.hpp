#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rfm/detector.hpp"
#include "rfm/imaging.hpp"
#include "rfm/tensor.hpp"

namespace rfm {

// Per-pixel detector sensitivity: max over channels of
// |d(O_fake - O_real)/dI|. Always non-negative, same H×W as the image.
struct ForgeryAttentionMap : ScalarMap {
  std::string source_id;
};

// Channel-wise maximum of |gradient|.
ForgeryAttentionMap fam_from_gradient(const Tensor& gradient, std::string source_id = {});

// One forward + backward pass of the frozen detector; parameters untouched.
ForgeryAttentionMap compute_fam(const Detector& detector, const Tensor& input,
                                std::string source_id = {});
ForgeryAttentionMap compute_fam(const Detector& detector, const Image& image,
                                std::string source_id = {});

// FAMs for a whole batch using a single batched forward + backward pass.
std::vector<ForgeryAttentionMap> compute_fam_batch(const Detector& detector,
                                                   std::span<const Tensor> batch);
std::vector<ForgeryAttentionMap> compute_fam_batch(const Detector& detector,
                                                   std::span<const Image> batch);

// Element-wise mean of the given maps. Throws empty-aggregate on an empty list.
ForgeryAttentionMap average_maps(std::span<const ForgeryAttentionMap> maps);
ForgeryAttentionMap average_fam(const Detector& detector, std::span<const Image> images);

// Linear rescale to [0, 1]; throws degenerate-map on a constant map.
ScalarMap min_max_normalize(const ScalarMap& map);

struct CorrelationMatrix {
  std::vector<std::string> techniques;
  std::vector<double> values;  // row-major K×K

  std::size_t size() const noexcept { return techniques.size(); }
  double at(std::size_t a, std::size_t b) const { return values[a * techniques.size() + b]; }
};

// Cosine similarity of min-max normalized, flattened maps for every pair.
CorrelationMatrix fam_correlation_matrix(std::span<const ForgeryAttentionMap> maps,
                                         std::vector<std::string> techniques);

// Delimited text: header row "technique,<names...>", one row per technique.
void write_correlation_csv(const std::filesystem::path& path, const CorrelationMatrix& matrix);

// Min-max scaled map rendered through the viridis colormap (RGB). Constant
// maps render as the lowest colour.
Image render_heatmap(const ScalarMap& map);

}  // namespace rfm
