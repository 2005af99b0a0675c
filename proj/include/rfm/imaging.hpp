#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rfm/random.hpp"
#include "rfm/tensor.hpp"

namespace rfm {

// 8-bit raw pixel image, channel-major (C×H×W). All augmentation works in this
// domain; conversion to the network's [0, 1] range happens afterwards.
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int c, int h, int w, std::uint8_t fill = 0);

  std::size_t index(int c, int h, int w) const noexcept {
    return (static_cast<std::size_t>(c) * height + h) * width + w;
  }
  std::uint8_t& at(int c, int h, int w) { return pixels[index(c, h, w)]; }
  std::uint8_t at(int c, int h, int w) const { return pixels[index(c, h, w)]; }

  bool same_shape(const Image& other) const noexcept {
    return channels == other.channels && height == other.height && width == other.width;
  }
  friend bool operator==(const Image&, const Image&) = default;
};

// Throws invalid-image unless H, W >= 1, C in {1, 3} and the buffer matches.
void validate_image(const Image& image);

// H×W boolean field. Used for occlusion tracking, forgery ground truth and
// semantic region masks.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(int h, int w, bool fill = false)
      : height(h), width(w), bits(static_cast<std::size_t>(h) * w, fill ? 1 : 0) {}

  bool at(int h, int w) const { return bits[static_cast<std::size_t>(h) * width + w] != 0; }
  void set(int h, int w, bool v = true) { bits[static_cast<std::size_t>(h) * width + w] = v ? 1 : 0; }
  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }

  friend bool operator==(const Mask&, const Mask&) = default;
};

using OcclusionMask = Mask;

Mask mask_union(const Mask& a, const Mask& b);
Mask mask_difference(const Mask& a, const Mask& b);
Mask mask_intersection(const Mask& a, const Mask& b);

// Half-open rectangle [top, bottom) × [left, right).
struct Rect {
  int top = 0;
  int left = 0;
  int bottom = 0;
  int right = 0;

  int height() const noexcept { return bottom > top ? bottom - top : 0; }
  int width() const noexcept { return right > left ? right - left : 0; }
  std::size_t area() const noexcept { return static_cast<std::size_t>(height()) * width(); }
  bool contains(int r, int c) const noexcept { return r >= top && r < bottom && c >= left && c < right; }
  Rect clipped(int h, int w) const noexcept;

  friend bool operator==(const Rect&, const Rect&) = default;
};

Mask rect_mask(const Rect& rect, int height, int width);

// Erasing block around an anchor pixel. The extents satisfy
// top + bottom = H_max and left + right = W_max with top, left >= 1; `top`
// counts the rows from the block's upper edge down to and including the
// anchor row (likewise `left` for columns), so the anchor is always covered.
struct BlockGeometry {
  int anchor_row = 0;
  int anchor_col = 0;
  int top = 1;
  int left = 1;
  int bottom = 0;
  int right = 0;

  static BlockGeometry from_draws(int row, int col, int top_extent, int left_extent, int max_height,
                                  int max_width);
  Rect rect() const noexcept;  // unclipped
};

// Replaces every pixel of the (clipped) block with independent uniform
// integers in [0, 255], drawn channel-major then row-major, and marks the
// covered pixels in `mask`. Returns the clipped rectangle.
Rect fill_random_block(Image& image, OcclusionMask& mask, const BlockGeometry& geom, Rng& rng);

// Fills exactly the given pixels (row-major order, one draw per channel per
// pixel, channel-major) with uniform random integers.
void fill_random_pixels(Image& image, const Mask& region, Rng& rng);

Image resize_bilinear(const Image& image, int height, int width);
Mask resize_nearest(const Mask& mask, int height, int width);
ScalarMap resize_bilinear(const ScalarMap& map, int height, int width);
Image crop(const Image& image, int top, int left, int height, int width);
Mask crop(const Mask& mask, int top, int left, int height, int width);
Image flip_horizontal(const Image& image);

struct PreprocessConfig {
  int resize = 256;
  int crop = 224;
  double flip_probability = 0.5;
};

// Outcome of the random part of the training pipeline.
struct CropDraw {
  int top = 0;
  int left = 0;
  bool flip = false;
};

CropDraw draw_crop(const PreprocessConfig& config, Rng& rng);
Image preprocess_train(const Image& image, const CropDraw& draw, const PreprocessConfig& config = {});
Image preprocess_train(const Image& image, Rng& rng, const PreprocessConfig& config = {});
Image preprocess_eval(const Image& image, const PreprocessConfig& config = {});
// Applies the evaluation geometry (resize + center crop) to a mask.
Mask preprocess_eval(const Mask& mask, const PreprocessConfig& config = {});

// Scales pixels to [0, 1] for the network.
Tensor to_network_input(const Image& image);

}  // namespace rfm
