#include "rfm/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rfm/error.hpp"

namespace rfm {

Image::Image(int c, int h, int w, std::uint8_t fill)
    : channels(c), height(h), width(w), pixels(static_cast<std::size_t>(c) * h * w, fill) {}

void validate_image(const Image& image) {
  require(image.height >= 1 && image.width >= 1, ErrorCategory::kInvalidImage,
          "image must be at least 1x1, got " + std::to_string(image.height) + "x" +
              std::to_string(image.width));
  require(image.channels == 1 || image.channels == 3, ErrorCategory::kInvalidImage,
          "image must have 1 or 3 channels, got " + std::to_string(image.channels));
  require(image.pixels.size() ==
              static_cast<std::size_t>(image.channels) * image.height * image.width,
          ErrorCategory::kInvalidImage, "pixel buffer does not match image shape");
}

std::size_t Mask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

namespace {

template <typename Op>
Mask combine(const Mask& a, const Mask& b, Op op) {
  require(a.height == b.height && a.width == b.width, ErrorCategory::kContractViolation,
          "mask shapes differ");
  Mask out(a.height, a.width);
  for (std::size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = op(a.bits[i] != 0, b.bits[i] != 0) ? 1 : 0;
  return out;
}

std::uint8_t to_pixel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

Mask mask_union(const Mask& a, const Mask& b) {
  return combine(a, b, [](bool x, bool y) { return x || y; });
}
Mask mask_difference(const Mask& a, const Mask& b) {
  return combine(a, b, [](bool x, bool y) { return x && !y; });
}
Mask mask_intersection(const Mask& a, const Mask& b) {
  return combine(a, b, [](bool x, bool y) { return x && y; });
}

Rect Rect::clipped(int h, int w) const noexcept {
  Rect r{std::clamp(top, 0, h), std::clamp(left, 0, w), std::clamp(bottom, 0, h),
         std::clamp(right, 0, w)};
  if (r.bottom < r.top) r.bottom = r.top;
  if (r.right < r.left) r.right = r.left;
  return r;
}

Mask rect_mask(const Rect& rect, int height, int width) {
  Mask m(height, width);
  const Rect r = rect.clipped(height, width);
  for (int y = r.top; y < r.bottom; ++y)
    for (int x = r.left; x < r.right; ++x) m.set(y, x);
  return m;
}

BlockGeometry BlockGeometry::from_draws(int row, int col, int top_extent, int left_extent,
                                        int max_height, int max_width) {
  return BlockGeometry{row, col, top_extent, left_extent, max_height - top_extent,
                       max_width - left_extent};
}

Rect BlockGeometry::rect() const noexcept {
  return Rect{anchor_row - top + 1, anchor_col - left + 1, anchor_row + bottom + 1,
              anchor_col + right + 1};
}

Rect fill_random_block(Image& image, OcclusionMask& mask, const BlockGeometry& geom, Rng& rng) {
  require(mask.height == image.height && mask.width == image.width,
          ErrorCategory::kContractViolation, "occlusion mask shape differs from image");
  require(geom.anchor_row >= 0 && geom.anchor_row < image.height && geom.anchor_col >= 0 &&
              geom.anchor_col < image.width,
          ErrorCategory::kContractViolation,
          "block anchor (" + std::to_string(geom.anchor_row) + ", " +
              std::to_string(geom.anchor_col) + ") outside image");
  const Rect r = geom.rect().clipped(image.height, image.width);
  for (int c = 0; c < image.channels; ++c)
    for (int y = r.top; y < r.bottom; ++y)
      for (int x = r.left; x < r.right; ++x)
        image.at(c, y, x) = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  for (int y = r.top; y < r.bottom; ++y)
    for (int x = r.left; x < r.right; ++x) mask.set(y, x);
  return r;
}

void fill_random_pixels(Image& image, const Mask& region, Rng& rng) {
  require(region.height == image.height && region.width == image.width,
          ErrorCategory::kContractViolation, "region mask shape differs from image");
  for (int c = 0; c < image.channels; ++c)
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x)
        if (region.at(y, x)) image.at(c, y, x) = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
}

namespace {

// Half-pixel-centre source coordinate, clamped to the valid range.
struct Sample {
  int lo;
  int hi;
  double frac;
};

Sample source_coordinate(int dst, int dst_size, int src_size) {
  const double scale = static_cast<double>(src_size) / dst_size;
  double s = (dst + 0.5) * scale - 0.5;
  s = std::clamp(s, 0.0, static_cast<double>(src_size - 1));
  const int lo = static_cast<int>(std::floor(s));
  const int hi = std::min(lo + 1, src_size - 1);
  return {lo, hi, s - lo};
}

}  // namespace

Image resize_bilinear(const Image& image, int height, int width) {
  validate_image(image);
  require(height >= 1 && width >= 1, ErrorCategory::kInvalidImage, "resize target must be >= 1x1");
  if (image.height == height && image.width == width) return image;
  Image out(image.channels, height, width);
  for (int y = 0; y < height; ++y) {
    const Sample sy = source_coordinate(y, height, image.height);
    for (int x = 0; x < width; ++x) {
      const Sample sx = source_coordinate(x, width, image.width);
      for (int c = 0; c < image.channels; ++c) {
        const double top = image.at(c, sy.lo, sx.lo) * (1 - sx.frac) + image.at(c, sy.lo, sx.hi) * sx.frac;
        const double bot = image.at(c, sy.hi, sx.lo) * (1 - sx.frac) + image.at(c, sy.hi, sx.hi) * sx.frac;
        out.at(c, y, x) = to_pixel(top * (1 - sy.frac) + bot * sy.frac);
      }
    }
  }
  return out;
}

ScalarMap resize_bilinear(const ScalarMap& map, int height, int width) {
  require(map.height >= 1 && map.width >= 1 && height >= 1 && width >= 1,
          ErrorCategory::kContractViolation, "resize of empty map");
  if (map.height == height && map.width == width) return map;
  ScalarMap out(height, width);
  for (int y = 0; y < height; ++y) {
    const Sample sy = source_coordinate(y, height, map.height);
    for (int x = 0; x < width; ++x) {
      const Sample sx = source_coordinate(x, width, map.width);
      const double top = map.at(sy.lo, sx.lo) * (1 - sx.frac) + map.at(sy.lo, sx.hi) * sx.frac;
      const double bot = map.at(sy.hi, sx.lo) * (1 - sx.frac) + map.at(sy.hi, sx.hi) * sx.frac;
      out.at(y, x) = top * (1 - sy.frac) + bot * sy.frac;
    }
  }
  return out;
}

Mask resize_nearest(const Mask& mask, int height, int width) {
  if (mask.height == height && mask.width == width) return mask;
  Mask out(height, width);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(mask.height - 1, static_cast<int>((y + 0.5) * mask.height / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(mask.width - 1, static_cast<int>((x + 0.5) * mask.width / width));
      out.set(y, x, mask.at(sy, sx));
    }
  }
  return out;
}

Image crop(const Image& image, int top, int left, int height, int width) {
  require(top >= 0 && left >= 0 && height >= 1 && width >= 1 && top + height <= image.height &&
              left + width <= image.width,
          ErrorCategory::kContractViolation, "crop window outside image");
  Image out(image.channels, height, width);
  for (int c = 0; c < image.channels; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) out.at(c, y, x) = image.at(c, top + y, left + x);
  return out;
}

Mask crop(const Mask& mask, int top, int left, int height, int width) {
  require(top >= 0 && left >= 0 && top + height <= mask.height && left + width <= mask.width,
          ErrorCategory::kContractViolation, "crop window outside mask");
  Mask out(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) out.set(y, x, mask.at(top + y, left + x));
  return out;
}

Image flip_horizontal(const Image& image) {
  Image out(image.channels, image.height, image.width);
  for (int c = 0; c < image.channels; ++c)
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x) out.at(c, y, x) = image.at(c, y, image.width - 1 - x);
  return out;
}

namespace {

void validate_preprocess(const PreprocessConfig& config) {
  require(config.crop >= 1 && config.resize >= config.crop, ErrorCategory::kConfig,
          "preprocess requires 1 <= crop <= resize");
  require(config.flip_probability >= 0.0 && config.flip_probability <= 1.0, ErrorCategory::kConfig,
          "flip probability must lie in [0, 1]");
}

}  // namespace

CropDraw draw_crop(const PreprocessConfig& config, Rng& rng) {
  validate_preprocess(config);
  CropDraw d;
  d.top = static_cast<int>(rng.uniform_int(0, config.resize - config.crop));
  d.left = static_cast<int>(rng.uniform_int(0, config.resize - config.crop));
  d.flip = rng.uniform01() < config.flip_probability;
  return d;
}

Image preprocess_train(const Image& image, const CropDraw& draw, const PreprocessConfig& config) {
  validate_image(image);
  validate_preprocess(config);
  Image out = crop(resize_bilinear(image, config.resize, config.resize), draw.top, draw.left,
                   config.crop, config.crop);
  return draw.flip ? flip_horizontal(out) : out;
}

Image preprocess_train(const Image& image, Rng& rng, const PreprocessConfig& config) {
  validate_image(image);
  return preprocess_train(image, draw_crop(config, rng), config);
}

Image preprocess_eval(const Image& image, const PreprocessConfig& config) {
  validate_image(image);
  validate_preprocess(config);
  const int offset = (config.resize - config.crop) / 2;
  return crop(resize_bilinear(image, config.resize, config.resize), offset, offset, config.crop,
              config.crop);
}

Mask preprocess_eval(const Mask& mask, const PreprocessConfig& config) {
  validate_preprocess(config);
  const int offset = (config.resize - config.crop) / 2;
  return crop(resize_nearest(mask, config.resize, config.resize), offset, offset, config.crop,
              config.crop);
}

Tensor to_network_input(const Image& image) {
  validate_image(image);
  Tensor t(image.channels, image.height, image.width);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) t.data[i] = image.pixels[i] / 255.0;
  return t;
}

}  // namespace rfm
