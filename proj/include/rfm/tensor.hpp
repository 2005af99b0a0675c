#pragma once

#include <cstddef>
#include <vector>

namespace rfm {

// Dense C×H×W array of doubles; the network-side representation of an image
// (pixels scaled to [0, 1]) and of gradients with respect to it.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t size() const noexcept { return data.size(); }
  std::size_t index(int c, int h, int w) const noexcept {
    return (static_cast<std::size_t>(c) * height + h) * width + w;
  }
  double& at(int c, int h, int w) { return data[index(c, h, w)]; }
  double at(int c, int h, int w) const { return data[index(c, h, w)]; }

  bool same_shape(const Tensor& other) const noexcept {
    return channels == other.channels && height == other.height && width == other.width;
  }
};

// H×W scalar field (CAM maps, averaged saliency, ...).
struct ScalarMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  ScalarMap() = default;
  ScalarMap(int h, int w, double fill = 0.0)
      : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

  double& at(int h, int w) { return values[static_cast<std::size_t>(h) * width + w]; }
  double at(int h, int w) const { return values[static_cast<std::size_t>(h) * width + w]; }
};

}  // namespace rfm
