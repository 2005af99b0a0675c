#pragma once

#include <filesystem>

#include "rfm/imaging.hpp"
#include "rfm/tensor.hpp"

namespace rfm {

// PNG files (8-bit gray or RGB). Reading converts palette/alpha variants to
// gray or RGB; throws io on unreadable or malformed files.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

// Masks are stored as 8-bit gray PNGs (0 / 255).
Mask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const Mask& mask);

// Raw float arrays in the NumPy .npy v1.0 format (little-endian float64).
void write_npy(const std::filesystem::path& path, const ScalarMap& map);
ScalarMap read_npy(const std::filesystem::path& path);

// Raw 8-bit image arrays (.npy, uint8, shape C×H×W).
void write_npy(const std::filesystem::path& path, const Image& image);
Image read_npy_image(const std::filesystem::path& path);

}  // namespace rfm
