#include "rfm/image_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "rfm/error.hpp"

namespace rfm {
namespace {

std::vector<std::uint8_t> read_png_interleaved(const std::filesystem::path& path, bool force_gray,
                                               int& channels, int& height, int& width) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    fail(ErrorCategory::kIo, "cannot read PNG " + path.string() + ": " + img.message);
  const bool color = !force_gray && (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  channels = color ? 3 : 1;
  height = static_cast<int>(img.height);
  width = static_cast<int>(img.width);
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    fail(ErrorCategory::kIo, "cannot decode PNG " + path.string() + ": " + msg);
  }
  return buffer;
}

void write_png_interleaved(const std::filesystem::path& path, const std::uint8_t* data,
                           int channels, int height, int width) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, data, 0, nullptr))
    fail(ErrorCategory::kIo, "cannot write PNG " + path.string() + ": " + img.message);
}

std::string npy_header(const std::string& descr, const std::string& shape) {
  std::string dict = "{'descr': '" + descr + "', 'fortran_order': False, 'shape': " + shape + ", }";
  const std::size_t prefix = 10;  // magic (6) + version (2) + length (2)
  std::size_t total = prefix + dict.size() + 1;
  const std::size_t padded = (total + 63) / 64 * 64;
  dict.append(padded - total, ' ');
  dict.push_back('\n');
  std::string out = "\x93NUMPY";
  out.push_back('\x01');
  out.push_back('\x00');
  const auto len = static_cast<std::uint16_t>(dict.size());
  out.push_back(static_cast<char>(len & 0xff));
  out.push_back(static_cast<char>(len >> 8));
  return out + dict;
}

struct NpyHeader {
  std::string descr;
  std::vector<int> shape;
  std::string payload;
};

NpyHeader read_npy_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  if (bytes.size() < 10 || bytes.compare(0, 6, "\x93NUMPY") != 0)
    fail(ErrorCategory::kIo, "not an npy file: " + path.string());
  const std::size_t len = static_cast<unsigned char>(bytes[8]) |
                          (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
  if (bytes.size() < 10 + len) fail(ErrorCategory::kIo, "truncated npy header: " + path.string());
  const std::string dict = bytes.substr(10, len);
  NpyHeader h;
  std::smatch m;
  if (!std::regex_search(dict, m, std::regex("'descr':\\s*'([^']*)'")))
    fail(ErrorCategory::kIo, "npy header lacks descr: " + path.string());
  h.descr = m[1];
  if (!std::regex_search(dict, m, std::regex("'shape':\\s*\\(([^)]*)\\)")))
    fail(ErrorCategory::kIo, "npy header lacks shape: " + path.string());
  const std::string dims = m[1];
  std::regex num("\\d+");
  for (auto it = std::sregex_iterator(dims.begin(), dims.end(), num); it != std::sregex_iterator(); ++it)
    h.shape.push_back(std::stoi(it->str()));
  h.payload = bytes.substr(10 + len);
  return h;
}

void write_file(const std::filesystem::path& path, const std::string& header, const void* data,
                std::size_t bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::kIo, "cannot write " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!out) fail(ErrorCategory::kIo, "write failed for " + path.string());
}

}  // namespace

Image read_png(const std::filesystem::path& path) {
  int c = 0, h = 0, w = 0;
  const auto buffer = read_png_interleaved(path, false, c, h, w);
  Image image(c, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch)
        image.at(ch, y, x) = buffer[(static_cast<std::size_t>(y) * w + x) * c + ch];
  return image;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  validate_image(image);
  std::vector<std::uint8_t> buffer(image.pixels.size());
  const int c = image.channels;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int ch = 0; ch < c; ++ch)
        buffer[(static_cast<std::size_t>(y) * image.width + x) * c + ch] = image.at(ch, y, x);
  write_png_interleaved(path, buffer.data(), c, image.height, image.width);
}

Mask read_mask_png(const std::filesystem::path& path) {
  int c = 0, h = 0, w = 0;
  const auto buffer = read_png_interleaved(path, true, c, h, w);
  Mask m(h, w);
  for (std::size_t i = 0; i < buffer.size(); ++i) m.bits[i] = buffer[i] >= 128 ? 1 : 0;
  return m;
}

void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
  require(mask.height >= 1 && mask.width >= 1, ErrorCategory::kInvalidImage, "empty mask");
  std::vector<std::uint8_t> buffer(mask.bits.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) buffer[i] = mask.bits[i] ? 255 : 0;
  write_png_interleaved(path, buffer.data(), 1, mask.height, mask.width);
}

void write_npy(const std::filesystem::path& path, const ScalarMap& map) {
  const std::string shape = "(" + std::to_string(map.height) + ", " + std::to_string(map.width) + ")";
  write_file(path, npy_header("<f8", shape), map.values.data(), map.values.size() * sizeof(double));
}

ScalarMap read_npy(const std::filesystem::path& path) {
  const NpyHeader h = read_npy_file(path);
  if (h.descr != "<f8" || h.shape.size() != 2)
    fail(ErrorCategory::kIo, "expected a 2-D float64 npy array in " + path.string());
  ScalarMap map(h.shape[0], h.shape[1]);
  if (h.payload.size() != map.values.size() * sizeof(double))
    fail(ErrorCategory::kIo, "npy payload size mismatch in " + path.string());
  std::memcpy(map.values.data(), h.payload.data(), h.payload.size());
  return map;
}

void write_npy(const std::filesystem::path& path, const Image& image) {
  const std::string shape = "(" + std::to_string(image.channels) + ", " +
                            std::to_string(image.height) + ", " + std::to_string(image.width) + ")";
  write_file(path, npy_header("|u1", shape), image.pixels.data(), image.pixels.size());
}

Image read_npy_image(const std::filesystem::path& path) {
  const NpyHeader h = read_npy_file(path);
  if (h.descr != "|u1" || h.shape.size() != 3)
    fail(ErrorCategory::kIo, "expected a 3-D uint8 npy array in " + path.string());
  Image image(h.shape[0], h.shape[1], h.shape[2]);
  if (h.payload.size() != image.pixels.size())
    fail(ErrorCategory::kIo, "npy payload size mismatch in " + path.string());
  std::memcpy(image.pixels.data(), h.payload.data(), h.payload.size());
  validate_image(image);
  return image;
}

}  // namespace rfm
