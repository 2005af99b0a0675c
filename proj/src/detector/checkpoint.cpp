#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "rfm/checksum.hpp"
#include "rfm/detector.hpp"
#include "rfm/error.hpp"

namespace rfm {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes little-endian");

constexpr char kMagic[8] = {'R', 'F', 'M', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::vector<std::uint8_t>& out, const T& value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) fail(ErrorCategory::kChecksum, "checkpoint truncated");
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string get_string(std::size_t n) {
    if (pos_ + n > bytes_.size()) fail(ErrorCategory::kChecksum, "checkpoint truncated");
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const Detector& detector, const std::filesystem::path& path) {
  std::vector<std::uint8_t> body(std::begin(kMagic), std::end(kMagic));
  put(body, kVersion);
  const std::string arch = detector.architecture();
  put(body, static_cast<std::uint32_t>(arch.size()));
  body.insert(body.end(), arch.begin(), arch.end());
  const std::vector<int> hyper = detector.hyperparameters();
  put(body, static_cast<std::uint32_t>(hyper.size()));
  for (int h : hyper) put(body, static_cast<std::int32_t>(h));
  const auto params = detector.parameters();
  put(body, static_cast<std::uint64_t>(params.size()));
  for (double p : params) put(body, p);
  const Sha256Digest digest = sha256(body);
  body.insert(body.end(), digest.begin(), digest.end());

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCategory::kIo, "cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (!out) fail(ErrorCategory::kIo, "write failed for checkpoint " + path.string());
}

std::unique_ptr<Detector> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::kIo, "cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof(kMagic) + 32)
    fail(ErrorCategory::kChecksum, "checkpoint too short: " + path.string());
  const std::span<const std::uint8_t> body(bytes.data(), bytes.size() - 32);
  const Sha256Digest digest = sha256(body);
  if (!std::equal(digest.begin(), digest.end(), bytes.end() - 32))
    fail(ErrorCategory::kChecksum, "checkpoint checksum mismatch: " + path.string());

  Reader r(body);
  if (r.get_string(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
    fail(ErrorCategory::kChecksum, "not a checkpoint file: " + path.string());
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion)
    fail(ErrorCategory::kChecksum, "unsupported checkpoint version " + std::to_string(version));
  const std::string arch = r.get_string(r.get<std::uint32_t>());
  std::vector<int> hyper(r.get<std::uint32_t>());
  for (int& h : hyper) h = r.get<std::int32_t>();
  std::vector<double> params(r.get<std::uint64_t>());
  for (double& p : params) p = r.get<double>();
  if (!r.done()) fail(ErrorCategory::kChecksum, "trailing bytes in checkpoint " + path.string());

  auto detector = make_detector(arch, hyper, nullptr);
  detector->set_parameters(params);
  return detector;
}

}  // namespace rfm
