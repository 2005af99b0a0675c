#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfm/detector.hpp"
#include "rfm/imaging.hpp"
#include "rfm/random.hpp"

namespace rfm {

struct SampleRecord {
  std::string id;
  Image image;
  Label label = Label::kReal;
  std::string technique;
  std::optional<Mask> forgery_mask;      // manipulated pixels; empty for REAL
  std::map<std::string, Mask> region_masks;  // pairwise disjoint
};

// --- synthetic forgeries ---------------------------------------------------

// BOUNDARY mimics two-stage (generate-then-blend) pipelines whose artifacts
// sit near the face boundary; GLOBAL mimics one-stage synthesis with
// artifacts anywhere inside the configured regions.
enum class ArtifactFamily { kBoundary, kGlobal };

std::string_view family_name(ArtifactFamily family);
ArtifactFamily parse_family(std::string_view text);

struct ArtifactRegion {
  std::string name;
  Rect rect;
  double probability = 1.0;     // chance that a FAKE carries this region's artifact
  double strength_scale = 1.0;  // multiplies SyntheticSpec::strength
};

struct SyntheticSpec {
  int real_count = 100;
  int fake_count = 100;
  int height = 32;
  int width = 32;
  int channels = 3;
  ArtifactFamily family = ArtifactFamily::kGlobal;
  double strength = 24.0;  // peak checkerboard amplitude in pixel levels
  int boundary_band = 4;   // band width for BOUNDARY, in pixels from the border
  // Disjoint artifact regions; empty means one region covering the image.
  std::vector<ArtifactRegion> regions;
  std::string technique;  // empty: derived from the family

  void validate() const;
  std::string technique_tag() const;
  // Pixels eligible for artifacts in `region` (the rectangle, intersected
  // with the boundary band for BOUNDARY).
  Mask region_mask(const ArtifactRegion& region) const;
  std::vector<ArtifactRegion> effective_regions() const;
};

// Smooth structured-noise image (low-frequency cosines plus mild sensor
// noise); the base of every synthetic sample.
Image synthetic_base_image(int channels, int height, int width, Rng& rng);

// REAL samples first, then FAKE samples. Every sample is generated from its
// own seed derived from (seed, index), so regeneration is byte-identical. A
// FAKE is its base image plus a checkerboard artifact in each region drawn
// present; its forgery mask marks exactly the pixels that changed.
std::vector<SampleRecord> generate_synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed);

// --- persistence -----------------------------------------------------------

struct LayoutEntry {
  std::string subdirectory;
  Label label = Label::kReal;
  std::string technique;
};

// Delimited text rows "subdirectory,label,technique" ('#' comments and an
// optional header row allowed).
std::vector<LayoutEntry> read_layout_manifest(const std::filesystem::path& path);

struct IngestReport {
  std::vector<SampleRecord> records;
  std::vector<std::string> warnings;  // one per skipped file
  std::size_t skipped = 0;
};

// Reads every regular file under each layout subdirectory as an image; files
// that cannot be decoded are skipped and reported. Records are ordered by
// relative path. Throws empty-dataset when nothing was readable.
IngestReport ingest_directory(const std::filesystem::path& root, std::span<const LayoutEntry> layout);

// Writes images and masks as PNG plus manifest.csv with columns
// path,label,technique,forgery_mask,region_masks (paths relative to `dir`;
// region_masks is "name=path;name=path").
void write_dataset(const std::filesystem::path& dir, std::span<const SampleRecord> records);
std::vector<SampleRecord> read_dataset(const std::filesystem::path& manifest_path);

// --- facial regions --------------------------------------------------------

struct Point {
  double x = 0.0;  // column
  double y = 0.0;  // row
};

using Landmarks = std::array<Point, 68>;

// 68 rows of "x,y" (optionally comma or whitespace separated).
Landmarks read_landmarks(const std::filesystem::path& path);

// Filled convex hulls of the standard 68-point groups. Eyes merges both eyes
// with both brows (one hull per side); nose, mouth and skin exclude the
// regions listed before them, and skin is the hull of all 68 points.
std::map<std::string, Mask> partition_regions(const Landmarks& landmarks, int height, int width);

// Copies the pixels of `region` from `real_source` into the fake. The result
// stays FAKE; its technique gets the suffix "+<Region>Real".
SampleRecord make_less_forgery(const SampleRecord& fake, const SampleRecord& real_source,
                               const std::string& region);

// --- sampling --------------------------------------------------------------

// Emits batches of exactly batch_size/2 REAL and batch_size/2 FAKE indices
// (REAL first). Each class pool is drawn without replacement and reshuffled
// whenever it runs out, including mid-batch.
class BatchSampler {
 public:
  BatchSampler(std::span<const Label> labels, int batch_size, std::uint64_t seed);

  std::vector<std::size_t> next();
  std::uint64_t draws() const noexcept { return rng_.draws(); }

 private:
  struct Pool {
    std::vector<std::size_t> items;
    std::size_t cursor = 0;
  };
  std::size_t draw(Pool& pool);

  int batch_size_;
  Rng rng_;
  Pool real_;
  Pool fake_;
};

}  // namespace rfm
