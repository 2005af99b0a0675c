#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rfm/detector.hpp"
#include "rfm/imaging.hpp"
#include "rfm/random.hpp"
#include "rfm/saliency.hpp"

namespace rfm {

enum class Guidance { kFamGuided, kRandomAnchor };

std::string_view guidance_name(Guidance guidance);
Guidance parse_guidance(std::string_view text);

struct EraseConfig {
  int blocks = 3;            // N
  double probability = 1.0;  // p
  int max_height = 120;      // H_max
  int max_width = 120;       // W_max
  Guidance guidance = Guidance::kFamGuided;
  // Maximum number of anchors visited per invocation; 0 means H·W.
  std::size_t anchor_budget = 0;

  // Throws contract-violation unless N >= 1, 0 <= p <= 1,
  // 1 <= H_max <= height and 1 <= W_max <= width.
  void validate(int height, int width) const;
};

// Ablation label of a configuration: "FAM&MEB", "MEB", "FAM" or "none".
std::string variant_label(const EraseConfig& config);

struct Anchor {
  int row = 0;
  int col = 0;
  friend bool operator==(const Anchor&, const Anchor&) = default;
};

struct EraseTrace {
  std::vector<Anchor> placed;
  std::vector<Anchor> skipped;  // visited anchors that were already occluded
  std::vector<Rect> blocks;     // clipped rectangle of every placed block
  bool applied = false;         // outcome of the probability gate
};

struct EraseResult {
  Image image;
  EraseTrace trace;
  OcclusionMask occluded;
};

// Every coordinate of `map` sorted by descending value; ties in row-major order.
std::vector<Anchor> descending_order(const ScalarMap& map);

// Suspicious Forgeries Erasing. Random draws, in order: the probability gate
// (one uniform in [0, 1), applied iff < p); for RANDOM_ANCHOR a Fisher-Yates
// permutation of all coordinates; then per placed block the top extent, the
// left extent and the block's fill values.
EraseResult sfe(const Image& image, const ScalarMap& fam, const EraseConfig& config, Rng& rng);

// Progressive variant: N rounds of {recompute FAM on the current image; erase
// its Top-1 unoccluded coordinate}. The probability gate is drawn once.
EraseResult psfe(const Detector& detector, const Image& image, const EraseConfig& config, Rng& rng);

// Random Erasing baseline with the defaults of its original publication.
struct RandomErasingParams {
  double probability = 0.5;
  double area_min = 0.02;
  double area_max = 0.4;
  double aspect_min = 0.3;
  double aspect_max = 1.0 / 0.3;
  int max_attempts = 100;

  void validate() const;
};

struct RandomErasingResult {
  Image image;
  bool applied = false;  // gate passed and a rectangle was erased
  bool no_op = false;    // gate passed but no rectangle fit within the attempt budget
  Rect rect;
  int attempts = 0;
};

// Samples area ratio and aspect ratio uniformly from the configured ranges,
// resampling until the rectangle fits inside the image and its realised area
// ratio lies within [area_min, area_max]; the rectangle is filled with
// random integers.
RandomErasingResult random_erasing(const Image& image, const RandomErasingParams& params, Rng& rng);

// Adversarial Erasing baseline: single-pass thresholding of the CAM.
struct AdversarialErasingParams {
  double quantile = 0.15;  // fraction of pixels erased
  Label label = Label::kFake;
};

struct AdversarialErasingResult {
  Image image;
  Mask erased;
};

// The ceil(q·H·W) highest-valued pixels of `map`; ties resolved in row-major order.
Mask top_quantile_mask(const ScalarMap& map, double quantile);

AdversarialErasingResult adversarial_erasing(const Detector& detector, const Image& image,
                                             const AdversarialErasingParams& params, Rng& rng);

}  // namespace rfm
