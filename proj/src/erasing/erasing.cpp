#include "rfm/erasing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rfm/error.hpp"

namespace rfm {

std::string_view guidance_name(Guidance guidance) {
  return guidance == Guidance::kFamGuided ? "fam" : "random";
}

Guidance parse_guidance(std::string_view text) {
  if (text == "fam" || text == "fam_guided") return Guidance::kFamGuided;
  if (text == "random" || text == "random_anchor") return Guidance::kRandomAnchor;
  fail(ErrorCategory::kConfig, "unknown guidance '" + std::string(text) + "'");
}

void EraseConfig::validate(int height, int width) const {
  require(blocks >= 1, ErrorCategory::kContractViolation, "block count N must be >= 1");
  require(probability >= 0.0 && probability <= 1.0, ErrorCategory::kContractViolation,
          "erasing probability must lie in [0, 1]");
  require(max_height >= 1 && max_height <= height, ErrorCategory::kContractViolation,
          "H_max must lie in [1, " + std::to_string(height) + "]");
  require(max_width >= 1 && max_width <= width, ErrorCategory::kContractViolation,
          "W_max must lie in [1, " + std::to_string(width) + "]");
}

std::string variant_label(const EraseConfig& config) {
  const bool fam = config.guidance == Guidance::kFamGuided;
  const bool meb = config.blocks >= 2;
  if (fam && meb) return "FAM&MEB";
  if (meb) return "MEB";
  if (fam) return "FAM";
  return "none";
}

std::vector<Anchor> descending_order(const ScalarMap& map) {
  std::vector<std::size_t> idx(map.values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return map.values[a] > map.values[b]; });
  std::vector<Anchor> out;
  out.reserve(idx.size());
  for (std::size_t i : idx)
    out.push_back({static_cast<int>(i / map.width), static_cast<int>(i % map.width)});
  return out;
}

namespace {

std::vector<Anchor> random_order(int height, int width, Rng& rng) {
  std::vector<Anchor> out;
  out.reserve(static_cast<std::size_t>(height) * width);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) out.push_back({r, c});
  for (std::size_t i = out.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(out[i - 1], out[j]);
  }
  return out;
}

void place_block(EraseResult& result, const Anchor& anchor, const EraseConfig& config, Rng& rng) {
  const int top = static_cast<int>(rng.uniform_int(1, config.max_height));
  const int left = static_cast<int>(rng.uniform_int(1, config.max_width));
  const BlockGeometry geom = BlockGeometry::from_draws(anchor.row, anchor.col, top, left,
                                                       config.max_height, config.max_width);
  result.trace.blocks.push_back(fill_random_block(result.image, result.occluded, geom, rng));
  result.trace.placed.push_back(anchor);
}

EraseResult start(const Image& image, const EraseConfig& config, Rng& rng) {
  validate_image(image);
  config.validate(image.height, image.width);
  EraseResult result{image, {}, OcclusionMask(image.height, image.width)};
  result.trace.applied = rng.uniform01() < config.probability;
  return result;
}

}  // namespace

EraseResult sfe(const Image& image, const ScalarMap& fam, const EraseConfig& config, Rng& rng) {
  require(fam.height == image.height && fam.width == image.width &&
              fam.values.size() == static_cast<std::size_t>(fam.height) * fam.width,
          ErrorCategory::kContractViolation, "FAM shape differs from image shape");
  EraseResult result = start(image, config, rng);
  if (!result.trace.applied) return result;

  const std::vector<Anchor> order = config.guidance == Guidance::kFamGuided
                                        ? descending_order(fam)
                                        : random_order(image.height, image.width, rng);
  const std::size_t budget =
      config.anchor_budget == 0 ? order.size() : std::min(config.anchor_budget, order.size());
  int placed = 0;
  for (std::size_t ind = 0; ind < budget && placed < config.blocks; ++ind) {
    const Anchor& anchor = order[ind];
    if (result.occluded.at(anchor.row, anchor.col)) {
      result.trace.skipped.push_back(anchor);
      continue;
    }
    place_block(result, anchor, config, rng);
    ++placed;
  }
  return result;
}

EraseResult psfe(const Detector& detector, const Image& image, const EraseConfig& config, Rng& rng) {
  EraseResult result = start(image, config, rng);
  if (!result.trace.applied) return result;
  for (int round = 0; round < config.blocks; ++round) {
    const ForgeryAttentionMap fam = compute_fam(detector, result.image);
    const std::vector<Anchor> order = descending_order(fam);
    bool placed = false;
    for (const Anchor& anchor : order) {
      if (result.occluded.at(anchor.row, anchor.col)) {
        result.trace.skipped.push_back(anchor);
        continue;
      }
      place_block(result, anchor, config, rng);
      placed = true;
      break;
    }
    if (!placed) break;
  }
  return result;
}

void RandomErasingParams::validate() const {
  require(probability >= 0.0 && probability <= 1.0, ErrorCategory::kContractViolation,
          "random erasing probability must lie in [0, 1]");
  require(area_min > 0.0 && area_min <= area_max && area_max <= 1.0,
          ErrorCategory::kContractViolation, "area ratio range must satisfy 0 < min <= max <= 1");
  require(aspect_min > 0.0 && aspect_min <= aspect_max, ErrorCategory::kContractViolation,
          "aspect ratio range must satisfy 0 < min <= max");
  require(max_attempts >= 1, ErrorCategory::kContractViolation, "attempt budget must be >= 1");
}

RandomErasingResult random_erasing(const Image& image, const RandomErasingParams& params, Rng& rng) {
  validate_image(image);
  params.validate();
  RandomErasingResult result;
  result.image = image;
  if (!(rng.uniform01() < params.probability)) return result;

  const double area = static_cast<double>(image.height) * image.width;
  for (int attempt = 1; attempt <= params.max_attempts; ++attempt) {
    result.attempts = attempt;
    const double target = rng.uniform(params.area_min, params.area_max) * area;
    const double aspect = rng.uniform(params.aspect_min, params.aspect_max);
    const int h = static_cast<int>(std::lround(std::sqrt(target * aspect)));
    const int w = static_cast<int>(std::lround(std::sqrt(target / aspect)));
    if (h < 1 || w < 1 || h > image.height || w > image.width) continue;
    const double ratio = static_cast<double>(h) * w / area;
    if (ratio < params.area_min || ratio > params.area_max) continue;
    const int top = static_cast<int>(rng.uniform_int(0, image.height - h));
    const int left = static_cast<int>(rng.uniform_int(0, image.width - w));
    result.rect = Rect{top, left, top + h, left + w};
    fill_random_pixels(result.image, rect_mask(result.rect, image.height, image.width), rng);
    result.applied = true;
    return result;
  }
  result.no_op = true;
  return result;
}

Mask top_quantile_mask(const ScalarMap& map, double quantile) {
  require(quantile >= 0.0 && quantile <= 1.0, ErrorCategory::kContractViolation,
          "quantile must lie in [0, 1]");
  const std::size_t total = map.values.size();
  const auto count = std::min(total, static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(total))));
  Mask mask(map.height, map.width);
  const std::vector<Anchor> order = descending_order(map);
  for (std::size_t i = 0; i < count; ++i) mask.set(order[i].row, order[i].col);
  return mask;
}

AdversarialErasingResult adversarial_erasing(const Detector& detector, const Image& image,
                                             const AdversarialErasingParams& params, Rng& rng) {
  validate_image(image);
  require(params.quantile >= 0.0 && params.quantile <= 1.0, ErrorCategory::kContractViolation,
          "quantile must lie in [0, 1]");
  AdversarialErasingResult result{image, Mask(image.height, image.width)};
  if (params.quantile == 0.0) return result;
  const ScalarMap cam = compute_cam(detector, image, params.label, /*upsample=*/true);
  result.erased = top_quantile_mask(cam, params.quantile);
  fill_random_pixels(result.image, result.erased, rng);
  return result;
}

}  // namespace rfm
