#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "rfm/data.hpp"
#include "rfm/error.hpp"

namespace rfm {

std::string_view family_name(ArtifactFamily family) {
  return family == ArtifactFamily::kBoundary ? "boundary" : "global";
}

ArtifactFamily parse_family(std::string_view text) {
  if (text == "boundary" || text == "two-stage") return ArtifactFamily::kBoundary;
  if (text == "global" || text == "one-stage") return ArtifactFamily::kGlobal;
  fail(ErrorCategory::kConfig, "unknown artifact family '" + std::string(text) + "'");
}

void SyntheticSpec::validate() const {
  require(real_count > 0 || fake_count > 0, ErrorCategory::kEmptyDataset,
          "synthetic spec requests zero samples");
  require(real_count >= 0 && fake_count >= 0, ErrorCategory::kConfig, "negative sample count");
  require(height >= 1 && width >= 1 && (channels == 1 || channels == 3), ErrorCategory::kConfig,
          "synthetic images need H, W >= 1 and 1 or 3 channels");
  require(strength >= 0.0, ErrorCategory::kConfig, "artifact strength must be non-negative");
  require(boundary_band >= 1, ErrorCategory::kConfig, "boundary band must be >= 1 pixel");
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const ArtifactRegion& r = regions[i];
    require(!r.name.empty(), ErrorCategory::kConfig, "artifact region needs a name");
    require(r.rect.top >= 0 && r.rect.left >= 0 && r.rect.bottom <= height && r.rect.right <= width &&
                r.rect.area() > 0,
            ErrorCategory::kConfig, "artifact region '" + r.name + "' outside image bounds");
    require(r.probability >= 0.0 && r.probability <= 1.0, ErrorCategory::kConfig,
            "region probability must lie in [0, 1]");
    require(r.strength_scale >= 0.0, ErrorCategory::kConfig, "region strength scale must be >= 0");
    for (std::size_t j = 0; j < i; ++j) {
      const Rect& a = r.rect;
      const Rect& b = regions[j].rect;
      const bool overlap = a.top < b.bottom && b.top < a.bottom && a.left < b.right && b.left < a.right;
      require(!overlap, ErrorCategory::kConfig, "artifact regions '" + regions[j].name + "' and '" +
                                                    r.name + "' overlap");
      require(regions[j].name != r.name, ErrorCategory::kConfig, "duplicate region name " + r.name);
    }
  }
}

std::string SyntheticSpec::technique_tag() const {
  if (!technique.empty()) return technique;
  return family == ArtifactFamily::kBoundary ? "synthetic-two-stage" : "synthetic-one-stage";
}

std::vector<ArtifactRegion> SyntheticSpec::effective_regions() const {
  if (!regions.empty()) return regions;
  return {ArtifactRegion{"face", Rect{0, 0, height, width}, 1.0, 1.0}};
}

Mask SyntheticSpec::region_mask(const ArtifactRegion& region) const {
  Mask m = rect_mask(region.rect, height, width);
  if (family == ArtifactFamily::kBoundary) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const int edge = std::min({y, x, height - 1 - y, width - 1 - x});
        if (edge >= boundary_band) m.set(y, x, false);
      }
    }
  }
  return m;
}

Image synthetic_base_image(int channels, int height, int width, Rng& rng) {
  constexpr int kWaves = 4;
  struct Wave {
    double amplitude, frequency, cos_t, sin_t, phase;
    double gain[3];
  };
  Wave waves[kWaves];
  for (Wave& wave : waves) {
    wave.amplitude = rng.uniform(6.0, 14.0);
    wave.frequency = 2.0 * std::numbers::pi / rng.uniform(8.0, 32.0);
    const double angle = rng.uniform(0.0, std::numbers::pi);
    wave.cos_t = std::cos(angle);
    wave.sin_t = std::sin(angle);
    wave.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (double& g : wave.gain) g = rng.uniform(0.5, 1.5);
  }
  double level[3];
  for (double& l : level) l = rng.uniform(90.0, 165.0);

  Image image(channels, height, width);
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double v = level[c];
        for (const Wave& wave : waves)
          v += wave.gain[c] * wave.amplitude *
               std::cos(wave.frequency * (x * wave.cos_t + y * wave.sin_t) + wave.phase);
        v += 2.0 * rng.normal();
        image.at(c, y, x) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return image;
}

namespace {

std::string sample_id(Label label, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%06d", label == Label::kReal ? "real" : "fake", index);
  return buf;
}

}  // namespace

std::vector<SampleRecord> generate_synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::vector<ArtifactRegion> regions = spec.effective_regions();
  std::vector<Mask> region_masks;
  for (const ArtifactRegion& r : regions) region_masks.push_back(spec.region_mask(r));

  std::vector<SampleRecord> out;
  out.reserve(static_cast<std::size_t>(spec.real_count + spec.fake_count));
  for (int i = 0; i < spec.real_count; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    SampleRecord rec;
    rec.id = sample_id(Label::kReal, i);
    rec.image = synthetic_base_image(spec.channels, spec.height, spec.width, rng);
    rec.label = Label::kReal;
    rec.technique = "real";
    out.push_back(std::move(rec));
  }
  for (int i = 0; i < spec.fake_count; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(spec.real_count + i)));
    SampleRecord rec;
    rec.id = sample_id(Label::kFake, i);
    rec.image = synthetic_base_image(spec.channels, spec.height, spec.width, rng);
    rec.label = Label::kFake;
    rec.technique = spec.technique_tag();
    const Image base = rec.image;
    for (std::size_t r = 0; r < regions.size(); ++r) {
      rec.region_masks.emplace(regions[r].name, region_masks[r]);
      const bool present = rng.uniform01() < regions[r].probability;
      const double amplitude = spec.strength * regions[r].strength_scale * rng.uniform(0.8, 1.2);
      if (!present) continue;
      for (int c = 0; c < spec.channels; ++c) {
        for (int y = 0; y < spec.height; ++y) {
          for (int x = 0; x < spec.width; ++x) {
            if (!region_masks[r].at(y, x)) continue;
            const double sign = ((y + x) & 1) == 0 ? 1.0 : -1.0;
            const long v = std::lround(rec.image.at(c, y, x) + sign * amplitude);
            rec.image.at(c, y, x) = static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
          }
        }
      }
    }
    Mask forged(spec.height, spec.width);
    for (int c = 0; c < spec.channels; ++c)
      for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x)
          if (rec.image.at(c, y, x) != base.at(c, y, x)) forged.set(y, x);
    rec.forgery_mask = std::move(forged);
    out.push_back(std::move(rec));
  }
  return out;
}

SampleRecord make_less_forgery(const SampleRecord& fake, const SampleRecord& real_source,
                               const std::string& region) {
  require(fake.image.same_shape(real_source.image), ErrorCategory::kContractViolation,
          "less-forgery source images differ in shape");
  const auto it = fake.region_masks.find(region);
  require(it != fake.region_masks.end(), ErrorCategory::kContractViolation,
          "sample " + fake.id + " has no region mask '" + region + "'");
  const Mask& mask = it->second;
  require(mask.height == fake.image.height && mask.width == fake.image.width,
          ErrorCategory::kContractViolation, "region mask shape differs from image");

  SampleRecord out = fake;
  out.label = Label::kFake;
  for (int c = 0; c < out.image.channels; ++c)
    for (int y = 0; y < out.image.height; ++y)
      for (int x = 0; x < out.image.width; ++x)
        if (mask.at(y, x)) out.image.at(c, y, x) = real_source.image.at(c, y, x);
  if (out.forgery_mask) out.forgery_mask = mask_difference(*out.forgery_mask, mask);
  std::string suffix = region;
  if (!suffix.empty()) suffix[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(suffix[0])));
  out.technique = fake.technique + "+" + suffix + "Real";
  out.id = fake.id + "+" + region + "-real";
  return out;
}

BatchSampler::BatchSampler(std::span<const Label> labels, int batch_size, std::uint64_t seed)
    : batch_size_(batch_size), rng_(seed) {
  require(batch_size >= 2 && batch_size % 2 == 0, ErrorCategory::kConfig,
          "batch size must be even and at least 2");
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i] == Label::kReal ? real_.items : fake_.items).push_back(i);
  require(!real_.items.empty() && !fake_.items.empty(), ErrorCategory::kEmptyDataset,
          "balanced sampling needs both REAL and FAKE samples");
  real_.cursor = real_.items.size();
  fake_.cursor = fake_.items.size();
}

std::size_t BatchSampler::draw(Pool& pool) {
  if (pool.cursor == pool.items.size()) {
    for (std::size_t i = pool.items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng_.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(pool.items[i - 1], pool.items[j]);
    }
    pool.cursor = 0;
  }
  return pool.items[pool.cursor++];
}

std::vector<std::size_t> BatchSampler::next() {
  std::vector<std::size_t> batch;
  batch.reserve(static_cast<std::size_t>(batch_size_));
  for (int i = 0; i < batch_size_ / 2; ++i) batch.push_back(draw(real_));
  for (int i = 0; i < batch_size_ / 2; ++i) batch.push_back(draw(fake_));
  return batch;
}

}  // namespace rfm
