#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "rfm/data.hpp"
#include "rfm/error.hpp"
#include "rfm/image_io.hpp"

using namespace rfm;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rfm-data-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

SyntheticSpec two_region_spec() {
  SyntheticSpec spec;
  spec.real_count = 6;
  spec.fake_count = 10;
  spec.height = spec.width = 16;
  spec.regions = {{"dominant", Rect{2, 2, 6, 6}, 1.0, 1.0}, {"secondary", Rect{10, 10, 14, 14}, 0.5, 0.6}};
  return spec;
}

// A plausible frontal 68-point layout inside a 32×32 frame.
Landmarks face_landmarks() {
  Landmarks lm{};
  const double pi = std::numbers::pi;
  for (int i = 0; i <= 16; ++i) {  // jaw: lower half ellipse
    const double t = pi * i / 16.0;
    lm[i] = {16.0 - 13.0 * std::cos(t), 12.0 + 17.0 * std::sin(t)};
  }
  for (int i = 0; i < 5; ++i) {
    lm[17 + i] = {6.0 + 1.8 * i, 8.0 - (i == 2 ? 1.5 : 0.8 * (i % 2))};
    lm[22 + i] = {18.0 + 1.8 * i, 8.0 - (i == 2 ? 1.5 : 0.8 * (i % 2))};
  }
  for (int i = 0; i < 4; ++i) lm[27 + i] = {16.0, 10.0 + 2.0 * i};
  for (int i = 0; i < 5; ++i) lm[31 + i] = {13.5 + 1.25 * i, 19.0 + (i == 2 ? 0.5 : 0.0)};
  for (int side = 0; side < 2; ++side)
    for (int i = 0; i < 6; ++i) {
      const double t = 2.0 * pi * i / 6.0;
      lm[36 + 6 * side + i] = {(side ? 21.0 : 11.0) + 2.5 * std::cos(t), 11.0 + 1.2 * std::sin(t)};
    }
  for (int i = 0; i < 12; ++i) {
    const double t = 2.0 * pi * i / 12.0;
    lm[48 + i] = {16.0 + 5.0 * std::cos(t), 24.5 + 2.2 * std::sin(t)};
  }
  for (int i = 0; i < 8; ++i) {
    const double t = 2.0 * pi * i / 8.0;
    lm[60 + i] = {16.0 + 3.0 * std::cos(t), 24.5 + 1.0 * std::sin(t)};
  }
  return lm;
}

// Carathéodory: a point lies in the convex hull iff it lies in some triangle
// of the point set (boundary included).
bool in_hull_oracle(const std::vector<Point>& pts, double x, double y) {
  auto cross = [](const Point& a, const Point& b, double px, double py) {
    return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
  };
  const double eps = 1e-9;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      for (std::size_t k = j + 1; k < pts.size(); ++k) {
        const double d1 = cross(pts[i], pts[j], x, y), d2 = cross(pts[j], pts[k], x, y), d3 = cross(pts[k], pts[i], x, y);
        const bool has_neg = d1 < -eps || d2 < -eps || d3 < -eps;
        const bool has_pos = d1 > eps || d2 > eps || d3 > eps;
        if (!(has_neg && has_pos)) {
          // Reject degenerate triangles, whose "inside" is the whole line.
          const double area = std::abs(cross(pts[i], pts[j], pts[k].x, pts[k].y));
          if (area > eps) return true;
        }
      }
  return false;
}

std::vector<Point> group(const Landmarks& lm, std::initializer_list<std::pair<int, int>> ranges) {
  std::vector<Point> out;
  for (auto [a, b] : ranges)
    for (int i = a; i <= b; ++i) out.push_back(lm[i]);
  return out;
}

}  // namespace

TEST(Synthetic, RegenerationIsByteIdentical) {
  const SyntheticSpec spec = two_region_spec();
  const auto a = generate_synthetic_dataset(spec, 5);
  const auto b = generate_synthetic_dataset(spec, 5);
  const auto c = generate_synthetic_dataset(spec, 6);
  ASSERT_EQ(a.size(), 16u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].id, b[i].id);
  }
  EXPECT_NE(a[0].image, c[0].image);
}

TEST(Synthetic, LabelsTechniquesAndMasks) {
  const SyntheticSpec spec = two_region_spec();
  const auto data = generate_synthetic_dataset(spec, 9);
  int secondary_present = 0;
  for (const SampleRecord& s : data) {
    if (s.label == Label::kReal) {
      EXPECT_EQ(s.technique, "real");
      EXPECT_FALSE(s.forgery_mask.has_value());
      continue;
    }
    EXPECT_EQ(s.technique, "synthetic-one-stage");
    ASSERT_TRUE(s.forgery_mask.has_value());
    const Mask& dominant = s.region_masks.at("dominant");
    const Mask& secondary = s.region_masks.at("secondary");
    EXPECT_TRUE(mask_intersection(dominant, secondary).empty());
    EXPECT_TRUE(mask_difference(*s.forgery_mask, mask_union(dominant, secondary)).empty());
    EXPECT_FALSE(mask_intersection(*s.forgery_mask, dominant).empty());
    secondary_present += !mask_intersection(*s.forgery_mask, secondary).empty();
  }
  EXPECT_GT(secondary_present, 0);
  EXPECT_LT(secondary_present, 10);
}

TEST(Synthetic, ForgeryMaskMarksExactlyChangedPixels) {
  SyntheticSpec spec = two_region_spec();
  const auto fakes = generate_synthetic_dataset(spec, 3);
  spec.strength = 0.0;  // same base images, no artifact
  const auto bases = generate_synthetic_dataset(spec, 3);
  for (std::size_t i = 0; i < fakes.size(); ++i) {
    if (fakes[i].label != Label::kFake) continue;
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        bool changed = false;
        for (int c = 0; c < 3; ++c) changed |= fakes[i].image.at(c, y, x) != bases[i].image.at(c, y, x);
        EXPECT_EQ(changed, fakes[i].forgery_mask->at(y, x));
      }
  }
}

TEST(Synthetic, BoundaryFamilyStaysInBand) {
  SyntheticSpec spec;
  spec.real_count = 1;
  spec.fake_count = 4;
  spec.height = spec.width = 20;
  spec.family = ArtifactFamily::kBoundary;
  spec.boundary_band = 3;
  const auto data = generate_synthetic_dataset(spec, 1);
  for (const SampleRecord& s : data) {
    if (s.label != Label::kFake) continue;
    EXPECT_EQ(s.technique, "synthetic-two-stage");
    for (int y = 0; y < 20; ++y)
      for (int x = 0; x < 20; ++x)
        if (s.forgery_mask->at(y, x)) {
          EXPECT_LT(std::min({y, x, 19 - y, 19 - x}), 3);
        }
  }
}

TEST(Synthetic, SpecValidation) {
  SyntheticSpec spec = two_region_spec();
  spec.regions[1].rect = Rect{4, 4, 8, 8};
  try {
    spec.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kConfig);
  }
  SyntheticSpec empty;
  empty.real_count = empty.fake_count = 0;
  try {
    generate_synthetic_dataset(empty, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kEmptyDataset);
  }
}

TEST(LessForgery, ReplacesOnlyTheRegion) {
  const auto data = generate_synthetic_dataset(two_region_spec(), 4);
  const SampleRecord& real = data[0];
  const SampleRecord& fake = data.back();
  const SampleRecord out = make_less_forgery(fake, real, "dominant");
  EXPECT_EQ(out.label, Label::kFake);
  EXPECT_EQ(out.technique, fake.technique + "+DominantReal");
  const Mask& region = fake.region_masks.at("dominant");
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x)
        EXPECT_EQ(out.image.at(c, y, x), region.at(y, x) ? real.image.at(c, y, x) : fake.image.at(c, y, x));
  EXPECT_TRUE(mask_intersection(*out.forgery_mask, region).empty());
  EXPECT_THROW(make_less_forgery(fake, real, "ears"), Error);
}

TEST(BatchSampler, BalancedAndWithoutReplacementPerPass) {
  std::vector<Label> labels;
  for (int i = 0; i < 6; ++i) labels.push_back(Label::kReal);
  for (int i = 0; i < 10; ++i) labels.push_back(Label::kFake);
  BatchSampler sampler(labels, 4, 11);
  std::multiset<std::size_t> reals;
  for (int b = 0; b < 3; ++b) {
    const auto batch = sampler.next();
    ASSERT_EQ(batch.size(), 4u);
    EXPECT_EQ(labels[batch[0]], Label::kReal);
    EXPECT_EQ(labels[batch[1]], Label::kReal);
    EXPECT_EQ(labels[batch[2]], Label::kFake);
    EXPECT_EQ(labels[batch[3]], Label::kFake);
    reals.insert(batch[0]);
    reals.insert(batch[1]);
  }
  EXPECT_EQ(std::set<std::size_t>(reals.begin(), reals.end()).size(), 6u);  // one full pass
  EXPECT_THROW(BatchSampler(labels, 3, 1), Error);
  EXPECT_THROW(BatchSampler(std::vector<Label>(4, Label::kReal), 2, 1), Error);
}

TEST(DatasetIo, WriteReadRoundTrip) {
  const fs::path dir = temp_dir("roundtrip");
  const auto data = generate_synthetic_dataset(two_region_spec(), 2);
  write_dataset(dir, data);
  const auto back = read_dataset(dir / "manifest.csv");
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(back[i].id, data[i].id);
    EXPECT_EQ(back[i].image, data[i].image);
    EXPECT_EQ(back[i].label, data[i].label);
    EXPECT_EQ(back[i].technique, data[i].technique);
    EXPECT_EQ(back[i].forgery_mask, data[i].forgery_mask);
    EXPECT_EQ(back[i].region_masks, data[i].region_masks);
  }
}

TEST(DatasetIo, IngestSkipsCorruptFilesInPathOrder) {
  const fs::path root = temp_dir("ingest");
  fs::create_directories(root / "orig");
  fs::create_directories(root / "df");
  write_png(root / "orig" / "b.png", Image(3, 4, 4, 10));
  write_png(root / "orig" / "a.png", Image(3, 4, 4, 20));
  write_png(root / "df" / "z.png", Image(3, 4, 4, 30));
  std::ofstream(root / "df" / "broken.png") << "garbage";
  std::ofstream(root / "layout.csv") << "subdirectory,label,technique\norig,real,real\ndf,fake,deepfakes\n";
  const auto layout = read_layout_manifest(root / "layout.csv");
  ASSERT_EQ(layout.size(), 2u);
  const IngestReport report = ingest_directory(root, layout);
  EXPECT_EQ(report.skipped, 1u);
  ASSERT_EQ(report.warnings.size(), 1u);
  ASSERT_EQ(report.records.size(), 3u);
  EXPECT_EQ(report.records[0].id, "df/z.png");
  EXPECT_EQ(report.records[0].technique, "deepfakes");
  EXPECT_EQ(report.records[1].id, "orig/a.png");
  EXPECT_EQ(report.records[2].label, Label::kReal);

  const fs::path bad = temp_dir("ingest-empty");
  fs::create_directories(bad / "orig");
  std::ofstream(bad / "orig" / "x.png") << "nope";
  try {
    ingest_directory(bad, layout);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kEmptyDataset);
  }
}

TEST(Regions, MatchTriangleContainmentOracle) {
  const Landmarks lm = face_landmarks();
  const auto regions = partition_regions(lm, 32, 32);
  ASSERT_EQ(regions.size(), 4u);
  const auto right_eye = group(lm, {{17, 21}, {36, 41}});
  const auto left_eye = group(lm, {{22, 26}, {42, 47}});
  const auto nose = group(lm, {{27, 35}});
  const auto mouth = group(lm, {{48, 67}});
  const auto face = group(lm, {{0, 67}});
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const bool e = in_hull_oracle(right_eye, x, y) || in_hull_oracle(left_eye, x, y);
      const bool n = !e && in_hull_oracle(nose, x, y);
      const bool m = !e && !n && in_hull_oracle(mouth, x, y);
      const bool s = !e && !n && !m && in_hull_oracle(face, x, y);
      EXPECT_EQ(regions.at("eyes").at(y, x), e) << y << "," << x;
      EXPECT_EQ(regions.at("nose").at(y, x), n) << y << "," << x;
      EXPECT_EQ(regions.at("mouth").at(y, x), m) << y << "," << x;
      EXPECT_EQ(regions.at("skin").at(y, x), s) << y << "," << x;
    }
  for (const auto& [name, mask] : regions) EXPECT_FALSE(mask.empty()) << name;
}

TEST(Regions, DegenerateAndOutOfBounds) {
  Landmarks lm = face_landmarks();
  for (int i = 27; i <= 35; ++i) lm[i] = {16.0, 8.0 + i - 27};  // collinear nose
  try {
    partition_regions(lm, 32, 32);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kDegenerateLandmarks);
  }
  Landmarks outside = face_landmarks();
  outside[0] = {-1.0, 5.0};
  try {
    partition_regions(outside, 32, 32);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kContractViolation);
  }
}

TEST(Regions, ReadLandmarksFile) {
  const fs::path dir = temp_dir("landmarks");
  {
    std::ofstream out(dir / "lm.txt");
    for (int i = 0; i < 68; ++i) out << i * 0.5 << ", " << i << '\n';
  }
  const Landmarks lm = read_landmarks(dir / "lm.txt");
  EXPECT_DOUBLE_EQ(lm[10].x, 5.0);
  EXPECT_DOUBLE_EQ(lm[10].y, 10.0);
  std::ofstream(dir / "short.txt") << "1 2\n";
  EXPECT_THROW(read_landmarks(dir / "short.txt"), Error);
}
