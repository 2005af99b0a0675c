#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "rfm/error.hpp"
#include "rfm/saliency.hpp"

using namespace rfm;
namespace fs = std::filesystem;

namespace {

Tensor random_tensor(int c, int h, int w, Rng& rng) {
  Tensor t(c, h, w);
  for (double& v : t.data) v = rng.uniform01();
  return t;
}

ForgeryAttentionMap map_of(int h, int w, std::vector<double> values) {
  ForgeryAttentionMap m;
  m.height = h;
  m.width = w;
  m.values = std::move(values);
  return m;
}

double cosine_oracle(const ScalarMap& a, const ScalarMap& b) {
  auto norm = [](const ScalarMap& m) {
    const auto [lo, hi] = std::minmax_element(m.values.begin(), m.values.end());
    std::vector<double> out;
    for (double v : m.values) out.push_back((v - *lo) / (*hi - *lo));
    return out;
  };
  const auto x = norm(a), y = norm(b);
  double dot = 0, nx = 0, ny = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    nx += x[i] * x[i];
    ny += y[i] * y[i];
  }
  return dot / std::sqrt(nx * ny);
}

}  // namespace

TEST(Fam, EqualsChannelMaxOfLogitGradientDifference) {
  Rng rng(21);
  auto det = make_detector("reference-cnn", {3, 4, 4}, &rng);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor x = random_tensor(3, 10, 10, rng);
    const Tensor gf = input_gradient(*det, x, LogitCombination::kFake);
    const Tensor gr = input_gradient(*det, x, LogitCombination::kReal);
    const ForgeryAttentionMap fam = compute_fam(*det, x);
    ASSERT_EQ(fam.height, 10);
    for (int y = 0; y < 10; ++y)
      for (int xx = 0; xx < 10; ++xx) {
        double expected = 0.0;
        for (int c = 0; c < 3; ++c) expected = std::max(expected, std::abs(gf.at(c, y, xx) - gr.at(c, y, xx)));
        EXPECT_NEAR(fam.at(y, xx), expected, 1e-12);
        EXPECT_GE(fam.at(y, xx), 0.0);
      }
  }
}

TEST(Fam, LinearDetectorIsAbsoluteWeightDifference) {
  LinearDetector det(3, 2, 3);
  Rng rng(5);
  det.initialize(rng);
  const ForgeryAttentionMap fam = compute_fam(det, Tensor(3, 2, 3, 0.5));
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x) {
      double expected = 0.0;
      for (int c = 0; c < 3; ++c)
        expected = std::max(expected, std::abs(det.weight(Label::kFake, c, y, x) - det.weight(Label::kReal, c, y, x)));
      EXPECT_NEAR(fam.at(y, x), expected, 1e-15);
    }
}

TEST(Fam, BatchMatchesSingleAndLeavesParametersUntouched) {
  Rng rng(3);
  auto det = make_detector("reference-cnn", {1, 3, 3}, &rng);
  const std::vector<double> before(det->parameters().begin(), det->parameters().end());
  const std::vector<Tensor> batch{random_tensor(1, 8, 8, rng), random_tensor(1, 8, 8, rng)};
  const auto maps = compute_fam_batch(*det, std::span<const Tensor>(batch));
  for (std::size_t i = 0; i < batch.size(); ++i) EXPECT_EQ(maps[i].values, compute_fam(*det, batch[i]).values);
  EXPECT_TRUE(std::equal(before.begin(), before.end(), det->parameters().begin()));
}

TEST(Fam, FromGradientTakesChannelMaximum) {
  Tensor g(2, 1, 2);
  g.data = {-3.0, 1.0, 2.0, -4.0};
  const auto fam = fam_from_gradient(g, "x");
  EXPECT_EQ(fam.values, (std::vector<double>{3.0, 4.0}));
  EXPECT_EQ(fam.source_id, "x");
}

TEST(AverageMaps, MeanAndEmptyError) {
  const std::vector<ForgeryAttentionMap> maps{map_of(1, 2, {1, 3}), map_of(1, 2, {3, 5})};
  EXPECT_EQ(average_maps(maps).values, (std::vector<double>{2, 4}));
  try {
    average_maps({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kEmptyAggregate);
  }
}

TEST(MinMaxNormalize, RangeAndDegenerate) {
  const ScalarMap n = min_max_normalize(map_of(1, 3, {2, 4, 6}));
  EXPECT_EQ(n.values, (std::vector<double>{0, 0.5, 1}));
  try {
    min_max_normalize(map_of(1, 3, {2, 2, 2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kDegenerateMap);
  }
}

TEST(Correlation, MatchesCosineOracle) {
  Rng rng(12);
  std::vector<ForgeryAttentionMap> maps;
  for (int k = 0; k < 4; ++k) {
    std::vector<double> v(36);
    for (double& x : v) x = rng.uniform01();
    maps.push_back(map_of(6, 6, v));
  }
  const auto m = fam_correlation_matrix(maps, {"a", "b", "c", "d"});
  ASSERT_EQ(m.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_NEAR(m.at(i, j), cosine_oracle(maps[i], maps[j]), 1e-12);
      EXPECT_DOUBLE_EQ(m.at(i, j), m.at(j, i));
    }
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(m.at(i, i), 1.0, 1e-12);
}

TEST(Correlation, PlantedOrthogonalAndSingleGroup) {
  const auto a = map_of(2, 2, {1, 0, 0, 0});
  const auto b = map_of(2, 2, {0, 0, 0, 7});
  const std::vector<ForgeryAttentionMap> maps{a, b};
  const auto m = fam_correlation_matrix(maps, {"x", "y"});
  EXPECT_DOUBLE_EQ(m.at(0, 1), 0.0);
  const auto single = fam_correlation_matrix(std::span(maps).first(1), {"x"});
  ASSERT_EQ(single.size(), 1u);
  EXPECT_DOUBLE_EQ(single.at(0, 0), 1.0);
  // Positive scaling does not change the normalized cosine.
  const std::vector<ForgeryAttentionMap> scaled{a, map_of(2, 2, {3, 0, 0, 0})};
  EXPECT_NEAR(fam_correlation_matrix(scaled, {"x", "y"}).at(0, 1), 1.0, 1e-15);
}

TEST(Correlation, CsvLayout) {
  const std::vector<ForgeryAttentionMap> maps{map_of(1, 2, {0, 1}), map_of(1, 2, {1, 0})};
  const fs::path path = fs::temp_directory_path() / "rfm-correlation.csv";
  write_correlation_csv(path, fam_correlation_matrix(maps, {"p", "q"}));
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "technique,p,q");
  EXPECT_EQ(row.substr(0, 4), "p,1,");
}

TEST(Heatmap, ShapeAndConstantMap) {
  const Image img = render_heatmap(map_of(2, 3, {0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(img.channels, 3);
  EXPECT_EQ(img.height, 2);
  EXPECT_EQ(img.width, 3);
  const Image flat = render_heatmap(map_of(1, 2, {5, 5}));
  EXPECT_EQ(flat.at(0, 0, 0), flat.at(0, 0, 1));
  EXPECT_EQ(flat.at(2, 0, 0), img.at(2, 0, 0));  // lowest colour
}
