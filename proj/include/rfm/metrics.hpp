#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "rfm/detector.hpp"
#include "rfm/imaging.hpp"
#include "rfm/tensor.hpp"

namespace rfm {

struct ScoredSample {
  double score = 0.0;  // fake score; any monotone function of O_fake - O_real
  Label label = Label::kReal;
};

// Mann-Whitney statistic: P(fake > real) + P(tie) / 2 over all REAL/FAKE pairs.
// Throws undefined-metric unless both classes are present.
double roc_auc(std::span<const ScoredSample> samples);

struct TdrResult {
  double tdr = 0.0;
  double threshold = 0.0;
  // True when one false alarm already exceeds the level (1 / |REAL| > level).
  bool coarse = false;
};

// A sample counts as detected when score > t. t is the smallest value whose
// REAL false-alarm fraction is <= level, i.e. the (k+1)-th largest REAL
// score with k the largest count satisfying k / |REAL| <= level.
TdrResult tdr_at_fdr_detail(std::span<const ScoredSample> samples, double level);
double tdr_at_fdr(std::span<const ScoredSample> samples, double level);

// Share of total map mass inside `mask`. Throws undefined-coverage on an
// all-zero map and contract-violation on shape mismatch or an empty mask.
double attention_coverage(const ScalarMap& map, const Mask& mask);

struct EvalReport {
  std::string name;  // test-set variant
  double auc = 0.0;
  std::map<double, double> tdr;  // FDR level -> TDR
  std::size_t real_count = 0;
  std::size_t fake_count = 0;
  std::vector<std::string> warnings;
  // Optional mean attention coverage on FAKE images (negative when absent).
  double coverage = -1.0;

  std::string to_key_value() const;
  static std::string csv_header(std::span<const double> levels);
  std::string csv_row(std::span<const double> levels) const;
};

EvalReport make_report(std::string name, std::span<const ScoredSample> samples,
                       std::span<const double> levels);

// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace rfm
