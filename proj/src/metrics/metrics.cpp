#include "rfm/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "rfm/error.hpp"

namespace rfm {
namespace {

void split_scores(std::span<const ScoredSample> samples, std::vector<double>& reals,
                  std::vector<double>& fakes) {
  for (const ScoredSample& s : samples) {
    require(std::isfinite(s.score), ErrorCategory::kUndefinedMetric, "non-finite score");
    (s.label == Label::kReal ? reals : fakes).push_back(s.score);
  }
  require(!reals.empty() && !fakes.empty(), ErrorCategory::kUndefinedMetric,
          "metric needs both REAL and FAKE samples");
}

}  // namespace

double roc_auc(std::span<const ScoredSample> samples) {
  std::vector<double> reals, fakes;
  split_scores(samples, reals, fakes);
  std::sort(reals.begin(), reals.end());
  // Counted in integers so the result is exact up to the final division.
  std::uint64_t twice_wins = 0;
  for (double f : fakes) {
    const auto lo = std::lower_bound(reals.begin(), reals.end(), f);
    const auto hi = std::upper_bound(lo, reals.end(), f);
    twice_wins += 2 * static_cast<std::uint64_t>(lo - reals.begin()) + static_cast<std::uint64_t>(hi - lo);
  }
  return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(reals.size()) * fakes.size());
}

TdrResult tdr_at_fdr_detail(std::span<const ScoredSample> samples, double level) {
  require(level > 0.0 && level < 1.0, ErrorCategory::kContractViolation, "FDR level must lie in (0, 1)");
  std::vector<double> reals, fakes;
  split_scores(samples, reals, fakes);
  std::sort(reals.begin(), reals.end(), std::greater<>());
  const double n_real = static_cast<double>(reals.size());

  std::size_t k = static_cast<std::size_t>(std::floor(level * n_real));
  while (k > 0 && static_cast<double>(k) / n_real > level) --k;
  while (k + 1 <= reals.size() && static_cast<double>(k + 1) / n_real <= level) ++k;

  TdrResult out;
  out.coarse = 1.0 / n_real > level;
  out.threshold = reals[k];
  const auto detected = std::count_if(fakes.begin(), fakes.end(), [&](double f) { return f > out.threshold; });
  out.tdr = static_cast<double>(detected) / static_cast<double>(fakes.size());
  return out;
}

double tdr_at_fdr(std::span<const ScoredSample> samples, double level) {
  return tdr_at_fdr_detail(samples, level).tdr;
}

double attention_coverage(const ScalarMap& map, const Mask& mask) {
  require(map.height == mask.height && map.width == mask.width, ErrorCategory::kContractViolation,
          "coverage mask shape differs from map shape");
  require(!mask.empty(), ErrorCategory::kContractViolation, "coverage mask is empty");
  double inside = 0.0, total = 0.0;
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    total += map.values[i];
    if (mask.bits[i]) inside += map.values[i];
  }
  require(total > 0.0, ErrorCategory::kUndefinedCoverage, "attention map has zero mass");
  return inside / total;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

EvalReport make_report(std::string name, std::span<const ScoredSample> samples,
                       std::span<const double> levels) {
  EvalReport report;
  report.name = std::move(name);
  report.auc = roc_auc(samples);
  for (const ScoredSample& s : samples) ++(s.label == Label::kReal ? report.real_count : report.fake_count);
  for (double level : levels) {
    const TdrResult r = tdr_at_fdr_detail(samples, level);
    report.tdr[level] = r.tdr;
    if (r.coarse)
      report.warnings.push_back("FDR level " + format_double(level) + " is finer than 1/" +
                                std::to_string(report.real_count) + " REAL samples");
  }
  return report;
}

std::string EvalReport::to_key_value() const {
  std::ostringstream out;
  out << "name=" << name << '\n'
      << "real_count=" << real_count << '\n'
      << "fake_count=" << fake_count << '\n'
      << "auc=" << format_double(auc) << '\n';
  for (const auto& [level, value] : tdr) out << "tdr@" << format_double(level) << '=' << format_double(value) << '\n';
  if (coverage >= 0.0) out << "coverage=" << format_double(coverage) << '\n';
  for (const std::string& w : warnings) out << "warning=" << w << '\n';
  return out.str();
}

std::string EvalReport::csv_header(std::span<const double> levels) {
  std::string out = "name,real_count,fake_count,auc";
  for (double level : levels) out += ",tdr@" + format_double(level);
  return out + ",coverage";
}

std::string EvalReport::csv_row(std::span<const double> levels) const {
  std::string out = name + ',' + std::to_string(real_count) + ',' + std::to_string(fake_count) + ',' +
                    format_double(auc);
  for (double level : levels) {
    const auto it = tdr.find(level);
    out += ',' + (it == tdr.end() ? std::string() : format_double(it->second));
  }
  out += ',';
  if (coverage >= 0.0) out += format_double(coverage);
  return out;
}

}  // namespace rfm
