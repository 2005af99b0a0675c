#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rfm/data.hpp"
#include "rfm/error.hpp"

namespace rfm {
namespace {

// Index groups of the 68-point annotation scheme.
constexpr int kRightBrow[] = {17, 18, 19, 20, 21};
constexpr int kLeftBrow[] = {22, 23, 24, 25, 26};
constexpr int kRightEye[] = {36, 37, 38, 39, 40, 41};
constexpr int kLeftEye[] = {42, 43, 44, 45, 46, 47};

double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Monotone chain; counter-clockwise, collinear points dropped.
std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(),
            [](const Point& a, const Point& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  if (pts.size() < 3) return pts;
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    const Point& p = pts[i];
    while (k >= t && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

Mask filled_hull(const std::vector<Point>& group, const std::string& name, int height, int width) {
  const std::vector<Point> hull = convex_hull(group);
  double area = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point& a = hull[i];
    const Point& b = hull[(i + 1) % hull.size()];
    area += a.x * b.y - b.x * a.y;
  }
  require(hull.size() >= 3 && std::abs(area) > 1e-9, ErrorCategory::kDegenerateLandmarks,
          "landmark group '" + name + "' is collinear");

  constexpr double kEps = 1e-9;
  Mask m(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Point p{static_cast<double>(x), static_cast<double>(y)};
      bool inside = true;
      for (std::size_t i = 0; i < hull.size() && inside; ++i)
        inside = cross(hull[i], hull[(i + 1) % hull.size()], p) >= -kEps;
      if (inside) m.set(y, x);
    }
  }
  return m;
}

template <std::size_t A, std::size_t B>
std::vector<Point> gather(const Landmarks& lm, const int (&a)[A], const int (&b)[B]) {
  std::vector<Point> out;
  for (int i : a) out.push_back(lm[static_cast<std::size_t>(i)]);
  for (int i : b) out.push_back(lm[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<Point> range(const Landmarks& lm, int first, int last) {
  return std::vector<Point>(lm.begin() + first, lm.begin() + last + 1);
}

}  // namespace

Landmarks read_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::kIo, "cannot open landmarks " + path.string());
  Landmarks lm{};
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    Point p;
    if (!(ss >> p.x >> p.y)) continue;
    require(n < lm.size(), ErrorCategory::kConfig, "more than 68 landmarks in " + path.string());
    lm[n++] = p;
  }
  require(n == lm.size(), ErrorCategory::kConfig,
          "expected 68 landmarks in " + path.string() + ", found " + std::to_string(n));
  return lm;
}

std::map<std::string, Mask> partition_regions(const Landmarks& landmarks, int height, int width) {
  require(height >= 1 && width >= 1, ErrorCategory::kContractViolation, "empty image size");
  for (const Point& p : landmarks)
    require(p.x >= 0 && p.y >= 0 && p.x <= width - 1 && p.y <= height - 1,
            ErrorCategory::kContractViolation, "landmark outside image bounds");

  const Mask eyes = mask_union(filled_hull(gather(landmarks, kRightBrow, kRightEye), "right eye", height, width),
                               filled_hull(gather(landmarks, kLeftBrow, kLeftEye), "left eye", height, width));
  const Mask nose = mask_difference(filled_hull(range(landmarks, 27, 35), "nose", height, width), eyes);
  const Mask taken = mask_union(eyes, nose);
  const Mask mouth = mask_difference(filled_hull(range(landmarks, 48, 67), "mouth", height, width), taken);
  const Mask skin = mask_difference(filled_hull(range(landmarks, 0, 67), "face", height, width),
                                    mask_union(taken, mouth));
  return {{"eyes", eyes}, {"nose", nose}, {"mouth", mouth}, {"skin", skin}};
}

}  // namespace rfm
