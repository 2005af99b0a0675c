#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

#include "rfm/data.hpp"
#include "rfm/error.hpp"
#include "rfm/image_io.hpp"

namespace rfm {
namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

// Non-empty, non-comment lines.
std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::kIo, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::vector<LayoutEntry> read_layout_manifest(const fs::path& path) {
  std::vector<LayoutEntry> out;
  for (const std::string& line : read_lines(path)) {
    const auto fields = split(line, ',');
    if (fields.size() >= 2 && fields[0] == "subdirectory" && fields[1] == "label") continue;
    require(fields.size() == 3, ErrorCategory::kConfig,
            "layout manifest rows need subdirectory,label,technique: '" + line + "'");
    out.push_back({fields[0], parse_label(fields[1]), fields[2]});
  }
  return out;
}

IngestReport ingest_directory(const fs::path& root, std::span<const LayoutEntry> layout) {
  struct Candidate {
    std::string relative;
    const LayoutEntry* entry;
  };
  std::vector<Candidate> candidates;
  for (const LayoutEntry& entry : layout) {
    const fs::path dir = root / entry.subdirectory;
    if (!fs::is_directory(dir)) continue;
    for (const auto& file : fs::recursive_directory_iterator(dir)) {
      if (!file.is_regular_file()) continue;
      candidates.push_back({fs::relative(file.path(), root).generic_string(), &entry});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.relative < b.relative; });

  IngestReport report;
  for (const Candidate& c : candidates) {
    try {
      SampleRecord rec;
      rec.image = read_png(root / c.relative);
      validate_image(rec.image);
      rec.id = c.relative;
      rec.label = c.entry->label;
      rec.technique = c.entry->technique;
      report.records.push_back(std::move(rec));
    } catch (const Error& e) {
      report.warnings.push_back("skipped " + c.relative + ": " + e.what());
      ++report.skipped;
    }
  }
  require(!report.records.empty(), ErrorCategory::kEmptyDataset,
          "no readable images under " + root.string());
  return report;
}

void write_dataset(const fs::path& dir, std::span<const SampleRecord> records) {
  fs::create_directories(dir);
  std::ofstream manifest(dir / "manifest.csv");
  if (!manifest) fail(ErrorCategory::kIo, "cannot write " + (dir / "manifest.csv").string());
  manifest << "path,label,technique,forgery_mask,region_masks\n";
  for (const SampleRecord& rec : records) {
    const std::string image_path = "images/" + rec.id + ".png";
    write_png(dir / image_path, rec.image);
    std::string mask_path;
    if (rec.forgery_mask) {
      mask_path = "masks/" + rec.id + "_forgery.png";
      write_mask_png(dir / mask_path, *rec.forgery_mask);
    }
    std::string regions;
    for (const auto& [name, mask] : rec.region_masks) {
      const std::string p = "masks/" + rec.id + "_" + name + ".png";
      write_mask_png(dir / p, mask);
      if (!regions.empty()) regions += ';';
      regions += name + "=" + p;
    }
    manifest << image_path << ',' << label_name(rec.label) << ',' << rec.technique << ','
             << mask_path << ',' << regions << '\n';
  }
  if (!manifest) fail(ErrorCategory::kIo, "write failed for dataset manifest in " + dir.string());
}

std::vector<SampleRecord> read_dataset(const fs::path& manifest_path) {
  const fs::path dir = manifest_path.parent_path();
  std::vector<SampleRecord> out;
  for (const std::string& line : read_lines(manifest_path)) {
    const auto fields = split(line, ',');
    if (!fields.empty() && fields[0] == "path") continue;
    require(fields.size() >= 3, ErrorCategory::kConfig,
            "dataset manifest rows need at least path,label,technique: '" + line + "'");
    SampleRecord rec;
    rec.id = fs::path(fields[0]).stem().string();
    rec.image = read_png(dir / fields[0]);
    rec.label = parse_label(fields[1]);
    rec.technique = fields[2];
    if (fields.size() > 3 && !fields[3].empty()) rec.forgery_mask = read_mask_png(dir / fields[3]);
    if (fields.size() > 4 && !fields[4].empty()) {
      for (const std::string& item : split(fields[4], ';')) {
        const auto eq = item.find('=');
        require(eq != std::string::npos, ErrorCategory::kConfig, "malformed region entry '" + item + "'");
        rec.region_masks.emplace(item.substr(0, eq), read_mask_png(dir / item.substr(eq + 1)));
      }
    }
    out.push_back(std::move(rec));
  }
  require(!out.empty(), ErrorCategory::kEmptyDataset, "dataset manifest lists no samples");
  return out;
}

}  // namespace rfm
