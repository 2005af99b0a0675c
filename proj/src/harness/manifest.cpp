#include <algorithm>
#include <fstream>

#include "rfm/checksum.hpp"
#include "rfm/error.hpp"
#include "rfm/harness/pipeline.hpp"

namespace rfm {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr const char* kManifestName = "manifest.json";
}

RunManifest RunManifest::load_or_empty(const fs::path& run_dir) {
  RunManifest m;
  const fs::path path = run_dir / kManifestName;
  if (!fs::exists(path)) return m;
  std::ifstream in(path);
  json doc;
  try {
    doc = json::parse(in);
    m.config = doc.value("config", json());
    m.checkpoints = doc.value("checkpoints", std::vector<std::string>{});
    const json reports = doc.value("reports", json::object());
    for (const auto& [name, report] : reports.items()) m.reports[name] = report;
    for (const json& f : doc.value("files", json::array()))
      m.files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>()});
    m.warnings = doc.value("warnings", std::vector<std::string>{});
  } catch (const json::exception& e) {
    fail(ErrorCategory::kIo, "malformed run manifest " + path.string() + ": " + e.what());
  }
  return m;
}

void RunManifest::add_file(const fs::path& run_dir, const std::string& relative) {
  const std::string digest = sha256_file(run_dir / relative);
  const auto it = std::find_if(files.begin(), files.end(), [&](const FileEntry& f) { return f.path == relative; });
  if (it != files.end()) it->sha256 = digest;
  else files.push_back({relative, digest});
}

void RunManifest::write(const fs::path& run_dir) const {
  std::vector<FileEntry> sorted = files;
  std::sort(sorted.begin(), sorted.end(), [](const FileEntry& a, const FileEntry& b) { return a.path < b.path; });
  json doc;
  doc["config"] = config;
  doc["checkpoints"] = checkpoints;
  doc["reports"] = json::object();
  for (const auto& [name, report] : reports) doc["reports"][name] = report;
  doc["files"] = json::array();
  for (const FileEntry& f : sorted) doc["files"].push_back({{"path", f.path}, {"sha256", f.sha256}});
  doc["warnings"] = warnings;
  fs::create_directories(run_dir);
  std::ofstream out(run_dir / kManifestName);
  out << doc.dump(2) << '\n';
  require(static_cast<bool>(out), ErrorCategory::kIo, "cannot write run manifest in " + run_dir.string());
}

bool RunManifest::verify(const fs::path& run_dir, std::string* problem) const {
  for (const FileEntry& f : files) {
    const fs::path path = run_dir / f.path;
    if (!fs::exists(path)) {
      if (problem) *problem = "missing " + f.path;
      return false;
    }
    if (sha256_file(path) != f.sha256) {
      if (problem) *problem = "checksum mismatch for " + f.path;
      return false;
    }
  }
  return true;
}

}  // namespace rfm
