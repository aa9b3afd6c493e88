#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "daf/error.hpp"
#include "daf/text.hpp"

namespace daf {

/// One labeled corpus entry. Relative paths resolve against the manifest's
/// directory.
struct ManifestRow {
  std::string path;
  int label = 0;  // 0 real, 1 fake
  std::string tag;
};

struct Manifest {
  std::vector<ManifestRow> rows;
  std::filesystem::path base_dir;

  std::string resolve(const ManifestRow& row) const {
    const std::filesystem::path p(row.path);
    if (p.is_absolute()) return p.string();
    return (base_dir / p).lexically_normal().string();
  }

  bool has_both_classes() const {
    bool real = false;
    bool fake = false;
    for (const ManifestRow& row : rows) (row.label == 1 ? fake : real) = true;
    return real && fake;
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(strip(line.substr(start)));
      break;
    }
    fields.push_back(strip(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

}  // namespace detail

inline constexpr const char* kManifestHeader = "path,label,tag";

inline Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  Manifest manifest;
  manifest.base_dir = std::filesystem::path(path).parent_path();

  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty manifest: " + path);
  if (detail::strip(line) != kManifestHeader) {
    throw FormatError("manifest must start with header '" +
                      std::string(kManifestHeader) + "': " + path);
  }
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (detail::strip(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() < 2 || fields.size() > 3 || fields[0].empty()) {
      throw FormatError("malformed manifest row at line " +
                        std::to_string(line_number) + ": " + path);
    }
    ManifestRow row;
    row.path = fields[0];
    if (fields[1] == "0") {
      row.label = 0;
    } else if (fields[1] == "1") {
      row.label = 1;
    } else {
      throw FormatError("manifest label must be 0 or 1 at line " +
                        std::to_string(line_number) + ": " + path);
    }
    if (fields.size() == 3) row.tag = fields[2];
    manifest.rows.push_back(std::move(row));
  }
  return manifest;
}

inline void save_manifest(const Manifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << kManifestHeader << '\n';
  for (const ManifestRow& row : manifest.rows) {
    out << row.path << ',' << row.label << ',' << row.tag << '\n';
  }
  if (!out) throw IoError("manifest write failed: " + path);
}

/// Imports a DiffusionForensics-style directory tree: any number of real
/// directories (label 0, tag "real") and fake directories (label 1, tagged
/// by directory basename). Paths are stored relative to out_dir when
/// possible; scan order is sorted for reproducibility.
inline Manifest manifest_from_dirs(const std::vector<std::string>& real_dirs,
                                   const std::vector<std::string>& fake_dirs,
                                   const std::filesystem::path& out_dir) {
  auto is_image = [](const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
  };
  auto collect = [&](const std::string& dir) {
    if (!std::filesystem::is_directory(dir)) {
      throw IoError("not a directory: " + dir);
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
      if (entry.is_regular_file() && is_image(entry.path())) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    return files;
  };
  auto store_path = [&](const std::filesystem::path& p) {
    std::error_code ec;
    const auto rel = std::filesystem::relative(p, out_dir, ec);
    if (!ec && !rel.empty() && rel.native().rfind("..", 0) != 0) {
      return rel.string();
    }
    return std::filesystem::absolute(p).string();
  };

  Manifest manifest;
  manifest.base_dir = out_dir;
  for (const std::string& dir : real_dirs) {
    for (const auto& file : collect(dir)) {
      manifest.rows.push_back({store_path(file), 0, "real"});
    }
  }
  for (const std::string& dir : fake_dirs) {
    const std::string tag = std::filesystem::path(dir).filename().string();
    for (const auto& file : collect(dir)) {
      manifest.rows.push_back({store_path(file), 1, tag.empty() ? "fake" : tag});
    }
  }
  return manifest;
}

}  // namespace daf
