#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace rolnn::cli {

/// Minimal standalone line-plot writer. Each series is an (x, y) polyline;
/// a provenance comment is embedded at the top of the file.
struct SvgPlot {
  std::string title;
  std::string provenance;
  struct Series {
    std::string label;
    std::string color;
    std::vector<double> x, y;
  };
  std::vector<Series> series;

  void write(const std::filesystem::path& path, int width = 720, int height = 420) const;
};

}  // namespace rolnn::cli
