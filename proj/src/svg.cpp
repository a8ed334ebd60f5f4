#include "rolnn/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace rolnn::cli {

namespace {
std::string num(double v) {
  char buf[32];
  snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}
}  // namespace

void SvgPlot::write(const std::filesystem::path& path, int width, int height) const {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (!(xmax > xmin)) {
    xmin -= 1.0;
    xmax += 1.0;
  }
  if (!(ymax > ymin)) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  const double ml = 60, mr = 20, mt = 40, mb = 40;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("SvgPlot: cannot open " + path.string());
  f << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  f << "<!-- " << provenance << " -->\n";
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\">\n";
  f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  f << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
    << title << "</text>\n";
  // axes
  f << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
    << mt + ph << "\" stroke=\"black\"/>\n";
  f << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double xv = xmin + (xmax - xmin) * i / 4.0;
    double yv = ymin + (ymax - ymin) * i / 4.0;
    f << "<text x=\"" << sx(xv) << "\" y=\"" << mt + ph + 16
      << "\" text-anchor=\"middle\" font-size=\"10\">" << num(xv) << "</text>\n";
    f << "<text x=\"" << ml - 6 << "\" y=\"" << sy(yv) + 3
      << "\" text-anchor=\"end\" font-size=\"10\">" << num(yv) << "</text>\n";
  }
  int li = 0;
  for (const auto& s : series) {
    f << "<polyline fill=\"none\" stroke=\"" << (s.color.empty() ? "steelblue" : s.color)
      << "\" stroke-width=\"1.2\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      f << num(sx(s.x[i])) << "," << num(sy(s.y[i])) << " ";
    }
    f << "\"/>\n";
    f << "<text x=\"" << ml + pw - 6 << "\" y=\"" << mt + 14 + 14 * li
      << "\" text-anchor=\"end\" font-size=\"11\" fill=\""
      << (s.color.empty() ? "steelblue" : s.color) << "\">" << s.label << "</text>\n";
    ++li;
  }
  f << "</svg>\n";
}

}  // namespace rolnn::cli
