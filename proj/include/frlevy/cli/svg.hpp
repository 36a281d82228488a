#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace frlevy::cli {

// Minimal SVG emitters for the optional plot output.  Both take data already
// assembled by the runner; no styling knobs.

inline std::string svg_line_plot(const std::vector<double>& x,
                                 const std::vector<double>& y,
                                 const std::string& title) {
  const int W = 720, H = 440, ML = 60, MR = 20, MT = 30, MB = 40;
  double xmin = x[0], xmax = x[0], ymin = y[0], ymax = y[0];
  for (double v : x) { xmin = std::min(xmin, v); xmax = std::max(xmax, v); }
  for (double v : y) { ymin = std::min(ymin, v); ymax = std::max(ymax, v); }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto sx = [&](double v) {
    return ML + (v - xmin) / (xmax - xmin) * (W - ML - MR);
  };
  auto sy = [&](double v) {
    return H - MB - (v - ymin) / (ymax - ymin) * (H - MT - MB);
  };
  std::string out;
  char buf[256];
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(W) + "\" height=\"" + std::to_string(H) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<text x=\"%d\" y=\"20\" font-family=\"monospace\">%s</text>\n",
                ML, title.c_str());
  out += buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n",
                ML, H - MB, W - MR, H - MB);
  out += buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n",
                ML, MT, ML, H - MB);
  out += buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"%d\" y=\"%d\" font-size=\"11\" font-family=\"monospace\">%.6g</text>\n",
                4, H - MB, ymin);
  out += buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"%d\" y=\"%d\" font-size=\"11\" font-family=\"monospace\">%.6g</text>\n",
                4, MT + 10, ymax);
  out += buf;
  out += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", sx(x[i]), sy(y[i]));
    out += buf;
  }
  out += "\"/>\n</svg>\n";
  return out;
}

inline std::string svg_heatmap(const std::vector<double>& values, int nx, int ny,
                               const std::string& title) {
  const int cell = std::max(2, 512 / std::max(nx, ny));
  const int W = nx * cell + 80, H = ny * cell + 50;
  double vmin = values[0], vmax = values[0];
  for (double v : values) { vmin = std::min(vmin, v); vmax = std::max(vmax, v); }
  if (vmax == vmin) vmax = vmin + 1;
  std::string out;
  char buf[256];
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(W) + "\" height=\"" + std::to_string(H) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<text x=\"10\" y=\"20\" font-family=\"monospace\">%s</text>\n",
                title.c_str());
  out += buf;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      const double t = (values[static_cast<std::size_t>(i) * ny + j] - vmin) /
                       (vmax - vmin);
      const int r = static_cast<int>(255 * t);
      const int b = static_cast<int>(255 * (1 - t));
      std::snprintf(buf, sizeof buf,
                    "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" "
                    "fill=\"rgb(%d,40,%d)\"/>\n",
                    10 + i * cell, 30 + (ny - 1 - j) * cell, cell, cell, r, b);
      out += buf;
    }
  out += "</svg>\n";
  return out;
}

}  // namespace frlevy::cli
