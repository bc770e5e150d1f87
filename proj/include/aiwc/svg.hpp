#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "aiwc/csv.hpp"

namespace aiwc {

// Minimal plot-to-SVG helpers for quick visual checks of experiment outputs.
// Rendering pipelines with real styling should consume the CSVs instead.
namespace svg {

struct Frame {
  double width = 640, height = 440;
  double left = 64, right = 16, top = 28, bottom = 44;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

  double px(double x) const {
    return left + (x - x0) / (x1 - x0) * (width - left - right);
  }
  double py(double y) const {
    return height - bottom -
           (y - y0) / (y1 - y0) * (height - top - bottom);
  }
};

inline void fit_frame(Frame& f, const std::vector<double>& xs,
                      const std::vector<double>& ys) {
  f.x0 = *std::min_element(xs.begin(), xs.end());
  f.x1 = *std::max_element(xs.begin(), xs.end());
  f.y0 = *std::min_element(ys.begin(), ys.end());
  f.y1 = *std::max_element(ys.begin(), ys.end());
  if (f.x1 == f.x0) f.x1 = f.x0 + 1;
  if (f.y1 == f.y0) f.y1 = f.y0 + 1;
  const double mx = 0.04 * (f.x1 - f.x0), my = 0.06 * (f.y1 - f.y0);
  f.x0 -= mx; f.x1 += mx; f.y0 -= my; f.y1 += my;
}

inline std::string header(const Frame& f, const std::string& title,
                          const std::string& xlabel,
                          const std::string& ylabel) {
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
       fmt9(f.width) + "\" height=\"" + fmt9(f.height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt9(f.width / 2) +
       "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"13\">" + title + "</text>\n";
  s += "<text x=\"" + fmt9(f.width / 2) + "\" y=\"" + fmt9(f.height - 8) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"11\">" + xlabel + "</text>\n";
  s += "<text x=\"14\" y=\"" + fmt9(f.height / 2) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
       "transform=\"rotate(-90 14 " + fmt9(f.height / 2) + ")\">" + ylabel +
       "</text>\n";
  // axes
  s += "<line x1=\"" + fmt9(f.left) + "\" y1=\"" + fmt9(f.height - f.bottom) +
       "\" x2=\"" + fmt9(f.width - f.right) + "\" y2=\"" +
       fmt9(f.height - f.bottom) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + fmt9(f.left) + "\" y1=\"" + fmt9(f.top) + "\" x2=\"" +
       fmt9(f.left) + "\" y2=\"" + fmt9(f.height - f.bottom) +
       "\" stroke=\"black\"/>\n";
  // corner tick labels
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", f.x0);
  s += "<text x=\"" + fmt9(f.left) + "\" y=\"" + fmt9(f.height - f.bottom + 14)
       + "\" font-family=\"sans-serif\" font-size=\"10\">" + buf + "</text>\n";
  std::snprintf(buf, sizeof(buf), "%.3g", f.x1);
  s += "<text x=\"" + fmt9(f.width - f.right) + "\" y=\"" +
       fmt9(f.height - f.bottom + 14) +
       "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" +
       buf + "</text>\n";
  std::snprintf(buf, sizeof(buf), "%.3g", f.y0);
  s += "<text x=\"" + fmt9(f.left - 4) + "\" y=\"" + fmt9(f.height - f.bottom)
       + "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
       + buf + "</text>\n";
  std::snprintf(buf, sizeof(buf), "%.3g", f.y1);
  s += "<text x=\"" + fmt9(f.left - 4) + "\" y=\"" + fmt9(f.top + 4) +
       "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" +
       buf + "</text>\n";
  return s;
}

inline void line_chart(const std::string& path, const std::vector<double>& xs,
                       const std::vector<double>& ys, const std::string& title,
                       const std::string& xlabel, const std::string& ylabel) {
  Frame f;
  fit_frame(f, xs, ys);
  std::string s = header(f, title, xlabel, ylabel);
  s += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" "
       "points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i)
    s += fmt9(f.px(xs[i])) + "," + fmt9(f.py(ys[i])) + " ";
  s += "\"/>\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    s += "<circle cx=\"" + fmt9(f.px(xs[i])) + "\" cy=\"" +
         fmt9(f.py(ys[i])) + "\" r=\"2.2\" fill=\"#1f77b4\"/>\n";
  s += "</svg>\n";
  write_text_file(path, s);
}

// log10-log10 scatter with a y=x guide, for predicted-vs-measured plots
inline void loglog_scatter(const std::string& path,
                           const std::vector<double>& xs,
                           const std::vector<double>& ys,
                           const std::string& title,
                           const std::string& xlabel,
                           const std::string& ylabel) {
  std::vector<double> lx(xs.size()), ly(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) lx[i] = std::log10(xs[i]);
  for (std::size_t i = 0; i < ys.size(); ++i) ly[i] = std::log10(ys[i]);
  Frame f;
  fit_frame(f, lx, ly);
  std::string s = header(f, title, xlabel + " (log10)", ylabel + " (log10)");
  const double lo = std::max(f.x0, f.y0), hi = std::min(f.x1, f.y1);
  if (lo < hi)
    s += "<line x1=\"" + fmt9(f.px(lo)) + "\" y1=\"" + fmt9(f.py(lo)) +
         "\" x2=\"" + fmt9(f.px(hi)) + "\" y2=\"" + fmt9(f.py(hi)) +
         "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  for (std::size_t i = 0; i < lx.size(); ++i)
    s += "<circle cx=\"" + fmt9(f.px(lx[i])) + "\" cy=\"" +
         fmt9(f.py(ly[i])) + "\" r=\"2\" fill=\"#d62728\" "
         "fill-opacity=\"0.6\"/>\n";
  s += "</svg>\n";
  write_text_file(path, s);
}

}  // namespace svg
}  // namespace aiwc
