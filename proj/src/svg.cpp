#include "mass/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mass/dataset.hpp"

namespace mass {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
                          "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5",
                          "#c49c94"};

struct Frame {
  int width, height;
  double margin = 50;
  double lo = 0, hi = 1;
  std::size_t points = 1;

  double x(std::size_t i) const {
    const double span = width - 2 * margin;
    if (points <= 1) return margin;
    return margin + span * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  double y(double value) const {
    const double span = height - 2 * margin;
    const double t = hi > lo ? (value - lo) / (hi - lo) : 0.5;
    return height - margin - span * t;
  }
};

void open_svg(std::ostringstream& out, const std::string& title, const Frame& f) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width
      << "\" height=\"" << f.height << "\" viewBox=\"0 0 " << f.width << ' '
      << f.height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << f.width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << title << "</text>\n";
}

void close_svg(std::ostringstream& out, const Frame& f) {
  // Axes and range labels.
  out << "<line x1=\"" << f.margin << "\" y1=\"" << f.height - f.margin
      << "\" x2=\"" << f.width - f.margin << "\" y2=\"" << f.height - f.margin
      << "\" stroke=\"#333\"/>\n"
      << "<line x1=\"" << f.margin << "\" y1=\"" << f.margin << "\" x2=\""
      << f.margin << "\" y2=\"" << f.height - f.margin << "\" stroke=\"#333\"/>\n"
      << "<text x=\"8\" y=\"" << f.y(f.hi) + 4
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(f.hi)
      << "</text>\n"
      << "<text x=\"8\" y=\"" << f.y(f.lo) + 4
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(f.lo)
      << "</text>\n</svg>\n";
}

}  // namespace

std::string render_line_chart(const std::string& title,
                              const std::vector<ChartSeries>& series, int width,
                              int height) {
  Frame frame{width, height};
  frame.lo = 1e300;
  frame.hi = -1e300;
  for (const auto& s : series) {
    frame.points = std::max(frame.points, s.values.size());
    for (double v : s.values) {
      frame.lo = std::min(frame.lo, v);
      frame.hi = std::max(frame.hi, v);
    }
  }
  if (frame.lo > frame.hi) {
    frame.lo = 0;
    frame.hi = 1;
  }
  if (frame.hi == frame.lo) frame.hi = frame.lo + 1;

  std::ostringstream out;
  open_svg(out, title, frame);
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      out << frame.x(i) << ',' << frame.y(s.values[i]) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << frame.width - frame.margin + 4 << "\" y=\""
        << frame.margin + 14 * static_cast<double>(si)
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color
        << "\">" << s.label << "</text>\n";
  }
  close_svg(out, frame);
  return out.str();
}

std::string render_stacked_area(const std::string& title,
                                const std::vector<ChartSeries>& series, int width,
                                int height) {
  Frame frame{width, height};
  frame.lo = 0;
  frame.hi = 1;
  for (const auto& s : series) frame.points = std::max(frame.points, s.values.size());

  std::ostringstream out;
  open_svg(out, title, frame);
  std::vector<double> base(frame.points, 0.0);
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % std::size(kPalette)];
    std::vector<double> top = base;
    for (std::size_t i = 0; i < s.values.size() && i < top.size(); ++i) {
      top[i] += s.values[i];
    }
    out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.85\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < frame.points; ++i) {
      out << frame.x(i) << ',' << frame.y(top[i]) << ' ';
    }
    for (std::size_t i = frame.points; i-- > 0;) {
      out << frame.x(i) << ',' << frame.y(base[i]) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << frame.width - frame.margin + 4 << "\" y=\""
        << frame.margin + 14 * static_cast<double>(si)
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color
        << "\">" << s.label << "</text>\n";
    base = top;
  }
  close_svg(out, frame);
  return out.str();
}

}  // namespace mass
