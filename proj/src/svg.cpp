#include "crumbs/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace crumbs::svg {

namespace {

constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 150, kTop = 40, kBottom = 50;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

void header(std::ostringstream& o, const std::string& title) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(kWidth / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
    << "</text>\n";
}

}  // namespace

std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - y0) / (y1 - y0) * ph; };

  std::ostringstream o;
  header(o, title);
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = y0 + (y1 - y0) * k / 4.0, xv = x0 + (x1 - x0) * k / 4.0;
    o << "<text x=\"" << num(kLeft - 5) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
      << "</text>\n";
    o << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(kTop + ph + 15) << "\" text-anchor=\"middle\">" << tick(xv)
      << "</text>\n";
  }
  o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 10) << "\" text-anchor=\"middle\">"
    << escape(x_label) << "</text>\n";
  o << "<text x=\"15\" y=\"" << num(kTop + ph / 2) << "\" transform=\"rotate(-90 15 " << num(kTop + ph / 2)
    << ")\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* colour = kPalette[si % std::size(kPalette)];
    std::string path;
    bool pen = false;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        pen = false;
        continue;
      }
      path += (pen ? " L" : " M") + num(px(s.x[i])) + " " + num(py(s.y[i]));
      pen = true;
    }
    if (!path.empty()) {
      o << "<path d=\"" << path.substr(1) << "\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    }
    const double ly = kTop + 14.0 * static_cast<double>(si) + 10;
    o << "<line x1=\"" << num(kWidth - kRight + 10) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(kWidth - kRight + 30)
      << "\" y2=\"" << num(ly) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << num(kWidth - kRight + 35) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.name)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string bar_chart(const std::string& title, const std::vector<std::string>& labels,
                      const std::vector<double>& values) {
  double top = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) top = std::max(top, v);
  }
  if (top == 0.0) top = 1.0;
  const double pw = kWidth - kLeft - 20, ph = kHeight - kTop - kBottom - 40;
  const double slot = values.empty() ? pw : pw / static_cast<double>(values.size());
  std::ostringstream o;
  header(o, title);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::isfinite(values[i]) ? std::max(0.0, values[i]) : 0.0;
    const double h = v / top * ph;
    const double x = kLeft + slot * static_cast<double>(i);
    o << "<rect x=\"" << num(x + slot * 0.1) << "\" y=\"" << num(kTop + ph - h) << "\" width=\"" << num(slot * 0.8)
      << "\" height=\"" << num(h) << "\" fill=\"" << kPalette[0] << "\"/>\n";
    const double lx = x + slot / 2, ly = kTop + ph + 12;
    o << "<text x=\"" << num(lx) << "\" y=\"" << num(ly) << "\" transform=\"rotate(45 " << num(lx) << " " << num(ly)
      << ")\">" << escape(i < labels.size() ? labels[i] : "") << "</text>\n";
  }
  o << "<text x=\"" << num(kLeft - 5) << "\" y=\"" << num(kTop + 4) << "\" text-anchor=\"end\">" << tick(top)
    << "</text>\n";
  o << "</svg>\n";
  return o.str();
}

}  // namespace crumbs::svg
