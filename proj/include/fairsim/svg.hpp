#pragma once

// Minimal SVG emitter for scatter grids and box-plot grids.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fairsim/analysis.hpp"

namespace fairsim::svg {

inline constexpr const char* kFullColor = "#40E0D0";  // turquoise
inline constexpr const char* kAnonColor = "#FA8072";  // salmon

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Two decimals with trailing zeros dropped, for axis and column labels.
inline std::string label_num(double v) {
  std::string s = num(v);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s == "-0" ? "0" : s;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class Document {
 public:
  Document(double width, double height) : width_(width), height_(height) {}

  void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1.0,
            const std::string& cls = {}, const std::string& dash = {}) {
    body_ << "<line" << class_attr(cls) << " x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
          << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width) << '"';
    if (!dash.empty()) body_ << " stroke-dasharray=\"" << dash << '"';
    body_ << "/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill, const std::string& stroke,
            const std::string& cls = {}) {
    body_ << "<rect" << class_attr(cls) << " x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
          << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\"/>\n";
  }
  void circle(double cx, double cy, double r, const std::string& fill, double opacity = 0.7) {
    body_ << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r) << "\" fill=\"" << fill
          << "\" fill-opacity=\"" << num(opacity) << "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                const std::string& cls = {}) {
    body_ << "<polyline" << class_attr(cls) << " fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) body_ << (i ? " " : "") << num(pts[i].first) << ',' << num(pts[i].second);
    body_ << "\"/>\n";
  }
  void text(double x, double y, const std::string& s, double size = 11.0, const std::string& anchor = "middle",
            double rotate = 0.0) {
    body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << num(size)
          << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << '"';
    if (rotate != 0.0) body_ << " transform=\"rotate(" << num(rotate) << ' ' << num(x) << ' ' << num(y) << ")\"";
    body_ << '>' << escape(s) << "</text>\n";
  }
  void open_group(const std::string& cls) { body_ << "<g class=\"" << cls << "\">\n"; }
  void close_group() { body_ << "</g>\n"; }

  std::string str() const {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_) << "\" height=\"" << num(height_)
        << "\" viewBox=\"0 0 " << num(width_) << ' ' << num(height_) << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body_.str() << "</svg>\n";
    return out.str();
  }

 private:
  static std::string class_attr(const std::string& cls) { return cls.empty() ? "" : " class=\"" + cls + "\""; }
  double width_, height_;
  std::ostringstream body_;
};

/// Linear map from data to pixel coordinates of one panel.
struct Frame {
  double left, top, width, height;
  double x0, x1, y0, y1;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * width; }
  double py(double y) const { return top + height - (y - y0) / (y1 - y0) * height; }
};

inline void draw_axes(Document& doc, const Frame& f, bool x_ticks = true) {
  doc.rect(f.left, f.top, f.width, f.height, "none", "#444444");
  for (int i = 0; i <= 4; ++i) {
    const double t = static_cast<double>(i) / 4.0;
    const double yv = f.y0 + t * (f.y1 - f.y0);
    doc.line(f.left - 3, f.py(yv), f.left, f.py(yv), "#444444");
    doc.text(f.left - 5, f.py(yv) + 3, num(yv), 8.0, "end");
    if (x_ticks) {
      const double xv = f.x0 + t * (f.x1 - f.x0);
      doc.line(f.px(xv), f.top + f.height, f.px(xv), f.top + f.height + 3, "#444444");
      doc.text(f.px(xv), f.top + f.height + 12, num(xv), 8.0);
    }
  }
}

struct ScatterSeries {
  std::string label;
  std::string color;
  std::vector<Point2> points;
  std::optional<EllipseSpec> ellipse;
};

struct ScatterPanel {
  std::vector<ScatterSeries> series;
};

inline std::vector<std::pair<double, double>> ellipse_outline(const EllipseSpec& e, const Frame& f) {
  std::vector<std::pair<double, double>> pts;
  const double c = std::cos(e.rotation), s = std::sin(e.rotation);
  for (int k = 0; k <= 72; ++k) {
    const double t = 2.0 * std::numbers::pi * k / 72.0;
    const double u = e.semi_axes[0] * std::cos(t), v = e.semi_axes[1] * std::sin(t);
    pts.emplace_back(f.px(e.center.x + c * u - s * v), f.py(e.center.y + s * u + c * v));
  }
  return pts;
}

/// Grid of scatter panels (rows x cols) sharing one square data range, each
/// with the y = x reference line.
inline std::string scatter_grid(const std::string& title, const std::vector<std::string>& row_labels,
                                const std::vector<std::string>& col_labels,
                                const std::vector<std::vector<ScatterPanel>>& panels, const std::string& x_label,
                                const std::string& y_label) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& row : panels) {
    for (const auto& p : row) {
      for (const auto& s : p.series) {
        for (const auto& pt : s.points) {
          lo = std::min({lo, pt.x, pt.y});
          hi = std::max({hi, pt.x, pt.y});
        }
      }
    }
  }
  if (!(lo < hi)) {
    lo = std::isfinite(lo) ? lo - 0.05 : 0.0;
    hi = std::isfinite(hi) ? hi + 0.05 : 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo = std::max(0.0, lo - pad);
  hi = std::min(1.0, hi + pad);

  const double cell = 180.0, gap = 40.0, margin_left = 90.0, margin_top = 60.0;
  const double width = margin_left + static_cast<double>(col_labels.size()) * (cell + gap) + 20.0;
  const double height = margin_top + static_cast<double>(row_labels.size()) * (cell + gap) + 60.0;
  Document doc(width, height);
  doc.text(width / 2, 22, title, 14.0);
  for (std::size_t c = 0; c < col_labels.size(); ++c) {
    doc.text(margin_left + static_cast<double>(c) * (cell + gap) + cell / 2, margin_top - 10, col_labels[c]);
  }
  for (std::size_t r = 0; r < row_labels.size(); ++r) {
    const double top = margin_top + static_cast<double>(r) * (cell + gap);
    doc.text(22, top + cell / 2, row_labels[r], 11.0, "middle", -90.0);
    for (std::size_t c = 0; c < col_labels.size(); ++c) {
      const Frame f{margin_left + static_cast<double>(c) * (cell + gap), top, cell, cell, lo, hi, lo, hi};
      doc.open_group("panel");
      draw_axes(doc, f);
      doc.line(f.px(lo), f.py(lo), f.px(hi), f.py(hi), "black", 1.0, "identity");
      if (r < panels.size() && c < panels[r].size()) {
        for (const auto& s : panels[r][c].series) {
          for (const auto& pt : s.points) doc.circle(f.px(pt.x), f.py(pt.y), 2.0, s.color);
          if (s.ellipse) doc.polyline(ellipse_outline(*s.ellipse, f), s.color, "ellipse");
        }
      }
      doc.close_group();
    }
  }
  doc.text(width / 2, height - 30, x_label, 12.0);
  doc.text(40, height / 2, y_label, 12.0, "middle", -90.0);
  doc.text(width - 20, height - 12, "full", 10.0, "end");
  doc.circle(width - 60, height - 15, 4.0, kFullColor, 1.0);
  doc.text(width - 80, height - 12, "anon", 10.0, "end");
  doc.circle(width - 120, height - 15, 4.0, kAnonColor, 1.0);
  return doc.str();
}

struct BoxSeries {
  std::string label;
  std::string color;
  std::vector<double> values;
};

struct BoxPanel {
  std::vector<BoxSeries> series;
};

/// Type-7 sample quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& v, double p) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Grid of box-plot panels; whiskers reach the furthest point within 1.5 IQR.
inline std::string box_grid(const std::string& title, const std::vector<std::string>& row_labels,
                            const std::vector<std::string>& col_labels,
                            const std::vector<std::vector<BoxPanel>>& panels, const std::string& y_label,
                            std::optional<double> reference = std::nullopt) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t most = 1;
  for (const auto& row : panels) {
    for (const auto& p : row) {
      most = std::max(most, p.series.size());
      for (const auto& s : p.series) {
        for (double v : s.values) {
          if (!std::isfinite(v)) continue;
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
    }
  }
  if (reference) {
    lo = std::min(lo, *reference);
    hi = std::max(hi, *reference);
  }
  if (!(lo < hi)) {
    lo = std::isfinite(lo) ? lo - 1.0 : 0.0;
    hi = std::isfinite(hi) ? hi + 1.0 : 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double panel_w = std::max(200.0, 18.0 * static_cast<double>(most) + 20.0), panel_h = 180.0;
  const double gap = 50.0, margin_left = 90.0, margin_top = 60.0;
  const double width = margin_left + static_cast<double>(col_labels.size()) * (panel_w + gap) + 20.0;
  const double height = margin_top + static_cast<double>(row_labels.size()) * (panel_h + gap + 20.0) + 40.0;
  Document doc(width, height);
  doc.text(width / 2, 22, title, 14.0);
  for (std::size_t c = 0; c < col_labels.size(); ++c) {
    doc.text(margin_left + static_cast<double>(c) * (panel_w + gap) + panel_w / 2, margin_top - 10, col_labels[c]);
  }
  for (std::size_t r = 0; r < row_labels.size(); ++r) {
    const double top = margin_top + static_cast<double>(r) * (panel_h + gap + 20.0);
    doc.text(22, top + panel_h / 2, row_labels[r], 11.0, "middle", -90.0);
    for (std::size_t c = 0; c < col_labels.size(); ++c) {
      const double left = margin_left + static_cast<double>(c) * (panel_w + gap);
      const Frame f{left, top, panel_w, panel_h, 0.0, 1.0, lo, hi};
      doc.open_group("panel");
      draw_axes(doc, f, false);
      if (reference) {
        doc.line(left, f.py(*reference), left + panel_w, f.py(*reference), "#800080", 1.0, "reference", "4 3");
      }
      if (r < panels.size() && c < panels[r].size()) {
        const auto& series = panels[r][c].series;
        const double slot = panel_w / static_cast<double>(std::max<std::size_t>(1, series.size()));
        for (std::size_t k = 0; k < series.size(); ++k) {
          std::vector<double> v;
          for (double x : series[k].values) {
            if (std::isfinite(x)) v.push_back(x);
          }
          const double cx = left + slot * (static_cast<double>(k) + 0.5);
          doc.text(cx, top + panel_h + 12, series[k].label, 7.0, "end", -45.0);
          if (v.empty()) continue;
          std::sort(v.begin(), v.end());
          const double q1 = quantile_sorted(v, 0.25), q2 = quantile_sorted(v, 0.5), q3 = quantile_sorted(v, 0.75);
          const double iqr = q3 - q1;
          double wlo = q1, whi = q3;
          for (double x : v) {
            if (x >= q1 - 1.5 * iqr) { wlo = x; break; }
          }
          for (auto it = v.rbegin(); it != v.rend(); ++it) {
            if (*it <= q3 + 1.5 * iqr) { whi = *it; break; }
          }
          const double bw = std::min(14.0, slot * 0.7);
          doc.open_group("box");
          doc.line(cx, f.py(wlo), cx, f.py(q1), "#333333");
          doc.line(cx, f.py(q3), cx, f.py(whi), "#333333");
          doc.rect(cx - bw / 2, f.py(q3), bw, std::max(0.5, f.py(q1) - f.py(q3)), series[k].color, "#333333");
          doc.line(cx - bw / 2, f.py(q2), cx + bw / 2, f.py(q2), "#000000", 1.5);
          for (double x : v) {
            if (x < wlo || x > whi) doc.circle(cx, f.py(x), 1.5, "#333333", 0.8);
          }
          doc.close_group();
        }
      }
      doc.close_group();
    }
  }
  doc.text(40, height / 2, y_label, 12.0, "middle", -90.0);
  return doc.str();
}

}  // namespace fairsim::svg
