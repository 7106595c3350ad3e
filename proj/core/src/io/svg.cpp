#include "motrims/io/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "motrims/error.hpp"

namespace motrims::io {

namespace {

constexpr double kWidth = 640, kHeight = 440;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) lo = 0, hi = 1;
    if (lo == hi) lo -= 0.5, hi += 0.5;
  }
};

std::string frame(const std::string& title, const std::string& xl, const std::string& yl, const Range& xr,
                  const Range& yr) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(kWidth) + "\" height=\"" + px(kHeight) +
                  "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + px(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) + "</text>\n";
  const double w = kWidth - kLeft - kRight, h = kHeight - kTop - kBottom;
  s += "<rect x=\"" + px(kLeft) + "\" y=\"" + px(kTop) + "\" width=\"" + px(w) + "\" height=\"" + px(h) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = kLeft + w * i / 4.0, fy = kTop + h - h * i / 4.0;
    s += "<text x=\"" + px(fx) + "\" y=\"" + px(kTop + h + 16) + "\" text-anchor=\"middle\">" +
         num(xr.lo + (xr.hi - xr.lo) * i / 4.0) + "</text>\n";
    s += "<text x=\"" + px(kLeft - 6) + "\" y=\"" + px(fy + 4) + "\" text-anchor=\"end\">" +
         num(yr.lo + (yr.hi - yr.lo) * i / 4.0) + "</text>\n";
  }
  s += "<text x=\"" + px(kLeft + w / 2) + "\" y=\"" + px(kHeight - 12) + "\" text-anchor=\"middle\">" + escape(xl) +
       "</text>\n";
  s += "<text transform=\"translate(16," + px(kTop + h / 2) + ") rotate(-90)\" text-anchor=\"middle\">" + escape(yl) +
       "</text>\n";
  return s;
}

// Five-stop perceptual ramp (dark blue -> yellow).
std::string colormap(double f) {
  static constexpr std::array<std::array<double, 3>, 5> stops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140},
                                                              {94, 201, 98}, {253, 231, 37}}};
  f = std::clamp(f, 0.0, 1.0) * 4.0;
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(f), 3);
  const double t = f - static_cast<double>(i);
  char buf[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c) {
    rgb[c] = static_cast<int>(std::lround(stops[i][static_cast<std::size_t>(c)] * (1 - t) +
                                          stops[i + 1][static_cast<std::size_t>(c)] * t));
  }
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

}  // namespace

std::string svg_curves(const std::vector<SvgSeries>& series, const std::string& title, const std::string& x_label,
                       const std::string& y_label) {
  Range xr, yr;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw DataError("svg: series '" + s.name + "' has mismatched x and y");
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.finish();
  yr.add(0.0);
  yr.finish();
  std::string out = frame(title, x_label, y_label, xr, yr);
  const double w = kWidth - kLeft - kRight, h = kHeight - kTop - kBottom;
  auto X = [&](double v) { return kLeft + (v - xr.lo) / (xr.hi - xr.lo) * w; };
  auto Y = [&](double v) { return kTop + h - (v - yr.lo) / (yr.hi - yr.lo) * h; };
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % kPalette.size()];
    if (s.points) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        out += "<circle cx=\"" + px(X(s.x[i])) + "\" cy=\"" + px(Y(s.y[i])) + "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
      }
    } else {
      out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        out += px(X(s.x[i])) + "," + px(Y(s.y[i])) + " ";
      }
      out += "\"/>\n";
    }
    out += "<text x=\"" + px(kWidth - kRight - 8) + "\" y=\"" + px(kTop + 16 + 15 * static_cast<double>(k)) +
           "\" text-anchor=\"end\" fill=\"" + color + "\">" + escape(s.name) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string svg_map(const std::vector<double>& u, const std::vector<double>& v, const std::vector<double>& values,
                    const std::string& title, const std::string& u_label, const std::string& v_label) {
  if (u.empty() || v.empty() || values.size() != u.size() * v.size()) throw DataError("svg: map dimensions mismatch");
  Range ur, vr, zr;
  for (double a : u) ur.add(a);
  for (double b : v) vr.add(b);
  for (double z : values) zr.add(z);
  // Cells are centred on the nodes.
  const double du = u.size() > 1 ? (ur.hi - ur.lo) / static_cast<double>(u.size() - 1) : 1.0;
  const double dv = v.size() > 1 ? (vr.hi - vr.lo) / static_cast<double>(v.size() - 1) : 1.0;
  ur.lo -= du / 2, ur.hi += du / 2;
  vr.lo -= dv / 2, vr.hi += dv / 2;
  zr.finish();
  std::string out = frame(title, u_label, v_label, ur, vr);
  const double w = kWidth - kLeft - kRight, h = kHeight - kTop - kBottom;
  const double cw = w / static_cast<double>(u.size()), ch = h / static_cast<double>(v.size());
  for (std::size_t a = 0; a < u.size(); ++a) {
    for (std::size_t b = 0; b < v.size(); ++b) {
      const double z = values[a * v.size() + b];
      const double f = std::isfinite(z) ? (z - zr.lo) / (zr.hi - zr.lo) : 0.0;
      out += "<rect x=\"" + px(kLeft + cw * static_cast<double>(a)) + "\" y=\"" +
             px(kTop + h - ch * static_cast<double>(b + 1)) + "\" width=\"" + px(cw + 0.3) + "\" height=\"" +
             px(ch + 0.3) + "\" fill=\"" + colormap(f) + "\"/>\n";
    }
  }
  out += "<rect x=\"" + px(kLeft) + "\" y=\"" + px(kTop) + "\" width=\"" + px(w) + "\" height=\"" + px(h) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace motrims::io
