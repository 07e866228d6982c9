#pragma once

// JSON <-> matrix conversion, CSV and SVG writers.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nonmarkov/operators.hpp"

namespace nonmarkov::app {

/// Bad input: malformed config, unknown keys, invalid parameter values.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using json = nlohmann::json;

/// Complex entries are written as [re, im].
inline json to_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Complex complex_from_json(const json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  throw ValidationError(where + ": expected a number or a [re, im] pair");
}

/// Row-major nested arrays; entries are numbers or [re, im] pairs.
inline ComplexMatrix matrix_from_json(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ValidationError(where + ": expected a non-empty array of rows");
  const auto rows = static_cast<Index>(v.size());
  if (!v[0].is_array() || v[0].empty()) throw ValidationError(where + ": rows must be arrays");
  const auto cols = static_cast<Index>(v[0].size());
  ComplexMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw ValidationError(where + ": ragged matrix");
    }
    for (Index j = 0; j < cols; ++j) {
      m(i, j) = complex_from_json(row[static_cast<std::size_t>(j)],
                                  where + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
    }
  }
  return m;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

/// `t,value` header, 17 significant digits, LF line endings.
inline void write_csv(const std::string& path, const std::vector<double>& t,
                      const std::vector<double>& v) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot write " + path);
  std::fputs("t,value\n", f);
  for (std::size_t i = 0; i < t.size(); ++i) std::fprintf(f, "%.17g,%.17g\n", t[i], v[i]);
  std::fclose(f);
}

inline std::string format_tick(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

/// Self-contained line plot with axis ticks.
inline void write_svg(const std::string& path, const std::vector<double>& t,
                      const std::vector<double>& v, const std::string& title,
                      const std::string& ylabel) {
  constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  double x0 = t.front(), x1 = t.back();
  double y0 = *std::min_element(v.begin(), v.end());
  double y1 = *std::max_element(v.begin(), v.end());
  if (!(y1 > y0)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot write " + path);
  std::fprintf(f,
               "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
               "viewBox=\"0 0 %g %g\" font-family=\"sans-serif\" font-size=\"11\">\n",
               W, H, W, H);
  std::fprintf(f, "<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n");
  std::fprintf(f, "<text x=\"%g\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">%s</text>\n",
               W / 2, title.c_str());
  std::fprintf(f, "<g stroke=\"black\" stroke-width=\"1\">\n");
  std::fprintf(f, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\"/>\n", L, H - B, W - R, H - B);
  std::fprintf(f, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\"/>\n", L, T, L, H - B);
  for (int k = 0; k <= 5; ++k) {
    const double xv = x0 + (x1 - x0) * k / 5.0, yv = y0 + (y1 - y0) * k / 5.0;
    std::fprintf(f, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\"/>\n", px(xv), H - B, px(xv),
                 H - B + 5);
    std::fprintf(f, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\"/>\n", L - 5, py(yv), L, py(yv));
  }
  std::fprintf(f, "</g>\n");
  for (int k = 0; k <= 5; ++k) {
    const double xv = x0 + (x1 - x0) * k / 5.0, yv = y0 + (y1 - y0) * k / 5.0;
    std::fprintf(f, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%s</text>\n", px(xv),
                 H - B + 18, format_tick(xv).c_str());
    std::fprintf(f, "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%s</text>\n", L - 8, py(yv) + 4,
                 format_tick(yv).c_str());
  }
  std::fprintf(f, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">t</text>\n", (L + W - R) / 2,
               H - 12);
  std::fprintf(f,
               "<text x=\"16\" y=\"%g\" text-anchor=\"middle\" transform=\"rotate(-90 16 %g)\">%s</text>\n",
               (T + H - B) / 2, (T + H - B) / 2, ylabel.c_str());
  if (y0 < 0.0 && y1 > 0.0) {
    std::fprintf(f,
                 "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
                 L, py(0.0), W - R, py(0.0));
  }
  // Thin very long traces to at most ~2000 vertices.
  const std::size_t stride = std::max<std::size_t>(1, t.size() / 2000);
  std::fprintf(f, "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.5\" points=\"");
  for (std::size_t i = 0; i < t.size(); i += stride) std::fprintf(f, "%.2f,%.2f ", px(t[i]), py(v[i]));
  if ((t.size() - 1) % stride != 0) std::fprintf(f, "%.2f,%.2f", px(t.back()), py(v.back()));
  std::fprintf(f, "\"/>\n</svg>\n");
  std::fclose(f);
}

}  // namespace nonmarkov::app
