#include "tucker/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tucker/error.hpp"

namespace tucker {

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 80, kRight = 200, kTop = 40, kBottom = 60;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

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
  std::string o;
  for (char c : s) {
    switch (c) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

}  // namespace

std::vector<std::string> plot_kinds() { return {"fig2a", "fig2b", "fig2b-rescaled", "fig3", "fig3-subspace", "fig4"}; }

PlotSpec plot_spec(const std::string& kind) {
  if (kind == "fig2a") return {"Reconstruction error vs dimension", "p", {"rmse_mean"}, {"sigma", "r", "algo"}};
  if (kind == "fig2b")
    return {"Mode-k subspace error", "alpha", {"sin_theta_1_mean", "sin_theta_2_mean", "sin_theta_3_mean"}, {"r", "algo"}};
  if (kind == "fig2b-rescaled")
    return {"Mode-k subspace error / sqrt(p_k)",
            "alpha",
            {"scaled_sin_theta_1_mean", "scaled_sin_theta_2_mean", "scaled_sin_theta_3_mean"},
            {"r", "algo"}};
  if (kind == "fig3") return {"Reconstruction error by algorithm", "alpha", {"rmse_mean"}, {"algo", "sigma", "p"}};
  if (kind == "fig3-subspace")
    return {"Mean subspace error by algorithm", "alpha", {"sin_theta_mean_mean"}, {"algo", "sigma", "p"}};
  if (kind == "fig4") return {"Co-clustering misclassification", "alpha", {"err_mean"}, {"algo", "r", "p"}};
  std::string known;
  for (const auto& k : plot_kinds()) known += (known.empty() ? "" : ", ") + k;
  throw InvalidArgument("unknown plot kind '" + kind + "' (expected one of " + known + ")");
}

std::string render_svg(const CsvData& data, const PlotSpec& spec) {
  if (data.rows.empty()) throw IoError("CSV has no data rows to plot");
  const std::size_t xc = data.column(spec.x);
  std::vector<std::size_t> yc;
  for (const auto& y : spec.y) yc.push_back(data.column(y));
  std::vector<std::size_t> keys;
  for (const auto& s : spec.series) {
    if (std::find(data.columns.begin(), data.columns.end(), s) == data.columns.end()) continue;
    const std::size_t c = data.column(s);
    std::set<std::string> distinct;
    for (const auto& row : data.rows) distinct.insert(row[c]);
    if (distinct.size() > 1) keys.push_back(c);
  }

  std::vector<Series> series;
  std::map<std::string, std::size_t> index;
  for (std::size_t yi = 0; yi < yc.size(); ++yi) {
    for (std::size_t r = 0; r < data.rows.size(); ++r) {
      std::string label = yc.size() > 1 ? spec.y[yi] : std::string();
      for (std::size_t k : keys) label += (label.empty() ? "" : ", ") + data.columns[k] + "=" + data.rows[r][k];
      if (label.empty()) label = spec.y[yi];
      auto [it, fresh] = index.try_emplace(label, series.size());
      if (fresh) series.push_back({label, {}});
      const double x = data.number(r, xc), y = data.number(r, yc[yi]);
      if (std::isfinite(x) && std::isfinite(y)) series[it->second].points.emplace_back(x, y);
    }
  }
  double x0 = HUGE_VAL, x1 = -HUGE_VAL, y0 = HUGE_VAL, y1 = -HUGE_VAL;
  for (auto& s : series) {
    std::stable_sort(s.points.begin(), s.points.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [x, y] : s.points) {
      x0 = std::min(x0, x), x1 = std::max(x1, x);
      y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  }
  if (!(x0 <= x1)) throw IoError("CSV has no finite points to plot");
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad, y1 += pad;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return kTop + (y1 - y) / (y1 - y0) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << px(kLeft + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(spec.title)
    << "</text>\n";
  o << "<rect x=\"" << px(kLeft) << "\" y=\"" << px(kTop) << "\" width=\"" << px(pw) << "\" height=\"" << px(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    o << "<line x1=\"" << px(sx(xv)) << "\" y1=\"" << px(kTop + ph) << "\" x2=\"" << px(sx(xv)) << "\" y2=\""
      << px(kTop + ph + 5) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << px(sx(xv)) << "\" y=\"" << px(kTop + ph + 18) << "\" text-anchor=\"middle\">" << num(xv)
      << "</text>\n";
    o << "<line x1=\"" << px(kLeft - 5) << "\" y1=\"" << px(sy(yv)) << "\" x2=\"" << px(kLeft) << "\" y2=\""
      << px(sy(yv)) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << px(kLeft - 8) << "\" y=\"" << px(sy(yv) + 4) << "\" text-anchor=\"end\">" << num(yv)
      << "</text>\n";
  }
  std::string ylabel;
  for (const auto& y : spec.y) ylabel += (ylabel.empty() ? "" : ", ") + y;
  o << "<text x=\"" << px(kLeft + pw / 2) << "\" y=\"" << px(kHeight - 15) << "\" text-anchor=\"middle\">"
    << escape(spec.x) << "</text>\n";
  o << "<text x=\"18\" y=\"" << px(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << px(kTop + ph / 2) << ")\">" << escape(ylabel) << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    const auto& s = series[i];
    o << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < s.points.size(); ++k)
      o << (k ? " " : "") << px(sx(s.points[k].first)) << "," << px(sy(s.points[k].second));
    o << "\"/>\n";
    for (const auto& [x, y] : s.points)
      o << "<circle cx=\"" << px(sx(x)) << "\" cy=\"" << px(sy(y)) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    const double ly = kTop + 10 + 18.0 * static_cast<double>(i);
    o << "<line x1=\"" << px(kLeft + pw + 12) << "\" y1=\"" << px(ly) << "\" x2=\"" << px(kLeft + pw + 32) << "\" y2=\""
      << px(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << px(kLeft + pw + 36) << "\" y=\"" << px(ly + 4) << "\">" << escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void emit_plot(const std::string& csv_path, const std::string& kind, const std::string& svg_path) {
  const PlotSpec spec = plot_spec(kind);
  const std::string svg = render_svg(read_csv(csv_path), spec);
  std::ofstream f(svg_path, std::ios::binary);
  if (!f) throw IoError("cannot open " + svg_path + " for writing");
  f << svg;
  if (!f) throw IoError("failed writing " + svg_path);
}

}  // namespace tucker
