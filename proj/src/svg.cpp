#include "psw/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "psw/errors.hpp"

namespace psw {

namespace {

const char* kPalette[] = {"#333333", "#d95f02", "#1b9e77", "#7570b3",
                          "#e7298a", "#66a61e", "#e6ab02"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
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

struct Canvas {
  std::ostringstream body;
  double width, height;

  Canvas(double w, double h) : width(w), height(h) {}

  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            bool dashed = false, double sw = 1.0) {
    body << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\""
         << num(x2) << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke
         << "\" stroke-width=\"" << num(sw) << "\"";
    if (dashed) body << " stroke-dasharray=\"4,3\"";
    body << "/>\n";
  }

  void circle(double cx, double cy, double r, const std::string& fill) {
    body << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\""
         << num(r) << "\" fill=\"" << fill << "\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill,
            double opacity = 1.0) {
    body << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\""
         << num(w) << "\" height=\"" << num(h) << "\" fill=\"" << fill
         << "\" fill-opacity=\"" << num(opacity) << "\"/>\n";
  }

  void text(double x, double y, const std::string& s, int size = 11,
            const std::string& anchor = "start", const std::string& fill = "#000") {
    body << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\""
         << size << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor
         << "\" fill=\"" << fill << "\">" << escape(s) << "</text>\n";
  }

  void polyline(const std::string& points, const std::string& stroke) {
    body << "<polyline points=\"" << points << "\" fill=\"none\" stroke=\""
         << stroke << "\" stroke-width=\"1.5\"/>\n";
  }

  std::string finish() const {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width)
        << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width)
        << " " << num(height) << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body.str() << "</svg>\n";
    return out.str();
  }
};

}  // namespace

std::string love_plot_svg(const LoveSeries& series) {
  const int n_cov = static_cast<int>(series.covariates.size());
  const int n_schemes = static_cast<int>(series.schemes.size());
  const double left = 150, right = 40, top = 40, row_h = 22;
  const double plot_w = 420;
  const double height = top + n_cov * row_h + 60;
  Canvas svg(left + plot_w + right, height);

  double vmax = series.threshold * 1.5;
  for (int c = 0; c < n_cov; ++c) {
    for (int s = 0; s < n_schemes; ++s) {
      const double v = series.values(c, s);
      if (!std::isnan(v)) vmax = std::max(vmax, v);
    }
  }
  vmax *= 1.05;
  auto xpos = [&](double v) { return left + plot_w * v / vmax; };

  svg.text(left, 20, "Covariate balance (" + series.metric + ")", 13);
  // axis
  svg.line(left, top, left, top + n_cov * row_h, "#888");
  svg.line(left, top + n_cov * row_h, left + plot_w, top + n_cov * row_h, "#888");
  for (double tick = 0.0; tick <= vmax; tick += vmax > 0.5 ? 0.2 : 0.1) {
    svg.line(xpos(tick), top + n_cov * row_h, xpos(tick), top + n_cov * row_h + 4, "#888");
    svg.text(xpos(tick), top + n_cov * row_h + 16, num(tick), 9, "middle");
  }
  // threshold marker
  svg.line(xpos(series.threshold), top - 6, xpos(series.threshold),
           top + n_cov * row_h, "#c00", true);
  svg.text(xpos(series.threshold), top - 10, num(series.threshold), 9, "middle", "#c00");

  for (int c = 0; c < n_cov; ++c) {
    const double y = top + c * row_h + row_h / 2;
    svg.text(left - 6, y + 4, series.covariates[c], 10, "end");
    svg.line(left, y, left + plot_w, y, "#eee");
    for (int s = 0; s < n_schemes; ++s) {
      const double v = series.values(c, s);
      if (std::isnan(v)) continue;
      svg.circle(xpos(std::min(v, vmax)), y, 4,
                 kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))]);
    }
  }
  // legend
  for (int s = 0; s < n_schemes; ++s) {
    const double lx = left + s * 110;
    const double ly = height - 18;
    svg.circle(lx, ly - 4, 4, kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))]);
    svg.text(lx + 8, ly, series.schemes[s], 10);
  }
  return svg.finish();
}

std::string density_plot_svg(const DensitySeries& series) {
  // one panel per propensity column
  std::vector<std::string> panels;
  for (const auto& c : series.curves) {
    if (std::find(panels.begin(), panels.end(), c.ps_column) == panels.end()) {
      panels.push_back(c.ps_column);
    }
  }
  const double panel_w = 300, panel_h = 200, pad = 45;
  const double width = pad + panels.size() * (panel_w + pad);
  const double height = panel_h + 2 * pad + 30;
  Canvas svg(width, height);

  for (size_t p = 0; p < panels.size(); ++p) {
    const double x0 = pad + p * (panel_w + pad);
    const double y0 = pad;
    double dmax = 0.0;
    for (const auto& c : series.curves) {
      if (c.ps_column == panels[p]) dmax = std::max(dmax, c.density.maxCoeff());
    }
    if (dmax <= 0.0) dmax = 1.0;

    svg.text(x0 + panel_w / 2, y0 - 10, "e(" + panels[p] + ")", 12, "middle");
    svg.line(x0, y0 + panel_h, x0 + panel_w, y0 + panel_h, "#888");
    svg.line(x0, y0, x0, y0 + panel_h, "#888");
    for (int t = 0; t <= 4; ++t) {
      const double gx = x0 + panel_w * t / 4.0;
      svg.line(gx, y0 + panel_h, gx, y0 + panel_h + 4, "#888");
      svg.text(gx, y0 + panel_h + 16, num(t / 4.0), 9, "middle");
    }

    int color = 0;
    for (const auto& c : series.curves) {
      if (c.ps_column != panels[p]) continue;
      std::ostringstream pts;
      for (int t = 0; t < c.density.size(); ++t) {
        const double gx = x0 + panel_w * series.grid[t];
        const double gy = y0 + panel_h * (1.0 - c.density[t] / dmax);
        pts << num(gx) << "," << num(gy) << " ";
      }
      svg.polyline(pts.str(), kPalette[(color + 1) % 7]);
      svg.text(x0 + 8, y0 + 14 + color * 13, c.group, 10, "start",
               kPalette[(color + 1) % 7]);
      ++color;
    }
  }
  return svg.finish();
}

std::string histogram_svg(const HistogramSeries& series) {
  const double left = 55, bottom = 45, top = 30, right = 20;
  const double plot_w = 460, plot_h = 240;
  Canvas svg(left + plot_w + right, top + plot_h + bottom);

  int cmax = 1;
  for (const auto& g : series.groups) cmax = std::max(cmax, g.counts.maxCoeff());

  svg.text(left, 18, "Propensity score histogram", 13);
  svg.line(left, top + plot_h, left + plot_w, top + plot_h, "#888");
  svg.line(left, top, left, top + plot_h, "#888");
  const int n_bins = static_cast<int>(series.bin_edges.size()) - 1;
  const double bw = plot_w / n_bins;
  for (size_t g = 0; g < series.groups.size(); ++g) {
    const auto& bars = series.groups[g];
    for (int b = 0; b < n_bins; ++b) {
      const double h = plot_h * bars.counts[b] / static_cast<double>(cmax);
      svg.rect(left + b * bw, top + plot_h - h, bw, h, kPalette[(g + 1) % 7], 0.45);
    }
    svg.rect(left + plot_w - 120, top + 6 + g * 16, 10, 10, kPalette[(g + 1) % 7], 0.45);
    svg.text(left + plot_w - 105, top + 15 + g * 16, bars.group, 10);
  }
  for (int t = 0; t <= 5; ++t) {
    const double gx = left + plot_w * t / 5.0;
    svg.line(gx, top + plot_h, gx, top + plot_h + 4, "#888");
    svg.text(gx, top + plot_h + 16, num(t / 5.0), 9, "middle");
  }
  svg.text(left - 8, top + 10, std::to_string(cmax), 9, "end");
  return svg.finish();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open file for writing: " + path);
  out << content;
}

}  // namespace psw
