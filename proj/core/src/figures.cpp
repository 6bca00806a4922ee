#include "dwsnn/figures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dwsnn/error.hpp"

namespace dwsnn {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

void FigureTable::add_series(std::string name, std::vector<double> values) {
  if (values.size() != x.size())
    throw Error(ErrorClass::Shape, "figure series length mismatch");
  series_names.push_back(std::move(name));
  series.push_back(std::move(values));
}

std::string FigureTable::to_csv() const {
  std::ostringstream out;
  out << x_name;
  for (const auto& name : series_names) out << ',' << name;
  out << '\n';
  for (std::size_t r = 0; r < x.size(); ++r) {
    out << fmt("%.10g", x[r]);
    for (const auto& col : series) out << ',' << fmt("%.10g", col[r]);
    out << '\n';
  }
  return out.str();
}

std::pair<std::vector<double>, std::vector<double>> mean_std_rows(
    const std::vector<std::vector<double>>& runs) {
  if (runs.empty()) throw Error(ErrorClass::Shape, "no runs to aggregate");
  const std::size_t n = runs[0].size();
  for (const auto& r : runs)
    if (r.size() != n)
      throw Error(ErrorClass::Shape, "aggregated runs differ in length");
  std::vector<double> mean(n, 0.0), sd(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& r : runs) s += r[i];
    mean[i] = s / static_cast<double>(runs.size());
    if (runs.size() >= 2) {
      double ss = 0.0;
      for (const auto& r : runs) ss += (r[i] - mean[i]) * (r[i] - mean[i]);
      sd[i] = std::sqrt(ss / static_cast<double>(runs.size() - 1));
    }
  }
  return {std::move(mean), std::move(sd)};
}

std::string figure_svg(const FigureTable& table, const std::string& title,
                       const std::string& x_label, const std::string& y_label) {
  const double width = 640.0, height = 420.0;
  const double ml = 64.0, mr = 160.0, mt = 40.0, mb = 48.0;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  if (!table.x.empty()) {
    x_lo = *std::min_element(table.x.begin(), table.x.end());
    x_hi = *std::max_element(table.x.begin(), table.x.end());
  }
  bool have_y = false;
  for (const auto& col : table.series)
    for (double v : col) {
      if (!have_y) {
        y_lo = y_hi = v;
        have_y = true;
      } else {
        y_lo = std::min(y_lo, v);
        y_hi = std::max(y_hi, v);
      }
    }
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;
  if (y_hi <= y_lo) y_hi = y_lo + 1.0;
  const double y_pad = 0.05 * (y_hi - y_lo);
  y_lo -= y_pad;
  y_hi += y_pad;

  auto sx = [&](double v) { return ml + (v - x_lo) / (x_hi - x_lo) * pw; };
  auto sy = [&](double v) { return mt + ph - (v - y_lo) / (y_hi - y_lo) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << ml + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";

  // axes
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw
      << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n";

  for (int i = 0; i <= 5; ++i) {
    const double xv = x_lo + (x_hi - x_lo) * i / 5.0;
    const double yv = y_lo + (y_hi - y_lo) * i / 5.0;
    svg << "<line x1=\"" << fmt("%.2f", sx(xv)) << "\" y1=\"" << mt + ph
        << "\" x2=\"" << fmt("%.2f", sx(xv)) << "\" y2=\"" << mt + ph + 5
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt("%.2f", sx(xv)) << "\" y=\"" << mt + ph + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << fmt("%.3g", xv) << "</text>\n";
    svg << "<line x1=\"" << ml - 5 << "\" y1=\"" << fmt("%.2f", sy(yv))
        << "\" x2=\"" << ml << "\" y2=\"" << fmt("%.2f", sy(yv))
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << ml - 9 << "\" y=\"" << fmt("%.2f", sy(yv) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << fmt("%.3g", yv) << "</text>\n";
  }

  svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"13\">" << x_label << "</text>\n";
  svg << "<text x=\"18\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 18 " << mt + ph / 2 << ")\">" << y_label
      << "</text>\n";

  for (std::size_t s = 0; s < table.series.size(); ++s) {
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < table.x.size(); ++i) {
      if (i) svg << ' ';
      svg << fmt("%.2f", sx(table.x[i])) << ','
          << fmt("%.2f", sy(table.series[s][i]));
    }
    svg << "\"/>\n";
    const double ly = mt + 16.0 + 18.0 * static_cast<double>(s);
    svg << "<line x1=\"" << ml + pw + 12 << "\" y1=\"" << ly << "\" x2=\""
        << ml + pw + 34 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n";
    svg << "<text x=\"" << ml + pw + 40 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << table.series_names[s] << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace dwsnn
