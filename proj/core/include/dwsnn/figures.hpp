#pragma once

#include <string>
#include <utility>
#include <vector>

namespace dwsnn {

// Named columnar table behind one plotted figure; the first column is the
// x axis. All columns share one length.
struct FigureTable {
  std::string x_name;
  std::vector<double> x;
  std::vector<std::string> series_names;
  std::vector<std::vector<double>> series;

  void add_series(std::string name, std::vector<double> values);
  std::string to_csv() const;
};

// Pointwise mean and sample standard deviation over runs of equal length.
std::pair<std::vector<double>, std::vector<double>> mean_std_rows(
    const std::vector<std::vector<double>>& runs);

// Minimal line chart: axes, ticks, legend, one polyline per series. The
// output carries no timestamps, so identical tables give identical bytes.
std::string figure_svg(const FigureTable& table, const std::string& title,
                       const std::string& x_label, const std::string& y_label);

}  // namespace dwsnn
