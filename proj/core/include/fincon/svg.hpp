#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fincon/date.hpp"

namespace fincon {

struct ShadedSpan {
  std::string label;
  YearMonth start;
  YearMonth end;
};

/// Crisis shading used on index plots.
std::vector<ShadedSpan> default_crisis_spans();

struct BandPlot {
  std::string title;
  std::string y_label;
  std::vector<YearMonth> dates;
  std::vector<double> median, lower, upper;
  std::vector<ShadedSpan> spans;
};

/// Median line over a shaded credible band, with grey spans behind.
void write_band_plot(const BandPlot& plot, std::ostream& out);

/// Grey-scale matrix plot with rows and columns reordered by `order`;
/// `boundaries` lists positions (in the reordered matrix) where separator
/// lines are drawn.
void write_heatmap(const std::string& title, const Eigen::MatrixXd& values, std::span<const std::string> labels,
                   std::span<const int> order, std::span<const int> boundaries, std::ostream& out);

}  // namespace fincon
