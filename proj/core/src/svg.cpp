#include "fincon/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "fincon/error.hpp"

namespace fincon {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
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

}  // namespace

std::vector<ShadedSpan> default_crisis_spans() {
  return {{"GFC", YearMonth(2008, 9), YearMonth(2009, 6)}, {"ESDC", YearMonth(2010, 4), YearMonth(2012, 7)}};
}

void write_band_plot(const BandPlot& p, std::ostream& out) {
  const std::size_t n = p.dates.size();
  if (p.median.size() != n || p.lower.size() != n || p.upper.size() != n) {
    throw ValidationError("write_band_plot: series lengths differ");
  }
  constexpr double kWidth = 720, kHeight = 360, kLeft = 60, kRight = 20, kTop = 40, kBottom = 40;
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  double lo = 0.0, hi = 100.0;
  if (n > 0) {
    lo = *std::min_element(p.lower.begin(), p.lower.end());
    hi = *std::max_element(p.upper.begin(), p.upper.end());
    if (hi - lo < 1e-9) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  const int t0 = n > 0 ? p.dates.front().ordinal() : 0;
  const int t1 = n > 1 ? p.dates.back().ordinal() : t0 + 1;
  auto xpos = [&](int ord) { return kLeft + pw * (ord - t0) / static_cast<double>(t1 - t0); };
  auto ypos = [&](double v) { return kTop + ph * (hi - v) / (hi - lo); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << escape(p.title) << "</text>\n";
  for (const auto& s : p.spans) {
    const int a = std::max(s.start.ordinal(), t0);
    const int b = std::min(s.end.ordinal(), t1);
    if (b < a) continue;
    out << "<rect x=\"" << num(xpos(a)) << "\" y=\"" << num(kTop) << "\" width=\"" << num(xpos(b) - xpos(a))
        << "\" height=\"" << num(ph) << "\" fill=\"#d9d9d9\"><title>" << escape(s.label) << "</title></rect>\n";
  }
  if (n > 0) {
    out << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.6\" points=\"";
    for (std::size_t t = 0; t < n; ++t) out << num(xpos(p.dates[t].ordinal())) << ',' << num(ypos(p.upper[t])) << ' ';
    for (std::size_t t = n; t-- > 0;) out << num(xpos(p.dates[t].ordinal())) << ',' << num(ypos(p.lower[t])) << ' ';
    out << "\"/>\n<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\" points=\"";
    for (std::size_t t = 0; t < n; ++t) out << num(xpos(p.dates[t].ordinal())) << ',' << num(ypos(p.median[t])) << ' ';
    out << "\"/>\n";
  }
  out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(kLeft + pw) << "\" y2=\""
      << num(kTop + ph) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft) << "\" y2=\""
      << num(kTop + ph) << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(ypos(v) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << num(v) << "</text>\n";
  }
  if (n > 0) {
    for (int year = p.dates.front().year(); year <= p.dates.back().year(); ++year) {
      const int ord = YearMonth(year, 1).ordinal();
      if (ord < t0 || ord > t1) continue;
      out << "<text x=\"" << num(xpos(ord)) << "\" y=\"" << num(kTop + ph + 16)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << year << "</text>\n";
    }
  }
  out << "<text x=\"14\" y=\"" << num(kTop + ph / 2) << "\" transform=\"rotate(-90 14 " << num(kTop + ph / 2)
      << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << escape(p.y_label) << "</text>\n";
  out << "</svg>\n";
}

void write_heatmap(const std::string& title, const Eigen::MatrixXd& values, std::span<const std::string> labels,
                   std::span<const int> order, std::span<const int> boundaries, std::ostream& out) {
  const auto n = values.rows();
  if (values.cols() != n || static_cast<Eigen::Index>(labels.size()) != n || static_cast<Eigen::Index>(order.size()) != n) {
    throw ValidationError("write_heatmap: matrix, labels and order must agree in size");
  }
  constexpr double kCell = 32, kMargin = 50, kTop = 60;
  const double size = kCell * static_cast<double>(n);
  const double vmax = n > 0 ? std::max(values.maxCoeff(), 1e-300) : 1.0;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(size + 2 * kMargin) << "\" height=\""
      << num(size + kTop + kMargin) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num((size + 2 * kMargin) / 2)
      << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" << escape(title) << "</text>\n";
  for (Eigen::Index r = 0; r < n; ++r) {
    const int i = order[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < n; ++c) {
      const int j = order[static_cast<std::size_t>(c)];
      const double shade = std::clamp(values(i, j) / vmax, 0.0, 1.0);
      const int g = static_cast<int>(std::lround(255.0 * (1.0 - shade)));
      out << "<rect x=\"" << num(kMargin + kCell * c) << "\" y=\"" << num(kTop + kCell * r) << "\" width=\"" << num(kCell)
          << "\" height=\"" << num(kCell) << "\" fill=\"rgb(" << g << ',' << g << ',' << g << ")\"><title>"
          << escape(labels[static_cast<std::size_t>(i)]) << " from " << escape(labels[static_cast<std::size_t>(j)])
          << ": " << num(values(i, j)) << "</title></rect>\n";
    }
    out << "<text x=\"" << num(kMargin - 6) << "\" y=\"" << num(kTop + kCell * r + kCell / 2 + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << escape(labels[static_cast<std::size_t>(i)])
        << "</text>\n";
    out << "<text x=\"" << num(kMargin + kCell * r + kCell / 2) << "\" y=\"" << num(kTop - 6)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << escape(labels[static_cast<std::size_t>(i)]) << "</text>\n";
  }
  for (int b : boundaries) {
    const double pos = kCell * b;
    out << "<line x1=\"" << num(kMargin + pos) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kMargin + pos) << "\" y2=\""
        << num(kTop + size) << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    out << "<line x1=\"" << num(kMargin) << "\" y1=\"" << num(kTop + pos) << "\" x2=\"" << num(kMargin + size) << "\" y2=\""
        << num(kTop + pos) << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace fincon
