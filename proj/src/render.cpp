#include "layercut/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include "layercut/error.hpp"
#include "layercut/report.hpp"

namespace layercut {

std::pair<double, double> resolve_range(const Eigen::MatrixXd& z, const RenderRange& range) {
  if (z.size() == 0) throw Error(ErrorCode::ShapeMismatch, "empty matrix");
  if (!z.allFinite()) throw Error(ErrorCode::NonFinite, "matrix has NaN or Inf entries");
  if (range.min && range.max && !(*range.min < *range.max)) {
    throw Error(ErrorCode::InvalidConfig, "--min must be below --max");
  }
  const double lo = range.min.value_or(z.minCoeff());
  const double hi = range.max.value_or(z.maxCoeff());
  if (lo > hi) throw Error(ErrorCode::InvalidConfig, "empty display range");
  return {lo, hi};
}

std::uint8_t gray_level(double value, double lo, double hi) {
  if (!(hi > lo)) return 255;
  const double u = std::clamp((value - lo) / (hi - lo), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(u * 255.0));
}

std::vector<std::uint8_t> render_pgm(const Eigen::MatrixXd& z, const RenderRange& range) {
  const auto [lo, hi] = resolve_range(z, range);
  const std::string header =
      "P5\n" + std::to_string(z.cols()) + " " + std::to_string(z.rows()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + static_cast<std::size_t>(z.size()));
  for (Eigen::Index r = 0; r < z.rows(); ++r)
    for (Eigen::Index c = 0; c < z.cols(); ++c) out.push_back(gray_level(z(r, c), lo, hi));
  return out;
}

std::string ramp_color(double u) {
  // Control points sampled from viridis.
  static constexpr std::array<std::array<double, 3>, 9> kStops = {{
      {0.267, 0.005, 0.329},
      {0.283, 0.141, 0.458},
      {0.254, 0.265, 0.530},
      {0.207, 0.372, 0.553},
      {0.164, 0.471, 0.558},
      {0.128, 0.567, 0.551},
      {0.135, 0.659, 0.518},
      {0.478, 0.821, 0.318},
      {0.993, 0.906, 0.144},
  }};
  u = std::clamp(u, 0.0, 1.0);
  const double pos = u * static_cast<double>(kStops.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(pos), kStops.size() - 2);
  const double f = pos - static_cast<double>(i);
  char buf[8];
  int rgb[3];
  for (int ch = 0; ch < 3; ++ch) {
    const double v = kStops[i][ch] + f * (kStops[i + 1][ch] - kStops[i][ch]);
    rgb[ch] = static_cast<int>(std::lround(v * 255.0));
  }
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

namespace {

std::string short_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace

std::string render_svg(const Eigen::MatrixXd& z, const RenderRange& range) {
  const auto [lo, hi] = resolve_range(z, range);
  constexpr int cell = 20;
  constexpr int margin = 48;
  constexpr int bar_gap = 24;
  constexpr int bar_width = 16;
  const int grid_w = static_cast<int>(z.cols()) * cell;
  const int grid_h = static_cast<int>(z.rows()) * cell;
  const int width = margin + grid_w + bar_gap + bar_width + 72;
  const int height = margin + grid_h + 24;
  auto unit = [&](double v) { return hi > lo ? (v - lo) / (hi - lo) : 1.0; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      svg << "<rect x=\"" << margin + c * cell << "\" y=\"" << margin + r * cell << "\" width=\""
          << cell << "\" height=\"" << cell << "\" fill=\"" << ramp_color(unit(z(r, c)))
          << "\"><title>Z[" << r << "][" << c << "] = " << format_real(z(r, c))
          << "</title></rect>\n";
    }
  }
  // Label every layer when there is room, otherwise every fifth.
  const Eigen::Index step = std::max<Eigen::Index>(z.rows(), z.cols()) > 32 ? 5 : 1;
  svg << "<g font-size=\"10\" fill=\"black\">\n";
  for (Eigen::Index c = 0; c < z.cols(); c += step) {
    svg << "<text x=\"" << margin + c * cell + cell / 2 << "\" y=\"" << margin - 6
        << "\" text-anchor=\"middle\">" << c << "</text>\n";
  }
  for (Eigen::Index r = 0; r < z.rows(); r += step) {
    svg << "<text x=\"" << margin - 6 << "\" y=\"" << margin + r * cell + cell / 2 + 4
        << "\" text-anchor=\"end\">" << r << "</text>\n";
  }
  svg << "<text x=\"" << margin + grid_w / 2 << "\" y=\"14\" text-anchor=\"middle\">layer</text>\n";
  svg << "</g>\n";

  const int bar_x = margin + grid_w + bar_gap;
  constexpr int steps = 32;
  for (int s = 0; s < steps; ++s) {
    const double u = 1.0 - (static_cast<double>(s) + 0.5) / steps;
    svg << "<rect x=\"" << bar_x << "\" y=\"" << margin + s * grid_h / steps << "\" width=\""
        << bar_width << "\" height=\"" << grid_h / steps + 1 << "\" fill=\"" << ramp_color(u)
        << "\"/>\n";
  }
  svg << "<g font-size=\"10\" fill=\"black\">\n";
  svg << "<text x=\"" << bar_x + bar_width + 4 << "\" y=\"" << margin + 8 << "\">"
      << short_label(hi) << "</text>\n";
  svg << "<text x=\"" << bar_x + bar_width + 4 << "\" y=\"" << margin + grid_h << "\">"
      << short_label(lo) << "</text>\n";
  svg << "</g>\n</svg>\n";
  return svg.str();
}

}  // namespace layercut
