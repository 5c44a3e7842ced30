#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace layercut {

struct RenderRange {
  std::optional<double> min;
  std::optional<double> max;
};

/// Resolved [lo, hi] mapping range: explicit bounds where given, observed
/// min/max otherwise. Throws InvalidConfig when explicit min >= max.
std::pair<double, double> resolve_range(const Eigen::MatrixXd& z, const RenderRange& range);

/// 8-bit gray level of a value: linear map of [lo, hi] to 0..255 (rounded,
/// clamped). A degenerate range (lo == hi) maps everything to 255.
std::uint8_t gray_level(double value, double lo, double hi);

/// Binary PGM (P5), one pixel per cell, row 0 at the top.
std::vector<std::uint8_t> render_pgm(const Eigen::MatrixXd& z, const RenderRange& range = {});

/// SVG heatmap: one rect per cell colored on a viridis-like ramp, with
/// layer-index axis labels and a color bar.
std::string render_svg(const Eigen::MatrixXd& z, const RenderRange& range = {});

/// Viridis-like ramp sample for u in [0, 1], as "#rrggbb".
std::string ramp_color(double u);

}  // namespace layercut
