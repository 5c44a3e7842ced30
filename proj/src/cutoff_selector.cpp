#include "layercut/cutoff_selector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "layercut/error.hpp"

namespace layercut {

double block_variability(const Eigen::Ref<const Eigen::MatrixXd>& block) {
  if (block.rows() != block.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "block is " + std::to_string(block.rows()) + "x" +
                                              std::to_string(block.cols()));
  }
  const Eigen::Index k = block.rows();
  if (k < 2) {
    throw Error(ErrorCode::BlockTooSmall, "block of size " + std::to_string(k) +
                                              " has no consecutive rows");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i + 1 < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) total += std::abs(block(i, j) - block(i + 1, j));
  return total / (static_cast<double>(k - 1) * static_cast<double>(k));
}

namespace {

void check_square(const Eigen::MatrixXd& z) {
  if (z.rows() != z.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "similarity matrix is " + std::to_string(z.rows()) +
                                              "x" + std::to_string(z.cols()));
  }
}

void check_cutoff(std::size_t L, std::size_t c) {
  if (c < 2 || c + 2 > L) {
    throw Error(ErrorCode::CutoffOutOfRange, "cutoff " + std::to_string(c) +
                                                 " outside [2, L-2] for L=" + std::to_string(L));
  }
}

}  // namespace

BlockPartition partition_blocks(const Eigen::MatrixXd& z, std::size_t c) {
  check_square(z);
  const auto L = static_cast<std::size_t>(z.rows());
  check_cutoff(L, c);
  const auto cc = static_cast<Eigen::Index>(c);
  const auto rest = static_cast<Eigen::Index>(L - c);
  return {z.topLeftCorner(cc, cc), z.bottomRightCorner(rest, rest)};
}

CutoffReport select_cutoff_with(const Eigen::MatrixXd& z, BlockVariabilityFn variability) {
  check_square(z);
  const auto L = static_cast<std::size_t>(z.rows());
  if (L < 5) {
    throw Error(ErrorCode::TooFewLayers, "L=" + std::to_string(L) +
                                             " leaves no cutoff with both blocks of size >= 2");
  }
  if (!z.allFinite()) throw Error(ErrorCode::NonFinite, "similarity matrix has NaN or Inf entries");
  CutoffReport report;
  report.curve.reserve(L - 3);
  for (std::size_t c = 2; c + 2 <= L; ++c) {
    const auto cc = static_cast<Eigen::Index>(c);
    const auto rest = static_cast<Eigen::Index>(L - c);
    BlockScores s;
    s.cutoff = c;
    s.delta_tl = variability(z.topLeftCorner(cc, cc));
    s.delta_br = variability(z.bottomRightCorner(rest, rest));
    s.score = s.delta_tl - s.delta_br;
    report.curve.push_back(s);
  }

  const auto [lo, hi] = std::minmax_element(
      report.curve.begin(), report.curve.end(),
      [](const BlockScores& a, const BlockScores& b) { return a.score < b.score; });
  const double best = hi->score;
  report.degenerate = best - lo->score <= kScoreTolerance;
  report.c_star = 0;
  for (const auto& s : report.curve) {
    if (best - s.score <= kScoreTolerance) {
      if (report.tie_count == 0) report.c_star = s.cutoff;
      ++report.tie_count;
    }
  }
  return report;
}

CutoffReport select_cutoff(const Eigen::MatrixXd& z) {
  return select_cutoff_with(z, &block_variability);
}

}  // namespace layercut
