#include "layercut/similarity_metrics.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "layercut/error.hpp"

namespace layercut {

std::string_view to_string(Metric metric) noexcept {
  switch (metric) {
    case Metric::Cka: return "cka";
    case Metric::Jaccard: return "jaccard";
    case Metric::Svcca: return "svcca";
  }
  return "unknown";
}

std::optional<Metric> parse_metric(std::string_view name) noexcept {
  if (name == "cka") return Metric::Cka;
  if (name == "jaccard") return Metric::Jaccard;
  if (name == "svcca") return Metric::Svcca;
  return std::nullopt;
}

void MetricConfig::validate(std::optional<std::size_t> samples) const {
  if (!(t > 0.0 && t <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "SVCCA threshold t must lie in (0, 1], got " +
                                              std::to_string(t));
  }
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw Error(ErrorCode::InvalidConfig, "eps must be finite and non-negative");
  }
  if (metric == Metric::Jaccard) {
    if (k < 1) throw Error(ErrorCode::InvalidConfig, "k must be at least 1");
    if (samples && k >= *samples) {
      throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " needs k < N=" +
                                            std::to_string(*samples));
    }
  }
}

Eigen::MatrixXd center_columns(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x;
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double mean = x.col(c).sum() / n;
    out.col(c).array() -= mean;
  }
  return out;
}

namespace {

void check_input(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) {
    throw Error(ErrorCode::ShapeMismatch, "representation needs at least 2 samples, got " +
                                              std::to_string(x.rows()));
  }
  if (x.cols() < 1) throw Error(ErrorCode::ShapeMismatch, "representation has no features");
  if (!x.allFinite()) throw Error(ErrorCode::NonFinite, "representation has NaN or Inf entries");
}

void check_pair(Eigen::Index rows_a, Eigen::Index rows_b) {
  if (rows_a != rows_b) {
    throw Error(ErrorCode::ShapeMismatch, "sample counts differ: " + std::to_string(rows_a) +
                                              " vs " + std::to_string(rows_b));
  }
}

// Every column constant, i.e. all rows equal. Checked on the raw data since
// centering in floating point can leave residue on a constant column.
bool all_rows_identical(const Eigen::MatrixXd& x) {
  for (Eigen::Index r = 1; r < x.rows(); ++r) {
    if (x.row(r) != x.row(0)) return false;
  }
  return true;
}

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

namespace prepared {

CkaKernel cka_kernel(const Eigen::MatrixXd& x) {
  check_input(x);
  if (all_rows_identical(x)) {
    throw Error(ErrorCode::DegenerateRepresentation, "representation is constant across samples");
  }
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd xc = center_columns(x);
  Eigen::MatrixXd gram = xc * xc.transpose();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) gram(i, j) = gram(j, i);

  // H S H: subtract row and column means, add back the grand mean.
  Eigen::VectorXd row_mean(n);
  for (Eigen::Index i = 0; i < n; ++i) row_mean(i) = gram.col(i).sum() / static_cast<double>(n);
  const double grand = row_mean.sum() / static_cast<double>(n);
  CkaKernel out;
  out.centered_gram.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double v = gram(i, j) - (row_mean(i) + row_mean(j)) + grand;
      out.centered_gram(i, j) = v;
      out.centered_gram(j, i) = v;
    }
  }
  const double scale = static_cast<double>(n - 1) * static_cast<double>(n - 1);
  out.self_hsic = out.centered_gram.squaredNorm() / scale;
  if (!(out.self_hsic > 0.0)) {
    throw Error(ErrorCode::DegenerateRepresentation, "HSIC(S, S) is zero");
  }
  return out;
}

double cka(const CkaKernel& a, const CkaKernel& b) {
  check_pair(a.centered_gram.rows(), b.centered_gram.rows());
  const double n = static_cast<double>(a.centered_gram.rows());
  // tr(S H S' H) = sum_ij (HSH)_ij (HS'H)_ij because H is idempotent and
  // both centered kernels are symmetric.
  const double cross =
      (a.centered_gram.array() * b.centered_gram.array()).sum() / ((n - 1.0) * (n - 1.0));
  return clamp_unit(cross / std::sqrt(a.self_hsic * b.self_hsic));
}

Neighborhoods neighborhoods(const Eigen::MatrixXd& x, std::size_t k) {
  check_input(x);
  const std::size_t n = static_cast<std::size_t>(x.rows());
  const std::size_t d = static_cast<std::size_t>(x.cols());
  if (k < 1) throw Error(ErrorCode::InvalidConfig, "k must be at least 1");
  if (k >= n) {
    throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " needs k < N=" +
                                          std::to_string(n));
  }
  // Row-major copy so the dot loops walk contiguous memory.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = x;
  std::vector<double> norm(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t f = 0; f < d; ++f) s += rows(i, f) * rows(i, f);
    norm[i] = std::sqrt(s);
    if (norm[i] == 0.0) {
      throw Error(ErrorCode::ZeroNormRow, "sample " + std::to_string(i) + " has an all-zero row");
    }
  }
  std::vector<double> cosine(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t f = 0; f < d; ++f) s += rows(i, f) * rows(j, f);
      const double c = s / (norm[i] * norm[j]);
      cosine[i * n + j] = c;
      cosine[j * n + i] = c;
    }
  }

  Neighborhoods out;
  out.k = k;
  out.members.resize(n);
  std::vector<std::uint32_t> order;
  order.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    order.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) order.push_back(static_cast<std::uint32_t>(j));
    const double* sim = &cosine[i * n];
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     order.end(), [sim](std::uint32_t p, std::uint32_t q) {
                       if (sim[p] != sim[q]) return sim[p] > sim[q];
                       return p < q;
                     });
    out.members[i].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(out.members[i].begin(), out.members[i].end());
  }
  return out;
}

double jaccard(const Neighborhoods& a, const Neighborhoods& b) {
  check_pair(static_cast<Eigen::Index>(a.members.size()),
             static_cast<Eigen::Index>(b.members.size()));
  if (a.k != b.k) throw Error(ErrorCode::InvalidConfig, "neighborhood sizes differ");
  // Tally intersection sizes so the mean does not depend on sample order.
  std::vector<std::size_t> tally(a.k + 1, 0);
  for (std::size_t i = 0; i < a.members.size(); ++i) {
    const auto& p = a.members[i];
    const auto& q = b.members[i];
    std::size_t common = 0;
    for (std::size_t u = 0, v = 0; u < p.size() && v < q.size();) {
      if (p[u] == q[v]) {
        ++common, ++u, ++v;
      } else if (p[u] < q[v]) {
        ++u;
      } else {
        ++v;
      }
    }
    ++tally[common];
  }
  // Double-double accumulation so the mean rounds like the exact rational.
  double hi = 0.0, lo = 0.0;
  for (std::size_t m = 1; m <= a.k; ++m) {
    if (tally[m] == 0) continue;
    const double num = static_cast<double>(tally[m] * m);
    const double den = static_cast<double>(2 * a.k - m);
    const double q = num / den;
    const double q_lo = std::fma(-q, den, num) / den;
    const double sum = hi + q;
    const double bv = sum - hi;
    lo += (hi - (sum - bv)) + (q - bv) + q_lo;
    hi = sum;
  }
  const double n = static_cast<double>(a.members.size());
  const double q = hi / n;
  const double r = std::fma(-q, n, hi) + lo;
  return clamp_unit(q + r / n);
}

std::size_t svcca_truncation(const Eigen::VectorXd& singular_values, std::size_t rows,
                             std::size_t cols, double t) {
  if (singular_values.size() == 0 || !(singular_values(0) > 0.0)) return 0;
  const double tol = singular_values(0) * static_cast<double>(std::max(rows, cols)) *
                     std::numeric_limits<double>::epsilon();
  std::size_t rank = 0;
  while (rank < static_cast<std::size_t>(singular_values.size()) &&
         singular_values(static_cast<Eigen::Index>(rank)) > tol)
    ++rank;
  double total = 0.0;
  for (std::size_t i = 0; i < rank; ++i) {
    const double s = singular_values(static_cast<Eigen::Index>(i));
    total += s * s;
  }
  double cumulative = 0.0;
  for (std::size_t i = 0; i < rank; ++i) {
    const double s = singular_values(static_cast<Eigen::Index>(i));
    cumulative += s * s;
    if (cumulative / total >= t) return i + 1;
  }
  return rank;
}

SvccaBasis svcca_basis(const Eigen::MatrixXd& x, double t, double eps) {
  check_input(x);
  if (!(t > 0.0 && t <= 1.0)) throw Error(ErrorCode::InvalidConfig, "t must lie in (0, 1]");
  if (all_rows_identical(x)) {
    throw Error(ErrorCode::DegenerateRepresentation, "representation is constant across samples");
  }
  const Eigen::MatrixXd xc = center_columns(x);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(xc, Eigen::ComputeThinU);
  SvccaBasis out;
  out.singular_values = svd.singularValues();
  out.retained = svcca_truncation(out.singular_values, static_cast<std::size_t>(x.rows()),
                                  static_cast<std::size_t>(x.cols()), t);
  if (out.retained == 0) {
    throw Error(ErrorCode::DegenerateRepresentation, "rank 0 after centering");
  }
  const auto r = static_cast<Eigen::Index>(out.retained);
  const Eigen::VectorXd sigma = out.singular_values.head(r);
  const Eigen::MatrixXd denoised = svd.matrixU().leftCols(r) * sigma.asDiagonal();
  const Eigen::VectorXd inverse = sigma.unaryExpr([eps](double s) { return 1.0 / std::max(s, eps); });
  out.whitened = denoised * inverse.asDiagonal();
  return out;
}

double svcca(const SvccaBasis& a, const SvccaBasis& b, bool correlation_clamp) {
  check_pair(a.whitened.rows(), b.whitened.rows());
  // Identical bases have every canonical correlation equal to 1; skip the SVD round-off.
  if (a.whitened.cols() > 0 && a.whitened.cols() == b.whitened.cols() &&
      a.whitened == b.whitened) {
    return 1.0;
  }
  const Eigen::MatrixXd cross = a.whitened.transpose() * b.whitened;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross);
  const Eigen::VectorXd rho = svd.singularValues();
  const Eigen::Index count = std::min(cross.rows(), cross.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < count; ++i) total += correlation_clamp ? clamp_unit(rho(i)) : rho(i);
  return clamp_unit(total / static_cast<double>(count));
}

}  // namespace prepared

double cka(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  check_pair(a.rows(), b.rows());
  return prepared::cka(prepared::cka_kernel(a), prepared::cka_kernel(b));
}

double cka(const LayerActivations& a, const LayerActivations& b) {
  return cka(a.to_matrix(), b.to_matrix());
}

double jaccard_knn(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::size_t k) {
  check_pair(a.rows(), b.rows());
  return prepared::jaccard(prepared::neighborhoods(a, k), prepared::neighborhoods(b, k));
}

double jaccard_knn(const LayerActivations& a, const LayerActivations& b, std::size_t k) {
  return jaccard_knn(a.to_matrix(), b.to_matrix(), k);
}

double svcca(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double t, double eps,
             bool correlation_clamp) {
  check_pair(a.rows(), b.rows());
  return prepared::svcca(prepared::svcca_basis(a, t, eps), prepared::svcca_basis(b, t, eps),
                         correlation_clamp);
}

double svcca(const LayerActivations& a, const LayerActivations& b, double t, double eps,
             bool correlation_clamp) {
  return svcca(a.to_matrix(), b.to_matrix(), t, eps, correlation_clamp);
}

double similarity(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const MetricConfig& cfg) {
  cfg.validate(static_cast<std::size_t>(a.rows()));
  switch (cfg.metric) {
    case Metric::Cka: return cka(a, b);
    case Metric::Jaccard: return jaccard_knn(a, b, cfg.k);
    case Metric::Svcca: return svcca(a, b, cfg.t, cfg.eps, cfg.correlation_clamp);
  }
  return 0.0;
}

}  // namespace layercut
