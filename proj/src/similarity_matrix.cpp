#include "layercut/similarity_matrix.hpp"

#include <chrono>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "layercut/error.hpp"
#include "layercut/parallel.hpp"

namespace layercut {

namespace {

// Above this many bytes of cached centered kernels, CKA recomputes kernels
// per pair instead (same arithmetic, same bits).
constexpr double kKernelCacheBytes = 2.0 * 1024 * 1024 * 1024;

template <typename Fn>
auto annotate(const std::string& where, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), where + ": " + e.detail());
  }
}

std::string layer_tag(std::size_t i) { return "layer " + std::to_string(i); }
std::string pair_tag(std::size_t i, std::size_t j) {
  return "layers (" + std::to_string(i) + ", " + std::to_string(j) + ")";
}

}  // namespace

SimilarityMatrix build_similarity_matrix(const ActivationSet& set, const MetricConfig& cfg,
                                         unsigned threads) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate(set.sample_count());
  const std::size_t L = set.layer_count();
  const double n = static_cast<double>(set.sample_count());

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(L * (L - 1) / 2);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = i + 1; j < L; ++j) pairs.emplace_back(i, j);

  std::vector<Eigen::MatrixXd> data(L);
  parallel_for(L, threads, [&](std::size_t l) { data[l] = set.layer(l).to_matrix(); });

  std::vector<double> entries(pairs.size(), 0.0);
  switch (cfg.metric) {
    case Metric::Cka: {
      if (static_cast<double>(L) * n * n * 8.0 <= kKernelCacheBytes) {
        std::vector<prepared::CkaKernel> kernels(L);
        parallel_for(L, threads, [&](std::size_t l) {
          kernels[l] = annotate(layer_tag(l), [&] { return prepared::cka_kernel(data[l]); });
        });
        parallel_for(pairs.size(), threads, [&](std::size_t p) {
          const auto [i, j] = pairs[p];
          entries[p] = prepared::cka(kernels[i], kernels[j]);
        });
      } else {
        parallel_for(pairs.size(), threads, [&](std::size_t p) {
          const auto [i, j] = pairs[p];
          entries[p] = annotate(pair_tag(i, j), [&] { return cka(data[i], data[j]); });
        });
      }
      break;
    }
    case Metric::Jaccard: {
      std::vector<prepared::Neighborhoods> hoods(L);
      parallel_for(L, threads, [&](std::size_t l) {
        hoods[l] = annotate(layer_tag(l), [&] { return prepared::neighborhoods(data[l], cfg.k); });
      });
      parallel_for(pairs.size(), threads, [&](std::size_t p) {
        const auto [i, j] = pairs[p];
        entries[p] = prepared::jaccard(hoods[i], hoods[j]);
      });
      break;
    }
    case Metric::Svcca: {
      std::vector<prepared::SvccaBasis> bases(L);
      parallel_for(L, threads, [&](std::size_t l) {
        bases[l] = annotate(layer_tag(l), [&] { return prepared::svcca_basis(data[l], cfg.t, cfg.eps); });
      });
      parallel_for(pairs.size(), threads, [&](std::size_t p) {
        const auto [i, j] = pairs[p];
        entries[p] = annotate(pair_tag(i, j), [&] {
          return prepared::svcca(bases[i], bases[j], cfg.correlation_clamp);
        });
      });
      break;
    }
  }

  SimilarityMatrix out;
  out.metric = cfg;
  out.values = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(L));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto i = static_cast<Eigen::Index>(pairs[p].first);
    const auto j = static_cast<Eigen::Index>(pairs[p].second);
    out.values(i, j) = entries[p];
    out.values(j, i) = entries[p];
  }
  out.build_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

MatrixStatistics matrix_statistics(const Eigen::MatrixXd& z) {
  MatrixStatistics s;
  const Eigen::Index L = z.rows();
  if (L < 2) return s;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  double total = 0.0;
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < L; ++i) {
    for (Eigen::Index j = i + 1; j < L; ++j) {
      const double v = z(i, j);
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
      total += v;
      ++count;
    }
  }
  s.mean = total / static_cast<double>(count);
  s.range = s.max - s.min;
  return s;
}

}  // namespace layercut
