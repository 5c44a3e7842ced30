#include "layercut/sensitivity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "layercut/cutoff_selector.hpp"
#include "layercut/error.hpp"
#include "layercut/parallel.hpp"
#include "layercut/rng.hpp"
#include "layercut/similarity_matrix.hpp"

namespace layercut {

std::vector<std::size_t> subsample_rows(std::size_t source_samples, std::size_t n,
                                        std::uint64_t seed, std::size_t repeat) {
  if (n > source_samples) {
    throw Error(ErrorCode::SizeExceedsN, "subsample size " + std::to_string(n) +
                                             " exceeds N=" + std::to_string(source_samples));
  }
  CounterRng rng(seed, stream_id(n, repeat));
  std::vector<std::size_t> pool(source_samples);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  // Partial Fisher-Yates: the first n slots end up a uniform n-subset.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(source_samples - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);
  std::sort(pool.begin(), pool.end());
  return pool;
}

namespace {

struct RepeatResult {
  std::size_t cutoff = 0;
  Eigen::MatrixXd z;
  double seconds = 0.0;
};

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Two-pass sample variance, shifted by the first value so identical inputs
// give exactly zero.
double sample_variance(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x - v.front();
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - v.front() - m) * (x - v.front() - m);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

SensitivityReport run_sensitivity(const ActivationSet& set, const SensitivitySpec& spec) {
  const std::size_t L = set.layer_count();
  const std::size_t N = set.sample_count();
  if (spec.sizes.empty()) throw Error(ErrorCode::InvalidSpec, "no subsample sizes given");
  if (spec.repeats < 2) {
    throw Error(ErrorCode::InvalidSpec, "repeats must be at least 2 for a standard deviation");
  }
  if (L < 5) throw Error(ErrorCode::TooFewLayers, "L=" + std::to_string(L) + " is below 5");
  for (std::size_t n : spec.sizes) {
    if (n < 2) throw Error(ErrorCode::InvalidSpec, "subsample size must be at least 2");
    if (n > N) {
      throw Error(ErrorCode::SizeExceedsN, "subsample size " + std::to_string(n) +
                                               " exceeds N=" + std::to_string(N));
    }
    spec.metric.validate(n);
  }

  SensitivityReport report;
  report.layers = L;
  report.source_samples = N;
  report.repeats = spec.repeats;
  report.seed = spec.seed;
  report.metric = spec.metric;

  for (std::size_t n : spec.sizes) {
    std::vector<RepeatResult> results(spec.repeats);
    parallel_for(spec.repeats, spec.threads, [&](std::size_t r) {
      const auto rows = subsample_rows(N, n, spec.seed, r);
      const auto sub = set.select_rows(rows);
      const auto start = std::chrono::steady_clock::now();
      auto z = build_similarity_matrix(sub, spec.metric, 1);
      const auto cut = select_cutoff(z);
      results[r].seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      results[r].cutoff = cut.c_star;
      results[r].z = std::move(z.values);
    });

    SensitivityRecord rec;
    rec.n = n;
    std::vector<double> cutoffs, seconds;
    for (const auto& r : results) {
      rec.cutoffs.push_back(r.cutoff);
      cutoffs.push_back(static_cast<double>(r.cutoff));
      seconds.push_back(r.seconds);
    }
    rec.cutoff_mean = mean_of(cutoffs);
    rec.cutoff_std = std::sqrt(sample_variance(cutoffs));
    rec.wall_seconds_mean = mean_of(seconds);

    double variance_total = 0.0;
    std::size_t positions = 0;
    std::vector<double> column(spec.repeats);
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = i + 1; j < L; ++j) {
        for (std::size_t r = 0; r < spec.repeats; ++r)
          column[r] = results[r].z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        variance_total += sample_variance(column);
        ++positions;
      }
    }
    rec.matrix_variance = variance_total / static_cast<double>(positions);
    report.records.push_back(std::move(rec));
  }
  return report;
}

}  // namespace layercut
