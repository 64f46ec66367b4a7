#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "spenc/count_matrix.hpp"
#include "spenc/errors.hpp"
#include "spenc/parallel.hpp"
#include "spenc/rng.hpp"

namespace spenc {

// Ground truth recorded by the synthetic generators for later checks.
// structured_items is empty for the pure-noise regime; true_decoder is
// K_true x I with zero columns on noise items.
struct SyntheticTruth {
  std::vector<long> structured_items;
  Eigen::MatrixXd true_decoder;
  Eigen::MatrixXd true_representations;
  double noise_rate = 1.0;
};

struct SyntheticData {
  CountMatrix counts;
  SyntheticTruth truth;
};

// Rate curve of the nonlinear regime: z exp(-z) + z^2, zero at z = 0.
inline double nonlinear_bend(double z) {
  return z * std::exp(-z) + z * z;
}

namespace detail {

constexpr long kTrueFactors = 10;

inline std::vector<long> every_third(long n_items) {
  std::vector<long> out;
  for (long i = 2; i < n_items; i += 3) out.push_back(i);
  return out;
}

// Shared driver for the structured regimes. Each row draws its own RNG
// stream from (seed, row): first the K_true representation magnitudes, then
// one count per item in ascending column order, so generation is
// reproducible under row-parallel execution.
template <typename RateFn>
SyntheticData gen_structured(long n_rows, long n_cols, std::uint64_t seed,
                             RateFn&& rate_of) {
  if (n_cols < 3) {
    throw ValidationError("structured generators require at least 3 columns");
  }
  const auto structured = every_third(n_cols);
  std::vector<char> is_structured(static_cast<std::size_t>(n_cols), 0);
  for (long i : structured) is_structured[static_cast<std::size_t>(i)] = 1;

  // Decoder entries |N(0, 1/(2 K_true))| over structured columns, drawn from
  // a dedicated stream in (k, item) order.
  Eigen::MatrixXd decoder = Eigen::MatrixXd::Zero(kTrueFactors, n_cols);
  {
    CounterRng rng(seed, streams::sim_truth());
    const double sd = std::sqrt(1.0 / (2.0 * static_cast<double>(kTrueFactors)));
    for (long k = 0; k < kTrueFactors; ++k) {
      for (long i : structured) decoder(k, i) = rng.half_normal(sd);
    }
  }

  SyntheticData out{CountMatrix(n_rows, n_cols),
                    {structured, decoder,
                     Eigen::MatrixXd(n_rows, kTrueFactors), 1.0}};
  std::vector<std::vector<CountMatrix::Item>> row_items(
      static_cast<std::size_t>(n_rows));
  for_blocks(n_rows, 1024, [&](long, long begin, long end) {
    for (long r = begin; r < end; ++r) {
      CounterRng rng(seed, streams::sim_row(r));
      Eigen::VectorXd theta(kTrueFactors);
      for (long k = 0; k < kTrueFactors; ++k) theta[k] = rng.half_normal(1.0);
      out.truth.true_representations.row(r) = theta.transpose();
      auto& items = row_items[static_cast<std::size_t>(r)];
      for (long i = 0; i < n_cols; ++i) {
        double rate = 1.0;
        if (is_structured[static_cast<std::size_t>(i)]) {
          rate = rate_of(theta.dot(decoder.col(i)));
        }
        const long y = rng.poisson(rate);
        if (y > 0) items.push_back({i, y});
      }
    }
  });
  for (long r = 0; r < n_rows; ++r) {
    for (const auto& item : row_items[static_cast<std::size_t>(r)]) {
      out.counts.add(r, item.col, item.count);
    }
  }
  out.counts.compress();
  return out;
}

}  // namespace detail

// I.i.d. Poisson(rate) counts; no structure.
inline SyntheticData gen_poisson_noise(long n_rows, long n_cols, double rate,
                                       std::uint64_t seed) {
  if (rate <= 0.0) throw ValidationError("noise rate must be positive");
  SyntheticData out{CountMatrix(n_rows, n_cols),
                    {{}, Eigen::MatrixXd(), Eigen::MatrixXd(), rate}};
  std::vector<std::vector<CountMatrix::Item>> row_items(
      static_cast<std::size_t>(n_rows));
  for_blocks(n_rows, 1024, [&](long, long begin, long end) {
    for (long r = begin; r < end; ++r) {
      CounterRng rng(seed, streams::sim_row(r));
      auto& items = row_items[static_cast<std::size_t>(r)];
      for (long i = 0; i < n_cols; ++i) {
        const long y = rng.poisson(rate);
        if (y > 0) items.push_back({i, y});
      }
    }
  });
  for (long r = 0; r < n_rows; ++r) {
    for (const auto& item : row_items[static_cast<std::size_t>(r)]) {
      out.counts.add(r, item.col, item.count);
    }
  }
  out.counts.compress();
  return out;
}

// Every third column follows a dense bilinear rate sum_k theta_uk beta_ki;
// the rest are Poisson(1) noise.
inline SyntheticData gen_linear_factor(long n_rows, long n_cols,
                                       std::uint64_t seed) {
  return detail::gen_structured(n_rows, n_cols, seed,
                                [](double m) { return m; });
}

// Structured columns use nonlinear_bend(z) with z = m / 2.
inline SyntheticData gen_nonlinear_factor(long n_rows, long n_cols,
                                          std::uint64_t seed) {
  return detail::gen_structured(n_rows, n_cols, seed, [](double m) {
    return nonlinear_bend(0.5 * m);
  });
}

}  // namespace spenc
