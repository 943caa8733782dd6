#pragma once

#include <cstddef>
#include <vector>

#include "smid/matrix.hpp"

// Data-parallel inner loops of the mixture learners. Each kernel has an
// OpenMP version and a plain serial reference. The parallel versions split the
// rows into fixed-size chunks and fold the per-chunk partials in chunk order,
// so their result does not depend on the thread count.
namespace smid::kernels {

inline constexpr std::size_t kChunkRows = 256;

/// Per-component scoring rule shared by EM and VB:
///   log rho(n, k) = offset[k] - 0.5 * sum_d precision(k, d) * (x(n, d) - centre(k, d))^2
struct DiagScores {
  std::vector<double> offset;  // K
  Matrix centre;               // K x d
  Matrix precision;            // K x d
};

/// Writes normalized responsibilities into `resp` (n x K, resized as needed)
/// and returns sum_n log sum_k rho(n, k).
double responsibilities(const Matrix& data, const DiagScores& scores, Matrix& resp);
double responsibilities_serial(const Matrix& data, const DiagScores& scores, Matrix& resp);

/// Per-row log sum_k rho(n, k), no responsibilities kept.
std::vector<double> row_log_normalizers(const Matrix& data, const DiagScores& scores);

/// Responsibility-weighted moments of the data.
struct WeightedMoments {
  std::vector<double> mass;  // N_k = sum_n r(n, k)
  Matrix mean;               // K x d, weighted mean (0 where mass is 0)
  Matrix spread;             // K x d, weighted mean squared deviation from `mean`
};

WeightedMoments weighted_moments(const Matrix& data, const Matrix& resp);
WeightedMoments weighted_moments_serial(const Matrix& data, const Matrix& resp);

}  // namespace smid::kernels
