#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "smid/matrix.hpp"

namespace smid {

/// Mixture of axis-aligned Gaussians.
struct GaussianMixture {
  std::vector<double> weights;  // K
  Matrix means;                 // K x d
  Matrix variances;             // K x d, diagonal covariances

  std::size_t n_components() const noexcept { return weights.size(); }
  std::size_t dim() const noexcept { return means.cols(); }

  /// log(pi_k) + log N(x; mu_k, diag(var_k)).
  double log_weighted_density(std::size_t k, std::span<const double> x) const;

  /// log p(x) of the whole mixture.
  double log_density(std::span<const double> x) const;

  friend bool operator==(const GaussianMixture&, const GaussianMixture&) = default;
};

/// Throws if shapes disagree, weights do not sum to 1 within 1e-9 or a
/// variance is below `cov_floor`.
void check_mixture(const GaussianMixture& mixture, double cov_floor = 0.0);

}  // namespace smid
