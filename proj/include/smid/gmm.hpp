#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "smid/gaussian_mixture.hpp"
#include "smid/matrix.hpp"

namespace smid {

struct EmOptions {
  double tol = 1e-6;  // on the per-sample mean log-likelihood gain
  int max_iter = 200;
  int restarts = 5;
  double cov_floor = 1e-6;
};

struct VbOptions {
  double tol = 1e-6;
  int max_iter = 200;
  /// Components whose posterior weight falls below this are dropped.
  double prune_threshold = 1e-2;
  /// Dirichlet concentration; non-positive means 1 / max_components.
  double weight_concentration = 0.0;
  /// Normal-Gamma prior: the mean prior counts as `mean_precision`
  /// observations and the precision prior as 2 * `precision_shape`.
  double mean_precision = 1.0;
  double precision_shape = 0.5;
  double cov_floor = 1e-6;
};

struct FitReport {
  double log_likelihood = 0.0;     // final per-sample mean
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;       // per-sample mean log-likelihood per iteration
  std::vector<int> reinitialized;  // iterations after which a component was reseeded
  int n_components = 0;
};

struct FitResult {
  GaussianMixture mixture;
  FitReport report;
};

/// Maximum-likelihood diagonal GMM by EM with k-means++ seeding. Runs
/// `options.restarts` independent starts and keeps the best likelihood.
/// A component whose responsibility mass drops below 1e-12 is reseeded on the
/// worst-explained point and the event is recorded in the report.
FitResult fit_em(const Matrix& data, int n_components, std::uint64_t seed, const EmOptions& options = {});

/// Variational-Bayes diagonal GMM (Dirichlet weights, Normal-Gamma
/// components centred on the data moments). Returns the posterior-mean
/// mixture after pruning low-weight components; the trace holds the per-sample
/// mean log normalizer of the variational E-step.
FitResult fit_vb(const Matrix& data, int max_components, std::uint64_t seed, const VbOptions& options = {});

struct SelectionOptions {
  int folds = 5;
  EmOptions em;
};

struct SelectionResult {
  int best = 0;
  std::vector<int> candidates;
  std::vector<double> scores;  // mean held-out log-likelihood per sample
};

/// k-fold cross-validated choice of the EM component count in [lo, hi].
/// Ties go to the smaller count.
SelectionResult select_em_components(const Matrix& data, int lo, int hi, std::uint64_t seed,
                                     const SelectionOptions& options = {});

/// MAP component of `point`; ties go to the lowest index.
std::size_t map_assign(const GaussianMixture& mixture, std::span<const double> point);

/// Per-sample mean log-likelihood of `data` under `mixture`.
double mean_log_likelihood(const GaussianMixture& mixture, const Matrix& data);

/// k-means++ seeding: indices of `k` rows of `data`.
std::vector<std::size_t> kmeans_pp_seeds(const Matrix& data, int k, std::uint64_t seed);

}  // namespace smid
