#include "smid/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/digamma.hpp>

#include "smid/error.hpp"
#include "smid/kernels.hpp"
#include "smid/rng.hpp"

namespace smid {

namespace {

constexpr double kDegenerateMass = 1e-12;
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void check_data(const Matrix& data, int n_components) {
  if (data.rows() == 0 || data.cols() == 0) throw Error(ErrorCode::BadParameter, "empty data");
  if (n_components < 1 || static_cast<std::size_t>(n_components) >= data.rows()) {
    throw Error(ErrorCode::BadParameter, "need 1 <= components < number of samples");
  }
  if (!std::ranges::all_of(data.flat(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::NonFiniteData, "data contains NaN or infinity");
  }
}

std::vector<double> column_mean(const Matrix& data) {
  std::vector<double> mean(data.cols(), 0.0);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto x = data.row(i);
    for (std::size_t d = 0; d < x.size(); ++d) mean[d] += x[d];
  }
  for (double& m : mean) m /= static_cast<double>(data.rows());
  return mean;
}

std::vector<double> column_variance(const Matrix& data, std::span<const double> mean, double floor) {
  std::vector<double> var(data.cols(), 0.0);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto x = data.row(i);
    for (std::size_t d = 0; d < x.size(); ++d) var[d] += (x[d] - mean[d]) * (x[d] - mean[d]);
  }
  for (double& v : var) v = std::max(v / static_cast<double>(data.rows()), floor);
  return var;
}

kernels::DiagScores scores_of(const GaussianMixture& mix) {
  const std::size_t n_comp = mix.n_components();
  const std::size_t dim = mix.dim();
  kernels::DiagScores s{std::vector<double>(n_comp), mix.means, Matrix(n_comp, dim)};
  for (std::size_t k = 0; k < n_comp; ++k) {
    double log_det = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      log_det += std::log(mix.variances(k, d));
      s.precision(k, d) = 1.0 / mix.variances(k, d);
    }
    s.offset[k] = std::log(mix.weights[k]) - 0.5 * (static_cast<double>(dim) * kLog2Pi + log_det);
  }
  return s;
}

Matrix hard_assignment(const Matrix& data, std::span<const std::size_t> seeds) {
  Matrix resp(data.rows(), seeds.size(), 0.0);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto x = data.row(i);
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      auto c = data.row(seeds[k]);
      double dist = 0.0;
      for (std::size_t d = 0; d < x.size(); ++d) dist += (x[d] - c[d]) * (x[d] - c[d]);
      if (dist < best_dist) {
        best_dist = dist;
        best = k;
      }
    }
    resp(i, best) = 1.0;
  }
  return resp;
}

// Maximum-likelihood update with the variance floor. Components with no mass
// are reseeded on a random sample with the global variance; returns whether
// that happened.
bool em_update(const Matrix& data, const kernels::WeightedMoments& mom, std::span<const double> global_var,
               double floor, SplitMix64& rng, GaussianMixture& mix) {
  const std::size_t n_comp = mom.mass.size();
  const std::size_t dim = data.cols();
  const auto n = static_cast<double>(data.rows());
  mix.weights.assign(n_comp, 0.0);
  mix.means = mom.mean;
  mix.variances = Matrix(n_comp, dim);
  bool reseeded = false;
  for (std::size_t k = 0; k < n_comp; ++k) {
    if (mom.mass[k] < kDegenerateMass) {
      reseeded = true;
      const auto pick = static_cast<std::size_t>(uniform01(rng) * n);
      auto x = data.row(std::min(pick, data.rows() - 1));
      for (std::size_t d = 0; d < dim; ++d) {
        mix.means(k, d) = x[d];
        mix.variances(k, d) = global_var[d];
      }
      mix.weights[k] = 1.0 / n;
      continue;
    }
    mix.weights[k] = mom.mass[k] / n;
    for (std::size_t d = 0; d < dim; ++d) mix.variances(k, d) = std::max(mom.spread(k, d), floor);
  }
  const double total = std::accumulate(mix.weights.begin(), mix.weights.end(), 0.0);
  for (double& w : mix.weights) w /= total;
  return reseeded;
}

FitResult em_single(const Matrix& data, int n_components, std::uint64_t seed, const EmOptions& opt,
                    std::span<const double> global_var) {
  SplitMix64 rng(derive_seed(seed, stream_id("em-reseed")));
  const auto seeds = kmeans_pp_seeds(data, n_components, seed);
  Matrix resp = hard_assignment(data, seeds);

  FitResult out;
  em_update(data, kernels::weighted_moments(data, resp), global_var, opt.cov_floor, rng, out.mixture);

  const auto n = static_cast<double>(data.rows());
  FitReport& rep = out.report;
  for (int it = 0; it < opt.max_iter; ++it) {
    const double ll = kernels::responsibilities(data, scores_of(out.mixture), resp) / n;
    if (!std::isfinite(ll)) throw Error(ErrorCode::NonFiniteData, "log-likelihood is not finite");
    rep.trace.push_back(ll);
    rep.iterations = it + 1;
    if (it > 0 && ll - rep.trace[rep.trace.size() - 2] < opt.tol) {
      rep.converged = true;
      break;
    }
    if (it + 1 == opt.max_iter) break;
    if (em_update(data, kernels::weighted_moments(data, resp), global_var, opt.cov_floor, rng, out.mixture)) {
      rep.reinitialized.push_back(it);
    }
  }
  rep.log_likelihood = rep.trace.back();
  rep.n_components = n_components;
  return out;
}

}  // namespace

std::vector<std::size_t> kmeans_pp_seeds(const Matrix& data, int k, std::uint64_t seed) {
  const std::size_t rows = data.rows();
  if (k < 1 || static_cast<std::size_t>(k) > rows) throw Error(ErrorCode::BadParameter, "bad seed count");
  SplitMix64 rng(derive_seed(seed, stream_id("kmeans++")));
  std::vector<std::size_t> chosen;
  chosen.push_back(std::min(rows - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(rows))));
  std::vector<double> dist(rows, std::numeric_limits<double>::infinity());
  std::vector<bool> taken(rows, false);
  taken[chosen[0]] = true;

  while (chosen.size() < static_cast<std::size_t>(k)) {
    auto c = data.row(chosen.back());
    for (std::size_t i = 0; i < rows; ++i) {
      auto x = data.row(i);
      double d2 = 0.0;
      for (std::size_t d = 0; d < x.size(); ++d) d2 += (x[d] - c[d]) * (x[d] - c[d]);
      dist[i] = std::min(dist[i], d2);
    }
    const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    std::size_t next = 0;
    if (total > 0.0) {
      next = sample_categorical(dist, rng);
    } else {
      // Every remaining point coincides with a seed; pick an unused row.
      std::vector<double> free_rows(rows);
      for (std::size_t i = 0; i < rows; ++i) free_rows[i] = taken[i] ? 0.0 : 1.0;
      next = sample_categorical(free_rows, rng);
    }
    taken[next] = true;
    chosen.push_back(next);
  }
  return chosen;
}

FitResult fit_em(const Matrix& data, int n_components, std::uint64_t seed, const EmOptions& options) {
  check_data(data, n_components);
  const auto mean = column_mean(data);
  const auto global_var = column_variance(data, mean, options.cov_floor);
  FitResult best;
  bool have = false;
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    FitResult fit = em_single(data, n_components, derive_seed(seed, static_cast<std::uint64_t>(r)), options, global_var);
    if (!have || fit.report.log_likelihood > best.report.log_likelihood) {
      best = std::move(fit);
      have = true;
    }
  }
  return best;
}

FitResult fit_vb(const Matrix& data, int max_components, std::uint64_t seed, const VbOptions& options) {
  using boost::math::digamma;
  check_data(data, max_components);
  const std::size_t n_comp = static_cast<std::size_t>(max_components);
  const std::size_t dim = data.cols();
  const auto n = static_cast<double>(data.rows());

  const auto m0 = column_mean(data);
  const auto var0 = column_variance(data, m0, options.cov_floor);
  const double alpha0 = options.weight_concentration > 0.0 ? options.weight_concentration
                                                            : 1.0 / static_cast<double>(max_components);
  const double beta0 = options.mean_precision;
  const double a0 = options.precision_shape;
  std::vector<double> b0(dim);
  for (std::size_t d = 0; d < dim; ++d) b0[d] = a0 * var0[d];

  std::vector<double> alpha(n_comp), beta(n_comp), shape(n_comp);
  Matrix centre(n_comp, dim), rate(n_comp, dim);

  auto update = [&](const kernels::WeightedMoments& mom) {
    for (std::size_t k = 0; k < n_comp; ++k) {
      const double nk = mom.mass[k];
      alpha[k] = alpha0 + nk;
      beta[k] = beta0 + nk;
      shape[k] = a0 + 0.5 * nk;
      for (std::size_t d = 0; d < dim; ++d) {
        const double xbar = mom.mean(k, d);
        const double shift = xbar - m0[d];
        centre(k, d) = (beta0 * m0[d] + nk * xbar) / beta[k];
        rate(k, d) = b0[d] + 0.5 * (nk * mom.spread(k, d) + beta0 * nk / (beta0 + nk) * shift * shift);
      }
    }
  };

  auto scores = [&] {
    kernels::DiagScores s{std::vector<double>(n_comp), centre, Matrix(n_comp, dim)};
    const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    const double psi_sum = digamma(alpha_sum);
    for (std::size_t k = 0; k < n_comp; ++k) {
      double log_prec = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        log_prec += digamma(shape[k]) - std::log(rate(k, d));
        s.precision(k, d) = shape[k] / rate(k, d);
      }
      s.offset[k] = digamma(alpha[k]) - psi_sum +
                    0.5 * (log_prec - static_cast<double>(dim) * (kLog2Pi + 1.0 / beta[k]));
    }
    return s;
  };

  const auto seeds = kmeans_pp_seeds(data, max_components, seed);
  Matrix resp = hard_assignment(data, seeds);
  update(kernels::weighted_moments(data, resp));

  FitResult out;
  FitReport& rep = out.report;
  for (int it = 0; it < options.max_iter; ++it) {
    const double ll = kernels::responsibilities(data, scores(), resp) / n;
    if (!std::isfinite(ll)) throw Error(ErrorCode::NonFiniteData, "variational bound is not finite");
    rep.trace.push_back(ll);
    rep.iterations = it + 1;
    if (it > 0 && std::abs(ll - rep.trace[rep.trace.size() - 2]) < options.tol) {
      rep.converged = true;
      break;
    }
    update(kernels::weighted_moments(data, resp));
  }
  rep.log_likelihood = rep.trace.back();

  const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  std::vector<std::size_t> keep;
  std::size_t heaviest = 0;
  for (std::size_t k = 0; k < n_comp; ++k) {
    if (alpha[k] > alpha[heaviest]) heaviest = k;
    if (alpha[k] / alpha_sum >= options.prune_threshold) keep.push_back(k);
  }
  if (keep.empty()) keep.push_back(heaviest);

  GaussianMixture& mix = out.mixture;
  mix.means = Matrix(keep.size(), dim);
  mix.variances = Matrix(keep.size(), dim);
  double kept = 0.0;
  for (std::size_t k : keep) kept += alpha[k];
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const std::size_t k = keep[i];
    mix.weights.push_back(alpha[k] / kept);
    for (std::size_t d = 0; d < dim; ++d) {
      mix.means(i, d) = centre(k, d);
      mix.variances(i, d) = std::max(rate(k, d) / shape[k], options.cov_floor);
    }
  }
  rep.n_components = static_cast<int>(keep.size());
  return out;
}

SelectionResult select_em_components(const Matrix& data, int lo, int hi, std::uint64_t seed,
                                     const SelectionOptions& options) {
  if (lo < 1 || hi < lo) throw Error(ErrorCode::BadParameter, "bad candidate range");
  if (options.folds < 2) throw Error(ErrorCode::BadParameter, "need at least 2 folds");
  const std::size_t rows = data.rows();
  if (rows < static_cast<std::size_t>(options.folds)) throw Error(ErrorCode::BadParameter, "fewer samples than folds");

  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(derive_seed(seed, stream_id("cv-folds")));
  for (std::size_t i = rows; i-- > 1;) {
    std::swap(order[i], order[std::min(i, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1)))]);
  }

  std::vector<Matrix> train(static_cast<std::size_t>(options.folds));
  std::vector<Matrix> held(static_cast<std::size_t>(options.folds));
  for (int f = 0; f < options.folds; ++f) {
    std::vector<std::size_t> in, out;
    for (std::size_t i = 0; i < rows; ++i) {
      (static_cast<int>(i % static_cast<std::size_t>(options.folds)) == f ? out : in).push_back(order[i]);
    }
    train[static_cast<std::size_t>(f)] = data.select_rows(in);
    held[static_cast<std::size_t>(f)] = data.select_rows(out);
  }

  SelectionResult result;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int k = lo; k <= hi; ++k) {
    double total = 0.0;
    bool feasible = true;
    for (int f = 0; f < options.folds && feasible; ++f) {
      const auto& tr = train[static_cast<std::size_t>(f)];
      if (static_cast<std::size_t>(k) >= tr.rows()) {
        feasible = false;
        break;
      }
      const auto fit = fit_em(tr, k, derive_seed(seed, static_cast<std::uint64_t>(k) * 1000 + static_cast<std::uint64_t>(f)),
                              options.em);
      const auto& ho = held[static_cast<std::size_t>(f)];
      total += mean_log_likelihood(fit.mixture, ho) * static_cast<double>(ho.rows());
    }
    const double score = feasible ? total / static_cast<double>(rows) : -std::numeric_limits<double>::infinity();
    result.candidates.push_back(k);
    result.scores.push_back(score);
    if (result.best == 0 || score > best_score) {
      best_score = score;
      result.best = k;
    }
  }
  return result;
}

std::size_t map_assign(const GaussianMixture& mixture, std::span<const double> point) {
  if (point.size() != mixture.dim()) throw Error(ErrorCode::ShapeMismatch, "point dimension differs from mixture");
  if (!std::ranges::all_of(point, [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::NonFiniteData, "point contains NaN or infinity");
  }
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < mixture.n_components(); ++k) {
    const double s = mixture.log_weighted_density(k, point);
    if (s > best_score) {
      best_score = s;
      best = k;
    }
  }
  return best;
}

double mean_log_likelihood(const GaussianMixture& mixture, const Matrix& data) {
  const auto per_row = kernels::row_log_normalizers(data, scores_of(mixture));
  double total = 0.0;
  for (double v : per_row) total += v;
  return total / static_cast<double>(data.rows());
}

double GaussianMixture::log_weighted_density(std::size_t k, std::span<const double> x) const {
  double acc = std::log(weights[k]);
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double var = variances(k, d);
    const double diff = x[d] - means(k, d);
    acc -= 0.5 * (kLog2Pi + std::log(var) + diff * diff / var);
  }
  return acc;
}

double GaussianMixture::log_density(std::span<const double> x) const {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> parts(n_components());
  for (std::size_t k = 0; k < parts.size(); ++k) {
    parts[k] = log_weighted_density(k, x);
    best = std::max(best, parts[k]);
  }
  if (!std::isfinite(best)) return best;
  double sum = 0.0;
  for (double p : parts) sum += std::exp(p - best);
  return best + std::log(sum);
}

void check_mixture(const GaussianMixture& mixture, double cov_floor) {
  const std::size_t k = mixture.n_components();
  if (k == 0 || mixture.means.rows() != k || mixture.variances.rows() != k ||
      mixture.variances.cols() != mixture.means.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "mixture arrays disagree in shape");
  }
  double total = 0.0;
  for (double w : mixture.weights) {
    if (!(w >= 0.0 && w <= 1.0)) throw Error(ErrorCode::BadProbability, "mixture weight outside [0,1]");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::BadProbability, "mixture weights do not sum to 1");
  for (double v : mixture.variances.flat()) {
    if (!(v >= cov_floor) || !std::isfinite(v)) throw Error(ErrorCode::BadParameter, "variance below floor");
  }
}

}  // namespace smid
