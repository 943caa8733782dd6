#include "smid/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace smid::kernels {

namespace {

std::size_t chunk_count(std::size_t rows) { return (rows + kChunkRows - 1) / kChunkRows; }

// Scores one row into `logits` and returns its log-sum-exp.
double score_row(std::span<const double> x, const DiagScores& s, std::span<double> logits) {
  const std::size_t n_comp = s.offset.size();
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n_comp; ++k) {
    auto mu = s.centre.row(k);
    auto prec = s.precision.row(k);
    double quad = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double diff = x[d] - mu[d];
      quad += prec[d] * diff * diff;
    }
    logits[k] = s.offset[k] - 0.5 * quad;
    best = std::max(best, logits[k]);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < n_comp; ++k) sum += std::exp(logits[k] - best);
  return best + std::log(sum);
}

void normalize_row(std::span<double> logits, double lse) {
  for (double& v : logits) v = std::exp(v - lse);
}

void ensure_shape(Matrix& m, std::size_t rows, std::size_t cols) {
  if (m.rows() != rows || m.cols() != cols) m = Matrix(rows, cols);
}

void add_chunk_sums(const Matrix& data, const Matrix& resp, std::size_t begin, std::size_t end,
                    std::span<double> mass, std::span<double> sum) {
  const std::size_t dim = data.cols();
  for (std::size_t i = begin; i < end; ++i) {
    auto x = data.row(i);
    auto r = resp.row(i);
    for (std::size_t k = 0; k < r.size(); ++k) {
      mass[k] += r[k];
      for (std::size_t d = 0; d < dim; ++d) sum[k * dim + d] += r[k] * x[d];
    }
  }
}

void add_chunk_spread(const Matrix& data, const Matrix& resp, const Matrix& mean, std::size_t begin,
                      std::size_t end, std::span<double> spread) {
  const std::size_t dim = data.cols();
  for (std::size_t i = begin; i < end; ++i) {
    auto x = data.row(i);
    auto r = resp.row(i);
    for (std::size_t k = 0; k < r.size(); ++k) {
      auto mu = mean.row(k);
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = x[d] - mu[d];
        spread[k * dim + d] += r[k] * diff * diff;
      }
    }
  }
}

void finish_means(WeightedMoments& out, std::span<const double> sum) {
  const std::size_t dim = out.mean.cols();
  for (std::size_t k = 0; k < out.mass.size(); ++k) {
    for (std::size_t d = 0; d < dim; ++d) {
      out.mean(k, d) = out.mass[k] > 0.0 ? sum[k * dim + d] / out.mass[k] : 0.0;
    }
  }
}

void finish_spread(WeightedMoments& out, std::span<const double> acc) {
  const std::size_t dim = out.mean.cols();
  for (std::size_t k = 0; k < out.mass.size(); ++k) {
    for (std::size_t d = 0; d < dim; ++d) {
      out.spread(k, d) = out.mass[k] > 0.0 ? acc[k * dim + d] / out.mass[k] : 0.0;
    }
  }
}

}  // namespace

double responsibilities(const Matrix& data, const DiagScores& scores, Matrix& resp) {
  const std::size_t rows = data.rows();
  ensure_shape(resp, rows, scores.offset.size());
  const std::size_t chunks = chunk_count(rows);
  std::vector<double> partial(chunks, 0.0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kChunkRows;
    const std::size_t end = std::min(rows, begin + kChunkRows);
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double lse = score_row(data.row(i), scores, resp.row(i));
      normalize_row(resp.row(i), lse);
      acc += lse;
    }
    partial[static_cast<std::size_t>(c)] = acc;
  }

  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double responsibilities_serial(const Matrix& data, const DiagScores& scores, Matrix& resp) {
  const std::size_t rows = data.rows();
  ensure_shape(resp, rows, scores.offset.size());
  double total = 0.0;
  for (std::size_t begin = 0; begin < rows; begin += kChunkRows) {
    double acc = 0.0;
    for (std::size_t i = begin; i < std::min(rows, begin + kChunkRows); ++i) {
      const double lse = score_row(data.row(i), scores, resp.row(i));
      normalize_row(resp.row(i), lse);
      acc += lse;
    }
    total += acc;
  }
  return total;
}

std::vector<double> row_log_normalizers(const Matrix& data, const DiagScores& scores) {
  std::vector<double> out(data.rows());
  const auto rows = static_cast<std::ptrdiff_t>(data.rows());
#pragma omp parallel
  {
    std::vector<double> logits(scores.offset.size());
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
      out[static_cast<std::size_t>(i)] = score_row(data.row(static_cast<std::size_t>(i)), scores, logits);
    }
  }
  return out;
}

WeightedMoments weighted_moments(const Matrix& data, const Matrix& resp) {
  const std::size_t rows = data.rows();
  const std::size_t dim = data.cols();
  const std::size_t n_comp = resp.cols();
  const std::size_t chunks = chunk_count(rows);
  const std::size_t block = n_comp * dim;

  std::vector<double> mass_parts(chunks * n_comp, 0.0);
  std::vector<double> sum_parts(chunks * block, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const auto cu = static_cast<std::size_t>(c);
    const std::size_t begin = cu * kChunkRows;
    add_chunk_sums(data, resp, begin, std::min(rows, begin + kChunkRows),
                   std::span(mass_parts).subspan(cu * n_comp, n_comp),
                   std::span(sum_parts).subspan(cu * block, block));
  }

  WeightedMoments out{std::vector<double>(n_comp, 0.0), Matrix(n_comp, dim), Matrix(n_comp, dim)};
  std::vector<double> sum(block, 0.0);
  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t k = 0; k < n_comp; ++k) out.mass[k] += mass_parts[c * n_comp + k];
    for (std::size_t j = 0; j < block; ++j) sum[j] += sum_parts[c * block + j];
  }
  finish_means(out, sum);

  std::vector<double> spread_parts(chunks * block, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const auto cu = static_cast<std::size_t>(c);
    const std::size_t begin = cu * kChunkRows;
    add_chunk_spread(data, resp, out.mean, begin, std::min(rows, begin + kChunkRows),
                     std::span(spread_parts).subspan(cu * block, block));
  }
  std::vector<double> spread(block, 0.0);
  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t j = 0; j < block; ++j) spread[j] += spread_parts[c * block + j];
  }
  finish_spread(out, spread);
  return out;
}

WeightedMoments weighted_moments_serial(const Matrix& data, const Matrix& resp) {
  const std::size_t rows = data.rows();
  const std::size_t dim = data.cols();
  const std::size_t n_comp = resp.cols();
  const std::size_t block = n_comp * dim;
  WeightedMoments out{std::vector<double>(n_comp, 0.0), Matrix(n_comp, dim), Matrix(n_comp, dim)};
  std::vector<double> sum(block, 0.0), mass_part(n_comp), sum_part(block);
  for (std::size_t begin = 0; begin < rows; begin += kChunkRows) {
    std::ranges::fill(mass_part, 0.0);
    std::ranges::fill(sum_part, 0.0);
    add_chunk_sums(data, resp, begin, std::min(rows, begin + kChunkRows), mass_part, sum_part);
    for (std::size_t k = 0; k < n_comp; ++k) out.mass[k] += mass_part[k];
    for (std::size_t j = 0; j < block; ++j) sum[j] += sum_part[j];
  }
  finish_means(out, sum);

  std::vector<double> spread(block, 0.0);
  for (std::size_t begin = 0; begin < rows; begin += kChunkRows) {
    std::ranges::fill(sum_part, 0.0);
    add_chunk_spread(data, resp, out.mean, begin, std::min(rows, begin + kChunkRows), sum_part);
    for (std::size_t j = 0; j < block; ++j) spread[j] += sum_part[j];
  }
  finish_spread(out, spread);
  return out;
}

}  // namespace smid::kernels
