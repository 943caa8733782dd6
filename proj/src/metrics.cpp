#include "smid/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "smid/error.hpp"

namespace smid {

namespace {

void check_shapes(const BinaryMatrix& truth, std::span<const double> priors, const BinaryMatrix& estimate,
                  std::span<const double> estimate_weights) {
  if (priors.size() != truth.rows()) throw Error(ErrorCode::DimensionMismatch, "one prior per true event expected");
  if (estimate_weights.size() != estimate.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "one weight per estimated row expected");
  }
  if (estimate.rows() > 0 && truth.cols() != estimate.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "camera counts differ");
  }
}

}  // namespace

MetricsReport reconstruction_error(const BinaryMatrix& truth, std::span<const double> priors, int n_potential,
                                   const BinaryMatrix& estimate, std::span<const double> estimate_weights) {
  check_shapes(truth, priors, estimate, estimate_weights);
  const int m = static_cast<int>(truth.rows());
  if (n_potential < m) throw Error(ErrorCode::BadParameter, "n_potential below the number of events");

  MetricsReport out;
  out.m_hat_eff = static_cast<int>(estimate.rows());
  out.m_hat = out.m_hat_eff;

  double artifact = 0.0;
  for (std::size_t k = 0; k < estimate.rows(); ++k) {
    if (find_row(truth, estimate.row(k)) < 0) artifact += estimate_weights[k];
  }
  double missed = 0.0;
  for (std::size_t i = 0; i < truth.rows(); ++i) {
    if (find_row(estimate, truth.row(i)) < 0) {
      missed += priors[i];
    } else {
      ++out.detected_count;
    }
  }
  if (n_potential == m) {
    out.at_unnormalized = true;
    out.e_r_at = artifact;
  } else {
    out.e_r_at = artifact / static_cast<double>(n_potential - m);
  }
  out.e_r_md = missed / static_cast<double>(m);
  out.e_r = out.e_r_at + out.e_r_md;
  return out;
}

MetricsReport reconstruction_error(const StimulationModel& truth, const IdentificationReport& report) {
  auto out = reconstruction_error(truth.stim, truth.priors, truth.n_potential, report.effective,
                                  report.effective_weights);
  out.m_hat = report.m_hat;
  return out;
}

std::optional<double> kl_divergence(const BinaryMatrix& truth, std::span<const double> priors,
                                    const BinaryMatrix& estimate, std::span<const double> estimate_weights,
                                    KlReading reading) {
  check_shapes(truth, priors, estimate, estimate_weights);
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < truth.rows(); ++i) {
    const int hit = find_row(estimate, truth.row(i));
    double paired = 0.0;
    if (reading == KlReading::Detected) {
      if (hit < 0) continue;
      paired = estimate_weights[static_cast<std::size_t>(hit)];
    } else {
      if (hit >= 0 || i >= estimate.rows()) continue;
      paired = estimate_weights[i];
    }
    ++count;
    if (priors[i] > 0.0) sum += priors[i] * std::log(priors[i] / paired);
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

MetricsReport evaluate(const StimulationModel& truth, const IdentificationReport& report, KlReading reading) {
  auto out = reconstruction_error(truth, report);
  out.d_kl = kl_divergence(truth.stim, truth.priors, report.effective, report.effective_weights, reading);
  return out;
}

PermutationMatch perm_check(const BinaryMatrix& truth, const BinaryMatrix& estimate) {
  PermutationMatch out;
  if (truth.rows() != estimate.rows() || (truth.rows() > 0 && truth.cols() != estimate.cols())) return out;
  std::vector<bool> used(truth.rows(), false);
  for (std::size_t i = 0; i < estimate.rows(); ++i) {
    int hit = -1;
    for (std::size_t j = 0; j < truth.rows() && hit < 0; ++j) {
      if (used[j]) continue;
      if (std::ranges::equal(estimate.row(i), truth.row(j))) hit = static_cast<int>(j);
    }
    if (hit < 0) {
      out.perm.clear();
      return out;
    }
    used[static_cast<std::size_t>(hit)] = true;
    out.perm.push_back(hit);
  }
  out.matched = true;
  return out;
}

double ecdf_at(std::span<const double> samples, double a) {
  if (samples.empty()) throw Error(ErrorCode::EmptySamples, "ECDF of no samples");
  const auto below = std::ranges::count_if(samples, [a](double s) { return s <= a; });
  return static_cast<double>(below) / static_cast<double>(samples.size());
}

std::vector<EcdfPoint> ecdf(std::span<const double> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptySamples, "ECDF of no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::ranges::sort(sorted);
  std::vector<EcdfPoint> out;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    out.push_back({sorted[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

double median(std::span<const double> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptySamples, "median of no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::ranges::sort(sorted);
  const std::size_t mid = sorted.size() / 2;
  return sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
}

}  // namespace smid
