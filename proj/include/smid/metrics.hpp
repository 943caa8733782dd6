#pragma once

#include <optional>
#include <span>
#include <vector>

#include "smid/binary_matrix.hpp"
#include "smid/model.hpp"
#include "smid/pipeline.hpp"

namespace smid {

/// Which events the KL sum runs over.
enum class KlReading {
  Detected,  // events whose row was recovered, paired by vertex
  Formula,   // events whose row was missed, paired by row position
};

struct MetricsReport {
  double e_r = 0.0;
  double e_r_at = 0.0;  // artifact vertices
  double e_r_md = 0.0;  // missed active vertices
  bool at_unnormalized = false;  // set when M-bar == M
  std::optional<double> d_kl;
  int m_hat = 0;
  int m_hat_eff = 0;
  int detected_count = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Artifact and missed-detection terms. The artifact term is divided by
/// (n_potential - M) unless that is zero, in which case it is left as a plain
/// sum and `at_unnormalized` is set.
MetricsReport reconstruction_error(const BinaryMatrix& truth, std::span<const double> priors, int n_potential,
                                   const BinaryMatrix& estimate, std::span<const double> estimate_weights);
MetricsReport reconstruction_error(const StimulationModel& truth, const IdentificationReport& report);

/// Mean of pi_m log(pi_m / pi-hat) over the selected events; nullopt when
/// there are none. Terms may be negative.
std::optional<double> kl_divergence(const BinaryMatrix& truth, std::span<const double> priors,
                                    const BinaryMatrix& estimate, std::span<const double> estimate_weights,
                                    KlReading reading = KlReading::Detected);

/// e_r, D_KL and counts in one report.
MetricsReport evaluate(const StimulationModel& truth, const IdentificationReport& report,
                       KlReading reading = KlReading::Detected);

struct PermutationMatch {
  bool matched = false;
  /// estimate row i equals truth row perm[i]
  std::vector<int> perm;
};

/// True when `estimate` is a row permutation of `truth`.
PermutationMatch perm_check(const BinaryMatrix& truth, const BinaryMatrix& estimate);

struct EcdfPoint {
  double threshold = 0.0;
  double fraction = 0.0;
};

/// Fraction of samples <= a. Throws EmptySamples.
double ecdf_at(std::span<const double> samples, double a);

/// Step points of the empirical CDF at each distinct sample value, ascending.
std::vector<EcdfPoint> ecdf(std::span<const double> samples);

/// Middle value (mean of the two middle values for even counts). Throws EmptySamples.
double median(std::span<const double> samples);

}  // namespace smid
