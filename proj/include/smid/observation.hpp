#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "smid/gaussian_mixture.hpp"
#include "smid/matrix.hpp"
#include "smid/model.hpp"
#include "smid/rng.hpp"

namespace smid {

/// One network observation: a confidence per camera, 0 when the camera
/// never identified the event.
struct Observation {
  std::vector<double> values;
  std::optional<int> true_event;  // zero-based
};

/// D observations of one model, stored row-wise.
struct ObservationDataset {
  Matrix values;                 // D x N
  std::vector<int> events;       // ground-truth event per row, empty when unknown
  std::uint64_t model_fingerprint = 0;
  std::uint64_t seed = 0;
  double conf_floor = 0.0;

  std::size_t size() const noexcept { return values.rows(); }
  std::size_t dim() const noexcept { return values.cols(); }
  bool has_labels() const noexcept { return !events.empty(); }
  Observation observation(std::size_t d) const;
};

/// Probability that camera n identifies event m in one iteration:
/// p_D * (t_mn * p_C + (1 - p_C) / (M-bar - 1) * sum_{m' != m} p(e_m') t_m'n).
double ident_prob(const StimulationModel& model, int event, int camera);

/// alpha(m, n) = (1 - ident_prob(m, n))^K: probability camera n stays silent
/// for event m over the whole patience window.
struct AlphaTable {
  Matrix alpha;  // M x N
};

AlphaTable alpha_table(const StimulationModel& model);

/// Simulates one observation of event `event`. Every camera makes up to K
/// identification attempts; a camera that succeeds reports a confidence drawn
/// from U(c, 1). When no camera succeeds the observation is all-zero.
/// Throws NoStimulatedCamera if no camera can ever identify the event.
Observation generate_observation(const StimulationModel& model, int event, SplitMix64& rng);

/// Draws D events from the priors and simulates one observation each.
/// Observation d uses its own stream derived from (seed, d), so the result
/// does not depend on the number of worker threads.
ObservationDataset generate_dataset(const StimulationModel& model, std::size_t count, std::uint64_t seed);

/// Single-threaded reference for generate_dataset; produces identical output.
ObservationDataset generate_dataset_serial(const StimulationModel& model, std::size_t count,
                                           std::uint64_t seed);

/// Mixed likelihood of one camera reading: a point mass at 0 and a density
/// on [c, 1].
struct CameraLikelihood {
  double zero_mass = 0.0;
  double density = 0.0;
};

CameraLikelihood single_camera_likelihood(const StimulationModel& model, int event, int camera, double x);

/// Analytical 2^N-component mixture describing the observation distribution.
/// Component j sits on the vertex whose bit (N-1-n) is q_n, i.e. camera 0 is
/// the most significant bit, so for N = 2 the order is 00, 01, 10, 11.
/// Coordinates with q_n = 0 get variance `cov_floor` instead of 0.
GaussianMixture theoretical_mixture(const StimulationModel& model, double cov_floor = 1e-6);

/// Index (in theoretical_mixture order) of the vertex given by the non-zero
/// pattern of an observation.
std::size_t vertex_index(std::span<const double> values);

}  // namespace smid
