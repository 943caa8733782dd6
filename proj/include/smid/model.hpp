#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smid/binary_matrix.hpp"
#include "smid/error.hpp"

namespace smid {

/// Ground truth of a simulated network: which cameras each active event
/// stimulates, how often events occur and how reliably cameras recognise them.
struct StimulationModel {
  int n_cameras = 0;            // N
  int n_active = 0;             // M
  int n_potential = 0;          // M-bar, total number of recognisable event classes
  BinaryMatrix stim;            // M x N, row m is the stimulation vector of event m
  std::vector<double> priors;   // p(e_m)
  double p_detect = 0.8;
  double p_classify = 0.99;
  double conf_floor = 0.7;      // lowest recognition confidence
  int patience = 1;             // K, iterations a camera waits after a notification

  friend bool operator==(const StimulationModel&, const StimulationModel&) = default;
};

struct ValidationIssue {
  ErrorCode code;
  std::string message;
};

struct ValidationResult {
  std::vector<ValidationIssue> errors;
  /// Non-fatal findings, e.g. cameras no event stimulates.
  std::vector<std::string> warnings;

  bool ok() const noexcept { return errors.empty(); }
  bool has(ErrorCode code) const noexcept;
};

/// Checks every structural invariant of the model. Duplicate rows are
/// reported as DuplicateRows: such a model is not identifiable.
ValidationResult validate(const StimulationModel& model);

/// Throws smid::Error with the first validation error, if any.
void require_valid(const StimulationModel& model);

/// Largest M admitted for N cameras (2^N - 1, saturating).
std::uint64_t max_active_events(int n_cameras);

/// Parameters of a randomly drawn model. Defaults follow the reference setup
/// (20 potential events, p_D = 0.8, p_C = 0.99, c = 0.7, K = 1).
struct ModelParams {
  int n_potential = 20;
  double p_detect = 0.8;
  double p_classify = 0.99;
  double conf_floor = 0.7;
  int patience = 1;
  /// Empty means uniform priors 1/M.
  std::vector<double> priors;
};

/// Draws M distinct non-zero stimulation vectors uniformly without replacement.
StimulationModel random_model(int n_cameras, int n_active, std::uint64_t seed,
                              const ModelParams& params = {});

/// Builds a model around a given stimulation matrix.
StimulationModel make_model(BinaryMatrix stim, const ModelParams& params = {});

/// Zero-based indices of the cameras stimulated by each event.
std::vector<std::vector<int>> stimulation_sets(const StimulationModel& model);

/// Inverse of stimulation_sets.
BinaryMatrix matrix_from_sets(const std::vector<std::vector<int>>& sets, int n_cameras);

/// Stable 64-bit fingerprint of every field of the model.
std::uint64_t fingerprint(const StimulationModel& model);

}  // namespace smid
