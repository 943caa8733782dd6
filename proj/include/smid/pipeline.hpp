#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smid/autoencoder.hpp"
#include "smid/binary_matrix.hpp"
#include "smid/gmm.hpp"
#include "smid/observation.hpp"

namespace smid {

enum class Learner { Em, Vb };
enum class Reducer { None, Autoencoder, OvercompleteDnn };

/// What to do with a centroid that rounds to the origin.
enum class OriginRule {
  PromoteArgmax,  // set its largest coordinate to 1
  Drop,           // discard the component and renormalise the weights
};

struct MethodConfig {
  Learner learner = Learner::Em;
  Reducer reducer = Reducer::None;
  int search_lo = 1;  // EM component search range
  int search_hi = 20;
  int vb_max_components = 20;
  EmOptions em;
  SelectionOptions selection;
  VbOptions vb;
  std::vector<int> encoder_widths{12, 8, 4, 2};
  int epochs = 15;
  int batch_size = 30;
  double rho = 0.95;
  double epsilon = 1e-6;
  double train_fraction = 0.8;
  OriginRule origin_rule = OriginRule::PromoteArgmax;
  std::uint64_t seed = 0;
};

/// "gmm", "vgmm", "gmm-ae", "vgmm-ae", "gmm-dnn", "vgmm-dnn".
std::string method_name(Learner learner, Reducer reducer);
std::string method_name(const MethodConfig& config);

/// Sets learner and reducer of `base` from a method name.
MethodConfig method_from_name(std::string_view name, MethodConfig base = {});

const std::vector<std::string>& all_method_names();

struct Provenance {
  std::string method;
  std::uint64_t master_seed = 0;
  std::uint64_t split_seed = 0;
  std::uint64_t reducer_seed = 0;
  std::uint64_t mixture_seed = 0;
  double reducer_ms = 0.0;  // wall-clock timings, not part of the replay contract
  double mixture_ms = 0.0;
  double total_ms = 0.0;
};

struct IdentificationReport {
  BinaryMatrix raw;                    // M-hat x N rounded centroids
  std::vector<double> raw_weights;     // mixture weights, unchanged by the decoder
  BinaryMatrix effective;              // distinct rows of `raw`
  std::vector<double> effective_weights;
  std::vector<int> effective_index;    // raw row -> effective row
  Matrix centroids;                    // decoded centroids in the unit hypercube
  int m_hat = 0;
  int m_hat_eff = 0;
  std::vector<int> selection_candidates;
  std::vector<double> selection_scores;
  FitReport fit;
  std::vector<double> reducer_loss;
  Provenance provenance;
};

/// Entrywise rounding at 0.5 (ties to 1). An all-zero result has its largest
/// coordinate (lowest index on ties) promoted to 1.
std::vector<std::uint8_t> round_vertex(std::span<const double> centroid);

/// Entrywise rounding at 0.5 without the origin rule.
std::vector<std::uint8_t> threshold_vertex(std::span<const double> centroid);

struct EffectiveMatrix {
  BinaryMatrix rows;
  std::vector<double> weights;
  std::vector<int> index_of_raw;
};

/// Removes duplicate rows (first occurrence order) and sums the weights of
/// all raw rows landing on the same vertex.
EffectiveMatrix effective_matrix(const BinaryMatrix& raw, std::span<const double> weights);

/// Decoded centroids -> raw and effective estimates, following `rule`.
IdentificationReport assemble_report(const Matrix& centroids, std::span<const double> weights, OriginRule rule);

struct TrainTestSplit {
  Matrix train;
  Matrix test;
};

/// Seeded shuffle, then the first floor(fraction * D) rows train. Throws
/// EmptyTestSplit when no row is left for testing.
TrainTestSplit train_test_split(const Matrix& values, double train_fraction, std::uint64_t seed);

/// Runs one identification method end to end on `dataset`.
IdentificationReport identify(const ObservationDataset& dataset, const MethodConfig& config);

}  // namespace smid
