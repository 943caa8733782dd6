#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smid/metrics.hpp"
#include "smid/model.hpp"
#include "smid/pipeline.hpp"

namespace smid {

struct ExperimentConfig {
  int n_cameras = 15;
  int n_active = 3;
  int n_potential = 20;
  std::size_t n_observations = 10000;
  double p_detect = 0.8;
  double p_classify = 0.99;
  double conf_floor = 0.7;
  int patience = 1;
  std::vector<double> priors;              // empty: uniform
  std::vector<std::vector<int>> stim;      // empty: random matrix per run
  std::vector<std::string> methods{"gmm", "vgmm", "gmm-ae", "vgmm-ae", "gmm-dnn", "vgmm-dnn"};
  std::vector<int> encoder_widths{12, 8, 4, 2};
  int epochs = 15;
  int batch_size = 30;
  double train_fraction = 0.8;
  OriginRule origin_rule = OriginRule::PromoteArgmax;
  KlReading kl_reading = KlReading::Detected;
  std::uint64_t seed = 0;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Per-method configuration derived from an experiment: search ranges from
/// n_potential, network settings, and a seed tied to the method name.
MethodConfig method_config(const ExperimentConfig& config, const std::string& method, std::uint64_t seed);

/// The model an experiment with `seed` runs on: the configured matrix when
/// given, otherwise a random one.
StimulationModel experiment_model(const ExperimentConfig& config, std::uint64_t seed);

struct MethodOutcome {
  std::string method;
  IdentificationReport report;
  MetricsReport metrics;
};

struct SingleReport {
  std::uint64_t seed = 0;
  std::uint64_t model_seed = 0;
  std::uint64_t data_seed = 0;
  StimulationModel model;
  std::vector<MethodOutcome> outcomes;
};

/// Builds the model, simulates the dataset and runs every configured method.
SingleReport run_single(const ExperimentConfig& config);

struct RunRecord {
  int index = 0;
  std::uint64_t seed = 0;
  std::optional<SingleReport> result;
  std::string error;  // set when the run failed
};

struct MethodAggregate {
  std::string method;
  std::map<int, int> m_hat_histogram;
  std::map<int, int> m_hat_eff_histogram;
  std::vector<double> e_r;   // one per successful run, in run order
  std::vector<double> d_kl;  // defined values only
  int failures = 0;
};

struct McCampaign {
  ExperimentConfig config;
  int runs = 0;
  std::vector<RunRecord> records;
  std::vector<MethodAggregate> aggregates;  // in config.methods order
};

/// Seed of run `index` in a campaign started from `base_seed`.
std::uint64_t run_seed(std::uint64_t base_seed, int index);

/// R independent runs, each with its own random model and dataset. Runs are
/// spread over threads; a failing run is recorded and the rest continue.
McCampaign run_mc(const ExperimentConfig& config, int runs);

/// Histograms and metric samples folded from the records in run order.
std::vector<MethodAggregate> aggregate(const std::vector<std::string>& methods, const std::vector<RunRecord>& records);

/// Fraction of successful runs of `agg` whose effective count equals `m`.
double fraction_with_count(const MethodAggregate& agg, int m);

}  // namespace smid
