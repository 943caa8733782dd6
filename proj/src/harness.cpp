#include "smid/harness.hpp"

#include <algorithm>
#include <exception>

#include "smid/error.hpp"
#include "smid/observation.hpp"
#include "smid/rng.hpp"

namespace smid {

MethodConfig method_config(const ExperimentConfig& config, const std::string& method, std::uint64_t seed) {
  MethodConfig mc = method_from_name(method);
  mc.search_lo = 1;
  mc.search_hi = config.n_potential;
  mc.vb_max_components = config.n_potential;
  mc.encoder_widths = config.encoder_widths;
  mc.epochs = config.epochs;
  mc.batch_size = config.batch_size;
  mc.train_fraction = config.train_fraction;
  mc.origin_rule = config.origin_rule;
  mc.seed = derive_seed(seed, stream_id(method));
  return mc;
}

StimulationModel experiment_model(const ExperimentConfig& config, std::uint64_t seed) {
  ModelParams params;
  params.n_potential = config.n_potential;
  params.p_detect = config.p_detect;
  params.p_classify = config.p_classify;
  params.conf_floor = config.conf_floor;
  params.patience = config.patience;
  params.priors = config.priors;
  StimulationModel model = config.stim.empty()
                               ? random_model(config.n_cameras, config.n_active, derive_seed(seed, 0), params)
                               : make_model(binary_from_rows(config.stim), params);
  require_valid(model);
  return model;
}

SingleReport run_single(const ExperimentConfig& config) {
  SingleReport out;
  out.seed = config.seed;
  out.model_seed = derive_seed(config.seed, 0);
  out.data_seed = derive_seed(config.seed, 1);
  out.model = experiment_model(config, config.seed);
  const ObservationDataset data = generate_dataset(out.model, config.n_observations, out.data_seed);
  for (const auto& method : config.methods) {
    MethodOutcome outcome;
    outcome.method = method;
    outcome.report = identify(data, method_config(config, method, config.seed));
    outcome.metrics = evaluate(out.model, outcome.report, config.kl_reading);
    out.outcomes.push_back(std::move(outcome));
  }
  return out;
}

std::uint64_t run_seed(std::uint64_t base_seed, int index) {
  return derive_seed(base_seed, static_cast<std::uint64_t>(index));
}

std::vector<MethodAggregate> aggregate(const std::vector<std::string>& methods,
                                       const std::vector<RunRecord>& records) {
  std::vector<MethodAggregate> out;
  for (std::size_t k = 0; k < methods.size(); ++k) {
    MethodAggregate agg;
    agg.method = methods[k];
    for (const auto& rec : records) {
      const MethodOutcome* hit = nullptr;
      if (rec.result) {
        for (const auto& o : rec.result->outcomes) {
          if (o.method == methods[k]) hit = &o;
        }
      }
      if (hit == nullptr) {
        ++agg.failures;
        continue;
      }
      ++agg.m_hat_histogram[hit->metrics.m_hat];
      ++agg.m_hat_eff_histogram[hit->metrics.m_hat_eff];
      agg.e_r.push_back(hit->metrics.e_r);
      if (hit->metrics.d_kl) agg.d_kl.push_back(*hit->metrics.d_kl);
    }
    out.push_back(std::move(agg));
  }
  return out;
}

McCampaign run_mc(const ExperimentConfig& config, int runs) {
  if (runs < 1) throw Error(ErrorCode::BadParameter, "a campaign needs at least one run");
  McCampaign camp;
  camp.config = config;
  camp.runs = runs;
  camp.records.resize(static_cast<std::size_t>(runs));

#if defined(SMID_HAVE_OPENMP)
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (int r = 0; r < runs; ++r) {
    RunRecord& rec = camp.records[static_cast<std::size_t>(r)];
    rec.index = r;
    rec.seed = run_seed(config.seed, r);
    ExperimentConfig cfg = config;
    cfg.seed = rec.seed;
    try {
      rec.result = run_single(cfg);
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
  }

  camp.aggregates = aggregate(config.methods, camp.records);
  return camp;
}

double fraction_with_count(const MethodAggregate& agg, int m) {
  int total = 0;
  for (const auto& [count, runs] : agg.m_hat_eff_histogram) total += runs;
  if (total == 0) return 0.0;
  const auto it = agg.m_hat_eff_histogram.find(m);
  return it == agg.m_hat_eff_histogram.end() ? 0.0 : static_cast<double>(it->second) / total;
}

}  // namespace smid
