#include "smid/observation.hpp"

#include <algorithm>
#include <cmath>

#include "smid/error.hpp"

namespace smid {

namespace {

void check_indices(const StimulationModel& model, int event, int camera) {
  if (event < 0 || event >= model.n_active || camera < 0 || camera >= model.n_cameras) {
    throw Error(ErrorCode::IndexOutOfRange, "event or camera index out of range");
  }
}

Matrix ident_table(const StimulationModel& model) {
  Matrix table(static_cast<std::size_t>(model.n_active), static_cast<std::size_t>(model.n_cameras));
  for (int m = 0; m < model.n_active; ++m) {
    for (int n = 0; n < model.n_cameras; ++n) {
      table(static_cast<std::size_t>(m), static_cast<std::size_t>(n)) = ident_prob(model, m, n);
    }
  }
  return table;
}

void simulate_into(const StimulationModel& model, std::span<const double> ident, SplitMix64& rng,
                   std::span<double> out) {
  const double floor = model.conf_floor;
  // Cameras are exchangeable in the output, so whichever succeeding camera
  // raised the notification first does not change the observation.
  for (std::size_t n = 0; n < out.size(); ++n) {
    bool identified = false;
    for (int k = 0; k < model.patience && !identified; ++k) {
      identified = uniform01(rng) < ident[n];
    }
    out[n] = identified ? floor + (1.0 - floor) * uniform01(rng) : 0.0;
  }
}

ObservationDataset make_dataset(const StimulationModel& model, std::size_t count, std::uint64_t seed,
                                bool parallel) {
  require_valid(model);
  if (count < 1) throw Error(ErrorCode::BadParameter, "dataset size must be at least 1");

  const Matrix ident = ident_table(model);
  for (std::size_t m = 0; m < ident.rows(); ++m) {
    auto row = ident.row(m);
    if (std::ranges::all_of(row, [](double p) { return p <= 0.0; })) {
      throw Error(ErrorCode::NoStimulatedCamera, "event " + std::to_string(m) + " cannot be identified");
    }
  }

  ObservationDataset ds;
  ds.values = Matrix(count, static_cast<std::size_t>(model.n_cameras));
  ds.events.assign(count, 0);
  ds.model_fingerprint = fingerprint(model);
  ds.seed = seed;
  ds.conf_floor = model.conf_floor;

  const auto n = static_cast<std::ptrdiff_t>(count);
  auto body = [&](std::ptrdiff_t d) {
    const auto row = static_cast<std::size_t>(d);
    SplitMix64 rng(derive_seed(seed, row));
    const auto event = sample_categorical(model.priors, rng);
    ds.events[row] = static_cast<int>(event);
    simulate_into(model, ident.row(event), rng, ds.values.row(row));
  };
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t d = 0; d < n; ++d) body(d);
  } else {
    for (std::ptrdiff_t d = 0; d < n; ++d) body(d);
  }
  return ds;
}

}  // namespace

Observation ObservationDataset::observation(std::size_t d) const {
  auto row = values.row(d);
  Observation obs{{row.begin(), row.end()}, std::nullopt};
  if (has_labels()) obs.true_event = events[d];
  return obs;
}

double ident_prob(const StimulationModel& model, int event, int camera) {
  check_indices(model, event, camera);
  const auto n = static_cast<std::size_t>(camera);
  const double own = model.stim(static_cast<std::size_t>(event), n) ? model.p_classify : 0.0;
  double others = 0.0;
  if (model.n_potential > 1) {
    for (int m = 0; m < model.n_active; ++m) {
      if (m == event) continue;
      const auto row = static_cast<std::size_t>(m);
      if (model.stim(row, n)) others += model.priors[row];
    }
    others *= (1.0 - model.p_classify) / static_cast<double>(model.n_potential - 1);
  }
  return model.p_detect * (own + others);
}

AlphaTable alpha_table(const StimulationModel& model) {
  AlphaTable table{ident_table(model)};
  for (double& a : table.alpha.flat()) a = std::pow(1.0 - a, model.patience);
  return table;
}

Observation generate_observation(const StimulationModel& model, int event, SplitMix64& rng) {
  if (event < 0 || event >= model.n_active) throw Error(ErrorCode::IndexOutOfRange, "event index out of range");
  std::vector<double> ident(static_cast<std::size_t>(model.n_cameras));
  for (int n = 0; n < model.n_cameras; ++n) ident[static_cast<std::size_t>(n)] = ident_prob(model, event, n);
  if (std::ranges::all_of(ident, [](double p) { return p <= 0.0; })) {
    throw Error(ErrorCode::NoStimulatedCamera, "event " + std::to_string(event) + " cannot be identified");
  }
  Observation obs{std::vector<double>(ident.size()), event};
  simulate_into(model, ident, rng, obs.values);
  return obs;
}

ObservationDataset generate_dataset(const StimulationModel& model, std::size_t count, std::uint64_t seed) {
  return make_dataset(model, count, seed, true);
}

ObservationDataset generate_dataset_serial(const StimulationModel& model, std::size_t count,
                                           std::uint64_t seed) {
  return make_dataset(model, count, seed, false);
}

CameraLikelihood single_camera_likelihood(const StimulationModel& model, int event, int camera, double x) {
  check_indices(model, event, camera);
  if (model.conf_floor >= 1.0) throw Error(ErrorCode::BadParameter, "density needs a confidence floor below 1");
  const double alpha = std::pow(1.0 - ident_prob(model, event, camera), model.patience);
  CameraLikelihood out;
  if (x == 0.0) out.zero_mass = alpha;
  if (x >= model.conf_floor && x <= 1.0) out.density = (1.0 - alpha) / (1.0 - model.conf_floor);
  return out;
}

GaussianMixture theoretical_mixture(const StimulationModel& model, double cov_floor) {
  require_valid(model);
  const int n_cams = model.n_cameras;
  if (n_cams > 20) throw Error(ErrorCode::DimensionTooLarge, "vertex enumeration needs N <= 20");

  const AlphaTable alpha = alpha_table(model);
  const std::size_t n_vertices = std::size_t{1} << n_cams;
  const auto dim = static_cast<std::size_t>(n_cams);
  const double centre = (model.conf_floor + 1.0) / 2.0;
  const double spread = std::max((1.0 - model.conf_floor) * (1.0 - model.conf_floor) / 12.0, cov_floor);

  GaussianMixture mix;
  mix.weights.assign(n_vertices, 0.0);
  mix.means = Matrix(n_vertices, dim);
  mix.variances = Matrix(n_vertices, dim);
  std::vector<double> q(dim);
  for (std::size_t j = 0; j < n_vertices; ++j) {
    for (std::size_t n = 0; n < dim; ++n) q[n] = static_cast<double>((j >> (dim - 1 - n)) & 1U);
    double w = 0.0;
    for (std::size_t l = 0; l < alpha.alpha.rows(); ++l) {
      double prod = model.priors[l];
      for (std::size_t n = 0; n < dim; ++n) {
        const double a = alpha.alpha(l, n);
        prod *= a - 2.0 * a * q[n] + q[n];
      }
      w += prod;
    }
    mix.weights[j] = w;
    for (std::size_t n = 0; n < dim; ++n) {
      mix.means(j, n) = centre * q[n];
      mix.variances(j, n) = q[n] > 0.0 ? spread : cov_floor;
    }
  }
  return mix;
}

std::size_t vertex_index(std::span<const double> values) {
  std::size_t j = 0;
  for (double v : values) j = (j << 1U) | (v != 0.0 ? 1U : 0U);
  return j;
}

}  // namespace smid
