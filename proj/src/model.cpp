#include "smid/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "smid/rng.hpp"

namespace smid {

namespace {

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

}  // namespace

bool ValidationResult::has(ErrorCode code) const noexcept {
  return std::ranges::any_of(errors, [code](const ValidationIssue& e) { return e.code == code; });
}

std::uint64_t max_active_events(int n_cameras) {
  if (n_cameras >= 64) return std::numeric_limits<std::uint64_t>::max();
  return (std::uint64_t{1} << n_cameras) - 1;
}

ValidationResult validate(const StimulationModel& model) {
  ValidationResult result;
  auto fail = [&](ErrorCode code, std::string msg) { result.errors.push_back({code, std::move(msg)}); };

  if (model.n_cameras < 1 || model.n_active < 1) {
    fail(ErrorCode::BadParameter, "N and M must be positive");
    return result;
  }
  if (model.stim.rows() != static_cast<std::size_t>(model.n_active) ||
      model.stim.cols() != static_cast<std::size_t>(model.n_cameras)) {
    fail(ErrorCode::BadParameter, "stimulation matrix must be M x N");
    return result;
  }
  if (model.n_potential < model.n_active) {
    fail(ErrorCode::BadParameter, "M-bar must be at least M");
  }
  if (model.patience < 1) fail(ErrorCode::BadParameter, "patience K must be at least 1");

  if (static_cast<std::uint64_t>(model.n_active) > max_active_events(model.n_cameras)) {
    fail(ErrorCode::TooManyEvents, "M exceeds 2^N - 1");
  }
  for (std::size_t m = 0; m < model.stim.rows(); ++m) {
    if (is_zero_row(model.stim.row(m))) {
      fail(ErrorCode::EmptyRow, "event " + std::to_string(m) + " stimulates no camera");
    }
  }
  if (has_duplicate_rows(model.stim)) {
    fail(ErrorCode::DuplicateRows, "two events share a stimulation vector; the model is not identifiable");
  }

  if (model.priors.size() != static_cast<std::size_t>(model.n_active)) {
    fail(ErrorCode::BadPriors, "expected one prior per active event");
  } else {
    const bool in_range = std::ranges::all_of(model.priors, is_probability);
    const double total = std::accumulate(model.priors.begin(), model.priors.end(), 0.0);
    if (!in_range || std::abs(total - 1.0) > 1e-12) {
      fail(ErrorCode::BadPriors, "priors must lie in [0,1] and sum to 1");
    }
  }

  if (!is_probability(model.p_detect) || !is_probability(model.p_classify)) {
    fail(ErrorCode::BadProbability, "p_D and p_C must lie in [0,1]");
  }
  // A floor of exactly 1 is admitted: it degenerates the confidence to 1.
  if (!std::isfinite(model.conf_floor) || model.conf_floor <= 0.0 || model.conf_floor > 1.0) {
    fail(ErrorCode::BadProbability, "confidence floor must lie in (0,1]");
  }

  std::vector<bool> covered(model.stim.cols(), false);
  for (std::size_t m = 0; m < model.stim.rows(); ++m) {
    for (std::size_t n = 0; n < model.stim.cols(); ++n) covered[n] = covered[n] || model.stim(m, n);
  }
  for (std::size_t n = 0; n < covered.size(); ++n) {
    if (!covered[n]) result.warnings.push_back("camera " + std::to_string(n) + " is stimulated by no event");
  }
  return result;
}

void require_valid(const StimulationModel& model) {
  auto result = validate(model);
  if (!result.ok()) throw Error(result.errors.front().code, result.errors.front().message);
}

StimulationModel make_model(BinaryMatrix stim, const ModelParams& params) {
  StimulationModel model;
  model.n_cameras = static_cast<int>(stim.cols());
  model.n_active = static_cast<int>(stim.rows());
  model.n_potential = params.n_potential;
  model.stim = std::move(stim);
  model.priors = params.priors.empty()
                     ? std::vector<double>(model.stim.rows(), 1.0 / static_cast<double>(model.stim.rows()))
                     : params.priors;
  model.p_detect = params.p_detect;
  model.p_classify = params.p_classify;
  model.conf_floor = params.conf_floor;
  model.patience = params.patience;
  return model;
}

StimulationModel random_model(int n_cameras, int n_active, std::uint64_t seed, const ModelParams& params) {
  if (n_cameras < 1 || n_active < 1) throw Error(ErrorCode::BadParameter, "N and M must be positive");
  if (n_cameras > 62) throw Error(ErrorCode::DimensionTooLarge, "random_model supports N <= 62");
  const std::uint64_t n_vertices = max_active_events(n_cameras);
  if (static_cast<std::uint64_t>(n_active) > n_vertices) {
    throw Error(ErrorCode::TooManyEvents, "cannot draw M > 2^N - 1 distinct non-zero vertices");
  }

  SplitMix64 rng(derive_seed(seed, stream_id("random_model")));
  std::vector<std::uint64_t> codes;
  codes.reserve(static_cast<std::size_t>(n_active));
  if (n_vertices <= 4096) {
    // Partial Fisher-Yates over the explicit vertex list.
    std::vector<std::uint64_t> all(n_vertices);
    std::iota(all.begin(), all.end(), std::uint64_t{1});
    for (int i = 0; i < n_active; ++i) {
      std::uniform_int_distribution<std::uint64_t> pick(static_cast<std::uint64_t>(i), n_vertices - 1);
      std::swap(all[static_cast<std::size_t>(i)], all[pick(rng)]);
      codes.push_back(all[static_cast<std::size_t>(i)]);
    }
  } else {
    std::uniform_int_distribution<std::uint64_t> pick(1, n_vertices);
    std::set<std::uint64_t> seen;
    while (codes.size() < static_cast<std::size_t>(n_active)) {
      const std::uint64_t code = pick(rng);
      if (seen.insert(code).second) codes.push_back(code);
    }
  }

  BinaryMatrix stim(static_cast<std::size_t>(n_active), static_cast<std::size_t>(n_cameras));
  for (std::size_t m = 0; m < codes.size(); ++m) {
    for (int n = 0; n < n_cameras; ++n) {
      // Camera 0 is the most significant bit.
      stim(m, static_cast<std::size_t>(n)) = (codes[m] >> (n_cameras - 1 - n)) & 1U;
    }
  }
  return make_model(std::move(stim), params);
}

std::vector<std::vector<int>> stimulation_sets(const StimulationModel& model) {
  std::vector<std::vector<int>> sets(model.stim.rows());
  for (std::size_t m = 0; m < model.stim.rows(); ++m) {
    for (std::size_t n = 0; n < model.stim.cols(); ++n) {
      if (model.stim(m, n)) sets[m].push_back(static_cast<int>(n));
    }
  }
  return sets;
}

BinaryMatrix matrix_from_sets(const std::vector<std::vector<int>>& sets, int n_cameras) {
  BinaryMatrix stim(sets.size(), static_cast<std::size_t>(n_cameras));
  for (std::size_t m = 0; m < sets.size(); ++m) {
    for (int n : sets[m]) {
      if (n < 0 || n >= n_cameras) throw Error(ErrorCode::IndexOutOfRange, "camera index out of range");
      stim(m, static_cast<std::size_t>(n)) = 1;
    }
  }
  return stim;
}

std::uint64_t fingerprint(const StimulationModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const auto& value) {
    h = fnv1a({reinterpret_cast<const unsigned char*>(&value), sizeof(value)}, h);
  };
  feed(model.n_cameras);
  feed(model.n_active);
  feed(model.n_potential);
  h = fnv1a(model.stim.flat(), h);
  for (double p : model.priors) feed(p);
  feed(model.p_detect);
  feed(model.p_classify);
  feed(model.conf_floor);
  feed(model.patience);
  return h;
}

}  // namespace smid
