#include "smid/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>
#include <optional>

#include "smid/error.hpp"
#include "smid/rng.hpp"

namespace smid {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

TrainTestSplit train_test_split(const Matrix& values, double train_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(values.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = order.size(); i-- > 1;) {
    const auto j = std::min(i, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1)));
    std::swap(order[i], order[j]);
  }
  const auto n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(values.rows()));
  if (n_train >= values.rows()) throw Error(ErrorCode::EmptyTestSplit, "train fraction leaves no test rows");
  return {values.select_rows(std::span(order).first(n_train)), values.select_rows(std::span(order).subspan(n_train))};
}

namespace {

NetSpec reducer_spec(const MethodConfig& config, int n_inputs) {
  NetSpec spec = config.reducer == Reducer::OvercompleteDnn ? dnn_spec(n_inputs)
                                                             : autoencoder_spec(n_inputs, config.encoder_widths);
  spec.epochs = config.epochs;
  spec.batch_size = config.batch_size;
  spec.rho = config.rho;
  spec.epsilon = config.epsilon;
  return spec;
}

}  // namespace

std::string method_name(Learner learner, Reducer reducer) {
  std::string name = learner == Learner::Em ? "gmm" : "vgmm";
  if (reducer == Reducer::Autoencoder) name += "-ae";
  if (reducer == Reducer::OvercompleteDnn) name += "-dnn";
  return name;
}

std::string method_name(const MethodConfig& config) { return method_name(config.learner, config.reducer); }

const std::vector<std::string>& all_method_names() {
  static const std::vector<std::string> names{"gmm", "vgmm", "gmm-ae", "vgmm-ae", "gmm-dnn", "vgmm-dnn"};
  return names;
}

MethodConfig method_from_name(std::string_view name, MethodConfig base) {
  static const std::map<std::string_view, std::pair<Learner, Reducer>> table{
      {"gmm", {Learner::Em, Reducer::None}},
      {"vgmm", {Learner::Vb, Reducer::None}},
      {"gmm-ae", {Learner::Em, Reducer::Autoencoder}},
      {"vgmm-ae", {Learner::Vb, Reducer::Autoencoder}},
      {"gmm-dnn", {Learner::Em, Reducer::OvercompleteDnn}},
      {"vgmm-dnn", {Learner::Vb, Reducer::OvercompleteDnn}},
  };
  auto it = table.find(name);
  if (it == table.end()) throw Error(ErrorCode::ParseError, "unknown method '" + std::string(name) + "'");
  base.learner = it->second.first;
  base.reducer = it->second.second;
  return base;
}

std::vector<std::uint8_t> threshold_vertex(std::span<const double> centroid) {
  std::vector<std::uint8_t> v(centroid.size());
  for (std::size_t n = 0; n < centroid.size(); ++n) v[n] = centroid[n] >= 0.5 ? 1 : 0;
  return v;
}

std::vector<std::uint8_t> round_vertex(std::span<const double> centroid) {
  auto v = threshold_vertex(centroid);
  if (!v.empty() && is_zero_row(v)) {
    const auto top = std::ranges::max_element(centroid) - centroid.begin();
    v[static_cast<std::size_t>(top)] = 1;
  }
  return v;
}

EffectiveMatrix effective_matrix(const BinaryMatrix& raw, std::span<const double> weights) {
  if (weights.size() != raw.rows()) throw Error(ErrorCode::ShapeMismatch, "one weight per raw row expected");
  EffectiveMatrix eff;
  std::map<std::string, int> slot;
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    auto [it, fresh] = slot.try_emplace(row_key(raw.row(r)), static_cast<int>(eff.weights.size()));
    if (fresh) {
      eff.rows.append_row(raw.row(r));
      eff.weights.push_back(0.0);
    }
    eff.weights[static_cast<std::size_t>(it->second)] += weights[r];
    eff.index_of_raw.push_back(it->second);
  }
  return eff;
}

IdentificationReport assemble_report(const Matrix& centroids, std::span<const double> weights, OriginRule rule) {
  IdentificationReport rep;
  rep.centroids = centroids;
  rep.m_hat = static_cast<int>(centroids.rows());
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < centroids.rows(); ++k) {
    if (rule == OriginRule::Drop && is_zero_row(threshold_vertex(centroids.row(k)))) continue;
    kept.push_back(k);
  }
  if (kept.empty()) {
    // Every centroid fell on the origin; fall back to promotion.
    kept.resize(centroids.rows());
    std::iota(kept.begin(), kept.end(), std::size_t{0});
  }
  double kept_mass = 0.0;
  for (std::size_t k : kept) kept_mass += weights[k];
  for (std::size_t k : kept) {
    const auto v = round_vertex(centroids.row(k));
    rep.raw.append_row(v);
    rep.raw_weights.push_back(kept.size() == centroids.rows() ? weights[k] : weights[k] / kept_mass);
  }
  auto eff = effective_matrix(rep.raw, rep.raw_weights);
  rep.effective = std::move(eff.rows);
  rep.effective_weights = std::move(eff.weights);
  rep.effective_index = std::move(eff.index_of_raw);
  rep.m_hat_eff = static_cast<int>(rep.effective.rows());
  return rep;
}

IdentificationReport identify(const ObservationDataset& dataset, const MethodConfig& config) {
  const auto start = Clock::now();
  if (dataset.size() == 0) throw Error(ErrorCode::EmptyTestSplit, "empty dataset");
  if (config.search_lo < 1 || config.search_hi < config.search_lo) {
    throw Error(ErrorCode::BadParameter, "bad component search range");
  }

  Provenance prov;
  prov.method = method_name(config);
  prov.master_seed = config.seed;
  prov.split_seed = derive_seed(config.seed, stream_id("split"));
  prov.reducer_seed = derive_seed(config.seed, stream_id("reducer"));
  prov.mixture_seed = derive_seed(config.seed, stream_id("mixture"));

  const TrainTestSplit split = train_test_split(dataset.values, config.train_fraction, prov.split_seed);

  std::optional<NeuralNet> net;
  std::vector<double> reducer_loss;
  Matrix features = split.test;
  if (config.reducer != Reducer::None) {
    const auto t0 = Clock::now();
    auto trained = train(reducer_spec(config, static_cast<int>(dataset.dim())), split.train, prov.reducer_seed);
    net = std::move(trained.net);
    reducer_loss = std::move(trained.loss_trace);
    features = encode(*net, split.test);
    prov.reducer_ms = ms_since(t0);
  }

  const auto t1 = Clock::now();
  FitResult fit;
  SelectionResult selection;
  if (config.learner == Learner::Em) {
    const int hi = std::min<int>(config.search_hi, static_cast<int>(features.rows()) - 1);
    selection = select_em_components(features, config.search_lo, hi, prov.mixture_seed, config.selection);
    fit = fit_em(features, selection.best, prov.mixture_seed, config.em);
  } else {
    const int max_k = std::min<int>(config.vb_max_components, static_cast<int>(features.rows()) - 1);
    fit = fit_vb(features, max_k, prov.mixture_seed, config.vb);
  }
  prov.mixture_ms = ms_since(t1);

  // The decoder moves the centroids back to the hypercube; weights pass through.
  const Matrix centroids = net ? decode(*net, fit.mixture.means) : fit.mixture.means;
  IdentificationReport rep = assemble_report(centroids, fit.mixture.weights, config.origin_rule);
  rep.m_hat = static_cast<int>(fit.mixture.n_components());
  rep.selection_candidates = std::move(selection.candidates);
  rep.selection_scores = std::move(selection.scores);
  rep.fit = std::move(fit.report);
  rep.reducer_loss = std::move(reducer_loss);
  prov.total_ms = ms_since(start);
  rep.provenance = std::move(prov);
  return rep;
}

}  // namespace smid
