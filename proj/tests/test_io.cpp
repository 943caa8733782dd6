#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "smid/io.hpp"
#include "support.hpp"

using namespace smid;
using testing::error_of;

namespace {

template <typename T>
T round_trip(const T& value) {
  return Json::parse(dump(Json(value))).get<T>();
}

}  // namespace

TEST_CASE("model round trip") {
  auto model = random_model(9, 4, 3, {.n_potential = 11, .p_detect = 0.123456789012345678, .conf_floor = 0.7,
                                      .patience = 3, .priors = {0.1, 0.2, 0.3, 0.4}});
  CHECK(round_trip(model) == model);
  const auto j = Json(model);
  CHECK(j.at("stim").at(0).is_array());
}

TEST_CASE("mixture round trip is bit exact") {
  GaussianMixture mix;
  mix.weights = {1.0 / 3.0, 2.0 / 3.0};
  mix.means = Matrix(2, 2);
  mix.means(0, 0) = std::nextafter(0.1, 1.0);
  mix.means(1, 1) = -1e-300;
  mix.variances = Matrix(2, 2, 1e-6);
  mix.variances(1, 0) = 0.0075000000000000006;
  CHECK(round_trip(mix) == mix);
}

TEST_CASE("net checkpoint round trip") {
  auto spec = autoencoder_spec(7, {5, 3, 2});
  const auto trained = train(spec, Matrix(40, 7, 0.3), 2);
  const auto back = round_trip(trained.net);
  CHECK(back == trained.net);
  Json j = Json(trained.net);
  j.erase("optimizer");
  const auto plain = j.get<NeuralNet>();
  CHECK(plain.params == trained.net.params);
  CHECK(std::all_of(plain.grad_sq_avg.begin(), plain.grad_sq_avg.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("metrics round trip") {
  MetricsReport m{.e_r = 0.1, .e_r_at = 0.04, .e_r_md = 0.06, .at_unnormalized = true, .d_kl = std::nullopt,
                  .m_hat = 5, .m_hat_eff = 4, .detected_count = 2};
  CHECK(round_trip(m) == m);
  m.d_kl = -0.0123;
  CHECK(round_trip(m) == m);
}

TEST_CASE("report round trip") {
  const auto model = random_model(5, 2, 1);
  const auto data = generate_dataset(model, 500, 2);
  MethodConfig cfg = method_from_name("gmm");
  cfg.search_hi = 4;
  cfg.seed = 9;
  const auto rep = identify(data, cfg);
  const auto back = report_from_json(Json::parse(dump(report_json(rep))));
  CHECK(back.raw == rep.raw);
  CHECK(back.raw_weights == rep.raw_weights);
  CHECK(back.effective == rep.effective);
  CHECK(back.effective_weights == rep.effective_weights);
  CHECK(back.effective_index == rep.effective_index);
  CHECK(back.centroids == rep.centroids);
  CHECK(back.selection_candidates == rep.selection_candidates);
  CHECK(back.selection_scores == rep.selection_scores);
  CHECK(back.fit.trace == rep.fit.trace);
  CHECK(back.provenance.mixture_seed == rep.provenance.mixture_seed);
  CHECK(back.provenance.total_ms == 0.0);
  CHECK_FALSE(report_json(rep).contains("timings_ms"));
  CHECK(report_json(rep, {.timings = true}).contains("timings_ms"));
}

TEST_CASE("infinite scores survive serialisation") {
  IdentificationReport rep;
  rep.selection_candidates = {1, 2};
  rep.selection_scores = {-1.5, -std::numeric_limits<double>::infinity()};
  const auto back = report_from_json(Json::parse(dump(report_json(rep))));
  CHECK(back.selection_scores == rep.selection_scores);
}

TEST_CASE("dataset CSV round trip") {
  const auto model = random_model(6, 3, 4);
  const auto data = generate_dataset(model, 300, 8);
  std::stringstream ss;
  write_dataset_csv(ss, data);
  const auto back = read_dataset_csv(ss);
  CHECK(back.values == data.values);
  CHECK(back.events == data.events);
  CHECK(back.model_fingerprint == data.model_fingerprint);
  CHECK(back.seed == data.seed);
  CHECK(back.conf_floor == data.conf_floor);

  ObservationDataset unlabeled = data;
  unlabeled.events.clear();
  std::stringstream ss2;
  write_dataset_csv(ss2, unlabeled);
  CHECK(read_dataset_csv(ss2).events.empty());
}

TEST_CASE("dataset JSON round trip") {
  const auto model = random_model(4, 2, 4);
  const auto data = generate_dataset(model, 50, 8);
  const auto back = round_trip(data);
  CHECK(back.values == data.values);
  CHECK(back.events == data.events);
  CHECK(back.model_fingerprint == data.model_fingerprint);
}

TEST_CASE("malformed datasets are rejected") {
  std::stringstream no_header("0.1,0.2\n");
  CHECK(error_of([&] { read_dataset_csv(no_header); }) == ErrorCode::ParseError);
  std::stringstream short_rows("#smid-dataset N=2 D=2 conf_floor=0.7 fingerprint=00 seed=1 labels=0\n0.1,0.9\n");
  CHECK(error_of([&] { read_dataset_csv(short_rows); }) == ErrorCode::ParseError);
  std::stringstream wide("#smid-dataset N=2 D=1 conf_floor=0.7 fingerprint=00 seed=1 labels=0\n0.1,0.9,0.3\n");
  CHECK(error_of([&] { read_dataset_csv(wide); }) == ErrorCode::ParseError);
  std::stringstream junk("#smid-dataset N=2 D=1 conf_floor=0.7 fingerprint=00 seed=1 labels=0\n0.1,abc\n");
  CHECK(error_of([&] { read_dataset_csv(junk); }) == ErrorCode::ParseError);
}

TEST_CASE("config round trip and validation") {
  ExperimentConfig c;
  c.n_cameras = 3;
  c.encoder_widths = {3, 2};
  c.methods = {"gmm-ae", "gmm-dnn"};
  c.origin_rule = OriginRule::Drop;
  c.kl_reading = KlReading::Formula;
  c.seed = 0xfedcba9876543210ull;
  CHECK(round_trip(c) == c);

  const auto partial = Json::parse(R"({"n_cameras": 4, "seed": 3})").get<ExperimentConfig>();
  CHECK(partial.n_cameras == 4);
  CHECK(partial.n_potential == 20);
  CHECK(partial.p_detect == 0.8);

  CHECK(error_of([] { Json::parse(R"({"n_camera": 4})").get<ExperimentConfig>(); }) == ErrorCode::ParseError);
  CHECK(error_of([] { Json::parse(R"({"methods": ["gmm", "pca"]})").get<ExperimentConfig>(); }) ==
        ErrorCode::ParseError);

  const auto fixed = Json::parse(R"({"stim": [[1,0,1],[0,1,1]]})").get<ExperimentConfig>();
  CHECK(fixed.n_active == 2);
  CHECK(fixed.n_cameras == 3);
}

TEST_CASE("three significant digits") {
  CHECK(sig3(0.0123456) == "0.0123");
  CHECK(sig3(0.0) == "0");
  CHECK(sig3(1.23456e-5) == "1.23e-05");
  CHECK(sig3(20.0) == "20");
}
