#include <doctest.h>

#include <cmath>
#include <numeric>

#if defined(SMID_HAVE_OPENMP)
#include <omp.h>
#endif

#include "smid/model.hpp"
#include "smid/observation.hpp"
#include "support.hpp"

using namespace smid;
using testing::error_of;

namespace {

StimulationModel model_of(std::vector<std::vector<int>> rows, double pd, double pc, double floor, int k,
                          std::vector<double> priors = {}) {
  return make_model(binary_from_rows(rows),
                    {.n_potential = 20, .p_detect = pd, .p_classify = pc, .conf_floor = floor, .patience = k,
                     .priors = std::move(priors)});
}

// Written out term by term from the definition.
double ident_oracle(const StimulationModel& m, int e, int n) {
  double cross = 0.0;
  for (int o = 0; o < m.n_active; ++o) {
    if (o != e) cross += m.priors[static_cast<std::size_t>(o)] * m.stim(static_cast<std::size_t>(o), static_cast<std::size_t>(n));
  }
  const double t = m.stim(static_cast<std::size_t>(e), static_cast<std::size_t>(n));
  const double spill = m.n_potential > 1 ? (1.0 - m.p_classify) / (m.n_potential - 1) * cross : 0.0;
  return m.p_detect * (t * m.p_classify + spill);
}

}  // namespace

TEST_CASE("ident_prob single stimulating event") {
  const auto m = model_of({{1, 0}, {0, 1}}, 0.8, 0.99, 0.7, 1);
  CHECK(ident_prob(m, 0, 0) == doctest::Approx(0.792).epsilon(1e-14));
  CHECK(alpha_table(m).alpha(0, 0) == doctest::Approx(0.208).epsilon(1e-12));
}

TEST_CASE("ident_prob in the ideal case is the stimulation entry") {
  const auto m = model_of({{1, 0, 1}, {0, 1, 1}}, 1.0, 1.0, 0.7, 1);
  for (int e = 0; e < 2; ++e) {
    for (int n = 0; n < 3; ++n) {
      CHECK(ident_prob(m, e, n) == m.stim(static_cast<std::size_t>(e), static_cast<std::size_t>(n)));
      CHECK(alpha_table(m).alpha(static_cast<std::size_t>(e), static_cast<std::size_t>(n)) ==
            1.0 - m.stim(static_cast<std::size_t>(e), static_cast<std::size_t>(n)));
    }
  }
}

TEST_CASE("ident_prob vanishes without detection") {
  const auto m = model_of({{1, 0, 1}, {0, 1, 1}}, 0.0, 0.99, 0.7, 1);
  for (int e = 0; e < 2; ++e) {
    for (int n = 0; n < 3; ++n) CHECK(ident_prob(m, e, n) == 0.0);
  }
}

TEST_CASE("ident_prob matches a term by term oracle") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto m = random_model(5, 6, s, {.n_potential = 9, .p_detect = 0.7, .p_classify = 0.9, .priors = {0.1, 0.2, 0.3, 0.1, 0.2, 0.1}});
    for (int e = 0; e < m.n_active; ++e) {
      for (int n = 0; n < m.n_cameras; ++n) CHECK(ident_prob(m, e, n) == doctest::Approx(ident_oracle(m, e, n)).epsilon(1e-14));
    }
  }
}

TEST_CASE("ident_prob index checks") {
  const auto m = model_of({{1, 0}}, 0.8, 0.99, 0.7, 1);
  CHECK(error_of([&] { ident_prob(m, 1, 0); }) == ErrorCode::IndexOutOfRange);
  CHECK(error_of([&] { ident_prob(m, 0, 2); }) == ErrorCode::IndexOutOfRange);
  CHECK(error_of([&] { ident_prob(m, -1, 0); }) == ErrorCode::IndexOutOfRange);
}

TEST_CASE("alpha with patience") {
  const auto m = model_of({{1, 0}}, 0.5, 1.0, 0.7, 3);
  CHECK(ident_prob(m, 0, 0) == 0.5);
  CHECK(alpha_table(m).alpha(0, 0) == 0.125);
  CHECK(alpha_table(m).alpha(0, 1) == 1.0);
}

TEST_CASE("alpha does not grow with patience") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto m = random_model(4, 3, s);
    double prev_sum = 1e300;
    for (int k = 1; k <= 5; ++k) {
      m.patience = k;
      const auto a = alpha_table(m);
      auto m_next = m;
      m_next.patience = k + 1;
      const auto b = alpha_table(m_next);
      for (std::size_t i = 0; i < a.alpha.flat().size(); ++i) CHECK(b.alpha.flat()[i] <= a.alpha.flat()[i]);
      const double sum = std::accumulate(a.alpha.flat().begin(), a.alpha.flat().end(), 0.0);
      CHECK(sum <= prev_sum);
      prev_sum = sum;
    }
  }
}

TEST_CASE("degenerate confidence floor gives exact vertices") {
  const auto m = model_of({{1, 0, 1}}, 1.0, 1.0, 1.0, 1);
  SplitMix64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto o = generate_observation(m, 0, rng);
    CHECK(o.values == std::vector<double>{1.0, 0.0, 1.0});
    CHECK(o.true_event == 0);
  }
}

TEST_CASE("ideal observation support") {
  const auto m = model_of({{0, 1}}, 1.0, 1.0, 0.7, 1);
  SplitMix64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const auto o = generate_observation(m, 0, rng);
    CHECK(o.values[0] == 0.0);
    CHECK(o.values[1] >= 0.7);
    CHECK(o.values[1] <= 1.0);
  }
}

TEST_CASE("an event no camera can identify is rejected") {
  const auto m = model_of({{1, 0}}, 0.0, 0.99, 0.7, 1);
  SplitMix64 rng(1);
  CHECK(error_of([&] { generate_observation(m, 0, rng); }) == ErrorCode::NoStimulatedCamera);
}

TEST_CASE("generated values never fall below the floor") {
  const auto m = random_model(8, 4, 3, {.p_detect = 0.6, .conf_floor = 0.8, .patience = 2});
  const auto data = generate_dataset(m, 5000, 17);
  for (double v : data.values.flat()) CHECK((v == 0.0 || (v >= 0.8 && v <= 1.0)));
  CHECK(data.events.size() == 5000);
  CHECK(data.model_fingerprint == fingerprint(m));
  CHECK(data.conf_floor == 0.8);
}

TEST_CASE("dataset of one observation") {
  const auto m = random_model(15, 3, 1);
  const auto data = generate_dataset(m, 1, 2);
  CHECK(data.size() == 1);
  CHECK(data.dim() == 15);
}

TEST_CASE("dataset generation is reproducible and thread independent") {
  const auto m = random_model(15, 3, 4);
  const auto serial = generate_dataset_serial(m, 3000, 9);
  CHECK(generate_dataset(m, 3000, 9).values == serial.values);
#if defined(SMID_HAVE_OPENMP)
  for (int threads : {1, 2, 5}) {
    omp_set_num_threads(threads);
    const auto par = generate_dataset(m, 3000, 9);
    CHECK(par.values == serial.values);
    CHECK(par.events == serial.events);
  }
  omp_set_num_threads(omp_get_num_procs());
#endif
  CHECK_FALSE(generate_dataset(m, 3000, 10).values == serial.values);
}

TEST_CASE("event frequencies follow the priors") {
  const auto m = random_model(6, 4, 8, {.priors = {0.1, 0.2, 0.3, 0.4}});
  constexpr std::size_t kDraws = 40000;
  const auto data = generate_dataset(m, kDraws, 21);
  std::vector<int> counts(4, 0);
  for (int e : data.events) ++counts[static_cast<std::size_t>(e)];
  for (std::size_t e = 0; e < 4; ++e) {
    const double p = m.priors[e];
    CHECK(std::abs(counts[e] - kDraws * p) < 3.0 * std::sqrt(kDraws * p * (1 - p)));
  }
}

TEST_CASE("single camera likelihood") {
  const auto m = model_of({{1, 0}, {0, 1}}, 0.8, 0.99, 0.7, 1);
  const double a = alpha_table(m).alpha(0, 0);
  const auto zero = single_camera_likelihood(m, 0, 0, 0.0);
  CHECK(zero.zero_mass == doctest::Approx(a).epsilon(1e-15));
  CHECK(zero.density == 0.0);
  CHECK(single_camera_likelihood(m, 0, 0, 0.5).density == 0.0);
  CHECK(single_camera_likelihood(m, 0, 0, 0.5).zero_mass == 0.0);
  CHECK(single_camera_likelihood(m, 0, 0, 0.85).density == doctest::Approx((1 - a) / 0.3).epsilon(1e-12));
  CHECK(single_camera_likelihood(m, 0, 0, 1.0).density == doctest::Approx((1 - a) / 0.3).epsilon(1e-12));
}

TEST_CASE("theoretical mixture for two cameras") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto m = random_model(2, 2, s, {.p_detect = 0.75, .p_classify = 0.9, .conf_floor = 0.6, .patience = 2,
                                          .priors = {0.35, 0.65}});
    const auto a = alpha_table(m).alpha;
    double w[4] = {0, 0, 0, 0};
    for (std::size_t l = 0; l < 2; ++l) {
      const double p = m.priors[l];
      w[0] += p * a(l, 0) * a(l, 1);
      w[1] += p * a(l, 0) * (1 - a(l, 1));
      w[2] += p * (1 - a(l, 0)) * a(l, 1);
      w[3] += p * (1 - a(l, 0)) * (1 - a(l, 1));
    }
    const auto mix = theoretical_mixture(m);
    REQUIRE(mix.n_components() == 4);
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(mix.weights[j] - w[j]) < 1e-12);

    const double mu = 0.8;
    const double var = 0.4 * 0.4 / 12.0;
    const double mean_rows[4][2] = {{0, 0}, {0, mu}, {mu, 0}, {mu, mu}};
    const double var_rows[4][2] = {{1e-6, 1e-6}, {1e-6, var}, {var, 1e-6}, {var, var}};
    for (std::size_t j = 0; j < 4; ++j) {
      for (std::size_t d = 0; d < 2; ++d) {
        CHECK(mix.means(j, d) == doctest::Approx(mean_rows[j][d]).epsilon(1e-15));
        CHECK(mix.variances(j, d) == doctest::Approx(var_rows[j][d]).epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("theoretical mixture weights sum to one") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto m = random_model(6, 5, s, {.p_detect = 0.7, .patience = 2});
    const auto mix = theoretical_mixture(m);
    CHECK(mix.n_components() == 64);
    CHECK(std::abs(std::accumulate(mix.weights.begin(), mix.weights.end(), 0.0) - 1.0) < 1e-12);
    check_mixture(mix, 1e-6);
  }
}

TEST_CASE("ideal theoretical mixture sits on the active vertices") {
  const auto m = model_of({{0, 1, 1}, {1, 0, 0}}, 1.0, 1.0, 0.9, 1, {0.3, 0.7});
  const auto mix = theoretical_mixture(m);
  for (std::size_t j = 0; j < 8; ++j) {
    double expected = 0.0;
    if (j == 0b011) expected = 0.3;
    if (j == 0b100) expected = 0.7;
    CHECK(mix.weights[j] == doctest::Approx(expected).epsilon(1e-15));
  }
}

TEST_CASE("theoretical mixture guard") {
  const auto m = random_model(21, 2, 1);
  CHECK(error_of([&] { theoretical_mixture(m); }) == ErrorCode::DimensionTooLarge);
}

TEST_CASE("vertex index uses camera 0 as the high bit") {
  CHECK(vertex_index(std::vector<double>{0.0, 0.0}) == 0);
  CHECK(vertex_index(std::vector<double>{0.0, 0.9}) == 1);
  CHECK(vertex_index(std::vector<double>{0.8, 0.0}) == 2);
  CHECK(vertex_index(std::vector<double>{0.8, 0.75, 0.0}) == 6);
}

TEST_CASE("empirical zero rates match alpha") {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto m = random_model(3, 2, s, {.p_detect = 0.7, .p_classify = 0.9, .patience = 1 + static_cast<int>(s)});
    const auto alpha = alpha_table(m).alpha;
    constexpr int kDraws = 20000;
    for (int e = 0; e < m.n_active; ++e) {
      SplitMix64 rng(derive_seed(s, static_cast<std::uint64_t>(e)));
      std::vector<int> zeros(3, 0);
      for (int d = 0; d < kDraws; ++d) {
        const auto o = generate_observation(m, e, rng);
        for (std::size_t n = 0; n < 3; ++n) zeros[n] += o.values[n] == 0.0;
      }
      for (std::size_t n = 0; n < 3; ++n) {
        const double a = alpha(static_cast<std::size_t>(e), n);
        const double sd = std::sqrt(kDraws * a * (1 - a));
        CHECK(std::abs(zeros[n] - kDraws * a) <= std::max(3.0 * sd, 0.0));
      }
    }
  }
}
