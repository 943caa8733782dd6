// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include <random>

#include "smid/kernels.hpp"
#include "smid/model.hpp"
#include "smid/observation.hpp"

namespace {

using smid::Matrix;
namespace k = smid::kernels;

Matrix random_data(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = u(gen);
  return m;
}

k::DiagScores random_scores(std::size_t components, std::size_t cols) {
  k::DiagScores s;
  s.offset.assign(components, 0.0);
  s.centre = random_data(components, cols, 1);
  s.precision = random_data(components, cols, 2);
  for (double& v : s.precision.flat()) v = 1.0 + 10.0 * v;
  return s;
}

template <double (*Kernel)(const Matrix&, const k::DiagScores&, Matrix&)>
void BM_responsibilities(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const Matrix data = random_data(rows, 15, 3);
  const auto scores = random_scores(20, 15);
  Matrix resp;
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(data, scores, resp));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

template <k::WeightedMoments (*Kernel)(const Matrix&, const Matrix&)>
void BM_weighted_moments(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const Matrix data = random_data(rows, 15, 4);
  Matrix resp;
  k::responsibilities_serial(data, random_scores(20, 15), resp);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(data, resp));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

template <smid::ObservationDataset (*Generate)(const smid::StimulationModel&, std::size_t, std::uint64_t)>
void BM_generate(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto model = smid::random_model(15, 3, 5);
  for (auto _ : state) benchmark::DoNotOptimize(Generate(model, rows, 6));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

}  // namespace

BENCHMARK(BM_responsibilities<k::responsibilities_serial>)->Name("responsibilities/serial")->Arg(10000);
BENCHMARK(BM_responsibilities<k::responsibilities>)->Name("responsibilities/omp")->Arg(10000);
BENCHMARK(BM_weighted_moments<k::weighted_moments_serial>)->Name("weighted_moments/serial")->Arg(10000);
BENCHMARK(BM_weighted_moments<k::weighted_moments>)->Name("weighted_moments/omp")->Arg(10000);
BENCHMARK(BM_generate<smid::generate_dataset_serial>)->Name("generate_dataset/serial")->Arg(10000);
BENCHMARK(BM_generate<smid::generate_dataset>)->Name("generate_dataset/omp")->Arg(10000);

BENCHMARK_MAIN();
