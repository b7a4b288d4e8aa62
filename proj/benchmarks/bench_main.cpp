#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "phasedoa/coefficient_inference.hpp"
#include "phasedoa/estimators.hpp"
#include "phasedoa/phase_inference.hpp"

using namespace phasedoa;

namespace {

struct Scene {
  SteeringDictionary dict;
  GroundTruth truth;
  ComplexVector y;
};

Scene scene(int n, int k, std::uint64_t seed) {
  Scene s{build_dictionary(n, 4.0, default_angle_grid(50)), {}, {}};
  Rng rng(seed);
  s.truth = sample_ground_truth(BernoulliGaussianPrior::uniform(50, 0.1), k, rng);
  s.truth.theta = sample_phase_trajectory({}, n, rng);
  s.y = synthesize_observation(s.dict, s.truth, 1e-2, rng).y;
  return s;
}

}  // namespace

static void BM_Smooth(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  PseudoObservations p{RealVector(n), RealVector(n)};
  for (int i = 0; i < n; ++i) {
    p.values[i] = u(rng);
    p.precisions[i] = std::exp(u(rng));
  }
  const PhaseMarkovModel model{};
  for (auto _ : state) benchmark::DoNotOptimize(smooth(p, model));
  state.SetComplexityN(n);
}
BENCHMARK(BM_Smooth)->RangeMultiplier(4)->Range(16, 4096)->Complexity(benchmark::oN);

static void BM_BesselRatio(benchmark::State& state) {
  const double x = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(bessel_ratio(x));
}
BENCHMARK(BM_BesselRatio)->Arg(1)->Arg(20)->Arg(100)->Arg(1000000);

static void BM_SweepAtoms(benchmark::State& state) {
  const Scene s = scene(static_cast<int>(state.range(0)), 5, 2);
  const auto prior = BernoulliGaussianPrior::uniform(50, 0.1);
  CoefficientPosterior post(50);
  std::vector<int> order(50);
  std::iota(order.begin(), order.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(sweep_atoms(s.y, post, s.dict, prior, 1e-2, order));
}
BENCHMARK(BM_SweepAtoms)->Arg(64)->Arg(256)->Arg(1024);

static void BM_Estimator(benchmark::State& state) {
  const Scene s = scene(256, 5, 3);
  const auto variant = static_cast<Variant>(state.range(0));
  EstimatorConfig cfg;
  cfg.initial_noise_var = 1e-2;
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate(variant, s.y, s.dict, {}, BernoulliGaussianPrior::uniform(50, 0.1), cfg));
  }
  state.SetLabel(std::string(to_string(variant)));
}
BENCHMARK(BM_Estimator)
    ->Arg(static_cast<int>(Variant::beamforming))
    ->Arg(static_cast<int>(Variant::prvbem))
    ->Arg(static_cast<int>(Variant::pavbem_relaxed))
    ->Arg(static_cast<int>(Variant::pavbem))
    ->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
