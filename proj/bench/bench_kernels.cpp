// Serial reference vs OpenMP kernels: Gram-matrix build and swarm evaluation.

#include <benchmark/benchmark.h>

#include <random>

#include "spme/cell_model.hpp"
#include "spme/estimator.hpp"
#include "spme/gp.hpp"
#include "spme/pso.hpp"
#include "spme/scenario.hpp"

using namespace spme;

namespace {

gp::FeatureMatrix random_features(Eigen::Index n) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  gp::FeatureMatrix X(n, kFeatureCount);
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = g(rng);
  return X;
}

gp::KernelHyperparameters hyper() {
  gp::KernelHyperparameters hp;
  hp.length_scales = Eigen::VectorXd::Constant(kFeatureCount, 0.7);
  hp.sigma2_n_tilde = 0.1;
  return hp;
}

void BM_PhiN_Serial(benchmark::State& state) {
  const auto X = random_features(state.range(0));
  const auto hp = hyper();
  for (auto _ : state) benchmark::DoNotOptimize(gp::build_phi_n_serial(X, hp));
}

void BM_PhiN_Parallel(benchmark::State& state) {
  const auto X = random_features(state.range(0));
  const auto hp = hyper();
  for (auto _ : state) benchmark::DoNotOptimize(gp::build_phi_n(X, hp));
}

BENCHMARK(BM_PhiN_Serial)->Arg(100)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PhiN_Parallel)->Arg(100)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

// One KOG swarm generation on the 5C group: each particle runs a full
// simulation, so this is the estimator's dominant cost.
void swarm_generation(benchmark::State& state, bool parallel) {
  const auto g = scenario::default_groups()[1];
  const Cell cell = default_cell();
  const auto profile = scenario::build_profile(g.profile, 5.0);
  est::EstimationProblem p;
  p.measured = simulate(profile, cell, g.initial_soc).voltage();
  p.profile = profile;
  p.cell = cell;
  p.targets = {scenario::default_bound(Target::D_s_n, 0.5 * cell.params.D_s_n),
               scenario::default_bound(Target::D_s_p, 0.5 * cell.params.D_s_p)};
  p.downsample = 300;
  pso::SwarmConfig swarm;
  swarm.iterations = 1;
  swarm.parallel = parallel;
  for (auto _ : state) benchmark::DoNotOptimize(est::estimate_group(p, swarm));
}

void BM_SwarmGeneration_Serial(benchmark::State& state) { swarm_generation(state, false); }
void BM_SwarmGeneration_Parallel(benchmark::State& state) { swarm_generation(state, true); }

BENCHMARK(BM_SwarmGeneration_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SwarmGeneration_Parallel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
