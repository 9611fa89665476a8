// Microbenchmarks for the hot paths of the replication loop: closed-form
// posterior evaluation, criterion computation, tensor contraction, and the
// sampling fallback.

#include <benchmark/benchmark.h>

#include "priorlens/conjugate.hpp"
#include "priorlens/criteria.hpp"
#include "priorlens/estimate.hpp"
#include "priorlens/harness.hpp"
#include "priorlens/mcmc.hpp"
#include "priorlens/relation.hpp"
#include "priorlens/rng.hpp"
#include "priorlens/tensor.hpp"

namespace {

using namespace priorlens;

Data make_normal_data(std::size_t n) {
  Rng rng(7);
  return generate_normal_data(1.0, 1.0, n, rng);
}

void bm_normal_evaluator_cv(benchmark::State& state) {
  const Data data = make_normal_data(static_cast<std::size_t>(state.range(0)));
  const NormalSuffStats stats = NormalSuffStats::from_data(data);
  const NormalHyper h{0.01, -1.0, 0.01};
  for (auto _ : state) {
    const NormalExactEvaluator ev(stats, h);
    benchmark::DoNotOptimize(cv(ev, data));
  }
}
BENCHMARK(bm_normal_evaluator_cv)->Arg(25)->Arg(100)->Arg(400);

void bm_normal_full_report(benchmark::State& state) {
  const Data data = make_normal_data(25);
  const auto model = model_family_normal();
  const NormalHyper h{0.01, -1.0, 0.01};
  const NormalExactEvaluator ev(data, h);
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_report(ev, *model, data, h.to_hyper()));
  }
}
BENCHMARK(bm_normal_full_report);

void bm_normal_replication(benchmark::State& state) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Normal;
  cfg.n = 25;
  cfg.replications = 1;
  cfg.grid["mu"] = GridSpec{-2.5, 2.5, 20, false, true};
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_normal_experiment(cfg));
    cfg.seed += 1;
  }
}
BENCHMARK(bm_normal_replication)->Unit(benchmark::kMillisecond);

void bm_ridge_replication(benchmark::State& state) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Ridge;
  cfg.n = 100;
  cfg.replications = 1;
  cfg.grid["lambda"] = GridSpec{0.0, 10.0, 20, false, true};
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_ridge_experiment(cfg));
    cfg.seed += 1;
  }
}
BENCHMARK(bm_ridge_replication)->Unit(benchmark::kMillisecond);

void bm_contraction(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(11);
  SymMatrix j(d), k(d);
  SymTensor3 t(d, Sym3::Full);
  for (int a = 0; a < d; ++a) {
    for (int b = a; b < d; ++b) {
      j.set(a, b, (a == b) ? 2.0 + rng.uniform() : 0.1 * rng.normal());
      k.set(a, b, (a == b) ? 1.0 + rng.uniform() : 0.1 * rng.normal());
      for (int c = b; c < d; ++c) t.set(a, b, c, rng.normal());
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        contract_JJT(j, k, t, ContractionPattern::BridgedPair));
    benchmark::DoNotOptimize(
        contract_JJT(j, k, t, ContractionPattern::AdjacentPair));
  }
}
BENCHMARK(bm_contraction)->Arg(2)->Arg(5)->Arg(12);

void bm_mcmc_chain(benchmark::State& state) {
  const Data data = make_normal_data(25);
  const auto model = model_family_normal();
  const auto prior = prior_family_normal();
  const NormalHyper h{0.01, -1.0, 0.01};
  ChainConfig cfg;
  cfg.steps = static_cast<std::size_t>(state.range(0));
  Vec init(2);
  init << 1.0, 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        rw_metropolis(*model, *prior, h.to_hyper(), data, cfg, init));
    cfg.seed += 1;
  }
}
BENCHMARK(bm_mcmc_chain)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
