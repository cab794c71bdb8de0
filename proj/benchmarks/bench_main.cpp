#include <benchmark/benchmark.h>

#include <bqnet/compound.hpp>
#include <bqnet/kernel.hpp>
#include <bqnet/simulate.hpp>
#include <bqnet/transient.hpp>

using namespace bqnet;

namespace {

NetworkModel poisson_tandem() {
  NetworkModel m;
  m.arrival = ArrivalProcess::sinusoidal(1.0, 0.5, 1.0, 0.0);
  m.batch = BatchLaw::iid_assignment(UnivariateLaw(PoissonLaw{2.0}), {1.0, 0.0});
  m.nodes = {{ServiceLaw(ExponentialService{1.0}), {0.0, 1.0, 0.0}},
             {ServiceLaw(ExponentialService{2.0}), {0.0, 0.0, 1.0}}};
  return m;
}

void BM_TransientPmf(benchmark::State& state) {
  auto m = poisson_tandem();
  auto k = build_markov_kernel(m.nodes);
  const auto cap = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(transient_pmf(m, k, 3.0, cap));
}
BENCHMARK(BM_TransientPmf)->Arg(10)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_PoissonMultinomial(benchmark::State& state) {
  const auto m = state.range(0);
  const auto J = state.range(1);
  Eigen::MatrixXd rows(m, J + 1);
  for (Eigen::Index c = 0; c < m; ++c) {
    for (Eigen::Index k = 0; k <= J; ++k) rows(c, k) = 1.0 + static_cast<double>((c * 7 + k * 3) % 5);
    rows.row(c) /= rows.row(c).sum();
  }
  for (auto _ : state) benchmark::DoNotOptimize(poisson_multinomial_pmf(rows));
}
BENCHMARK(BM_PoissonMultinomial)->Args({4, 3})->Args({10, 2})->Args({20, 3})->Unit(benchmark::kMicrosecond);

void BM_Simulation(benchmark::State& state) {
  auto m = poisson_tandem();
  SimulationPlan plan;
  plan.model = &m;
  plan.times = {3.0};
  plan.replications = static_cast<std::uint64_t>(state.range(0));
  plan.seed = 1;
  plan.cap = 25;
  for (auto _ : state) benchmark::DoNotOptimize(run_simulation(plan));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulation)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_MarkovKernel(benchmark::State& state) {
  auto m = poisson_tandem();
  auto k = build_markov_kernel(m.nodes);
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(k.placement(t));
    t = t > 10.0 ? 0.0 : t + 0.01;
  }
}
BENCHMARK(BM_MarkovKernel);

void BM_RenewalKernel(benchmark::State& state) {
  std::vector<ServiceNode> nodes = {{ServiceLaw(ErlangService{2, 2.0}), {0.0, 1.0, 0.0}},
                                    {ServiceLaw(ExponentialService{1.0}), {0.0, 0.0, 1.0}}};
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_renewal_kernel(nodes, TimeGrid(5.0, n)));
}
BENCHMARK(BM_RenewalKernel)->Arg(1001)->Arg(4001)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
