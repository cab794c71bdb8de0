// One PASS/FAIL line per acceptance criterion; exit status is the number
// of failures.

#include <bqnet/compound.hpp>
#include <bqnet/ergodicity.hpp>
#include <bqnet/simulate.hpp>
#include <bqnet/transient.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <string>
#include <thread>

#include "support.hpp"

using namespace bqnet;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

Outcome a1() {
  auto m = testing::mm_infty(BatchLaw::constant({1}));
  auto t0 = Clock::now();
  auto k = build_markov_kernel(m.nodes);
  auto res = transient_pmf(m, k, 1.0, 20);
  double elapsed = seconds_since(t0);
  double mean = 1 - std::exp(-1.0), worst = 0.0;
  for (std::uint32_t n = 0; n <= 20; ++n) {
    std::vector<std::uint32_t> v = {n};
    worst = std::max(worst, std::abs(res.pmf.at(v) - testing::poisson_pmf(mean, n)));
  }
  return {worst <= 1e-6 && elapsed < 1.0, fmt("max abs err %.3g, %.3f s", worst, elapsed)};
}

Outcome a2() {
  auto m = testing::poisson_tandem();
  auto t0 = Clock::now();
  auto k = build_markov_kernel(m.nodes);
  auto res = transient_pmf(m, k, 3.0, 25);
  SimulationPlan plan;
  plan.model = &m;
  plan.times = {3.0};
  plan.replications = 1000000;
  plan.seed = 20240611;
  plan.cap = 25;
  plan.workers = workers();
  auto est = run_simulation(plan);
  double elapsed = seconds_since(t0);

  double tv = 0.0, zmax = 0.0;
  for (std::size_t r = 0; r < res.pmf.prob.size(); ++r) {
    double pa = res.pmf.prob[r], pe = est.probability(0, r);
    tv += std::abs(pa - pe);
    zmax = std::max(zmax, cell_z_score(pa, pe, plan.replications));
  }
  tv += std::abs(res.pmf.tail_mass - est.empirical(0).tail_mass);
  tv *= 0.5;
  return {tv <= 0.005 && zmax <= 5.0 && elapsed < 600.0,
          fmt("TV %.5f, max |z| %.2f, %.1f s with %u workers", tv, zmax, elapsed, plan.workers)};
}

Outcome a3() {
  auto m = testing::poisson_tandem();
  auto k = build_markov_kernel(m.nodes);
  auto res = transient_pmf(m, k, 3.0, 25);
  std::vector<double> z = {0.5, 0.5};
  double s = 0.0;
  for (std::size_t r = 0; r < res.pmf.prob.size(); ++r) {
    auto n = res.pmf.index->at(r);
    s += res.pmf.prob[r] * std::pow(0.5, n[0] + n[1]);
  }
  double g = transient_pgf(m, k, 3.0, z);
  double diff = std::abs(s - g), bound = res.pmf.tail_mass + 1e-6;
  return {diff <= bound, fmt("|diff| %.3g, bound %.3g", diff, bound)};
}

Outcome a4() {
  Eigen::MatrixXd P(3, 4);
  P << 0.30, 0.15, 0.10, 0.45,  //
      0.05, 0.40, 0.20, 0.35,   //
      0.10, 0.10, 0.50, 0.30;
  std::vector<double> p = {0.5, 0.3, 0.2};
  Eigen::VectorXd q = Eigen::VectorXd::Zero(3);
  double exit = 0.0;
  for (int j = 0; j < 3; ++j) {
    q += p[j] * P.row(j).head(3).transpose();
    exit += p[j] * P(j, 3);
  }
  std::vector<UnivariateLaw> laws = {BinomialLaw{15, 0.35}, PoissonLaw{2.5}, NegativeBinomialLaw{1.6, 2.0},
                                     LogarithmicLaw{0.75}};
  auto index = std::make_shared<const SimplexIndex>(3, 10);
  bool pass = true;
  std::string detail;
  for (const auto& law : laws) {
    auto batch = BatchLaw::iid_assignment(law, p);
    auto lat = CompoundSnapshot(batch, P).lattice(index);
    double worst = 0.0;
    for (std::size_t r = 0; r < index->size(); ++r) {
      auto n = index->at(r);
      std::vector<std::uint32_t> i(n.begin(), n.end());
      worst = std::max(worst, std::abs(lat.prob[r] - testing::brute_compound(law, q, exit, i)));
    }
    pass = pass && worst <= 1e-8;
    detail += (detail.empty() ? "" : ", ") + law.family() + fmt(" %.2g", worst);
  }
  return {pass, detail};
}

Outcome a5() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  double worst = 0.0;
  for (std::size_t J = 1; J <= 3; ++J) {
    for (std::size_t m = 1; m <= 4; ++m) {
      Eigen::MatrixXd rows(m, J + 1);
      for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t k = 0; k <= J; ++k) rows(c, k) = u(rng);
        rows.row(c) /= rows.row(c).sum();
      }
      auto res = poisson_multinomial_pmf(rows);
      const auto& idx = *res.pmf.index;
      auto ref = testing::enumerate_categorical(
          rows, static_cast<std::uint32_t>(m), [&](const std::vector<std::uint32_t>& n) { return idx.rank(n); },
          idx.size());
      for (std::size_t r = 0; r < idx.size(); ++r) worst = std::max(worst, std::abs(res.pmf.prob[r] - ref[r]));
    }
  }
  return {worst <= 1e-10, fmt("max abs err %.3g", worst)};
}

Outcome a6() {
  struct Case {
    const char* name;
    BatchLaw batch;
    std::function<double(unsigned)> pmf;
  };
  std::vector<Case> cases = {
      {"const 2", BatchLaw::constant({2}), [](unsigned j) { return j == 2 ? 1.0 : 0.0; }},
      {"geometric 0.5", BatchLaw::iid_assignment(GeometricLaw{0.5}, {1.0}),
       [](unsigned j) { return j == 0 ? 0.0 : std::pow(0.5, j); }},
      {"poisson 2", BatchLaw::iid_assignment(PoissonLaw{2.0}, {1.0}),
       [](unsigned j) { return testing::poisson_pmf(2.0, j); }},
  };
  bool pass = true;
  std::string detail;
  for (auto& c : cases) {
    auto m = testing::mm_infty(c.batch);
    auto k = build_markov_kernel(m.nodes);
    auto est = expected_batch_occupancy(m, k);
    double series = 0.0, h = 0.0;
    for (unsigned j = 1; j <= 200; ++j) {
      h += 1.0 / j;
      series += c.pmf(j) * h;
    }
    double err = std::abs(est.value - series);
    pass = pass && est.finite() && err <= 1e-6;
    detail += (detail.empty() ? "" : ", ") + std::string(c.name) + fmt(" %.2g", err);
  }
  return {pass, detail};
}

Outcome a7() {
  auto k = build_markov_kernel(testing::mm_infty(BatchLaw::constant({1})).nodes);
  auto zeta = classify_ergodicity(testing::mm_infty(BatchLaw::iid_assignment(ZetaLaw{1.5}, {1.0})), k);
  auto lw = classify_ergodicity(testing::mm_infty(BatchLaw::iid_assignment(LogWeightedTailLaw{}, {1.0})), k);
  auto one = classify_ergodicity(testing::mm_infty(BatchLaw::constant({1})), k);
  bool pass = zeta.verdict == Verdict::ergodic && zeta.criterion == Criterion::log_moment &&
              lw.verdict == Verdict::non_ergodic && one.verdict == Verdict::ergodic &&
              one.criterion == Criterion::finite_mean_batch;
  return {pass, std::string("zeta ") + to_string(zeta.verdict) + "/" + to_string(zeta.criterion) + ", log-weighted " +
                    to_string(lw.verdict) + "/" + to_string(lw.criterion) + ", S=1 " + to_string(one.verdict) + "/" +
                    to_string(one.criterion)};
}

Outcome a8() {
  auto m = testing::mm_infty(BatchLaw::constant({2}));
  auto k = build_markov_kernel(m.nodes);
  double p = transient_zero_prob(m, k, 40.0);
  double err = std::abs(p - std::exp(-1.5));
  return {err <= 1e-3, fmt("P0 %.8f, err %.3g", p, err)};
}

Outcome a9() {
  auto m = testing::poisson_tandem();
  auto k = build_markov_kernel(m.nodes);
  auto res = transient_pmf(m, k, 3.0, 25);
  const auto& idx = *res.pmf.index;
  std::vector<std::size_t> mixed;
  for (std::size_t r = 0; r < idx.size(); ++r) {
    auto n = idx.at(r);
    if (n[0] >= 1 && n[1] >= 1) mixed.push_back(r);
  }
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> pick(0, mixed.size() - 1);
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    std::size_t r = mixed[pick(rng)];
    // default pivot is the last nonzero coordinate; use the first
    worst = std::max(worst, std::abs(res.recompute_entry(idx.at(r), 0) - res.pmf.prob[r]));
  }
  return {worst <= 1e-9, fmt("max change %.3g over 100 entries", worst)};
}

Outcome a10() {
  auto m = testing::poisson_tandem();
  SimulationPlan plan;
  plan.model = &m;
  plan.times = {1.0, 3.0};
  plan.replications = 100000;
  plan.seed = 1234;
  plan.cap = 25;
  std::vector<SimulationEstimate> runs;
  for (unsigned w : {1u, 4u, 8u}) {
    plan.workers = w;
    runs.push_back(run_simulation(plan));
  }
  bool same = true;
  for (std::size_t i = 1; i < runs.size(); ++i)
    for (std::size_t s = 0; s < plan.times.size(); ++s)
      same = same && runs[i].snapshots[s].counts == runs[0].snapshots[s].counts &&
             runs[i].snapshots[s].overflow == runs[0].snapshots[s].overflow;
  return {same, "workers 1, 4, 8"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
      {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
