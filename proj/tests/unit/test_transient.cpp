#include <doctest.h>

#include <bqnet/errors.hpp>
#include <bqnet/simulate.hpp>
#include <bqnet/transient.hpp>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace bqnet;

namespace {

double poisson_max_err(const LatticePmf& pmf, double mean) {
  double worst = 0.0;
  for (std::uint32_t n = 0; n <= pmf.cap(); ++n) {
    std::vector<std::uint32_t> v = {n};
    worst = std::max(worst, std::abs(pmf.at(v) - testing::poisson_pmf(mean, n)));
  }
  return worst;
}

double pgf_from_pmf(const LatticePmf& pmf, std::span<const double> z) {
  double s = 0.0;
  for (std::size_t r = 0; r < pmf.prob.size(); ++r) {
    auto n = pmf.index->at(r);
    double term = pmf.prob[r];
    for (std::size_t k = 0; k < n.size(); ++k) term *= std::pow(z[k], n[k]);
    s += term;
  }
  return s;
}

}  // namespace

TEST_CASE("transient pgf examples") {
  auto mm = testing::mm_infty(BatchLaw::constant({1}));
  auto k = build_markov_kernel(mm.nodes);
  std::vector<double> one = {1.0}, zero = {0.0};
  CHECK(transient_pgf(mm, k, 1.0, one) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(transient_pgf(mm, k, 1.0, zero) == doctest::Approx(std::exp(-(1 - std::exp(-1.0)))).epsilon(1e-9));

  auto a2 = testing::poisson_tandem();
  auto k2 = build_markov_kernel(a2.nodes);
  std::vector<double> half = {0.5, 0.5};
  auto pmf = transient_pmf(a2, k2, 3.0, 25);
  CHECK(std::abs(pgf_from_pmf(pmf.pmf, half) - transient_pgf(a2, k2, 3.0, half)) <= 1e-4);
}

TEST_CASE("M/M/inf transient pmf is Poisson") {
  auto mm = testing::mm_infty(BatchLaw::constant({1}));
  auto k = build_markov_kernel(mm.nodes);
  auto res = transient_pmf(mm, k, 1.0, 20);
  CHECK(poisson_max_err(res.pmf, 1 - std::exp(-1.0)) <= 1e-6);
  CHECK(res.pmf.tail_mass >= -1e-9);

  auto at0 = transient_pmf(mm, k, 0.0, 10);
  std::vector<std::uint32_t> zero = {0};
  CHECK(at0.pmf.at(zero) == 1.0);
  CHECK(at0.pmf.assigned() == 1.0);
}

TEST_CASE("M_t/G/inf reduction with time-varying rates") {
  SUBCASE("sinusoidal") {
    auto m = testing::mm_infty(BatchLaw::constant({1}));
    m.arrival = ArrivalProcess::sinusoidal(1.0, 0.5, 1.0, 0.0);
    auto k = build_markov_kernel(m.nodes);
    double t = 3.0;
    double mean = 1 - std::exp(-t) + 0.25 * (std::sin(t) - std::cos(t) + std::exp(-t));
    CHECK(poisson_max_err(transient_pmf(m, k, t, 20).pmf, mean) <= 1e-6);
    auto mo = transient_moments(m, k, t);
    REQUIRE(mo.mean);
    CHECK((*mo.mean)(0) == doctest::Approx(mean).epsilon(1e-8));
  }
  SUBCASE("piecewise") {
    auto m = testing::mm_infty(BatchLaw::constant({1}));
    m.arrival = ArrivalProcess::piecewise({0.0, 1.0}, {2.0, 0.5});
    auto k = build_markov_kernel(m.nodes);
    double mean = 2 * (std::exp(-2.0) - std::exp(-3.0)) + 0.5 * (1 - std::exp(-2.0));
    CHECK(poisson_max_err(transient_pmf(m, k, 3.0, 20).pmf, mean) <= 1e-6);
  }
}

TEST_CASE("empty-network probability") {
  auto mm = testing::mm_infty(BatchLaw::constant({1}));
  auto k = build_markov_kernel(mm.nodes);
  CHECK(transient_zero_prob(mm, k, 0.0) == 1.0);
  CHECK(std::abs(transient_zero_prob(mm, k, 30.0) - std::exp(-1.0)) <= 1e-6);

  auto two = testing::mm_infty(BatchLaw::constant({2}));
  CHECK(std::abs(transient_zero_prob(two, k, 40.0) - std::exp(-1.5)) <= 1e-4);

  auto zeta = testing::mm_infty(BatchLaw::iid_assignment(ZetaLaw{1.5}, {1.0}));
  // E[W] = sum P(S = j) H_j = 2.30568003...
  CHECK(std::abs(transient_zero_prob(zeta, k, 60.0) - std::exp(-2.30568003)) <= 1e-3);
}

TEST_CASE("transient moments") {
  auto mm = testing::mm_infty(BatchLaw::constant({1}));
  auto k = build_markov_kernel(mm.nodes);
  auto mo = transient_moments(mm, k, 1.0);
  REQUIRE(mo.mean);
  REQUIRE(mo.covariance);
  CHECK((*mo.mean)(0) == doctest::Approx(1 - std::exp(-1.0)).epsilon(1e-8));
  CHECK(std::abs((*mo.covariance)(0, 0) - (*mo.mean)(0)) <= 1e-8);

  // S = 2: C(u) ~ Binomial(2, e^{-u}), E[C^2] = 2 e^{-u} + 2 e^{-2u}
  auto two = testing::mm_infty(BatchLaw::constant({2}));
  auto m2 = transient_moments(two, k, 2.0);
  CHECK((*m2.covariance)(0, 0) == doctest::Approx(2 * (1 - std::exp(-2.0)) + (1 - std::exp(-4.0))).epsilon(1e-9));

  auto zeta = testing::mm_infty(BatchLaw::iid_assignment(ZetaLaw{1.5}, {1.0}));
  auto mz = transient_moments(zeta, k, 1.0);
  CHECK_FALSE(mz.mean.has_value());
  CHECK_FALSE(mz.covariance.has_value());

  auto z25 = testing::mm_infty(BatchLaw::iid_assignment(ZetaLaw{2.5}, {1.0}));
  auto m25 = transient_moments(z25, k, 1.0);
  CHECK(m25.mean.has_value());
  CHECK_FALSE(m25.covariance.has_value());
}

TEST_CASE("mean matches finite differences of the pgf") {
  // z <= 1, so a one-sided second-order difference at z = 1
  std::vector<NetworkModel> models = {testing::poisson_tandem()};
  NetworkModel c;
  c.arrival = ArrivalProcess::constant(1.0);
  c.batch = BatchLaw::independent({NegativeBinomialLaw{2.0, 0.5}, BinomialLaw{3, 0.4}});
  c.nodes = {testing::exp_node(1.0, {0.0, 0.5, 0.5}), testing::exp_node(2.0, {0.3, 0.0, 0.7})};
  models.push_back(c);
  const double h = 1e-5;
  for (const auto& m : models) {
    auto k = build_markov_kernel(m.nodes);
    double t = 2.0;
    auto mo = transient_moments(m, k, t);
    REQUIRE(mo.mean);
    for (std::size_t j = 0; j < m.J(); ++j) {
      std::vector<double> z1(m.J(), 1.0), z2(m.J(), 1.0), z0(m.J(), 1.0);
      z1[j] = 1 - h;
      z2[j] = 1 - 2 * h;
      double d = (3 * transient_pgf(m, k, t, z0) - 4 * transient_pgf(m, k, t, z1) + transient_pgf(m, k, t, z2)) /
                 (2 * h);
      CHECK(std::abs(d - (*mo.mean)(j)) <= 1e-4 * std::abs((*mo.mean)(j)));
    }
  }
}

TEST_CASE("recursion and pgf agree, mass is conserved") {
  auto a2 = testing::poisson_tandem();
  auto k = build_markov_kernel(a2.nodes);
  auto res = transient_pmf(a2, k, 3.0, 25);
  CHECK(std::abs(res.pmf.assigned() + res.pmf.tail_mass - 1.0) <= 1e-9);
  CHECK(res.pmf.assigned() <= 1 + 1e-9);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 0.99);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> z = {u(rng), u(rng)};
    double s = pgf_from_pmf(res.pmf, z);
    double g = transient_pgf(a2, k, 3.0, z);
    CHECK(s >= g - res.pmf.tail_mass - 1e-9);
    CHECK(s <= g + 1e-9);
  }
}

TEST_CASE("pivot invariance") {
  NetworkModel m;
  m.arrival = ArrivalProcess::constant(1.5);
  m.batch = BatchLaw::iid_assignment(NegativeBinomialLaw{1.5, 1.0}, {0.5, 0.3, 0.2});
  m.nodes = {testing::exp_node(1.0, {0.0, 0.5, 0.2, 0.3}), testing::exp_node(2.0, {0.0, 0.0, 0.6, 0.4}),
             testing::exp_node(0.7, {0.1, 0.0, 0.0, 0.9})};
  auto k = build_markov_kernel(m.nodes);
  auto res = transient_pmf(m, k, 1.5, 12);
  const auto& idx = *res.pmf.index;
  double worst = 0.0;
  for (std::size_t r = 1; r < idx.size(); ++r) {
    auto n = idx.at(r);
    for (std::size_t v = 0; v < n.size(); ++v) {
      if (n[v] == 0) continue;
      worst = std::max(worst, std::abs(res.recompute_entry(n, v) - res.pmf.prob[r]));
    }
  }
  CHECK(worst <= 1e-9);
  std::vector<std::uint32_t> n = {1, 0, 2};
  CHECK_THROWS_AS(res.recompute_entry(n, 1), DomainError);
}

TEST_CASE("monotone refinement") {
  auto a2 = testing::poisson_tandem();
  auto k = build_markov_kernel(a2.nodes);
  QuadratureSpec base;
  QuadratureSpec fine;
  fine.nodes = 2 * (base.nodes - 1) + 1;
  auto coarse = transient_pmf(a2, k, 3.0, 15, base);
  auto refined = transient_pmf(a2, k, 3.0, 15, fine);
  for (std::size_t r = 0; r < coarse.pmf.prob.size(); ++r) {
    double e = refined.pmf.prob[r];
    CHECK(std::abs(coarse.pmf.prob[r] - e) <= base.rtol * e + base.atol);
  }
}

TEST_CASE("constant-batch tandem against simulation") {
  NetworkModel m;
  m.arrival = ArrivalProcess::constant(1.0);
  m.batch = BatchLaw::constant({2, 0});
  m.nodes = testing::tandem();
  auto k = build_markov_kernel(m.nodes);
  auto res = transient_pmf(m, k, 2.0, 12);
  SimulationPlan plan;
  plan.model = &m;
  plan.times = {2.0};
  plan.replications = 1000000;
  plan.seed = 77;
  plan.cap = 12;
  plan.workers = 4;
  auto est = run_simulation(plan);
  double tv = 0.0;
  for (std::size_t r = 0; r < res.pmf.prob.size(); ++r) tv += std::abs(res.pmf.prob[r] - est.probability(0, r));
  tv += std::abs(res.pmf.tail_mass - est.empirical(0).tail_mass);
  CHECK(0.5 * tv <= 0.005);
}

TEST_CASE("transient errors") {
  auto a2 = testing::poisson_tandem();
  auto k = build_markov_kernel(a2.nodes);
  std::vector<double> z = {0.5, 0.5};
  CHECK_THROWS_AS(transient_pgf(a2, k, -1.0, z), DomainError);
  std::vector<double> bad = {1.5, 0.5};
  CHECK_THROWS_AS(transient_pgf(a2, k, 1.0, bad), ValidationError);
  QuadratureSpec q;
  q.nodes = 3;
  q.rtol = 1e-16;
  q.atol = 0.0;
  q.max_doublings = 1;
  try {
    transient_pgf(a2, k, 5.0, z, q);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.last_estimate() != e.previous_estimate());
  }
}
