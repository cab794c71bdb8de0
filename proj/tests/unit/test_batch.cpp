#include <doctest.h>

#include <bqnet/batch.hpp>
#include <bqnet/errors.hpp>
#include <bqnet/univariate.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "support.hpp"

using namespace bqnet;

namespace {

double direct_pmf(const UnivariateLaw& law, unsigned n) {
  return std::visit(
      [n](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, BinomialLaw>) {
          if (n > f.trials) return 0.0;
          return std::exp(std::lgamma(f.trials + 1.0) - std::lgamma(n + 1.0) - std::lgamma(f.trials - n + 1.0) +
                          n * std::log(f.prob) + (f.trials - n) * std::log1p(-f.prob));
        } else if constexpr (std::is_same_v<T, PoissonLaw>) {
          return testing::poisson_pmf(f.mean, n);
        } else if constexpr (std::is_same_v<T, NegativeBinomialLaw>) {
          double p = f.scale / (1.0 + f.scale);
          return std::exp(std::lgamma(f.shape + n) - std::lgamma(f.shape) - std::lgamma(n + 1.0) + n * std::log(p) +
                          f.shape * std::log1p(-p));
        } else if constexpr (std::is_same_v<T, LogarithmicLaw>) {
          return n == 0 ? 0.0 : -std::pow(f.rho, n) / (n * std::log1p(-f.rho));
        } else {
          return std::nan("");
        }
      },
      law.variant());
}

}  // namespace

TEST_CASE("batch pgf examples") {
  std::vector<double> ones = {1.0, 1.0};
  auto c = BatchLaw::constant({2, 1});
  CHECK(c.pgf(ones) == 1.0);
  std::vector<double> z = {0.5, 0.4};
  CHECK(c.pgf(z) == doctest::Approx(0.1).epsilon(1e-15));

  auto p = BatchLaw::iid_assignment(PoissonLaw{2.0}, {0.6, 0.4});
  std::vector<double> zero = {0.0, 0.0};
  CHECK(p.pgf(zero) == doctest::Approx(0.135335283236613).epsilon(1e-12));
  CHECK(p.pgf(ones) == doctest::Approx(1.0));

  std::vector<double> three = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(c.pgf(three), ValidationError);
  CHECK_THROWS_AS(BatchLaw::iid_assignment(LogarithmicLaw{1.0}, {1.0}), ParameterError);
  CHECK_THROWS_AS(BatchLaw::iid_assignment(PoissonLaw{1.0}, {0.5, 0.4}), ValidationError);
}

TEST_CASE("batch pmf examples") {
  auto c = BatchLaw::constant({2, 0});
  std::vector<std::uint32_t> a = {2, 0}, b = {1, 1};
  CHECK(c.pmf(a) == 1.0);
  CHECK(c.pmf(b) == 0.0);

  auto bin = BatchLaw::iid_assignment(BinomialLaw{2, 0.5}, {1.0});
  std::vector<std::uint32_t> one = {1};
  CHECK(bin.pmf(one) == doctest::Approx(0.5));

  UnivariateLaw lg(LogarithmicLaw{0.5});
  CHECK(lg.pmf(1) == doctest::Approx(0.721347520444482).epsilon(1e-12));

  auto pois = BatchLaw::iid_assignment(PoissonLaw{2.0}, {0.6, 0.4});
  std::vector<std::uint32_t> n = {2, 1};
  // thinned Poissons are independent
  CHECK(pois.pmf(n) == doctest::Approx(testing::poisson_pmf(1.2, 2) * testing::poisson_pmf(0.8, 1)).epsilon(1e-12));

  auto t = BatchLaw::table({{{1, 0}, 0.25}, {{0, 2}, 0.75}});
  std::vector<std::uint32_t> q = {0, 2};
  CHECK(t.pmf(q) == 0.75);
  CHECK_THROWS_AS(BatchLaw::table({{{1, 0}, 0.25}, {{0, 2}, 0.7}}), ValidationError);
}

TEST_CASE("factorial moments") {
  auto p = BatchLaw::iid_assignment(PoissonLaw{2.0}, {0.6, 0.4});
  auto m1 = p.first_factorial_moments();
  REQUIRE(m1);
  CHECK((*m1)(0) == doctest::Approx(1.2));
  CHECK((*m1)(1) == doctest::Approx(0.8));
  auto m2 = p.second_factorial_moments();
  REQUIRE(m2);
  CHECK((*m2)(0, 1) == doctest::Approx(0.96));
  CHECK((*m2)(0, 0) == doctest::Approx(1.44));

  auto c = BatchLaw::constant({2, 1});
  auto c2 = c.second_factorial_moments();
  REQUIRE(c2);
  CHECK((*c2)(0, 0) == 2.0);
  CHECK((*c2)(0, 1) == 2.0);
  CHECK((*c2)(1, 0) == 2.0);
  CHECK((*c2)(1, 1) == 0.0);

  auto z = BatchLaw::iid_assignment(ZetaLaw{1.5}, {1.0});
  CHECK_FALSE(z.first_factorial_moments().has_value());
  CHECK_FALSE(BatchLaw::iid_assignment(ZetaLaw{2.5}, {1.0}).second_factorial_moments().has_value());
  CHECK(BatchLaw::iid_assignment(ZetaLaw{2.5}, {1.0}).first_factorial_moments().has_value());
}

TEST_CASE("sundt-jewell recursion matches closed forms") {
  std::vector<UnivariateLaw> laws = {BinomialLaw{30, 0.3}, PoissonLaw{7.5}, NegativeBinomialLaw{2.5, 3.0},
                                     LogarithmicLaw{0.8}};
  for (const auto& law : laws) {
    auto sj = law.sundt_jewell();
    REQUIRE(sj.has_value());
    auto seq = law.pmf_sequence(100);
    for (unsigned n = 0; n <= 100; ++n) {
      double d = direct_pmf(law, n);
      CHECK(std::abs(seq[n] - d) <= 1e-12);
      CHECK(std::abs(law.pmf(n) - d) <= 1e-12);
    }
  }
}

TEST_CASE("univariate families sum to one under quantile truncation") {
  std::vector<UnivariateLaw> laws = {BinomialLaw{10, 0.4}, PoissonLaw{3.0},   NegativeBinomialLaw{1.5, 2.0},
                                     LogarithmicLaw{0.9},  GeometricLaw{0.7}, ZetaLaw{3.0},
                                     DegenerateLaw{4},     TableLaw{{0.2, 0.3, 0.5}}};
  for (const auto& law : laws) {
    auto cut = law.truncation_point(1e-12, 1000000);
    auto seq = law.pmf_sequence(cut);
    double s = 0.0;
    for (double p : seq) s += p;
    CHECK(std::abs(s - 1.0) <= 1e-10);
  }
}

TEST_CASE("zeta complement pgf against high-precision values") {
  UnivariateLaw z(ZetaLaw{1.5});
  CHECK(z.complement_pgf(0.1) == doctest::Approx(0.382003612391035927958696081604).epsilon(1e-10));
  CHECK(z.complement_pgf(0.01) == doctest::Approx(0.130423551825710071772287208026).epsilon(1e-10));
  CHECK(z.complement_pgf(1e-4) == doctest::Approx(0.0135141076098409763864230884642).epsilon(1e-10));
  CHECK(z.complement_pgf(0.5) == doctest::Approx(0.760816522352225026514567727561).epsilon(1e-10));
  CHECK(polylog(2.0, 1.0) == doctest::Approx(std::numbers::pi * std::numbers::pi / 6).epsilon(1e-12));
}

TEST_CASE("log-weighted tail law") {
  UnivariateLaw w(LogWeightedTailLaw{});
  double c = log_weighted_tail_constant();
  CHECK(w.pmf(0) == 0.0);
  CHECK(w.pmf(1) == 0.0);
  CHECK(w.pmf(2) == doctest::Approx(c / (2 * std::log(2.0) * std::log(2.0))));
  CHECK_FALSE(w.mean().has_value());
  CHECK_FALSE(w.finite_log_moment());
  CHECK(w.tail(1) == doctest::Approx(1.0));
  // sum_{n>=2} c / (n ln^2 n) = 1
  double s = 0.0;
  for (unsigned n = 2; n <= 100000; ++n) s += w.pmf(n);
  CHECK(s + w.tail(100000) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("log and fractional moment flags") {
  CHECK(UnivariateLaw(ZetaLaw{1.5}).finite_log_moment());
  CHECK(UnivariateLaw(ZetaLaw{1.5}).finite_fractional_moment(0.4));
  CHECK_FALSE(UnivariateLaw(ZetaLaw{1.5}).finite_fractional_moment(0.5));
  CHECK(UnivariateLaw(PoissonLaw{1.0}).finite_fractional_moment(1.0));
  CHECK(BatchLaw::iid_assignment(ZetaLaw{1.2}, {0.5, 0.5}).finite_log_moment());
  CHECK_FALSE(BatchLaw::independent({LogWeightedTailLaw{}, PoissonLaw{1.0}}).finite_log_moment());
}

TEST_CASE("pgf/pmf consistency and monotonicity") {
  std::vector<BatchLaw> laws = {BatchLaw::iid_assignment(PoissonLaw{2.0}, {0.6, 0.4}),
                                BatchLaw::iid_assignment(NegativeBinomialLaw{2.0, 1.5}, {0.3, 0.7}),
                                BatchLaw::independent({GeometricLaw{0.5}, BinomialLaw{3, 0.2}}),
                                BatchLaw::table({{{1, 0}, 0.25}, {{0, 2}, 0.5}, {{3, 1}, 0.25}})};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 0.95);
  for (const auto& law : laws) {
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> z = {u(rng), u(rng)};
      double target = law.pgf(z);
      double prev = -1.0;
      for (unsigned K : {10u, 20u, 40u, 80u}) {
        double s = 0.0;
        for (unsigned a = 0; a <= K; ++a)
          for (unsigned b = 0; a + b <= K; ++b) {
            std::vector<std::uint32_t> n = {a, b};
            s += law.pmf(n) * std::pow(z[0], a) * std::pow(z[1], b);
          }
        CHECK(s <= target + 1e-12);
        CHECK(s >= prev - 1e-15);
        prev = s;
      }
      CHECK(prev == doctest::Approx(target).epsilon(1e-9));
      std::vector<double> up = {z[0] + 0.04, z[1]};
      CHECK(law.pgf(up) >= target);
      std::vector<double> y = {1 - z[0], 1 - z[1]};
      CHECK(law.complement_pgf(y) == doctest::Approx(1 - target).epsilon(1e-12));
    }
  }
}

TEST_CASE("batch sampling") {
  Rng rng(3);
  auto c = BatchLaw::constant({2, 1});
  for (int i = 0; i < 10; ++i) CHECK(c.sample(rng) == Occupancy{2, 1});
}
