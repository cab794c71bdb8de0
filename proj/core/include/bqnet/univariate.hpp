#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "bqnet/random.hpp"

namespace bqnet {

struct BinomialLaw {
  unsigned trials = 1;
  double prob = 0.5;
};
struct PoissonLaw {
  double mean = 1.0;
};
// PGF [1 + scale (1 - z)]^(-shape)
struct NegativeBinomialLaw {
  double shape = 1.0;
  double scale = 1.0;
};
// P(n) = -rho^n / (n log(1 - rho)), n >= 1
struct LogarithmicLaw {
  double rho = 0.5;
};
// P(n) = (1 - ratio) ratio^(n-1), n >= 1
struct GeometricLaw {
  double ratio = 0.5;
};
// P(n) = n^(-s) / zeta(s), n >= 1
struct ZetaLaw {
  double exponent = 2.0;
};
struct DegenerateLaw {
  unsigned value = 1;
};
// probs[n] = P(S = n)
struct TableLaw {
  std::vector<double> probs;
};
// P(n) = c / (n log(n)^2), n >= 2: finite mean is impossible and the
// logarithmic moment diverges.
struct LogWeightedTailLaw {};

/// Coefficients of the recursion P(n) = P(n-1) (a + b/n), n > start.
struct SundtJewell {
  double a = 0.0;
  double b = 0.0;
  unsigned start = 0;
  double start_prob = 1.0;
};

/// Univariate batch-size law on the non-negative integers.
class UnivariateLaw {
 public:
  using Variant = std::variant<BinomialLaw, PoissonLaw, NegativeBinomialLaw, LogarithmicLaw, GeometricLaw,
                               ZetaLaw, DegenerateLaw, TableLaw, LogWeightedTailLaw>;

  UnivariateLaw() = default;
  UnivariateLaw(Variant v);  // NOLINT(google-explicit-constructor)
  template <class T>
    requires(!std::is_same_v<std::decay_t<T>, UnivariateLaw> && !std::is_same_v<std::decay_t<T>, Variant> &&
             std::is_constructible_v<Variant, T>)
  UnivariateLaw(T&& alt)  // NOLINT(google-explicit-constructor)
      : UnivariateLaw(Variant(std::forward<T>(alt))) {}

  const Variant& variant() const noexcept { return v_; }
  std::string family() const;

  double pmf(std::uint64_t n) const;
  /// P(S = 0), ..., P(S = nmax); Sundt-Jewell families use their (a, b)
  /// recursion when the seed probability is representable.
  std::vector<double> pmf_sequence(std::uint64_t nmax) const;
  std::optional<SundtJewell> sundt_jewell() const;

  double pgf(double z) const;
  /// 1 - G(1 - y), evaluated without cancellation for small y.
  double complement_pgf(double y) const;

  /// E[S]; nullopt when infinite.
  std::optional<double> mean() const;
  /// E[S (S - 1)]; nullopt when infinite.
  std::optional<double> second_factorial_moment() const;
  bool finite_log_moment() const;
  /// Whether E[S^theta] is finite, theta in (0, 1].
  bool finite_fractional_moment(double theta) const;

  std::optional<std::uint64_t> support_max() const;
  /// P(S > n).
  double tail(std::uint64_t n) const;
  /// Smallest n with P(S > n) <= eps, or hard_cap if that is reached first.
  std::uint64_t truncation_point(double eps, std::uint64_t hard_cap) const;

  std::uint64_t sample(Rng& rng) const;

 private:
  Variant v_{DegenerateLaw{1}};
};

/// c in P(n) = c / (n log(n)^2).
double log_weighted_tail_constant();

/// Polylogarithm Li_s(z) for s > 1, z in [0, 1].
double polylog(double s, double z);

}  // namespace bqnet
