#include "bqnet/univariate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "bqnet/errors.hpp"

namespace bqnet {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

double lfact(double n) { return std::lgamma(n + 1.0); }

bool is_integer(double s) { return std::abs(s - std::round(s)) < 1e-12; }

// Li_s(z) by its defining series; only used for z <= 0.5.
double polylog_series(double s, double z) {
  if (z == 0.0) return 0.0;
  double sum = 0.0;
  double zn = 1.0;
  for (int n = 1; n < 10000; ++n) {
    zn *= z;
    double term = zn * std::pow(static_cast<double>(n), -s);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

// riemann_zeta(s - k) for k = 0..120, cached per thread for the last order.
const std::vector<double>& shifted_zeta(double s) {
  thread_local double order = std::numeric_limits<double>::quiet_NaN();
  thread_local std::vector<double> table;
  if (!(order == s)) {
    table.assign(121, 0.0);
    for (int k = 0; k <= 120; ++k) {
      if (s - k != 1.0) table[static_cast<std::size_t>(k)] = std::riemann_zeta(s - k);
    }
    order = s;
  }
  return table;
}

// zeta(s) - Li_s(exp(-L)) for L in (0, ln 2], via the expansion of the
// polylogarithm about z = 1.
double zeta_minus_polylog(double s, double L) {
  if (L <= 0.0) return 0.0;
  const double mu = -L;
  double d = 0.0;
  int skip = -1;
  if (is_integer(s)) {
    const int m = static_cast<int>(std::round(s));
    double harmonic = 0.0;
    for (int k = 1; k <= m - 1; ++k) harmonic += 1.0 / k;
    d = -std::pow(mu, m - 1) / std::exp(lfact(m - 1)) * (harmonic - std::log(L));
    skip = m - 1;
  } else {
    d = -std::tgamma(1.0 - s) * std::pow(L, s - 1.0);
  }
  const auto& zs = shifted_zeta(s);
  double muk_over_kfact = 1.0;
  for (int k = 1; k <= 120; ++k) {
    muk_over_kfact *= mu / k;
    if (k == skip) continue;
    double term = zs[static_cast<std::size_t>(k)] * muk_over_kfact;
    d -= term;
    if (k > 4 && std::abs(term) < 1e-18 * std::abs(d)) break;
  }
  return d;
}

double zeta_complement(double s, double y) {
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 1.0;
  const double zeta = shifted_zeta(s)[0];
  if (y >= 0.5) return 1.0 - polylog_series(s, 1.0 - y) / zeta;
  return std::clamp(zeta_minus_polylog(s, -std::log1p(-y)) / zeta, 0.0, 1.0);
}

constexpr std::uint64_t kLogTailDirect = 4096;

double log_tail_term(double n) {
  double l = std::log(n);
  return 1.0 / (n * l * l);
}

// 20-point Gauss-Legendre nodes and weights on [-1, 1].
const std::array<std::pair<double, double>, 20>& gauss_legendre20() {
  static const auto table = [] {
    std::array<std::pair<double, double>, 20> t{};
    const int n = 20;
    for (int i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      t[static_cast<std::size_t>(i)] = {x, 2.0 / ((1.0 - x * x) * dp * dp)};
    }
    return t;
  }();
  return table;
}

// sum_{n > N} (1 - exp(-a n)) / (n log^2 n), with the sum replaced by the
// integral from N + 1/2 in u = log x. Integrating by parts and putting
// x = a e^u leaves (1 - e^{-x0}) / u0 + int_{x0}^inf e^{-x} / log(x / a) dx,
// x0 = a (N + 1/2), evaluated in v = log x on a fixed grid.
double log_tail_remainder(std::uint64_t N, double a) {
  const double u0 = std::log(static_cast<double>(N) + 0.5);
  if (!std::isfinite(a)) return 1.0 / u0;
  if (a <= 0.0) return 0.0;
  const double log_a = std::log(a);
  const double v0 = log_a + u0;
  double acc = -std::expm1(-std::exp(v0)) / u0;
  const double lo = std::max(v0, -45.0), hi = std::log(60.0);
  if (lo < hi) {
    const int pieces = static_cast<int>(std::ceil(hi - lo));
    const double w = (hi - lo) / pieces;
    const auto& gl = gauss_legendre20();
    double s = 0.0;
    for (int p = 0; p < pieces; ++p) {
      const double mid = lo + (p + 0.5) * w;
      for (const auto& [x, wt] : gl) {
        const double v = mid + 0.5 * w * x;
        s += wt * std::exp(v - std::exp(v)) / (v - log_a);
      }
    }
    acc += 0.5 * w * s;
  }
  return acc;
}

double log_tail_complement(double y) {
  if (y <= 0.0) return 0.0;
  const double c = log_weighted_tail_constant();
  const double lp = std::log1p(-y);
  double s = 0.0;
  for (std::uint64_t n = 2; n <= kLogTailDirect; ++n) {
    double w = y >= 1.0 ? 1.0 : -std::expm1(static_cast<double>(n) * lp);
    s += w * log_tail_term(static_cast<double>(n));
  }
  s += log_tail_remainder(kLogTailDirect, y >= 1.0 ? kInf : -lp);
  return std::clamp(c * s, 0.0, 1.0);
}

const std::vector<double>& log_tail_cdf_table() {
  static const std::vector<double> table = [] {
    const double c = log_weighted_tail_constant();
    std::vector<double> cdf(65537, 0.0);
    for (std::size_t n = 2; n < cdf.size(); ++n) cdf[n] = cdf[n - 1] + c * log_tail_term(static_cast<double>(n));
    return cdf;
  }();
  return table;
}

void validate(const UnivariateLaw::Variant& v) {
  std::visit(overloaded{
                 [](const BinomialLaw& b) {
                   if (!(b.prob >= 0.0 && b.prob <= 1.0)) throw ParameterError("binomial: prob must lie in [0, 1]");
                 },
                 [](const PoissonLaw& p) {
                   if (!(p.mean >= 0.0) || !std::isfinite(p.mean)) throw ParameterError("poisson: mean must be >= 0");
                 },
                 [](const NegativeBinomialLaw& nb) {
                   if (!(nb.shape > 0.0) || !(nb.scale > 0.0) || !std::isfinite(nb.shape) || !std::isfinite(nb.scale))
                     throw ParameterError("negative-binomial: shape and scale must be > 0");
                 },
                 [](const LogarithmicLaw& l) {
                   if (!(l.rho > 0.0 && l.rho < 1.0)) throw ParameterError("logarithmic: rho must lie in (0, 1)");
                 },
                 [](const GeometricLaw& g) {
                   if (!(g.ratio >= 0.0 && g.ratio < 1.0)) throw ParameterError("geometric: ratio must lie in [0, 1)");
                 },
                 [](const ZetaLaw& z) {
                   if (!(z.exponent > 1.0) || !std::isfinite(z.exponent))
                     throw ParameterError("zeta: exponent must be > 1");
                 },
                 [](const DegenerateLaw&) {},
                 [](const TableLaw& t) {
                   if (t.probs.empty()) throw ValidationError("table law: empty probability table");
                   double s = 0.0;
                   for (double p : t.probs) {
                     if (!(p >= 0.0)) throw ValidationError("table law: negative probability");
                     s += p;
                   }
                   if (std::abs(s - 1.0) > 1e-12) throw ValidationError("table law: probabilities must sum to 1");
                 },
                 [](const LogWeightedTailLaw&) {},
             },
             v);
}

}  // namespace

double log_weighted_tail_constant() {
  static const double c = [] {
    const std::uint64_t N = 1000000;
    double s = 0.0;
    for (std::uint64_t n = N; n >= 2; --n) s += log_tail_term(static_cast<double>(n));
    s += 1.0 / std::log(static_cast<double>(N) + 0.5);
    return 1.0 / s;
  }();
  return c;
}

double polylog(double s, double z) {
  if (!(s > 1.0)) throw ParameterError("polylog: order must be > 1");
  if (z <= 0.5) return polylog_series(s, z);
  return std::riemann_zeta(s) - zeta_minus_polylog(s, -std::log(z));
}

UnivariateLaw::UnivariateLaw(Variant v) : v_(std::move(v)) { validate(v_); }

std::string UnivariateLaw::family() const {
  return std::visit(overloaded{
                        [](const BinomialLaw&) { return std::string("binomial"); },
                        [](const PoissonLaw&) { return std::string("poisson"); },
                        [](const NegativeBinomialLaw&) { return std::string("negative-binomial"); },
                        [](const LogarithmicLaw&) { return std::string("logarithmic"); },
                        [](const GeometricLaw&) { return std::string("geometric"); },
                        [](const ZetaLaw&) { return std::string("zeta"); },
                        [](const DegenerateLaw&) { return std::string("degenerate"); },
                        [](const TableLaw&) { return std::string("finite-table"); },
                        [](const LogWeightedTailLaw&) { return std::string("log-weighted-tail"); },
                    },
                    v_);
}

std::optional<SundtJewell> UnivariateLaw::sundt_jewell() const {
  return std::visit(
      overloaded{
          [](const BinomialLaw& b) -> std::optional<SundtJewell> {
            if (b.prob >= 1.0) return std::nullopt;
            double odds = b.prob / (1.0 - b.prob);
            return SundtJewell{-odds, (b.trials + 1.0) * odds, 0, std::pow(1.0 - b.prob, b.trials)};
          },
          [](const PoissonLaw& p) -> std::optional<SundtJewell> {
            return SundtJewell{0.0, p.mean, 0, std::exp(-p.mean)};
          },
          [](const NegativeBinomialLaw& nb) -> std::optional<SundtJewell> {
            double a = nb.scale / (1.0 + nb.scale);
            return SundtJewell{a, (nb.shape - 1.0) * a, 0, std::pow(1.0 + nb.scale, -nb.shape)};
          },
          [](const LogarithmicLaw& l) -> std::optional<SundtJewell> {
            return SundtJewell{l.rho, -l.rho, 1, -l.rho / std::log1p(-l.rho)};
          },
          [](const GeometricLaw& g) -> std::optional<SundtJewell> {
            return SundtJewell{g.ratio, 0.0, 1, 1.0 - g.ratio};
          },
          [](const auto&) -> std::optional<SundtJewell> { return std::nullopt; },
      },
      v_);
}

double UnivariateLaw::pmf(std::uint64_t n) const {
  if (auto sj = sundt_jewell(); sj && sj->start_prob > 1e-300 && n < 100000) {
    return pmf_sequence(n).back();
  }
  const double x = static_cast<double>(n);
  return std::visit(
      overloaded{
          [x, n](const BinomialLaw& b) {
            if (n > b.trials) return 0.0;
            if (b.prob == 0.0) return n == 0 ? 1.0 : 0.0;
            if (b.prob == 1.0) return n == b.trials ? 1.0 : 0.0;
            double N = b.trials;
            return std::exp(lfact(N) - lfact(x) - lfact(N - x) + x * std::log(b.prob) +
                            (N - x) * std::log1p(-b.prob));
          },
          [x, n](const PoissonLaw& p) {
            if (p.mean == 0.0) return n == 0 ? 1.0 : 0.0;
            return std::exp(-p.mean + x * std::log(p.mean) - lfact(x));
          },
          [x](const NegativeBinomialLaw& nb) {
            return std::exp(std::lgamma(nb.shape + x) - std::lgamma(nb.shape) - lfact(x) +
                            x * std::log(nb.scale / (1.0 + nb.scale)) - nb.shape * std::log1p(nb.scale));
          },
          [x, n](const LogarithmicLaw& l) {
            if (n == 0) return 0.0;
            return -std::exp(x * std::log(l.rho)) / (x * std::log1p(-l.rho));
          },
          [x, n](const GeometricLaw& g) {
            if (n == 0) return 0.0;
            return (1.0 - g.ratio) * std::pow(g.ratio, x - 1.0);
          },
          [x, n](const ZetaLaw& z) {
            if (n == 0) return 0.0;
            return std::pow(x, -z.exponent) / shifted_zeta(z.exponent)[0];
          },
          [n](const DegenerateLaw& d) { return n == d.value ? 1.0 : 0.0; },
          [n](const TableLaw& t) { return n < t.probs.size() ? t.probs[n] : 0.0; },
          [x, n](const LogWeightedTailLaw&) {
            if (n < 2) return 0.0;
            return log_weighted_tail_constant() * log_tail_term(x);
          },
      },
      v_);
}

std::vector<double> UnivariateLaw::pmf_sequence(std::uint64_t nmax) const {
  std::vector<double> out(nmax + 1, 0.0);
  auto sj = sundt_jewell();
  if (sj && sj->start_prob > 1e-300) {
    if (sj->start <= nmax) {
      out[sj->start] = sj->start_prob;
      for (std::uint64_t n = sj->start + 1; n <= nmax; ++n) {
        out[n] = std::max(0.0, out[n - 1] * (sj->a + sj->b / static_cast<double>(n)));
      }
    }
    return out;
  }
  if (const auto* b = std::get_if<BinomialLaw>(&v_); b && b->prob >= 1.0) {
    if (b->trials <= nmax) out[b->trials] = 1.0;
    return out;
  }
  if (const auto* z = std::get_if<ZetaLaw>(&v_)) {
    const double norm = 1.0 / shifted_zeta(z->exponent)[0];
    for (std::uint64_t n = 1; n <= nmax; ++n) out[n] = norm * std::pow(static_cast<double>(n), -z->exponent);
    return out;
  }
  for (std::uint64_t n = 0; n <= nmax; ++n) out[n] = pmf(n);
  return out;
}

double UnivariateLaw::pgf(double z) const {
  return std::visit(overloaded{
                        [z](const BinomialLaw& b) { return std::pow(1.0 - b.prob + b.prob * z, b.trials); },
                        [z](const PoissonLaw& p) { return std::exp(p.mean * (z - 1.0)); },
                        [z](const NegativeBinomialLaw& nb) {
                          return std::pow(1.0 + nb.scale * (1.0 - z), -nb.shape);
                        },
                        [z](const LogarithmicLaw& l) { return std::log1p(-l.rho * z) / std::log1p(-l.rho); },
                        [z](const GeometricLaw& g) { return (1.0 - g.ratio) * z / (1.0 - g.ratio * z); },
                        [z](const ZetaLaw& zl) { return 1.0 - zeta_complement(zl.exponent, 1.0 - z); },
                        [z](const DegenerateLaw& d) { return std::pow(z, d.value); },
                        [z](const TableLaw& t) {
                          double acc = 0.0;
                          for (std::size_t n = t.probs.size(); n-- > 0;) acc = acc * z + t.probs[n];
                          return acc;
                        },
                        [z](const LogWeightedTailLaw&) { return 1.0 - log_tail_complement(1.0 - z); },
                    },
                    v_);
}

double UnivariateLaw::complement_pgf(double y) const {
  y = std::clamp(y, 0.0, 1.0);
  if (y == 0.0) return 0.0;
  return std::visit(
      overloaded{
          [y](const BinomialLaw& b) {
            if (b.prob * y >= 1.0) return b.trials > 0 ? 1.0 : 0.0;
            return -std::expm1(b.trials * std::log1p(-b.prob * y));
          },
          [y](const PoissonLaw& p) { return -std::expm1(-p.mean * y); },
          [y](const NegativeBinomialLaw& nb) { return -std::expm1(-nb.shape * std::log1p(nb.scale * y)); },
          [y](const LogarithmicLaw& l) { return -std::log1p(l.rho * y / (1.0 - l.rho)) / std::log1p(-l.rho); },
          [y](const GeometricLaw& g) { return y / (1.0 - g.ratio + g.ratio * y); },
          [y](const ZetaLaw& z) { return zeta_complement(z.exponent, y); },
          [y](const DegenerateLaw& d) {
            if (d.value == 0) return 0.0;
            if (y >= 1.0) return 1.0;
            return -std::expm1(d.value * std::log1p(-y));
          },
          [y](const TableLaw& t) {
            double acc = 0.0;
            for (std::size_t n = 1; n < t.probs.size(); ++n) {
              acc += t.probs[n] * (y >= 1.0 ? 1.0 : -std::expm1(static_cast<double>(n) * std::log1p(-y)));
            }
            return acc;
          },
          [y](const LogWeightedTailLaw&) { return log_tail_complement(y); },
      },
      v_);
}

std::optional<double> UnivariateLaw::mean() const {
  return std::visit(
      overloaded{
          [](const BinomialLaw& b) -> std::optional<double> { return b.trials * b.prob; },
          [](const PoissonLaw& p) -> std::optional<double> { return p.mean; },
          [](const NegativeBinomialLaw& nb) -> std::optional<double> { return nb.shape * nb.scale; },
          [](const LogarithmicLaw& l) -> std::optional<double> {
            return l.rho / ((1.0 - l.rho) * -std::log1p(-l.rho));
          },
          [](const GeometricLaw& g) -> std::optional<double> { return 1.0 / (1.0 - g.ratio); },
          [](const ZetaLaw& z) -> std::optional<double> {
            if (z.exponent <= 2.0) return std::nullopt;
            return std::riemann_zeta(z.exponent - 1.0) / std::riemann_zeta(z.exponent);
          },
          [](const DegenerateLaw& d) -> std::optional<double> { return d.value; },
          [](const TableLaw& t) -> std::optional<double> {
            double m = 0.0;
            for (std::size_t n = 0; n < t.probs.size(); ++n) m += n * t.probs[n];
            return m;
          },
          [](const LogWeightedTailLaw&) -> std::optional<double> { return std::nullopt; },
      },
      v_);
}

std::optional<double> UnivariateLaw::second_factorial_moment() const {
  return std::visit(
      overloaded{
          [](const BinomialLaw& b) -> std::optional<double> {
            return static_cast<double>(b.trials) * (b.trials - 1.0) * b.prob * b.prob;
          },
          [](const PoissonLaw& p) -> std::optional<double> { return p.mean * p.mean; },
          [](const NegativeBinomialLaw& nb) -> std::optional<double> {
            return nb.shape * (nb.shape + 1.0) * nb.scale * nb.scale;
          },
          [](const LogarithmicLaw& l) -> std::optional<double> {
            return l.rho * l.rho / ((1.0 - l.rho) * (1.0 - l.rho) * -std::log1p(-l.rho));
          },
          [](const GeometricLaw& g) -> std::optional<double> {
            return 2.0 * g.ratio / ((1.0 - g.ratio) * (1.0 - g.ratio));
          },
          [](const ZetaLaw& z) -> std::optional<double> {
            if (z.exponent <= 3.0) return std::nullopt;
            return (std::riemann_zeta(z.exponent - 2.0) - std::riemann_zeta(z.exponent - 1.0)) /
                   std::riemann_zeta(z.exponent);
          },
          [](const DegenerateLaw& d) -> std::optional<double> { return d.value * (d.value - 1.0); },
          [](const TableLaw& t) -> std::optional<double> {
            double m = 0.0;
            for (std::size_t n = 0; n < t.probs.size(); ++n) m += n * (n - 1.0) * t.probs[n];
            return m;
          },
          [](const LogWeightedTailLaw&) -> std::optional<double> { return std::nullopt; },
      },
      v_);
}

bool UnivariateLaw::finite_log_moment() const { return !std::holds_alternative<LogWeightedTailLaw>(v_); }

bool UnivariateLaw::finite_fractional_moment(double theta) const {
  if (std::holds_alternative<LogWeightedTailLaw>(v_)) return false;
  if (const auto* z = std::get_if<ZetaLaw>(&v_)) return z->exponent - theta > 1.0;
  return true;
}

std::optional<std::uint64_t> UnivariateLaw::support_max() const {
  return std::visit(overloaded{
                        [](const BinomialLaw& b) -> std::optional<std::uint64_t> { return b.trials; },
                        [](const PoissonLaw& p) -> std::optional<std::uint64_t> {
                          if (p.mean == 0.0) return 0;
                          return std::nullopt;
                        },
                        [](const GeometricLaw& g) -> std::optional<std::uint64_t> {
                          if (g.ratio == 0.0) return 1;
                          return std::nullopt;
                        },
                        [](const DegenerateLaw& d) -> std::optional<std::uint64_t> { return d.value; },
                        [](const TableLaw& t) -> std::optional<std::uint64_t> { return t.probs.size() - 1; },
                        [](const auto&) -> std::optional<std::uint64_t> { return std::nullopt; },
                    },
                    v_);
}

double UnivariateLaw::tail(std::uint64_t n) const {
  if (auto m = support_max(); m && n >= *m) return 0.0;
  if (const auto* g = std::get_if<GeometricLaw>(&v_)) return n == 0 ? 1.0 : std::pow(g->ratio, static_cast<double>(n));
  if (const auto* z = std::get_if<ZetaLaw>(&v_); z && n >= 1000) {
    double s = z->exponent;
    return std::pow(n + 0.5, 1.0 - s) / ((s - 1.0) * shifted_zeta(s)[0]);
  }
  if (std::holds_alternative<LogWeightedTailLaw>(v_)) {
    if (n < 2) return 1.0;
    if (n < log_tail_cdf_table().size()) return std::max(0.0, 1.0 - log_tail_cdf_table()[n]);
    return log_weighted_tail_constant() / std::log(n + 0.5);
  }
  auto seq = pmf_sequence(n);
  double cdf = 0.0;
  for (double p : seq) cdf += p;
  return std::max(0.0, 1.0 - cdf);
}

std::uint64_t UnivariateLaw::truncation_point(double eps, std::uint64_t hard_cap) const {
  if (auto m = support_max()) return std::min(*m, hard_cap);
  if (const auto* z = std::get_if<ZetaLaw>(&v_)) {
    double s = z->exponent;
    double n = std::pow((s - 1.0) * std::riemann_zeta(s) * eps, 1.0 / (1.0 - s));
    if (!(n < static_cast<double>(hard_cap))) return hard_cap;
    return std::max<std::uint64_t>(1000, static_cast<std::uint64_t>(n) + 1);
  }
  if (std::holds_alternative<LogWeightedTailLaw>(v_)) return hard_cap;
  if (const auto* g = std::get_if<GeometricLaw>(&v_)) {
    double n = std::ceil(std::log(eps) / std::log(g->ratio));
    return n < static_cast<double>(hard_cap) ? static_cast<std::uint64_t>(n) : hard_cap;
  }
  // Light-tailed families: extend the pmf sequence until the remaining mass
  // is below eps.
  std::uint64_t nmax = 64;
  for (;;) {
    nmax = std::min(nmax, hard_cap);
    auto seq = pmf_sequence(nmax);
    double cdf = 0.0;
    for (std::uint64_t n = 0; n <= nmax; ++n) {
      cdf += seq[n];
      // Past the mode, the remaining terms are decreasing; stop when both the
      // complement and the current term are negligible.
      if (1.0 - cdf <= eps && seq[n] <= eps) return n;
    }
    if (nmax == hard_cap) return hard_cap;
    nmax *= 2;
  }
}

std::uint64_t UnivariateLaw::sample(Rng& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return std::visit(
      overloaded{
          [&](const BinomialLaw& b) -> std::uint64_t {
            return std::binomial_distribution<std::uint64_t>(b.trials, b.prob)(rng);
          },
          [&](const PoissonLaw& p) -> std::uint64_t {
            if (p.mean == 0.0) return 0;
            return std::poisson_distribution<std::uint64_t>(p.mean)(rng);
          },
          [&](const NegativeBinomialLaw& nb) -> std::uint64_t {
            double lam = std::gamma_distribution<double>(nb.shape, nb.scale)(rng);
            if (lam <= 0.0) return 0;
            return std::poisson_distribution<std::uint64_t>(lam)(rng);
          },
          [&](const LogarithmicLaw& l) -> std::uint64_t {
            double u = unif(rng);
            double p = -l.rho / std::log1p(-l.rho);
            double cdf = p;
            std::uint64_t n = 1;
            while (u > cdf && p > 1e-300) {
              ++n;
              p *= l.rho * (n - 1.0) / static_cast<double>(n);
              cdf += p;
            }
            return n;
          },
          [&](const GeometricLaw& g) -> std::uint64_t {
            if (g.ratio == 0.0) return 1;
            return 1 + std::geometric_distribution<std::uint64_t>(1.0 - g.ratio)(rng);
          },
          [&](const ZetaLaw& z) -> std::uint64_t {
            // Devroye's rejection sampler for the Zipf law.
            const double s = z.exponent;
            const double b = std::pow(2.0, s - 1.0);
            for (;;) {
              double u = 1.0 - unif(rng);
              double v = unif(rng);
              double x = std::floor(std::pow(u, -1.0 / (s - 1.0)));
              if (!(x < 9.0e18)) throw SimulationError("zeta batch size exceeds representable range");
              double t = std::pow(1.0 + 1.0 / x, s - 1.0);
              if (v * x * (t - 1.0) / (b - 1.0) <= t / b) return static_cast<std::uint64_t>(x);
            }
          },
          [&](const DegenerateLaw& d) -> std::uint64_t { return d.value; },
          [&](const TableLaw& t) -> std::uint64_t {
            double u = unif(rng);
            double cdf = 0.0;
            for (std::size_t n = 0; n < t.probs.size(); ++n) {
              cdf += t.probs[n];
              if (u < cdf) return n;
            }
            return t.probs.size() - 1;
          },
          [&](const LogWeightedTailLaw&) -> std::uint64_t {
            const auto& cdf = log_tail_cdf_table();
            double u = unif(rng);
            if (u < cdf.back()) {
              auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
              return static_cast<std::uint64_t>(it - cdf.begin());
            }
            // Exact tail sampling by rejection from the continuous density
            // proportional to 1/(x log^2 x) on [n1, inf).
            const double n1 = static_cast<double>(cdf.size());
            auto ratio = [](double n) { return std::log1p(n) / (std::log(n) * n * std::log1p(1.0 / n)); };
            const double rmax = ratio(n1);
            for (;;) {
              double v = 1.0 - unif(rng);
              double x = std::pow(n1, 1.0 / v);
              if (!(x < 9.0e18)) throw SimulationError("log-weighted batch size exceeds representable range");
              double n = std::floor(x);
              if (unif(rng) * rmax <= ratio(n)) return static_cast<std::uint64_t>(n);
            }
          },
      },
      v_);
}

}  // namespace bqnet
