#pragma once

#include <variant>
#include <vector>

namespace bqnet {

struct ConstantRate {
  double rate = 0.0;
};

// rates[i] applies on [breakpoints[i], breakpoints[i+1]); the last rate
// extends to infinity. breakpoints[0] must be 0.
struct PiecewiseConstantRate {
  std::vector<double> breakpoints;
  std::vector<double> rates;
};

// lambda(t) = base + amplitude * sin(frequency * t + phase)
struct SinusoidalRate {
  double base = 1.0;
  double amplitude = 0.0;
  double frequency = 1.0;
  double phase = 0.0;
};

/// Rate function of the (possibly non-homogeneous) Poisson process that
/// drives batch epochs.
class ArrivalProcess {
 public:
  using Variant = std::variant<ConstantRate, PiecewiseConstantRate, SinusoidalRate>;

  ArrivalProcess() = default;
  explicit ArrivalProcess(Variant v);

  static ArrivalProcess constant(double rate);
  static ArrivalProcess piecewise(std::vector<double> breakpoints, std::vector<double> rates);
  static ArrivalProcess sinusoidal(double base, double amplitude, double frequency, double phase);

  double rate(double t) const;
  /// Lambda(t) = integral of rate over [0, t].
  double cumulative(double t) const;
  /// An upper bound for rate() on [a, b]; exact for constant and piecewise
  /// processes, base + |amplitude| for the sinusoid.
  double max_rate(double a, double b) const;
  bool homogeneous() const;
  /// Points in (a, b) where the rate is discontinuous.
  std::vector<double> breakpoints_in(double a, double b) const;

  const Variant& variant() const noexcept { return v_; }

 private:
  Variant v_{ConstantRate{1.0}};
};

}  // namespace bqnet
