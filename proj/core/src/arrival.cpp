#include "bqnet/arrival.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bqnet/errors.hpp"

namespace bqnet {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check(const ConstantRate& c) {
  if (!(c.rate >= 0.0) || !std::isfinite(c.rate)) {
    throw ParameterError("constant arrival rate must be finite and >= 0");
  }
}

void check(const PiecewiseConstantRate& p) {
  if (p.breakpoints.empty() || p.breakpoints.size() != p.rates.size()) {
    throw ValidationError("piecewise arrival: breakpoints and rates must be non-empty and equal length");
  }
  if (p.breakpoints.front() != 0.0) {
    throw ValidationError("piecewise arrival: first breakpoint must be 0");
  }
  for (std::size_t i = 1; i < p.breakpoints.size(); ++i) {
    if (!(p.breakpoints[i] > p.breakpoints[i - 1])) {
      throw ValidationError("piecewise arrival: breakpoints must be strictly increasing");
    }
  }
  for (double r : p.rates) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw ParameterError("piecewise arrival: rates must be finite and >= 0");
    }
  }
}

void check(const SinusoidalRate& s) {
  if (!(s.base > 0.0) || !std::isfinite(s.base)) {
    throw ParameterError("sinusoidal arrival: base must be > 0");
  }
  if (!(std::abs(s.amplitude) <= s.base)) {
    throw ParameterError("sinusoidal arrival: |amplitude| must not exceed base");
  }
  if (!std::isfinite(s.frequency) || !std::isfinite(s.phase)) {
    throw ParameterError("sinusoidal arrival: frequency and phase must be finite");
  }
}

}  // namespace

ArrivalProcess::ArrivalProcess(Variant v) : v_(std::move(v)) {
  std::visit([](const auto& x) { check(x); }, v_);
}

ArrivalProcess ArrivalProcess::constant(double rate) { return ArrivalProcess(ConstantRate{rate}); }

ArrivalProcess ArrivalProcess::piecewise(std::vector<double> breakpoints, std::vector<double> rates) {
  return ArrivalProcess(PiecewiseConstantRate{std::move(breakpoints), std::move(rates)});
}

ArrivalProcess ArrivalProcess::sinusoidal(double base, double amplitude, double frequency, double phase) {
  return ArrivalProcess(SinusoidalRate{base, amplitude, frequency, phase});
}

double ArrivalProcess::rate(double t) const {
  return std::visit(
      overloaded{
          [](const ConstantRate& c) { return c.rate; },
          [t](const PiecewiseConstantRate& p) {
            auto it = std::upper_bound(p.breakpoints.begin(), p.breakpoints.end(), t);
            std::size_t i = it == p.breakpoints.begin() ? 0 : static_cast<std::size_t>(it - p.breakpoints.begin()) - 1;
            return p.rates[i];
          },
          [t](const SinusoidalRate& s) {
            return std::max(0.0, s.base + s.amplitude * std::sin(s.frequency * t + s.phase));
          },
      },
      v_);
}

double ArrivalProcess::cumulative(double t) const {
  if (t <= 0.0) return 0.0;
  return std::visit(
      overloaded{
          [t](const ConstantRate& c) { return c.rate * t; },
          [t](const PiecewiseConstantRate& p) {
            double acc = 0.0;
            for (std::size_t i = 0; i < p.breakpoints.size(); ++i) {
              double lo = p.breakpoints[i];
              if (lo >= t) break;
              double hi = i + 1 < p.breakpoints.size() ? std::min(p.breakpoints[i + 1], t) : t;
              acc += p.rates[i] * (hi - lo);
            }
            return acc;
          },
          [t](const SinusoidalRate& s) {
            if (s.frequency == 0.0) return (s.base + s.amplitude * std::sin(s.phase)) * t;
            return s.base * t +
                   s.amplitude / s.frequency * (std::cos(s.phase) - std::cos(s.frequency * t + s.phase));
          },
      },
      v_);
}

double ArrivalProcess::max_rate(double a, double b) const {
  return std::visit(
      overloaded{
          [](const ConstantRate& c) { return c.rate; },
          [a, b](const PiecewiseConstantRate& p) {
            double m = 0.0;
            for (std::size_t i = 0; i < p.breakpoints.size(); ++i) {
              double lo = p.breakpoints[i];
              double hi = i + 1 < p.breakpoints.size() ? p.breakpoints[i + 1] : INFINITY;
              if (hi > a && lo <= b) m = std::max(m, p.rates[i]);
            }
            return m;
          },
          [](const SinusoidalRate& s) { return s.base + std::abs(s.amplitude); },
      },
      v_);
}

bool ArrivalProcess::homogeneous() const {
  return std::visit(
      overloaded{
          [](const ConstantRate&) { return true; },
          [](const PiecewiseConstantRate& p) {
            return std::all_of(p.rates.begin(), p.rates.end(), [&](double r) { return r == p.rates.front(); });
          },
          [](const SinusoidalRate& s) { return s.amplitude == 0.0 || s.frequency == 0.0; },
      },
      v_);
}

std::vector<double> ArrivalProcess::breakpoints_in(double a, double b) const {
  std::vector<double> out;
  if (const auto* p = std::get_if<PiecewiseConstantRate>(&v_)) {
    for (double x : p->breakpoints) {
      if (x > a && x < b) out.push_back(x);
    }
  }
  return out;
}

}  // namespace bqnet
