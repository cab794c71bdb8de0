#include "bqnet/network.hpp"

#include <algorithm>
#include <cmath>

#include "bqnet/errors.hpp"

namespace bqnet {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void validate(const ServiceLaw::Variant& v) {
  std::visit(overloaded{
                 [](const ExponentialService& e) {
                   if (!(e.rate > 0.0) || !std::isfinite(e.rate)) throw ParameterError("exponential service: rate must be > 0");
                 },
                 [](const ErlangService& e) {
                   if (e.shape < 1) throw ParameterError("erlang service: shape must be >= 1");
                   if (!(e.rate > 0.0) || !std::isfinite(e.rate)) throw ParameterError("erlang service: rate must be > 0");
                 },
                 [](const DeterministicService& d) {
                   if (!(d.delay >= 0.0) || !std::isfinite(d.delay)) throw ParameterError("deterministic service: delay must be >= 0");
                 },
                 [](const TabulatedService& t) {
                   if (t.times.size() < 2 || t.times.size() != t.cdf.size()) {
                     throw ValidationError("tabulated service: need at least two (time, cdf) points");
                   }
                   if (t.times.front() != 0.0) throw ValidationError("tabulated service: first time must be 0");
                   for (std::size_t i = 0; i < t.times.size(); ++i) {
                     if (!(t.cdf[i] >= 0.0 && t.cdf[i] <= 1.0)) throw ValidationError("tabulated service: cdf values must lie in [0, 1]");
                     if (i > 0 && !(t.times[i] > t.times[i - 1])) {
                       throw ValidationError("tabulated service: times must be strictly increasing");
                     }
                     if (i > 0 && t.cdf[i] < t.cdf[i - 1]) throw ValidationError("tabulated service: cdf is not monotone");
                   }
                 },
                 [](const AbsorbingService&) {},
             },
             v);
}

}  // namespace

ServiceLaw::ServiceLaw(Variant v) : v_(std::move(v)) { validate(v_); }

std::string ServiceLaw::name() const {
  return std::visit(overloaded{
                        [](const ExponentialService&) { return std::string("exponential"); },
                        [](const ErlangService&) { return std::string("erlang"); },
                        [](const DeterministicService&) { return std::string("deterministic"); },
                        [](const TabulatedService&) { return std::string("tabulated"); },
                        [](const AbsorbingService&) { return std::string("absorbing"); },
                    },
                    v_);
}

double ServiceLaw::cdf(double t) const {
  if (t < 0.0) return 0.0;
  return std::visit(overloaded{
                        [t](const ExponentialService& e) { return -std::expm1(-e.rate * t); },
                        [t](const ErlangService& e) {
                          // 1 - sum_{i<m} e^{-x} x^i / i!
                          double x = e.rate * t;
                          double term = std::exp(-x);
                          double acc = term;
                          for (unsigned i = 1; i < e.shape; ++i) {
                            term *= x / i;
                            acc += term;
                          }
                          return std::clamp(1.0 - acc, 0.0, 1.0);
                        },
                        [t](const DeterministicService& d) { return t >= d.delay ? 1.0 : 0.0; },
                        [t](const TabulatedService& s) {
                          if (t >= s.times.back()) return s.cdf.back();
                          auto it = std::upper_bound(s.times.begin(), s.times.end(), t);
                          std::size_t i = static_cast<std::size_t>(it - s.times.begin());
                          double w = (t - s.times[i - 1]) / (s.times[i] - s.times[i - 1]);
                          return s.cdf[i - 1] + w * (s.cdf[i] - s.cdf[i - 1]);
                        },
                        [](const AbsorbingService&) { return 0.0; },
                    },
                    v_);
}

double ServiceLaw::mean() const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return std::visit(overloaded{
                        [](const ExponentialService& e) { return 1.0 / e.rate; },
                        [](const ErlangService& e) { return e.shape / e.rate; },
                        [](const DeterministicService& d) { return d.delay; },
                        [](const TabulatedService& s) {
                          if (s.cdf.back() < 1.0) return inf;
                          double acc = 0.0;
                          for (std::size_t i = 1; i < s.times.size(); ++i) {
                            acc += (s.times[i] - s.times[i - 1]) * (1.0 - 0.5 * (s.cdf[i] + s.cdf[i - 1]));
                          }
                          return acc;
                        },
                        [](const AbsorbingService&) { return inf; },
                    },
                    v_);
}

double ServiceLaw::sample(Rng& rng) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return std::visit(overloaded{
                        [&rng](const ExponentialService& e) { return std::exponential_distribution<double>(e.rate)(rng); },
                        [&rng](const ErlangService& e) {
                          return std::gamma_distribution<double>(e.shape, 1.0 / e.rate)(rng);
                        },
                        [](const DeterministicService& d) { return d.delay; },
                        [&rng](const TabulatedService& s) {
                          double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                          if (u >= s.cdf.back()) return inf;
                          if (u < s.cdf.front()) return 0.0;
                          auto it = std::upper_bound(s.cdf.begin(), s.cdf.end(), u);
                          std::size_t i = static_cast<std::size_t>(it - s.cdf.begin());
                          double w = (u - s.cdf[i - 1]) / (s.cdf[i] - s.cdf[i - 1]);
                          return s.times[i - 1] + w * (s.times[i] - s.times[i - 1]);
                        },
                        [](const AbsorbingService&) { return inf; },
                    },
                    v_);
}

void validate_routing(std::span<const ServiceNode> nodes) {
  const std::size_t J = nodes.size();
  std::string problems;
  for (std::size_t j = 0; j < J; ++j) {
    const auto& node = nodes[j];
    if (node.service.is_absorbing()) continue;
    const std::string where = "nodes[" + std::to_string(j) + "].routing";
    if (node.routing.size() != J + 1) {
      problems += where + ": expected " + std::to_string(J + 1) + " entries (J queues + exit); ";
      continue;
    }
    double s = 0.0;
    bool negative = false;
    for (double r : node.routing) {
      negative |= !(r >= 0.0);
      s += r;
    }
    if (negative) problems += where + ": negative routing probability; ";
    if (std::abs(s - 1.0) > 1e-12) problems += where + ": entries sum to " + std::to_string(s) + ", not 1; ";
  }
  if (!problems.empty()) throw ValidationError(problems);
}

void NetworkModel::validate() const {
  if (nodes.empty()) throw ValidationError("network has no nodes");
  if (batch.dim() != J()) throw ValidationError("batch dimension does not match the number of nodes");
  validate_routing(nodes);
}

}  // namespace bqnet
