#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "bqnet/arrival.hpp"
#include "bqnet/batch.hpp"
#include "bqnet/random.hpp"

namespace bqnet {

struct ExponentialService {
  double rate = 1.0;
};
struct ErlangService {
  unsigned shape = 1;
  double rate = 1.0;
};
struct DeterministicService {
  double delay = 0.0;
};
// Piecewise-linear CDF through (times[i], cdf[i]); times[0] == 0. A final
// value below one leaves the remaining mass at infinity.
struct TabulatedService {
  std::vector<double> times;
  std::vector<double> cdf;
};
// Customer never completes service.
struct AbsorbingService {};

class ServiceLaw {
 public:
  using Variant =
      std::variant<ExponentialService, ErlangService, DeterministicService, TabulatedService, AbsorbingService>;

  ServiceLaw() = default;
  ServiceLaw(Variant v);  // NOLINT(google-explicit-constructor)
  template <class T>
    requires(!std::is_same_v<std::decay_t<T>, ServiceLaw> && !std::is_same_v<std::decay_t<T>, Variant> &&
             std::is_constructible_v<Variant, T>)
  ServiceLaw(T&& alt)  // NOLINT(google-explicit-constructor)
      : ServiceLaw(Variant(std::forward<T>(alt))) {}

  const Variant& variant() const noexcept { return v_; }
  std::string name() const;

  double cdf(double t) const;
  /// Mean service time; +inf for absorbing or defective laws.
  double mean() const;
  /// Service duration; +inf when the customer never completes.
  double sample(Rng& rng) const;

  bool is_exponential() const { return std::holds_alternative<ExponentialService>(v_); }
  bool is_absorbing() const { return std::holds_alternative<AbsorbingService>(v_); }

 private:
  Variant v_{ExponentialService{}};
};

/// A service station: its service law and routing row. routing has J + 1
/// entries; the last is the exit probability. Absorbing nodes carry no
/// routing row.
struct ServiceNode {
  ServiceLaw service;
  std::vector<double> routing;
};

/// Throws ValidationError naming every offending node.
void validate_routing(std::span<const ServiceNode> nodes);

struct NetworkModel {
  ArrivalProcess arrival;
  BatchLaw batch;
  std::vector<ServiceNode> nodes;

  std::size_t J() const noexcept { return nodes.size(); }
  void validate() const;
};

}  // namespace bqnet
