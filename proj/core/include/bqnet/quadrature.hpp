#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace bqnet {

/// Composite Simpson with node doubling.
struct QuadratureSpec {
  /// Nodes per smooth segment at the first level; odd, >= 3.
  std::size_t nodes = 33;
  double rtol = 1e-8;
  double atol = 1e-12;
  unsigned max_doublings = 12;
  /// Workers for integrand evaluation; 0 picks the hardware concurrency.
  unsigned threads = 1;

  void validate() const;
};

/// f(tau, out) writes the integrand components at tau. Called concurrently
/// when threads > 1.
using VectorIntegrand = std::function<void(double, std::span<double>)>;
/// f(tau, lo, hi, out) with [lo, hi] the segment that owns the node, so a
/// function with jumps at the breakpoints can take one-sided values there.
using SegmentIntegrand = std::function<void(double, double, double, std::span<double>)>;

struct QuadratureResult {
  std::vector<double> value;
  /// Integrand evaluations in the accepted rule.
  std::size_t nodes = 0;
  unsigned doublings = 0;
};

/// Integrates every component over [a, b], splitting at the given interior
/// breakpoints. Doubles the node count until each component satisfies
/// |I_new - I_old| <= rtol |I_new| + atol; throws ConvergenceError (with the
/// worst component's last two estimates) once max_doublings is exhausted.
QuadratureResult integrate(const VectorIntegrand& f, std::size_t dim, double a, double b,
                           std::span<const double> breaks, const QuadratureSpec& spec);
QuadratureResult integrate(const SegmentIntegrand& f, std::size_t dim, double a, double b,
                           std::span<const double> breaks, const QuadratureSpec& spec);

/// Runs body(i) for i in [0, n) on up to `threads` workers, each taking a
/// contiguous block. The first exception (lowest block) is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace bqnet
