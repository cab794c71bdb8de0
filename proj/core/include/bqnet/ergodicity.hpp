#pragma once

#include <optional>
#include <string>

#include "bqnet/kernel.hpp"
#include "bqnet/network.hpp"
#include "bqnet/quadrature.hpp"

namespace bqnet {

/// Horizon growth for the E[W] integral over [0, infinity).
struct HorizonPolicy {
  double initial = 1.0;
  unsigned max_doublings = 128;
  /// Stop once the integrand at the horizon is below this...
  double integrand_tol = 1e-12;
  /// ...and the last doubling changed the value by less than this.
  double rtol = 1e-8;
  /// Consecutive doublings with decay exponent above the threshold that
  /// signal divergence.
  unsigned window = 4;
  double exponent_threshold = -1.0 - 1e-3;
};

enum class OccupancyStatus { finite, infinite, inconclusive };
const char* to_string(OccupancyStatus s);

/// E[W], the expected time until every member of a batch has left.
struct OccupancyEstimate {
  OccupancyStatus status = OccupancyStatus::inconclusive;
  /// E[W] when finite; otherwise the partial integral up to `horizon`.
  double value = 0.0;
  double horizon = 0.0;
  double integrand_at_horizon = 0.0;
  /// log2 H(2T) / H(T) at the last doubling.
  std::optional<double> decay_exponent;
  std::string note;

  bool finite() const noexcept { return status == OccupancyStatus::finite; }
};

/// H(tau) = 1 - G_S(1 - Q_1(tau), ..., 1 - Q_J(tau)).
double occupancy_integrand(const BatchLaw& batch, const OccupancyKernel& kernel, double tau);

/// int_0^infinity H(tau) dtau by composite Simpson on [0, T], T doubling.
OccupancyEstimate expected_batch_occupancy(const NetworkModel& model, const OccupancyKernel& kernel,
                                           const QuadratureSpec& quad = {}, const HorizonPolicy& horizon = {});

enum class Verdict { ergodic, non_ergodic, inconclusive };
enum class Criterion {
  finite_mean_batch,
  log_moment,
  divergent_log_moment,
  fractional_moment,
  quadrature,
  none,
};
const char* to_string(Verdict v);
/// finite-mean-batch, log-moment, divergent-log-moment, fractional-moment,
/// finite-E[W]-quadrature, none.
const char* to_string(Criterion c);

struct TailDiagnostics {
  /// Exponential decay rate and onset of Q_j(t) <= e^{-delta (t - t0)}.
  std::optional<double> delta;
  std::optional<double> t0;
  /// Power-tail exponent of Q_j(t) <= t^{-alpha}.
  std::optional<double> alpha;
};

struct StabilityVerdict {
  Verdict verdict = Verdict::inconclusive;
  Criterion criterion = Criterion::none;
  OccupancyEstimate expected_occupancy;
  TailDiagnostics diagnostics;
  /// Why the network is non-ergodic or why no decision was reached.
  std::string witness;
};

struct ErgodicityOptions {
  /// Declared power-tail exponent alpha > 1 for the occupancy kernel; checked
  /// on a grid before it is used.
  std::optional<double> power_tail_alpha;
  QuadratureSpec quad;
  HorizonPolicy horizon;
};

/// Decision ladder: finite batch mean with finite occupancy means; log
/// moment under certified exponential tails (and its divergence for Markov
/// networks); fractional moment under a power tail; then the E[W] integral.
/// Requires a homogeneous arrival process.
StabilityVerdict classify_ergodicity(const NetworkModel& model, const OccupancyKernel& kernel,
                                     const ErgodicityOptions& options = {});

}  // namespace bqnet
