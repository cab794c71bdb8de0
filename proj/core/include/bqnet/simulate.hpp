#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "bqnet/lattice.hpp"
#include "bqnet/network.hpp"
#include "bqnet/random.hpp"

namespace bqnet {

/// Batch epochs on [0, horizon): thinning against max_rate, or exact
/// exponential gaps on each constant-rate segment.
std::vector<double> sample_arrival_times(const ArrivalProcess& process, double horizon, Rng& rng);

Occupancy sample_batch(const BatchLaw& law, Rng& rng);

/// Location of one customer that entered node `entry` at offset 0, at each
/// of the given offsets (>= 0): a 0-based node index, or nodes.size() once
/// it has left. Throws SimulationError after 10^6 service events.
std::vector<std::size_t> sample_trajectory(std::span<const ServiceNode> nodes, std::size_t entry, Rng& rng,
                                           std::span<const double> offsets);

struct SimulationPlan {
  const NetworkModel* model = nullptr;
  std::vector<double> times;
  std::uint64_t replications = 1;
  std::uint64_t seed = 0;
  std::uint32_t cap = 0;
  /// Worker threads; the tallies do not depend on this.
  unsigned workers = 1;

  void validate() const;
};

struct SnapshotTally {
  double t = 0.0;
  /// Replication counts by lattice rank.
  std::vector<std::uint64_t> counts;
  /// Replications whose total occupancy exceeded the cap.
  std::uint64_t overflow = 0;
};

struct SimulationEstimate {
  std::shared_ptr<const SimplexIndex> index;
  std::uint64_t replications = 0;
  std::vector<SnapshotTally> snapshots;

  double probability(std::size_t snapshot, std::size_t rank) const;
  /// sqrt(p (1 - p) / R).
  double standard_error(std::size_t snapshot, std::size_t rank) const;
  /// Empirical frequencies; tail_mass is the overflow fraction.
  LatticePmf empirical(std::size_t snapshot) const;
};

/// Replication r draws from substream(seed, r).
SimulationEstimate run_simulation(const SimulationPlan& plan);

/// |empirical - analytic| over the empirical standard error
/// sqrt(p(1 - p)/R); a cell never hit falls back to the analytic p.
double cell_z_score(double analytic, double empirical, std::uint64_t replications);

}  // namespace bqnet
