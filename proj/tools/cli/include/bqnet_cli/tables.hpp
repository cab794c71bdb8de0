#pragma once

#include <cstdint>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "bqnet/ergodicity.hpp"
#include "bqnet/simulate.hpp"
#include "bqnet/transient.hpp"

namespace bqnet::cli {

/// A parsed `n_1,...,n_J,prob[,stderr,replications]` table.
struct OccupancyTable {
  std::size_t J = 0;
  std::vector<Occupancy> cells;
  std::vector<double> prob;
  std::vector<double> standard_error;  // empty for analytic tables
  std::optional<std::uint64_t> replications;
};

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

std::string occupancy_csv(const LatticePmf& pmf);
std::string occupancy_csv(const SimulationEstimate& est, std::size_t snapshot);
OccupancyTable read_occupancy_csv(std::istream& in);

/// JSON documents written next to the tables. Keys are sorted, so dump()
/// of a reloaded document reproduces the original bytes.
nlohmann::json pmf_json(const TransientPmf& pmf, const std::string& table);
nlohmann::json simulation_json(const SimulationEstimate& est, std::uint64_t seed, const std::vector<std::string>& tables);
nlohmann::json verdict_json(const StabilityVerdict& v);
std::string dump(const nlohmann::json& doc);

struct CompareReport {
  double total_variation = 0.0;
  /// Largest |z| over cells, using sqrt(p (1 - p) / R) at the analytic p;
  /// empty when neither table carries a replication count.
  std::optional<double> max_abs_z;
  std::size_t cells = 0;
  double tolerance = 0.0;
  bool pass = false;

  nlohmann::json to_json() const;
};

/// Total variation over the union of cells plus per-cell z-scores; fails
/// when TV > tol or any |z| > 5. Throws ValidationError on a J mismatch.
CompareReport compare_outputs(const OccupancyTable& analytic, const OccupancyTable& empirical, double tol);

}  // namespace bqnet::cli
