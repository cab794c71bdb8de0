#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "bqnet/errors.hpp"
#include "bqnet/kernel.hpp"
#include "bqnet/network.hpp"

namespace bqnet::cli {

/// Every problem found in a configuration, each prefixed by its field path.
class ConfigError : public ValidationError {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

class MissingFileError : public Error {
 public:
  using Error::Error;
};

struct KernelConfig {
  KernelRepresentation representation = KernelRepresentation::markov_uniformization;
  /// Renewal grid end; 0 means "the largest requested time".
  double grid_end = 0.0;
  std::size_t grid_nodes = 4001;
  /// Tabulated kernel CSV, resolved against the config's directory.
  std::filesystem::path table;
};

struct AnalysisDefaults {
  std::uint32_t cap = 20;
  double rtol = 1e-8;
  std::uint64_t seed = 0;
  std::optional<double> power_tail_alpha;
};

struct ModelConfig {
  std::filesystem::path source;
  NetworkModel model;
  KernelConfig kernel;
  AnalysisDefaults analysis;
};

ModelConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
/// Throws MissingFileError when the file does not exist, ConfigError on any
/// parse or schema problem.
ModelConfig load_config(const std::filesystem::path& path);

/// Builds the configured kernel, valid up to at least t_max.
OccupancyKernel build_kernel(const ModelConfig& config, double t_max);

}  // namespace bqnet::cli
