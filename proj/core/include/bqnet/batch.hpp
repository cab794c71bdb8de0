#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "bqnet/random.hpp"
#include "bqnet/univariate.hpp"

namespace bqnet {

/// Customers per queue; index k is queue k (0-based).
using Occupancy = std::vector<std::uint32_t>;

struct TableBatch {
  std::vector<std::pair<Occupancy, double>> entries;
};

/// A univariate batch whose customers independently pick entry node j with
/// probability entry_probs[j].
struct IidAssignmentBatch {
  UnivariateLaw size;
  std::vector<double> entry_probs;
};

struct IndependentMarginalsBatch {
  std::vector<UnivariateLaw> marginals;
};

struct ConstantBatch {
  Occupancy counts;
};

/// Multivariate batch-size law S = (S_1, ..., S_J).
class BatchLaw {
 public:
  using Variant = std::variant<TableBatch, IidAssignmentBatch, IndependentMarginalsBatch, ConstantBatch>;

  BatchLaw() = default;
  explicit BatchLaw(Variant v);

  static BatchLaw table(std::vector<std::pair<Occupancy, double>> entries);
  static BatchLaw iid_assignment(UnivariateLaw size, std::vector<double> entry_probs);
  static BatchLaw independent(std::vector<UnivariateLaw> marginals);
  static BatchLaw constant(Occupancy counts);

  const Variant& variant() const noexcept { return v_; }
  std::size_t dim() const noexcept { return dim_; }

  /// E[prod z_k^{S_k}] for z in [0, 1]^J.
  double pgf(std::span<const double> z) const;
  /// 1 - G_S(1 - y_1, ..., 1 - y_J), computed without cancellation.
  double complement_pgf(std::span<const double> y) const;
  double pmf(std::span<const std::uint32_t> n) const;

  /// E[S_j]; nullopt signals an infinite moment.
  std::optional<Eigen::VectorXd> first_factorial_moments() const;
  /// E[S_j (S_k - delta_jk)]; nullopt signals an infinite moment.
  std::optional<Eigen::MatrixXd> second_factorial_moments() const;

  /// E[log(S_1 + ... + S_J + 1)] < infinity.
  bool finite_log_moment() const;
  /// E[(S_1 + ... + S_J)^theta] < infinity.
  bool finite_fractional_moment(double theta) const;

  Occupancy sample(Rng& rng) const;

 private:
  Variant v_{ConstantBatch{{1}}};
  std::size_t dim_ = 1;
};

}  // namespace bqnet
