#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <span>

#include "bqnet/batch.hpp"
#include "bqnet/kernel.hpp"
#include "bqnet/lattice.hpp"

namespace bqnet {

/// Result of the Poisson-multinomial DFT, with its roundoff audit.
struct PoissonMultinomialResult {
  LatticePmf pmf;
  /// Entries in (-1e-10, 0) set to zero.
  std::size_t clamped = 0;
  /// Entries at or below -1e-10 (also set to zero); nonzero means the
  /// transform lost precision and the caller should not trust the table.
  std::size_t excess_negative = 0;
  double most_negative = 0.0;
};

/// Law of the sum of independent categorical vectors. rows is m x (J + 1);
/// row c holds customer c's probabilities for queues 1..J and exit. Exact
/// up to roundoff via the characteristic function on the (m+1)^J frequency
/// lattice and a separable inverse DFT.
PoissonMultinomialResult poisson_multinomial_pmf(const Eigen::MatrixXd& rows, double budget = 1e8);

/// Same law by adding one customer at a time, truncated at index->cap().
LatticePmf categorical_convolution(const Eigen::MatrixXd& rows, std::shared_ptr<const SimplexIndex> index);

/// The displacement C(t) of a single batch after elapsed time t.
///
/// Holds the placement rows (q^j_1(t), ..., q^j_J(t), 1 - Q_j(t)) for every
/// entry node j. The batch law must outlive the snapshot.
class CompoundSnapshot {
 public:
  CompoundSnapshot(const BatchLaw& batch, const OccupancyKernel& kernel, double t);
  CompoundSnapshot(const BatchLaw& batch, Eigen::MatrixXd placement, double t = 0.0);

  double elapsed() const noexcept { return t_; }
  const Eigen::MatrixXd& placement() const noexcept { return placement_; }
  const BatchLaw& batch() const noexcept { return *batch_; }

  /// E[prod z_k^{C_k(t)}] = G_S(1 + sum_k (z_k - 1) q^1_k(t), ...).
  double pgf(std::span<const double> z) const;
  /// 1 - pgf(z), evaluated without cancellation.
  double complement_pgf(std::span<const double> z) const;
  /// 1 - P[C(t) = 0].
  double occupied_probability() const;

  double pmf(std::span<const std::uint32_t> i) const;
  /// P[C(t) = i] for every i in the index; tail_mass = 1 - assigned, which
  /// includes mass lost to truncating an unbounded batch support.
  LatticePmf lattice(std::shared_ptr<const SimplexIndex> index) const;

 private:
  void check_rows() const;
  LatticePmf univariate_lattice(const UnivariateLaw& law, const Eigen::VectorXd& q, double exit,
                                std::shared_ptr<const SimplexIndex> index) const;

  const BatchLaw* batch_;
  Eigen::MatrixXd placement_;
  double t_;
};

}  // namespace bqnet
