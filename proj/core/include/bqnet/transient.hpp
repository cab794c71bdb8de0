#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bqnet/kernel.hpp"
#include "bqnet/lattice.hpp"
#include "bqnet/network.hpp"
#include "bqnet/quadrature.hpp"

namespace bqnet {

/// E[prod z_k^{N_k(t)}] = exp(-int_0^t lambda(tau) [1 - G_C(t - tau)(z)] dtau).
double transient_pgf(const NetworkModel& model, const OccupancyKernel& kernel, double t, std::span<const double> z,
                     const QuadratureSpec& quad = {});

/// P[N(t) = 0].
double transient_zero_prob(const NetworkModel& model, const OccupancyKernel& kernel, double t,
                           const QuadratureSpec& quad = {});

/// Law of N(t) on {n : |n| <= cap}.
struct TransientPmf {
  LatticePmf pmf;
  double t = 0.0;
  /// A(i) = int_0^t lambda(tau) P[C(t - tau) = i] dtau, by lattice rank;
  /// A(0) is unused and left at 0.
  std::vector<double> intensity;
  std::size_t quadrature_nodes = 0;
  /// Entries in [-1e-12, 0) set to zero.
  std::size_t clamped = 0;

  /// P[N(t) = n] recomputed from the stored lower entries using `pivot`
  /// (0-based, n[pivot] >= 1) instead of the last nonzero coordinate.
  double recompute_entry(std::span<const std::uint32_t> n, std::size_t pivot) const;
};

TransientPmf transient_pmf(const NetworkModel& model, const OccupancyKernel& kernel, double t, std::uint32_t cap,
                           const QuadratureSpec& quad = {});

/// Mean and covariance of N(t); either is empty when the batch moment it
/// needs is infinite.
struct TransientMoments {
  std::optional<Eigen::VectorXd> mean;
  std::optional<Eigen::MatrixXd> covariance;
  std::size_t quadrature_nodes = 0;
};

TransientMoments transient_moments(const NetworkModel& model, const OccupancyKernel& kernel, double t,
                                   const QuadratureSpec& quad = {});

}  // namespace bqnet
