#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "bqnet/network.hpp"

namespace bqnet {

enum class KernelRepresentation { markov_uniformization, renewal_grid, tabulated };

const char* to_string(KernelRepresentation r);

/// Uniform grid on [0, end] with an odd number of nodes.
class TimeGrid {
 public:
  TimeGrid(double end, std::size_t nodes);

  double end() const noexcept { return end_; }
  std::size_t nodes() const noexcept { return nodes_; }
  double step() const noexcept { return end_ / static_cast<double>(nodes_ - 1); }
  double at(std::size_t i) const noexcept { return i == nodes_ - 1 ? end_ : step() * static_cast<double>(i); }

 private:
  double end_;
  std::size_t nodes_;
};

/// The occupancy kernel q^j_k(t): the probability that a customer who
/// entered node j is at node k a time t later. Immutable and cheap to copy;
/// evaluation is thread-safe.
class OccupancyKernel {
 public:
  class Impl {
   public:
    virtual ~Impl() = default;
    virtual std::size_t dim() const = 0;
    virtual KernelRepresentation representation() const = 0;
    virtual double horizon() const = 0;
    virtual bool strictly_positive_survival() const = 0;
    /// Fills out (J x (J+1)) with rows (q^j_1(t), ..., q^j_J(t), 1 - Q_j(t)).
    virtual void placement(double t, Eigen::Ref<Eigen::MatrixXd> out) const = 0;
    virtual std::vector<double> knots(double, double) const { return {}; }
  };

  explicit OccupancyKernel(std::shared_ptr<const Impl> impl);

  std::size_t J() const { return impl_->dim(); }
  KernelRepresentation representation() const { return impl_->representation(); }
  /// Largest t the kernel can be evaluated at (infinity for Markov kernels).
  double horizon() const { return impl_->horizon(); }
  /// True when Q_j(t) > 0 for every finite t, so an exact zero can only be
  /// floating-point underflow.
  bool strictly_positive_survival() const { return impl_->strictly_positive_survival(); }

  /// Placement matrix at elapsed time t: J rows, J + 1 columns (last = exit).
  Eigen::MatrixXd placement(double t) const;
  double eval(std::size_t j, std::size_t k, double t) const;
  double survival(std::size_t j, double t) const;
  /// Interior points of (a, b) where the kernel is only piecewise smooth.
  std::vector<double> knots(double a, double b) const { return impl_->knots(a, b); }

 private:
  std::shared_ptr<const Impl> impl_;
};

/// CTMC kernel by uniformization; every non-absorbing node must have
/// exponential service. Neglected Poisson tail <= 1e-12.
OccupancyKernel build_markov_kernel(std::span<const ServiceNode> nodes);

/// Solves the Markov-renewal equations on the grid by forward time stepping
/// with a trapezoidal Stieltjes convolution; linear interpolation between
/// nodes.
OccupancyKernel build_renewal_kernel(std::span<const ServiceNode> nodes, const TimeGrid& grid);

/// Kernel given by values on strictly increasing times (times[0] == 0),
/// linearly interpolated. values[i] is J x J with entry (j, k) = q^j_k.
OccupancyKernel tabulated_kernel(std::vector<double> times, std::vector<Eigen::MatrixXd> values);

/// Reads `t,q_1_1,q_1_2,...` CSV (1-based node labels in the header).
OccupancyKernel load_tabulated_kernel_csv(std::istream& in);

/// Sum_k q^j_k(t), clamped to [0, 1]. j is 0-based.
double kernel_survival(const OccupancyKernel& kernel, std::size_t j, double t);

}  // namespace bqnet
