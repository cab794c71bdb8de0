#include "bqnet/transient.hpp"

#include <cmath>
#include <string>

#include "bqnet/compound.hpp"
#include "bqnet/errors.hpp"

namespace bqnet {

namespace {

void check_inputs(const NetworkModel& model, const OccupancyKernel& kernel, double t) {
  if (kernel.J() != model.J() || model.batch.dim() != model.J()) {
    throw ValidationError("transient: model, batch and kernel dimensions differ");
  }
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("transient: t must be finite and >= 0");
}

// Integrates over tau in [0, t] with the arrival breakpoints as segment ends.
QuadratureResult integrate_history(const NetworkModel& model, double t, std::size_t dim, const QuadratureSpec& quad,
                                   const std::function<void(double, double, std::span<double>)>& body) {
  auto breaks = model.arrival.breakpoints_in(0.0, t);
  return integrate(
      [&](double tau, double lo, double hi, std::span<double> out) {
        // one-sided rate at the segment ends
        const double at = tau >= hi ? std::nextafter(hi, lo) : tau <= lo ? std::nextafter(lo, hi) : tau;
        const double lambda = model.arrival.rate(at);
        if (lambda == 0.0) {
          std::fill(out.begin(), out.end(), 0.0);
          return;
        }
        body(lambda, std::max(0.0, t - tau), out);
      },
      dim, 0.0, t, breaks, quad);
}

// Sum over i <= n with i[v] >= 1 of (i_v / n_v) P[n - i] A(i).
double recursion_entry(const SimplexIndex& index, const std::vector<double>& prob, const std::vector<double>& intensity,
                       std::span<const std::uint32_t> n, std::size_t v) {
  const std::size_t J = index.dim();
  std::vector<std::uint32_t> i(J, 0), rest(J);
  i[v] = 1;
  double acc = 0.0;
  for (;;) {
    for (std::size_t k = 0; k < J; ++k) rest[k] = n[k] - i[k];
    const double a = intensity[index.rank(i)];
    if (a != 0.0) acc += static_cast<double>(i[v]) * prob[index.rank(rest)] * a;
    // odometer over the box [0, n] with i[v] >= 1
    std::size_t k = J;
    while (k-- > 0) {
      if (i[k] < n[k]) {
        ++i[k];
        break;
      }
      i[k] = k == v ? 1 : 0;
    }
    if (k == static_cast<std::size_t>(-1)) break;
  }
  return acc / static_cast<double>(n[v]);
}

}  // namespace

double transient_pgf(const NetworkModel& model, const OccupancyKernel& kernel, double t, std::span<const double> z,
                     const QuadratureSpec& quad) {
  check_inputs(model, kernel, t);
  if (z.size() != model.J()) throw ValidationError("transient pgf: argument dimension mismatch");
  for (double v : z) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("transient pgf: arguments must lie in [0, 1]");
  }
  auto r = integrate_history(model, t, 1, quad, [&](double lambda, double u, std::span<double> out) {
    out[0] = lambda * CompoundSnapshot(model.batch, kernel, u).complement_pgf(z);
  });
  return std::exp(-r.value[0]);
}

double transient_zero_prob(const NetworkModel& model, const OccupancyKernel& kernel, double t,
                           const QuadratureSpec& quad) {
  check_inputs(model, kernel, t);
  auto r = integrate_history(model, t, 1, quad, [&](double lambda, double u, std::span<double> out) {
    out[0] = lambda * CompoundSnapshot(model.batch, kernel, u).occupied_probability();
  });
  return std::exp(-r.value[0]);
}

TransientPmf transient_pmf(const NetworkModel& model, const OccupancyKernel& kernel, double t, std::uint32_t cap,
                           const QuadratureSpec& quad) {
  check_inputs(model, kernel, t);
  auto index = std::make_shared<const SimplexIndex>(model.J(), cap);
  const std::size_t size = index->size();

  TransientPmf out;
  out.t = t;
  out.pmf = LatticePmf(index);
  out.intensity.assign(size, 0.0);

  // Component 0 carries the exponent of P[N = 0]; component r > 0 carries A
  // at lattice rank r. Both share the nodes.
  auto r = integrate_history(model, t, size, quad, [&](double lambda, double u, std::span<double> dst) {
    CompoundSnapshot snap(model.batch, kernel, u);
    LatticePmf c = snap.lattice(index);
    dst[0] = lambda * snap.occupied_probability();
    for (std::size_t k = 1; k < size; ++k) dst[k] = lambda * c.prob[k];
  });
  out.quadrature_nodes = r.nodes;
  for (std::size_t k = 1; k < size; ++k) out.intensity[k] = r.value[k];

  auto& prob = out.pmf.prob;
  prob[0] = std::exp(-r.value[0]);
  const std::size_t J = index->dim();
  std::vector<double> shell_values;
  for (std::uint32_t m = 1; m <= cap; ++m) {
    auto shell = index->shell(m);
    shell_values.assign(shell.size(), 0.0);
    parallel_for(shell.size(), quad.threads, [&](std::size_t s) {
      auto n = index->at(shell[s]);
      std::size_t v = J;
      while (n[--v] == 0) {
      }
      shell_values[s] = recursion_entry(*index, prob, out.intensity, n, v);
    });
    for (std::size_t s = 0; s < shell.size(); ++s) {
      double val = shell_values[s];
      if (val < 0.0) {
        if (val < -1e-12) throw DomainError("transient pmf: recursion produced a negative entry " + std::to_string(val));
        ++out.clamped;
        val = 0.0;
      }
      prob[shell[s]] = val;
    }
  }
  out.pmf.close();
  return out;
}

double TransientPmf::recompute_entry(std::span<const std::uint32_t> n, std::size_t pivot) const {
  const auto& index = *pmf.index;
  if (n.size() != index.dim()) throw ValidationError("recompute entry: dimension mismatch");
  if (pivot >= n.size()) throw IndexError("recompute entry: pivot out of range");
  if (n[pivot] == 0) throw DomainError("recompute entry: pivot coordinate must be >= 1");
  if (index.rank(n) == SimplexIndex::npos) throw DomainError("recompute entry: vector beyond the lattice cap");
  return recursion_entry(index, pmf.prob, intensity, n, pivot);
}

TransientMoments transient_moments(const NetworkModel& model, const OccupancyKernel& kernel, double t,
                                   const QuadratureSpec& quad) {
  check_inputs(model, kernel, t);
  const auto J = static_cast<Eigen::Index>(model.J());
  TransientMoments out;
  const auto m1 = model.batch.first_factorial_moments();
  if (!m1) return out;
  const auto m2 = model.batch.second_factorial_moments();

  // Components: J means, then J * J second moments when available.
  const std::size_t dim = static_cast<std::size_t>(J + (m2 ? J * J : 0));
  auto r = integrate_history(model, t, dim, quad, [&](double lambda, double u, std::span<double> dst) {
    const Eigen::MatrixXd q = kernel.placement(u).leftCols(J);
    const Eigen::VectorXd mean = q.transpose() * *m1;
    for (Eigen::Index k = 0; k < J; ++k) dst[static_cast<std::size_t>(k)] = lambda * mean[k];
    if (!m2) return;
    Eigen::MatrixXd second = q.transpose() * *m2 * q;
    second.diagonal() += mean;
    for (Eigen::Index k = 0; k < J; ++k) {
      for (Eigen::Index l = 0; l < J; ++l) dst[static_cast<std::size_t>(J + k * J + l)] = lambda * second(k, l);
    }
  });
  out.quadrature_nodes = r.nodes;
  out.mean = Eigen::Map<const Eigen::VectorXd>(r.value.data(), J);
  if (m2) out.covariance = Eigen::Map<const Eigen::MatrixXd>(r.value.data() + J, J, J).transpose();
  return out;
}

}  // namespace bqnet
