#include "bqnet/ergodicity.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <string>
#include <variant>

#include "bqnet/errors.hpp"

namespace bqnet {

const char* to_string(OccupancyStatus s) {
  switch (s) {
    case OccupancyStatus::finite: return "finite";
    case OccupancyStatus::infinite: return "infinite";
    case OccupancyStatus::inconclusive: return "inconclusive";
  }
  return "unknown";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::ergodic: return "ergodic";
    case Verdict::non_ergodic: return "non-ergodic";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

const char* to_string(Criterion c) {
  switch (c) {
    case Criterion::finite_mean_batch: return "finite-mean-batch";
    case Criterion::log_moment: return "log-moment";
    case Criterion::divergent_log_moment: return "divergent-log-moment";
    case Criterion::fractional_moment: return "fractional-moment";
    case Criterion::quadrature: return "finite-E[W]-quadrature";
    case Criterion::none: return "none";
  }
  return "unknown";
}

double occupancy_integrand(const BatchLaw& batch, const OccupancyKernel& kernel, double tau) {
  const std::size_t J = kernel.J();
  std::vector<double> q(J);
  for (std::size_t j = 0; j < J; ++j) q[j] = kernel_survival(kernel, j, tau);
  return batch.complement_pgf(q);
}

OccupancyEstimate expected_batch_occupancy(const NetworkModel& model, const OccupancyKernel& kernel,
                                           const QuadratureSpec& quad, const HorizonPolicy& policy) {
  if (kernel.J() != model.J() || model.batch.dim() != model.J()) {
    throw ValidationError("expected occupancy: model, batch and kernel dimensions differ");
  }
  if (!(policy.initial > 0.0)) throw ValidationError("expected occupancy: initial horizon must be > 0");
  const double limit = kernel.horizon();
  auto H = [&](double tau) { return occupancy_integrand(model.batch, kernel, tau); };
  auto segment = [&](double a, double b) {
    auto breaks = kernel.knots(a, b);
    if (kernel.representation() != KernelRepresentation::tabulated || breaks.size() > 512) breaks.clear();
    return integrate([&](double tau, std::span<double> out) { out[0] = H(tau); }, 1, a, b, breaks, quad).value[0];
  };

  OccupancyEstimate est;
  double T = std::min(policy.initial, limit);
  est.value = segment(0.0, T);
  est.horizon = T;
  est.integrand_at_horizon = H(T);
  unsigned slow = 0;

  for (unsigned d = 0; d < policy.max_doublings; ++d) {
    const double hT = est.integrand_at_horizon;
    if (hT == 0.0 && !kernel.strictly_positive_survival()) {
      // Survival is nonincreasing, so nothing remains to integrate.
      est.status = OccupancyStatus::finite;
      return est;
    }
    if (T >= limit) {
      est.note = "kernel horizon reached with integrand " + std::to_string(hT);
      return est;
    }
    const double T2 = std::min(2.0 * T, limit);
    const double h2 = H(T2);
    if (h2 == 0.0 && kernel.strictly_positive_survival() && hT > policy.integrand_tol) {
      est.note = "survival underflowed before tau = " + std::to_string(T2) + " while the integrand was " +
                 std::to_string(hT);
      return est;
    }
    double piece = 0.0;
    try {
      piece = segment(T, T2);
    } catch (const ConvergenceError& e) {
      est.note = std::string("segment [") + std::to_string(T) + ", " + std::to_string(T2) + "]: " + e.what();
      return est;
    }
    const double value = est.value + piece;
    if (!std::isfinite(value)) {
      est.note = "non-finite integrand";
      return est;
    }
    if (h2 > 0.0 && hT > 0.0) {
      est.decay_exponent = std::log2(h2 / hT) / std::log2(T2 / T);
      if (*est.decay_exponent > policy.exponent_threshold && hT <= 0.5) {
        ++slow;
      } else {
        slow = 0;
      }
    } else {
      slow = 0;
    }
    est.value = value;
    est.horizon = T2;
    est.integrand_at_horizon = h2;
    T = T2;
    if (slow >= policy.window) {
      est.status = OccupancyStatus::infinite;
      est.note = "integrand decays like tau^" + std::to_string(*est.decay_exponent);
      return est;
    }
    if (h2 < policy.integrand_tol && std::abs(piece) <= policy.rtol * std::abs(value)) {
      est.status = OccupancyStatus::finite;
      return est;
    }
  }
  est.note = "horizon policy exhausted";
  return est;
}

namespace {

struct NetworkShape {
  Eigen::MatrixXd routing;  // J x J, absorbing rows zero
  Eigen::VectorXd means;
  bool absorbing = false;
  bool all_exponential = true;
  bool light_tailed = true;  // exponential, Erlang or deterministic
  bool transient_routing = false;
};

NetworkShape inspect(const NetworkModel& model) {
  const auto J = static_cast<Eigen::Index>(model.J());
  NetworkShape s;
  s.routing = Eigen::MatrixXd::Zero(J, J);
  s.means.resize(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    const auto& node = model.nodes[static_cast<std::size_t>(j)];
    s.means[j] = node.service.mean();
    if (node.service.is_absorbing()) {
      s.absorbing = true;
      s.all_exponential = s.light_tailed = false;
      continue;
    }
    for (Eigen::Index k = 0; k < J; ++k) s.routing(j, k) = node.routing[static_cast<std::size_t>(k)];
    const auto& v = node.service.variant();
    s.all_exponential = s.all_exponential && std::holds_alternative<ExponentialService>(v);
    s.light_tailed = s.light_tailed && (std::holds_alternative<ExponentialService>(v) ||
                                        std::holds_alternative<ErlangService>(v) ||
                                        std::holds_alternative<DeterministicService>(v));
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(J, J) - s.routing);
  s.transient_routing = lu.isInvertible();
  return s;
}

// Expected time in the network from each entry node, when finite.
std::optional<Eigen::VectorXd> occupancy_means(const NetworkShape& s) {
  if (s.absorbing || !s.transient_routing || !s.means.allFinite()) return std::nullopt;
  const auto J = s.routing.rows();
  Eigen::VectorXd x = (Eigen::MatrixXd::Identity(J, J) - s.routing).fullPivLu().solve(s.means);
  if (!x.allFinite() || (x.array() < -1e-9).any()) return std::nullopt;
  return x;
}

// -max Re(eigenvalue) of the sub-generator of a Markov network.
double markov_decay_rate(const NetworkModel& model, const NetworkShape& s) {
  const auto J = s.routing.rows();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(J, J);
  for (Eigen::Index j = 0; j < J; ++j) {
    const double mu = std::get<ExponentialService>(model.nodes[static_cast<std::size_t>(j)].service.variant()).rate;
    A.row(j) = mu * s.routing.row(j);
    A(j, j) -= mu;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  return -es.eigenvalues().real().maxCoeff();
}

bool power_tail_holds(const OccupancyKernel& kernel, double alpha) {
  for (int k = 0; k <= 30; ++k) {
    const double t = std::ldexp(1.0, k);
    if (t > kernel.horizon()) break;
    for (std::size_t j = 0; j < kernel.J(); ++j) {
      if (kernel_survival(kernel, j, t) > std::pow(t, -alpha)) return false;
    }
  }
  return true;
}

}  // namespace

StabilityVerdict classify_ergodicity(const NetworkModel& model, const OccupancyKernel& kernel,
                                     const ErgodicityOptions& options) {
  if (!model.arrival.homogeneous()) {
    throw UnsupportedError("ergodicity: classification requires a homogeneous arrival process");
  }
  if (kernel.J() != model.J() || model.batch.dim() != model.J()) {
    throw ValidationError("ergodicity: model, batch and kernel dimensions differ");
  }
  StabilityVerdict v;
  auto occupancy = [&] {
    try {
      return expected_batch_occupancy(model, kernel, options.quad, options.horizon);
    } catch (const ConvergenceError& e) {
      OccupancyEstimate est;
      est.note = e.what();
      return est;
    }
  };
  auto ergodic = [&](Criterion c) {
    v.verdict = Verdict::ergodic;
    v.criterion = c;
    v.expected_occupancy = occupancy();
    return v;
  };

  const NetworkShape shape = inspect(model);
  const bool from_nodes = kernel.representation() != KernelRepresentation::tabulated;

  if (from_nodes && model.batch.first_factorial_moments() && occupancy_means(shape)) {
    return ergodic(Criterion::finite_mean_batch);
  }

  if (from_nodes && shape.light_tailed && !shape.absorbing && shape.transient_routing) {
    if (shape.all_exponential) {
      v.diagnostics.delta = markov_decay_rate(model, shape);
      v.diagnostics.t0 = 0.0;
    }
    if (model.batch.finite_log_moment()) return ergodic(Criterion::log_moment);
    if (shape.all_exponential) {
      v.verdict = Verdict::non_ergodic;
      v.criterion = Criterion::divergent_log_moment;
      v.witness = "E[log(S_1 + ... + S_J + 1)] diverges and survival decays like exp(-" +
                  std::to_string(*v.diagnostics.delta) + " t)";
      v.expected_occupancy = occupancy();
      return v;
    }
  }

  if (options.power_tail_alpha) {
    const double alpha = *options.power_tail_alpha;
    if (!(alpha > 1.0)) throw ValidationError("ergodicity: power-tail exponent must be > 1");
    if (power_tail_holds(kernel, alpha)) {
      v.diagnostics.alpha = alpha;
      if (model.batch.finite_fractional_moment(1.0 / alpha)) return ergodic(Criterion::fractional_moment);
    } else {
      v.witness = "declared power tail t^-" + std::to_string(alpha) + " violated on the check grid; ";
    }
  }

  v.expected_occupancy = occupancy();
  v.criterion = Criterion::quadrature;
  switch (v.expected_occupancy.status) {
    case OccupancyStatus::finite:
      v.verdict = Verdict::ergodic;
      break;
    case OccupancyStatus::infinite:
      v.verdict = Verdict::non_ergodic;
      v.witness += "E[W] diverges: " + v.expected_occupancy.note;
      break;
    case OccupancyStatus::inconclusive:
      v.verdict = Verdict::inconclusive;
      v.criterion = Criterion::none;
      v.witness += v.expected_occupancy.note;
      break;
  }
  return v;
}

}  // namespace bqnet
