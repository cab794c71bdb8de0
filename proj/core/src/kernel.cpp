#include "bqnet/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include "bqnet/errors.hpp"

namespace bqnet {

namespace {

constexpr double kUniformizationTail = 1e-12;

// Placement rows for a generic Q matrix (J x J): append exit column.
void fill_with_exit(const Eigen::MatrixXd& q, Eigen::Ref<Eigen::MatrixXd> out) {
  const auto J = q.rows();
  out.leftCols(J) = q.cwiseMax(0.0).cwiseMin(1.0);
  for (Eigen::Index j = 0; j < J; ++j) {
    out(j, J) = std::clamp(1.0 - out.row(j).head(J).sum(), 0.0, 1.0);
  }
}

class MarkovKernel final : public OccupancyKernel::Impl {
 public:
  MarkovKernel(Eigen::MatrixXd uniformized, double rate)
      : p_(std::move(uniformized)), rate_(rate), j_(static_cast<std::size_t>(p_.rows() - 1)) {}

  std::size_t dim() const override { return j_; }
  KernelRepresentation representation() const override { return KernelRepresentation::markov_uniformization; }
  double horizon() const override { return std::numeric_limits<double>::infinity(); }
  bool strictly_positive_survival() const override { return true; }

  void placement(double t, Eigen::Ref<Eigen::MatrixXd> out) const override {
    const auto J = static_cast<Eigen::Index>(j_);
    Eigen::MatrixXd x = Eigen::MatrixXd::Identity(J, J + 1);
    const double L = rate_ * t;
    if (L <= 0.0) {
      out = x;
      return;
    }
    // Poisson weights in log space so that large L does not underflow the
    // leading terms.
    const double logL = std::log(L);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(J, J + 1);
    double logw = -L;
    for (std::uint64_t n = 0;; ++n) {
      acc.noalias() += std::exp(logw) * x;
      const double next_logw = logw + logL - std::log(static_cast<double>(n + 1));
      const double m = static_cast<double>(n + 2);
      if (m > L && std::exp(next_logw) * m / (m - L) <= kUniformizationTail) break;
      x = x * p_;
      logw = next_logw;
    }
    // Each row of x stays stochastic, so the row sums equal the retained
    // Poisson weight.
    acc.array().colwise() /= acc.rowwise().sum().array();
    out = acc.cwiseMax(0.0).cwiseMin(1.0);
  }

 private:
  Eigen::MatrixXd p_;  // (J+1) x (J+1), exit absorbing in the last state
  double rate_;
  std::size_t j_;
};

// Kernel stored on a time grid, linearly interpolated.
class GridKernel final : public OccupancyKernel::Impl {
 public:
  GridKernel(std::vector<double> times, std::vector<Eigen::MatrixXd> values, KernelRepresentation rep)
      : times_(std::move(times)), values_(std::move(values)), rep_(rep) {}

  std::size_t dim() const override { return static_cast<std::size_t>(values_.front().rows()); }
  KernelRepresentation representation() const override { return rep_; }
  double horizon() const override { return times_.back(); }
  bool strictly_positive_survival() const override { return false; }

  void placement(double t, Eigen::Ref<Eigen::MatrixXd> out) const override {
    const double end = times_.back();
    if (t > end * (1.0 + 1e-12)) {
      throw DomainError("kernel evaluated at t = " + std::to_string(t) + " beyond its grid end " + std::to_string(end));
    }
    if (t >= end) {
      fill_with_exit(values_.back(), out);
      return;
    }
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t i = static_cast<std::size_t>(it - times_.begin());
    if (i == 0) {
      fill_with_exit(values_.front(), out);
      return;
    }
    const double w = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
    fill_with_exit((1.0 - w) * values_[i - 1] + w * values_[i], out);
  }

  std::vector<double> knots(double a, double b) const override {
    auto lo = std::upper_bound(times_.begin(), times_.end(), a);
    auto hi = std::lower_bound(lo, times_.end(), b);
    return {lo, hi};
  }

 private:
  std::vector<double> times_;
  std::vector<Eigen::MatrixXd> values_;
  KernelRepresentation rep_;
};

Eigen::MatrixXd routing_among_nodes(std::span<const ServiceNode> nodes) {
  const auto J = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(J, J);
  for (Eigen::Index j = 0; j < J; ++j) {
    if (nodes[j].service.is_absorbing()) continue;
    for (Eigen::Index k = 0; k < J; ++k) r(j, k) = nodes[j].routing[k];
  }
  return r;
}

}  // namespace

const char* to_string(KernelRepresentation r) {
  switch (r) {
    case KernelRepresentation::markov_uniformization:
      return "markov-uniformization";
    case KernelRepresentation::renewal_grid:
      return "renewal-grid";
    case KernelRepresentation::tabulated:
      return "tabulated";
  }
  return "unknown";
}

TimeGrid::TimeGrid(double end, std::size_t nodes) : end_(end), nodes_(nodes) {
  if (!(end > 0.0) || !std::isfinite(end)) throw ValidationError("time grid: end must be finite and > 0");
  if (nodes < 3 || nodes % 2 == 0) throw ValidationError("time grid: node count must be odd and >= 3");
}

OccupancyKernel::OccupancyKernel(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {
  if (!impl_) throw ValidationError("kernel: null implementation");
}

Eigen::MatrixXd OccupancyKernel::placement(double t) const {
  if (!(t >= 0.0)) throw DomainError("kernel: time must be >= 0");
  const auto nj = static_cast<Eigen::Index>(this->J());
  Eigen::MatrixXd out(nj, nj + 1);
  impl_->placement(t, out);
  return out;
}

double OccupancyKernel::eval(std::size_t j, std::size_t k, double t) const {
  if (j >= J() || k >= J()) throw IndexError("kernel: node index out of range");
  return placement(t)(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
}

double OccupancyKernel::survival(std::size_t j, double t) const { return kernel_survival(*this, j, t); }

double kernel_survival(const OccupancyKernel& kernel, std::size_t j, double t) {
  const std::size_t J = kernel.J();
  if (j >= J) throw IndexError("kernel survival: node " + std::to_string(j) + " out of range");
  Eigen::MatrixXd p = kernel.placement(t);
  return std::clamp(p.row(static_cast<Eigen::Index>(j)).head(static_cast<Eigen::Index>(J)).sum(), 0.0, 1.0);
}

OccupancyKernel build_markov_kernel(std::span<const ServiceNode> nodes) {
  const auto J = static_cast<Eigen::Index>(nodes.size());
  if (J == 0) throw ValidationError("markov kernel: no nodes");
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const auto& s = nodes[j].service;
    if (!s.is_absorbing() && !s.is_exponential()) {
      throw UnsupportedError("markov kernel: node " + std::to_string(j + 1) + " has " + s.name() +
                             " service; uniformization needs exponential service");
    }
  }
  validate_routing(nodes);

  // Generator on {nodes} + {exit}.
  Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(J + 1, J + 1);
  for (Eigen::Index j = 0; j < J; ++j) {
    const auto& node = nodes[j];
    if (node.service.is_absorbing()) continue;
    const double mu = std::get<ExponentialService>(node.service.variant()).rate;
    for (Eigen::Index k = 0; k <= J; ++k) {
      if (k != j) gen(j, k) = mu * node.routing[k];
    }
    gen(j, j) = -mu * (1.0 - node.routing[j]);
  }
  double rate = 0.0;
  for (Eigen::Index j = 0; j < J; ++j) rate = std::max(rate, -gen(j, j));
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(J + 1, J + 1);
  if (rate > 0.0) p += gen / rate;
  return OccupancyKernel(std::make_shared<MarkovKernel>(std::move(p), rate));
}

OccupancyKernel build_renewal_kernel(std::span<const ServiceNode> nodes, const TimeGrid& grid) {
  const auto J = static_cast<Eigen::Index>(nodes.size());
  if (J == 0) throw ValidationError("renewal kernel: no nodes");
  validate_routing(nodes);
  const double h = grid.step();
  double smallest_mean = std::numeric_limits<double>::infinity();
  for (const auto& n : nodes) {
    double m = n.service.mean();
    if (m > 0.0 && std::isfinite(m)) smallest_mean = std::min(smallest_mean, m);
  }
  if (h > smallest_mean / 4.0) {
    throw RefinementRequired("renewal kernel: grid step " + std::to_string(h) +
                             " exceeds a quarter of the smallest mean service time " + std::to_string(smallest_mean));
  }

  const std::size_t M = grid.nodes();
  Eigen::MatrixXd cdf(J, static_cast<Eigen::Index>(M));
  for (Eigen::Index j = 0; j < J; ++j) {
    for (std::size_t n = 0; n < M; ++n) cdf(j, static_cast<Eigen::Index>(n)) = nodes[j].service.cdf(grid.at(n));
  }
  auto dF = [&cdf](Eigen::Index j, std::size_t m) {
    return cdf(j, static_cast<Eigen::Index>(m)) - cdf(j, static_cast<Eigen::Index>(m - 1));
  };
  const Eigen::MatrixXd r = routing_among_nodes(nodes);

  // Atom at zero plus the half-weight of the first cell multiply the unknown
  // q(t_n); the resulting J x J system is the same at every step.
  Eigen::VectorXd implicit_weight(J);
  for (Eigen::Index j = 0; j < J; ++j) implicit_weight[j] = cdf(j, 0) + 0.5 * dF(j, 1);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(J, J) - implicit_weight.asDiagonal() * r);

  std::vector<double> times(M);
  std::vector<Eigen::MatrixXd> q(M);
  std::vector<Eigen::MatrixXd> rq(M);
  for (std::size_t n = 0; n < M; ++n) times[n] = grid.at(n);
  q[0] = Eigen::MatrixXd::Identity(J, J);
  rq[0] = r * q[0];
  Eigen::MatrixXd b(J, J);
  for (std::size_t n = 1; n < M; ++n) {
    b.setZero();
    for (Eigen::Index j = 0; j < J; ++j) b(j, j) = 1.0 - cdf(j, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < J; ++j) {
        double c = 0.5 * dF(j, n - i);
        if (i >= 1) c += 0.5 * dF(j, n - i + 1);
        if (c != 0.0) b.row(j).noalias() += c * rq[i].row(j);
      }
    }
    q[n] = lu.solve(b);
    rq[n] = r * q[n];
  }
  return OccupancyKernel(std::make_shared<GridKernel>(std::move(times), std::move(q), KernelRepresentation::renewal_grid));
}

OccupancyKernel tabulated_kernel(std::vector<double> times, std::vector<Eigen::MatrixXd> values) {
  if (times.size() < 2 || times.size() != values.size()) {
    throw ValidationError("tabulated kernel: need at least two time points with matching values");
  }
  if (times.front() != 0.0) throw ValidationError("tabulated kernel: first time must be 0");
  const auto J = values.front().rows();
  if (J == 0 || values.front().cols() != J) throw ValidationError("tabulated kernel: values must be square J x J");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0 && !(times[i] > times[i - 1])) throw ValidationError("tabulated kernel: times must be strictly increasing");
    if (values[i].rows() != J || values[i].cols() != J) throw ValidationError("tabulated kernel: inconsistent dimensions");
    if ((values[i].array() < 0.0).any() || (values[i].array() > 1.0).any()) {
      throw ValidationError("tabulated kernel: values must lie in [0, 1]");
    }
    if ((values[i].rowwise().sum().array() > 1.0 + 1e-10).any()) {
      throw ValidationError("tabulated kernel: row sums exceed 1 at t = " + std::to_string(times[i]));
    }
  }
  if (!values.front().isIdentity(1e-12)) throw ValidationError("tabulated kernel: q(0) must be the identity");
  return OccupancyKernel(std::make_shared<GridKernel>(std::move(times), std::move(values), KernelRepresentation::tabulated));
}

OccupancyKernel load_tabulated_kernel_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("kernel csv: empty input");
  std::vector<std::pair<long, long>> columns;
  {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    if (cell != "t") throw ValidationError("kernel csv: first header column must be 't'");
    while (std::getline(ss, cell, ',')) {
      long j = 0;
      long k = 0;
      char tail = 0;
      if (std::sscanf(cell.c_str(), "q_%ld_%ld%c", &j, &k, &tail) != 2 || j < 1 || k < 1) {
        throw ValidationError("kernel csv: bad header column '" + cell + "'");
      }
      columns.emplace_back(j - 1, k - 1);
    }
  }
  const auto J = static_cast<long>(std::lround(std::sqrt(static_cast<double>(columns.size()))));
  if (J * J != static_cast<long>(columns.size())) throw ValidationError("kernel csv: expected J*J q columns");
  {
    std::map<std::pair<long, long>, int> seen;
    for (const auto& c : columns) {
      if (c.first >= J || c.second >= J || seen[c]++) throw ValidationError("kernel csv: duplicate or out-of-range column");
    }
  }
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> values;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(ss, cell, ',')) {
      try {
        cells.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ValidationError("kernel csv: non-numeric cell on line " + std::to_string(row));
      }
    }
    if (cells.size() != columns.size() + 1) throw ValidationError("kernel csv: wrong cell count on line " + std::to_string(row));
    times.push_back(cells[0]);
    Eigen::MatrixXd m(J, J);
    for (std::size_t c = 0; c < columns.size(); ++c) m(columns[c].first, columns[c].second) = cells[c + 1];
    values.push_back(std::move(m));
  }
  return tabulated_kernel(std::move(times), std::move(values));
}

}  // namespace bqnet
