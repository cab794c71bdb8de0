#include "bqnet/batch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bqnet/errors.hpp"

namespace bqnet {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::uint32_t narrow_count(std::uint64_t n) {
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw SimulationError("batch size " + std::to_string(n) + " exceeds the per-queue counter range");
  }
  return static_cast<std::uint32_t>(n);
}

// exp(sum_k n_k log(1 - y_k)) complement, skipping n_k = 0 terms.
double complement_power(std::span<const std::uint32_t> n, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n.size(); ++k) {
    if (n[k] == 0) continue;
    if (y[k] >= 1.0) return 1.0;
    acc += n[k] * std::log1p(-y[k]);
  }
  return -std::expm1(acc);
}

}  // namespace

BatchLaw::BatchLaw(Variant v) : v_(std::move(v)) {
  std::visit(overloaded{
                 [this](const TableBatch& t) {
                   if (t.entries.empty()) throw ValidationError("batch table: no entries");
                   dim_ = t.entries.front().first.size();
                   double s = 0.0;
                   for (const auto& [n, p] : t.entries) {
                     if (n.size() != dim_) throw ValidationError("batch table: inconsistent vector dimensions");
                     if (!(p >= 0.0)) throw ValidationError("batch table: negative probability");
                     s += p;
                   }
                   if (std::abs(s - 1.0) > 1e-12) throw ValidationError("batch table: probabilities must sum to 1");
                 },
                 [this](const IidAssignmentBatch& b) {
                   dim_ = b.entry_probs.size();
                   double s = 0.0;
                   for (double p : b.entry_probs) {
                     if (!(p >= 0.0)) throw ValidationError("iid-assignment batch: negative entry probability");
                     s += p;
                   }
                   if (std::abs(s - 1.0) > 1e-12) {
                     throw ValidationError("iid-assignment batch: entry probabilities must sum to 1");
                   }
                 },
                 [this](const IndependentMarginalsBatch& b) { dim_ = b.marginals.size(); },
                 [this](const ConstantBatch& b) { dim_ = b.counts.size(); },
             },
             v_);
  if (dim_ == 0) throw ValidationError("batch law: dimension must be >= 1");
}

BatchLaw BatchLaw::table(std::vector<std::pair<Occupancy, double>> entries) {
  return BatchLaw(TableBatch{std::move(entries)});
}
BatchLaw BatchLaw::iid_assignment(UnivariateLaw size, std::vector<double> entry_probs) {
  return BatchLaw(IidAssignmentBatch{std::move(size), std::move(entry_probs)});
}
BatchLaw BatchLaw::independent(std::vector<UnivariateLaw> marginals) {
  return BatchLaw(IndependentMarginalsBatch{std::move(marginals)});
}
BatchLaw BatchLaw::constant(Occupancy counts) { return BatchLaw(ConstantBatch{std::move(counts)}); }

double BatchLaw::pgf(std::span<const double> z) const {
  if (z.size() != dim_) throw ValidationError("batch pgf: argument dimension does not match batch dimension");
  for (double zk : z) {
    if (!(zk >= 0.0 && zk <= 1.0)) throw ValidationError("batch pgf: arguments must lie in [0, 1]");
  }
  return std::visit(overloaded{
                        [z](const TableBatch& t) {
                          double acc = 0.0;
                          for (const auto& [n, p] : t.entries) {
                            double term = p;
                            for (std::size_t k = 0; k < n.size(); ++k) term *= std::pow(z[k], n[k]);
                            acc += term;
                          }
                          return acc;
                        },
                        [z](const IidAssignmentBatch& b) {
                          double w = 0.0;
                          for (std::size_t j = 0; j < z.size(); ++j) w += b.entry_probs[j] * z[j];
                          return b.size.pgf(std::min(w, 1.0));
                        },
                        [z](const IndependentMarginalsBatch& b) {
                          double acc = 1.0;
                          for (std::size_t j = 0; j < z.size(); ++j) acc *= b.marginals[j].pgf(z[j]);
                          return acc;
                        },
                        [z](const ConstantBatch& b) {
                          double acc = 1.0;
                          for (std::size_t j = 0; j < z.size(); ++j) acc *= std::pow(z[j], b.counts[j]);
                          return acc;
                        },
                    },
                    v_);
}

double BatchLaw::complement_pgf(std::span<const double> y) const {
  if (y.size() != dim_) throw ValidationError("batch pgf: argument dimension does not match batch dimension");
  return std::visit(overloaded{
                        [y](const TableBatch& t) {
                          double acc = 0.0;
                          for (const auto& [n, p] : t.entries) acc += p * complement_power(n, y);
                          return acc;
                        },
                        [y](const IidAssignmentBatch& b) {
                          double w = 0.0;
                          for (std::size_t j = 0; j < y.size(); ++j) w += b.entry_probs[j] * y[j];
                          return b.size.complement_pgf(w);
                        },
                        [y](const IndependentMarginalsBatch& b) {
                          double acc = 0.0;
                          for (std::size_t j = 0; j < y.size(); ++j) {
                            double c = b.marginals[j].complement_pgf(y[j]);
                            if (c >= 1.0) return 1.0;
                            acc += std::log1p(-c);
                          }
                          return -std::expm1(acc);
                        },
                        [y](const ConstantBatch& b) { return complement_power(b.counts, y); },
                    },
                    v_);
}

double BatchLaw::pmf(std::span<const std::uint32_t> n) const {
  if (n.size() != dim_) throw ValidationError("batch pmf: vector dimension does not match batch dimension");
  return std::visit(overloaded{
                        [n](const TableBatch& t) {
                          double acc = 0.0;
                          for (const auto& [v, p] : t.entries) {
                            if (std::equal(v.begin(), v.end(), n.begin())) acc += p;
                          }
                          return acc;
                        },
                        [n](const IidAssignmentBatch& b) {
                          std::uint64_t total = 0;
                          double log_mult = 0.0;
                          for (std::size_t j = 0; j < n.size(); ++j) {
                            total += n[j];
                            if (n[j] == 0) continue;
                            if (b.entry_probs[j] == 0.0) return 0.0;
                            log_mult += n[j] * std::log(b.entry_probs[j]) - std::lgamma(n[j] + 1.0);
                          }
                          double ps = b.size.pmf(total);
                          if (ps == 0.0) return 0.0;
                          return ps * std::exp(std::lgamma(total + 1.0) + log_mult);
                        },
                        [n](const IndependentMarginalsBatch& b) {
                          double acc = 1.0;
                          for (std::size_t j = 0; j < n.size(); ++j) acc *= b.marginals[j].pmf(n[j]);
                          return acc;
                        },
                        [n](const ConstantBatch& b) {
                          return std::equal(b.counts.begin(), b.counts.end(), n.begin()) ? 1.0 : 0.0;
                        },
                    },
                    v_);
}

std::optional<Eigen::VectorXd> BatchLaw::first_factorial_moments() const {
  const auto J = static_cast<Eigen::Index>(dim_);
  return std::visit(
      overloaded{
          [J](const TableBatch& t) -> std::optional<Eigen::VectorXd> {
            Eigen::VectorXd m = Eigen::VectorXd::Zero(J);
            for (const auto& [n, p] : t.entries) {
              for (Eigen::Index j = 0; j < J; ++j) m[j] += p * n[j];
            }
            return m;
          },
          [J](const IidAssignmentBatch& b) -> std::optional<Eigen::VectorXd> {
            auto mean = b.size.mean();
            if (!mean) return std::nullopt;
            Eigen::VectorXd m(J);
            for (Eigen::Index j = 0; j < J; ++j) m[j] = *mean * b.entry_probs[j];
            return m;
          },
          [J](const IndependentMarginalsBatch& b) -> std::optional<Eigen::VectorXd> {
            Eigen::VectorXd m(J);
            for (Eigen::Index j = 0; j < J; ++j) {
              auto mj = b.marginals[j].mean();
              if (!mj) return std::nullopt;
              m[j] = *mj;
            }
            return m;
          },
          [J](const ConstantBatch& b) -> std::optional<Eigen::VectorXd> {
            Eigen::VectorXd m(J);
            for (Eigen::Index j = 0; j < J; ++j) m[j] = b.counts[j];
            return m;
          },
      },
      v_);
}

std::optional<Eigen::MatrixXd> BatchLaw::second_factorial_moments() const {
  const auto J = static_cast<Eigen::Index>(dim_);
  return std::visit(
      overloaded{
          [J](const TableBatch& t) -> std::optional<Eigen::MatrixXd> {
            Eigen::MatrixXd m = Eigen::MatrixXd::Zero(J, J);
            for (const auto& [n, p] : t.entries) {
              for (Eigen::Index j = 0; j < J; ++j) {
                for (Eigen::Index k = 0; k < J; ++k) {
                  m(j, k) += p * n[j] * (static_cast<double>(n[k]) - (j == k ? 1.0 : 0.0));
                }
              }
            }
            return m;
          },
          [J](const IidAssignmentBatch& b) -> std::optional<Eigen::MatrixXd> {
            auto f2 = b.size.second_factorial_moment();
            if (!f2) return std::nullopt;
            Eigen::Map<const Eigen::VectorXd> p(b.entry_probs.data(), J);
            return Eigen::MatrixXd(*f2 * p * p.transpose());
          },
          [J](const IndependentMarginalsBatch& b) -> std::optional<Eigen::MatrixXd> {
            Eigen::VectorXd mean(J);
            Eigen::MatrixXd m(J, J);
            for (Eigen::Index j = 0; j < J; ++j) {
              auto mj = b.marginals[j].mean();
              auto fj = b.marginals[j].second_factorial_moment();
              if (!mj || !fj) return std::nullopt;
              mean[j] = *mj;
              m(j, j) = *fj;
            }
            for (Eigen::Index j = 0; j < J; ++j) {
              for (Eigen::Index k = 0; k < J; ++k) {
                if (j != k) m(j, k) = mean[j] * mean[k];
              }
            }
            return m;
          },
          [J](const ConstantBatch& b) -> std::optional<Eigen::MatrixXd> {
            Eigen::MatrixXd m(J, J);
            for (Eigen::Index j = 0; j < J; ++j) {
              for (Eigen::Index k = 0; k < J; ++k) {
                m(j, k) = b.counts[j] * (static_cast<double>(b.counts[k]) - (j == k ? 1.0 : 0.0));
              }
            }
            return m;
          },
      },
      v_);
}

bool BatchLaw::finite_log_moment() const {
  return std::visit(overloaded{
                        [](const IidAssignmentBatch& b) { return b.size.finite_log_moment(); },
                        [](const IndependentMarginalsBatch& b) {
                          return std::all_of(b.marginals.begin(), b.marginals.end(),
                                             [](const UnivariateLaw& u) { return u.finite_log_moment(); });
                        },
                        [](const auto&) { return true; },
                    },
                    v_);
}

bool BatchLaw::finite_fractional_moment(double theta) const {
  return std::visit(overloaded{
                        [theta](const IidAssignmentBatch& b) { return b.size.finite_fractional_moment(theta); },
                        [theta](const IndependentMarginalsBatch& b) {
                          return std::all_of(b.marginals.begin(), b.marginals.end(), [theta](const UnivariateLaw& u) {
                            return u.finite_fractional_moment(theta);
                          });
                        },
                        [](const auto&) { return true; },
                    },
                    v_);
}

Occupancy BatchLaw::sample(Rng& rng) const {
  return std::visit(overloaded{
                        [&rng](const TableBatch& t) {
                          double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                          double cdf = 0.0;
                          for (const auto& [n, p] : t.entries) {
                            cdf += p;
                            if (u < cdf) return n;
                          }
                          return t.entries.back().first;
                        },
                        [&rng](const IidAssignmentBatch& b) {
                          std::uint64_t remaining = b.size.sample(rng);
                          narrow_count(remaining);
                          Occupancy out(b.entry_probs.size(), 0);
                          double mass = 1.0;
                          for (std::size_t j = 0; j < out.size() && remaining > 0; ++j) {
                            double p = b.entry_probs[j];
                            std::uint64_t nj = remaining;
                            if (j + 1 < out.size() && p < mass) {
                              nj = std::binomial_distribution<std::uint64_t>(remaining, std::clamp(p / mass, 0.0, 1.0))(rng);
                            }
                            out[j] = static_cast<std::uint32_t>(nj);
                            remaining -= nj;
                            mass -= p;
                          }
                          return out;
                        },
                        [&rng](const IndependentMarginalsBatch& b) {
                          Occupancy out(b.marginals.size());
                          for (std::size_t j = 0; j < out.size(); ++j) out[j] = narrow_count(b.marginals[j].sample(rng));
                          return out;
                        },
                        [](const ConstantBatch& b) { return b.counts; },
                    },
                    v_);
}

}  // namespace bqnet
