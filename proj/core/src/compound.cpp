#include "bqnet/compound.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "bqnet/errors.hpp"

namespace bqnet {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

// Largest batch support enumerated when a univariate law has no closed-form
// compound and an unbounded support.
constexpr std::uint64_t kSeriesHardCap = 200000;
constexpr double kSeriesTail = 1e-12;
constexpr double kPmdBudget = 1e8;
constexpr double kInf = std::numeric_limits<double>::infinity();

double lfact(double n) { return std::lgamma(n + 1.0); }

// Ranks of x - e_k for every lattice point x and axis k (npos when x_k = 0).
std::vector<std::size_t> predecessors(const SimplexIndex& index) {
  const std::size_t J = index.dim();
  std::vector<std::size_t> pred(index.size() * J, SimplexIndex::npos);
  std::vector<std::uint32_t> v(J);
  for (std::size_t idx = 0; idx < index.size(); ++idx) {
    auto x = index.at(idx);
    for (std::size_t k = 0; k < J; ++k) {
      if (x[k] == 0) continue;
      std::copy(x.begin(), x.end(), v.begin());
      --v[k];
      pred[idx * J + k] = index.rank(v);
    }
  }
  return pred;
}

// out = a * b (lattice convolution truncated at the common cap).
LatticePmf convolve(const LatticePmf& a, const LatticePmf& b) {
  const auto& index = *a.index;
  const std::size_t J = index.dim();
  auto nonzero = [](const LatticePmf& l) {
    std::size_t c = 0;
    for (double p : l.prob) c += p != 0.0;
    return c;
  };
  const LatticePmf& sparse = nonzero(a) <= nonzero(b) ? a : b;
  const LatticePmf& dense = &sparse == &a ? b : a;
  LatticePmf out(a.index);
  std::vector<std::uint32_t> x(J);
  for (std::size_t i = 0; i < index.size(); ++i) {
    const double pa = sparse.prob[i];
    if (pa == 0.0) continue;
    auto yi = index.at(i);
    const std::uint32_t room = index.cap() - index.total(i);
    for (std::uint32_t m = 0; m <= room; ++m) {
      for (std::size_t j : index.shell(m)) {
        const double pb = dense.prob[j];
        if (pb == 0.0) continue;
        auto zj = index.at(j);
        for (std::size_t k = 0; k < J; ++k) x[k] = yi[k] + zj[k];
        out.prob[index.rank(x)] += pa * pb;
      }
    }
  }
  out.close();
  return out;
}

void check_probability_row(const Eigen::Ref<const Eigen::RowVectorXd>& row, const char* what) {
  if ((row.array() < -1e-12).any() || std::abs(row.sum() - 1.0) > 1e-12) {
    throw ValidationError(std::string(what) + ": rows must be probability vectors");
  }
}

}  // namespace

PoissonMultinomialResult poisson_multinomial_pmf(const Eigen::MatrixXd& rows, double budget) {
  const auto m = static_cast<std::size_t>(rows.rows());
  if (m == 0 || rows.cols() < 2) throw ValidationError("poisson multinomial: need m >= 1 rows over J + 1 >= 2 categories");
  for (Eigen::Index c = 0; c < rows.rows(); ++c) check_probability_row(rows.row(c), "poisson multinomial");
  const auto J = static_cast<std::size_t>(rows.cols() - 1);
  const std::size_t n = m + 1;
  const double box = std::pow(static_cast<double>(n), static_cast<double>(J));
  if (static_cast<double>(m) * box > budget) {
    throw ResourceError("poisson multinomial: m (m+1)^J = " + std::to_string(static_cast<double>(m) * box) +
                        " exceeds the budget; use categorical enumeration instead");
  }
  const auto size = static_cast<std::size_t>(box);

  std::vector<std::complex<double>> twiddle(n);
  for (std::size_t a = 0; a < n; ++a) {
    twiddle[a] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(a) / static_cast<double>(n));
  }

  // Characteristic function on the frequency lattice.
  std::vector<std::complex<double>> phi(size);
  std::vector<std::size_t> digits(J, 0);
  for (std::size_t l = 0; l < size; ++l) {
    std::complex<double> prod = 1.0;
    for (std::size_t c = 0; c < m; ++c) {
      std::complex<double> s = rows(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(J));
      for (std::size_t k = 0; k < J; ++k) s += rows(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) * twiddle[digits[k]];
      prod *= s;
    }
    phi[l] = prod;
    for (std::size_t k = J; k-- > 0;) {
      if (++digits[k] < n) break;
      digits[k] = 0;
    }
  }

  // Separable inverse DFT along each axis.
  std::vector<std::complex<double>> line(n);
  std::size_t stride = 1;
  for (std::size_t axis = J; axis-- > 0;) {
    const std::size_t block = stride * n;
    for (std::size_t base = 0; base < size; base += block) {
      for (std::size_t off = 0; off < stride; ++off) {
        for (std::size_t x = 0; x < n; ++x) {
          std::complex<double> acc = 0.0;
          for (std::size_t l = 0; l < n; ++l) acc += phi[base + off + l * stride] * std::conj(twiddle[(l * x) % n]);
          line[x] = acc / static_cast<double>(n);
        }
        for (std::size_t x = 0; x < n; ++x) phi[base + off + x * stride] = line[x];
      }
    }
    stride = block;
  }

  PoissonMultinomialResult result;
  result.pmf = LatticePmf(std::make_shared<SimplexIndex>(J, static_cast<std::uint32_t>(m)));
  const auto& index = *result.pmf.index;
  for (std::size_t idx = 0; idx < index.size(); ++idx) {
    auto x = index.at(idx);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < J; ++k) pos = pos * n + x[k];
    double v = phi[pos].real();
    if (v < 0.0) {
      result.most_negative = std::min(result.most_negative, v);
      if (v > -1e-10) {
        ++result.clamped;
      } else {
        ++result.excess_negative;
      }
      v = 0.0;
    }
    result.pmf.prob[idx] = v;
  }
  result.pmf.close();
  return result;
}

LatticePmf categorical_convolution(const Eigen::MatrixXd& rows, std::shared_ptr<const SimplexIndex> index) {
  const std::size_t J = index->dim();
  if (static_cast<std::size_t>(rows.cols()) != J + 1) throw ValidationError("categorical convolution: row width must be J + 1");
  const auto pred = predecessors(*index);
  LatticePmf cur(index);
  cur.prob[0] = 1.0;
  std::vector<double> next(index->size());
  for (Eigen::Index c = 0; c < rows.rows(); ++c) {
    const double stay_out = rows(c, static_cast<Eigen::Index>(J));
    for (std::size_t idx = 0; idx < index->size(); ++idx) {
      double acc = stay_out * cur.prob[idx];
      for (std::size_t k = 0; k < J; ++k) {
        std::size_t p = pred[idx * J + k];
        if (p != SimplexIndex::npos) acc += rows(c, static_cast<Eigen::Index>(k)) * cur.prob[p];
      }
      next[idx] = acc;
    }
    cur.prob.swap(next);
  }
  cur.close();
  return cur;
}

CompoundSnapshot::CompoundSnapshot(const BatchLaw& batch, const OccupancyKernel& kernel, double t)
    : batch_(&batch), placement_(kernel.placement(t)), t_(t) {
  if (kernel.J() != batch.dim()) throw ValidationError("compound snapshot: kernel and batch dimensions differ");
}

CompoundSnapshot::CompoundSnapshot(const BatchLaw& batch, Eigen::MatrixXd placement, double t)
    : batch_(&batch), placement_(std::move(placement)), t_(t) {
  if (static_cast<std::size_t>(placement_.rows()) != batch.dim() || placement_.cols() != placement_.rows() + 1) {
    throw ValidationError("compound snapshot: placement must be J x (J + 1)");
  }
  check_rows();
}

void CompoundSnapshot::check_rows() const {
  for (Eigen::Index j = 0; j < placement_.rows(); ++j) check_probability_row(placement_.row(j), "compound snapshot");
}

double CompoundSnapshot::pgf(std::span<const double> z) const { return 1.0 - complement_pgf(z); }

double CompoundSnapshot::complement_pgf(std::span<const double> z) const {
  const auto J = placement_.rows();
  if (static_cast<Eigen::Index>(z.size()) != J) throw ValidationError("compound pgf: argument dimension mismatch");
  std::vector<double> y(static_cast<std::size_t>(J), 0.0);
  for (Eigen::Index j = 0; j < J; ++j) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < J; ++k) {
      const double zk = z[static_cast<std::size_t>(k)];
      if (!(zk >= 0.0 && zk <= 1.0)) throw ValidationError("compound pgf: arguments must lie in [0, 1]");
      acc += (1.0 - zk) * placement_(j, k);
    }
    y[static_cast<std::size_t>(j)] = std::clamp(acc, 0.0, 1.0);
  }
  return batch_->complement_pgf(y);
}

double CompoundSnapshot::occupied_probability() const {
  std::vector<double> zero(static_cast<std::size_t>(placement_.rows()), 0.0);
  return complement_pgf(zero);
}

double CompoundSnapshot::pmf(std::span<const std::uint32_t> i) const {
  if (i.size() != batch_->dim()) throw ValidationError("compound pmf: vector dimension mismatch");
  std::uint32_t total = 0;
  for (auto v : i) total += v;
  auto index = std::make_shared<SimplexIndex>(i.size(), total);
  return lattice(index).at(i);
}

LatticePmf CompoundSnapshot::univariate_lattice(const UnivariateLaw& law, const Eigen::VectorXd& q, double exit,
                                                std::shared_ptr<const SimplexIndex> index) const {
  const std::size_t J = index->dim();
  const std::uint32_t cap = index->cap();
  LatticePmf out(index);
  const double placed = std::clamp(1.0 - exit, 0.0, 1.0);

  std::vector<double> logq(J);
  for (std::size_t k = 0; k < J; ++k) logq[k] = std::log(q[static_cast<Eigen::Index>(k)]);

  // log of prod_k q_k^{i_k} / i_k!, or -inf when some q_k = 0 < i_k.
  auto log_placement = [&](std::span<const std::uint32_t> i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < J; ++k) {
      if (i[k] == 0) continue;
      if (q[static_cast<Eigen::Index>(k)] <= 0.0) return -kInf;
      acc += i[k] * logq[k] - lfact(i[k]);
    }
    return acc;
  };

  // log P[C = i] as a function of the total m and the placement term.
  std::function<double(std::uint32_t, double)> log_prob;
  std::visit(
      overloaded{
          [&](const BinomialLaw& b) {
            const double N = b.trials;
            log_prob = [N, b, placed](std::uint32_t m, double lp) {
              if (m > N) return -kInf;
              double rest = N - m;
              double log_rest = rest == 0.0 ? 0.0 : rest * std::log1p(-b.prob * placed);
              double log_alpha = m == 0 ? 0.0 : m * std::log(b.prob);
              return lfact(N) - lfact(rest) + log_rest + log_alpha + lp;
            };
          },
          [&](const PoissonLaw& p) {
            log_prob = [p, placed](std::uint32_t m, double lp) {
              if (m > 0 && p.mean == 0.0) return -kInf;
              return -p.mean * placed + (m == 0 ? 0.0 : m * std::log(p.mean)) + lp;
            };
          },
          [&](const NegativeBinomialLaw& nb) {
            log_prob = [nb, placed](std::uint32_t m, double lp) {
              return std::lgamma(nb.shape + m) - std::lgamma(nb.shape) + m * std::log(nb.scale) -
                     (nb.shape + m) * std::log1p(nb.scale * placed) + lp;
            };
          },
          [&](const LogarithmicLaw& l) {
            log_prob = [l, exit](std::uint32_t m, double lp) {
              if (m == 0) return std::log(std::log1p(-l.rho * exit) / std::log1p(-l.rho));
              return m * std::log(l.rho) + lp + std::lgamma(static_cast<double>(m)) - m * std::log1p(-l.rho * exit) -
                     std::log(-std::log1p(-l.rho));
            };
          },
          [&](const auto&) {
            // Generic compounding: P[C = i] = m! prod(q^i / i!) h(m), with
            // h(m) = sum_{s >= m} P(S = s) C(s, m) exit^(s - m).
            std::uint64_t smax = std::max<std::uint64_t>(cap, law.truncation_point(kSeriesTail, kSeriesHardCap));
            if (auto sup = law.support_max()) smax = std::min<std::uint64_t>(smax, std::max<std::uint64_t>(*sup, 0));
            const auto ps = law.pmf_sequence(smax);
            std::vector<double> logh(cap + 1, -kInf);
            const double loge = std::log(exit);
            for (std::uint32_t m = 0; m <= cap && m <= smax; ++m) {
              double acc = 0.0;
              if (exit <= 0.0) {
                acc = ps[m];
              } else {
                double prev = INFINITY;
                for (std::uint64_t s = m; s <= smax; ++s) {
                  if (ps[s] == 0.0) continue;
                  const double sd = static_cast<double>(s);
                  double term = ps[s] * std::exp(lfact(sd) - lfact(m) - lfact(sd - m) + (sd - m) * loge);
                  acc += term;
                  if (s > m + 64 && term < 1e-18 * acc && term <= prev) break;
                  prev = term;
                }
              }
              logh[m] = acc > 0.0 ? std::log(acc) : -kInf;
            }
            log_prob = [logh](std::uint32_t m, double lp) { return logh[m] + lfact(m) + lp; };
          },
      },
      law.variant());

  for (std::size_t idx = 0; idx < index->size(); ++idx) {
    auto i = index->at(idx);
    const std::uint32_t m = index->total(idx);
    if (m > 0 && placed <= 0.0) continue;
    double lp = log_placement(i);
    if (lp == -kInf) continue;
    double v = std::exp(log_prob(m, lp));
    out.prob[idx] = std::isfinite(v) ? v : 0.0;
  }
  out.close();
  return out;
}

LatticePmf CompoundSnapshot::lattice(std::shared_ptr<const SimplexIndex> index) const {
  const auto J = placement_.rows();
  if (static_cast<Eigen::Index>(index->dim()) != J) throw ValidationError("compound lattice: index dimension mismatch");
  return std::visit(
      overloaded{
          [&](const IidAssignmentBatch& b) {
            Eigen::Map<const Eigen::RowVectorXd> p(b.entry_probs.data(), J);
            Eigen::RowVectorXd mixed = p * placement_;
            return univariate_lattice(b.size, mixed.head(J).transpose(), std::clamp(mixed[J], 0.0, 1.0), index);
          },
          [&](const IndependentMarginalsBatch& b) {
            LatticePmf acc(index);
            acc.prob[0] = 1.0;
            for (Eigen::Index j = 0; j < J; ++j) {
              const auto& law = b.marginals[static_cast<std::size_t>(j)];
              if (auto sup = law.support_max(); sup && *sup == 0) continue;
              LatticePmf part = univariate_lattice(law, placement_.row(j).head(J).transpose(), placement_(j, J), index);
              acc = convolve(acc, part);
            }
            acc.close();
            return acc;
          },
          [&](const ConstantBatch& b) {
            std::uint64_t m = 0;
            for (auto s : b.counts) m += s;
            LatticePmf out(index);
            if (m == 0) {
              out.prob[0] = 1.0;
              out.close();
              return out;
            }
            Eigen::MatrixXd rows(static_cast<Eigen::Index>(m), J + 1);
            Eigen::Index r = 0;
            for (Eigen::Index j = 0; j < J; ++j) {
              for (std::uint32_t c = 0; c < b.counts[static_cast<std::size_t>(j)]; ++c) rows.row(r++) = placement_.row(j);
            }
            const double work = static_cast<double>(m) * std::pow(static_cast<double>(m + 1), static_cast<double>(J));
            if (work > kPmdBudget) return categorical_convolution(rows, index);
            auto pmd = poisson_multinomial_pmf(rows, kPmdBudget);
            for (std::size_t idx = 0; idx < index->size(); ++idx) {
              if (index->total(idx) <= m) out.prob[idx] = pmd.pmf.at(index->at(idx));
            }
            out.close();
            return out;
          },
          [&](const TableBatch& t) {
            LatticePmf out(index);
            for (const auto& [n, p] : t.entries) {
              if (p == 0.0) continue;
              std::uint64_t m = 0;
              for (auto s : n) m += s;
              Eigen::MatrixXd rows(static_cast<Eigen::Index>(m), J + 1);
              Eigen::Index r = 0;
              for (Eigen::Index j = 0; j < J; ++j) {
                for (std::uint32_t c = 0; c < n[static_cast<std::size_t>(j)]; ++c) rows.row(r++) = placement_.row(j);
              }
              LatticePmf part = categorical_convolution(rows, index);
              for (std::size_t idx = 0; idx < index->size(); ++idx) out.prob[idx] += p * part.prob[idx];
            }
            out.close();
            return out;
          },
      },
      batch_->variant());
}

}  // namespace bqnet
