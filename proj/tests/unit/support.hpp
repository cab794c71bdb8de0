#pragma once

#include <bqnet/kernel.hpp>
#include <bqnet/network.hpp>

#include <cmath>
#include <functional>
#include <vector>

namespace testing {

inline bqnet::ServiceNode exp_node(double rate, std::vector<double> routing) {
  return {bqnet::ServiceLaw(bqnet::ExponentialService{rate}), std::move(routing)};
}

// Single M/M/inf station, unit arrival rate.
inline bqnet::NetworkModel mm_infty(bqnet::BatchLaw batch, double mu = 1.0) {
  bqnet::NetworkModel m;
  m.arrival = bqnet::ArrivalProcess::constant(1.0);
  m.batch = std::move(batch);
  m.nodes = {exp_node(mu, {0.0, 1.0})};
  return m;
}

// Node 1 (rate mu1) feeds node 2 (rate mu2), which exits.
inline std::vector<bqnet::ServiceNode> tandem(double mu1 = 1.0, double mu2 = 2.0) {
  return {exp_node(mu1, {0.0, 1.0, 0.0}), exp_node(mu2, {0.0, 0.0, 1.0})};
}

// Markov tandem, Poisson(2) batches into node 1, rate 1 + 0.5 sin t.
inline bqnet::NetworkModel poisson_tandem() {
  bqnet::NetworkModel m;
  m.arrival = bqnet::ArrivalProcess::sinusoidal(1.0, 0.5, 1.0, 0.0);
  m.batch = bqnet::BatchLaw::iid_assignment(bqnet::UnivariateLaw(bqnet::PoissonLaw{2.0}), {1.0, 0.0});
  m.nodes = tandem();
  return m;
}

inline double poisson_pmf(double mean, unsigned n) {
  return std::exp(n * std::log(mean) - mean - std::lgamma(n + 1.0));
}

// H_n
inline double harmonic(unsigned n) {
  double h = 0.0;
  for (unsigned k = n; k >= 1; --k) h += 1.0 / k;
  return h;
}

}  // namespace testing

#include <bqnet/batch.hpp>
#include <bqnet/univariate.hpp>

#include <Eigen/Dense>

namespace testing {

// P[C = i] for an iid-assignment batch by summing over the batch size:
// sum_n P(S = n) multinomial(n; i, n - |i|) prod q_k^{i_k} e^{n - |i|}.
inline double brute_compound(const bqnet::UnivariateLaw& law, const Eigen::VectorXd& q, double exit,
                             const std::vector<std::uint32_t>& i) {
  unsigned total = 0;
  double log_place = 0.0;
  for (std::size_t k = 0; k < i.size(); ++k) {
    total += i[k];
    if (i[k] == 0) continue;
    if (q(k) <= 0.0) return 0.0;
    log_place += i[k] * std::log(q(k)) - std::lgamma(i[k] + 1.0);
  }
  std::uint64_t nmax = law.support_max().value_or(total + 4000);
  const auto seq = law.pmf_sequence(nmax);
  double s = 0.0, prev = 0.0;
  for (std::uint64_t n = total; n <= nmax; ++n) {
    double p = seq[n];
    unsigned r = static_cast<unsigned>(n - total);
    if (r > 0 && exit <= 0.0) break;
    double lr = r == 0 ? 0.0 : r * std::log(exit);
    double term = p == 0.0 ? 0.0 : p * std::exp(std::lgamma(n + 1.0) - std::lgamma(r + 1.0) + log_place + lr);
    s += term;
    // past the mode the terms shrink geometrically by about `exit`
    if (r > 20 && term < 1e-22 && term <= prev) break;
    prev = term;
  }
  return s;
}

// Enumerates every outcome of m categorical customers.
inline std::vector<double> enumerate_categorical(const Eigen::MatrixXd& rows, std::uint32_t cap,
                                                 const std::function<std::size_t(const std::vector<std::uint32_t>&)>& rank,
                                                 std::size_t size) {
  std::size_t m = rows.rows(), J = rows.cols() - 1;
  std::vector<double> out(size, 0.0);
  std::vector<std::size_t> pick(m, 0);
  while (true) {
    double p = 1.0;
    std::vector<std::uint32_t> n(J, 0);
    for (std::size_t c = 0; c < m; ++c) {
      p *= rows(c, pick[c]);
      if (pick[c] < J) ++n[pick[c]];
    }
    unsigned tot = 0;
    for (auto v : n) tot += v;
    if (tot <= cap) out[rank(n)] += p;
    std::size_t c = 0;
    while (c < m && ++pick[c] == J + 1) pick[c++] = 0;
    if (c == m) break;
  }
  return out;
}

}  // namespace testing
