#include "bqnet/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "bqnet/errors.hpp"
#include "bqnet/quadrature.hpp"

namespace bqnet {

namespace {

constexpr std::uint64_t kEventBudget = 1000000;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void exponential_gaps(double rate, double from, double to, Rng& rng, std::vector<double>& out) {
  if (rate <= 0.0) return;
  std::exponential_distribution<double> gap(rate);
  for (double t = from + gap(rng); t < to; t += gap(rng)) out.push_back(t);
}

}  // namespace

std::vector<double> sample_arrival_times(const ArrivalProcess& process, double horizon, Rng& rng) {
  if (!(horizon > 0.0)) return {};
  std::vector<double> out;
  std::visit(overloaded{
                 [&](const ConstantRate& c) { exponential_gaps(c.rate, 0.0, horizon, rng, out); },
                 [&](const PiecewiseConstantRate& p) {
                   for (std::size_t i = 0; i < p.rates.size() && p.breakpoints[i] < horizon; ++i) {
                     const double end = i + 1 < p.breakpoints.size() ? std::min(p.breakpoints[i + 1], horizon) : horizon;
                     exponential_gaps(p.rates[i], p.breakpoints[i], end, rng, out);
                   }
                 },
                 [&](const SinusoidalRate&) {
                   const double top = process.max_rate(0.0, horizon);
                   if (top <= 0.0) return;
                   std::exponential_distribution<double> gap(top);
                   std::uniform_real_distribution<double> u(0.0, 1.0);
                   for (double t = gap(rng); t < horizon; t += gap(rng)) {
                     if (u(rng) * top < process.rate(t)) out.push_back(t);
                   }
                 },
             },
             process.variant());
  return out;
}

Occupancy sample_batch(const BatchLaw& law, Rng& rng) { return law.sample(rng); }

std::vector<std::size_t> sample_trajectory(std::span<const ServiceNode> nodes, std::size_t entry, Rng& rng,
                                           std::span<const double> offsets) {
  const std::size_t J = nodes.size();
  if (entry >= J) throw IndexError("trajectory: entry node out of range");
  std::vector<std::size_t> order(offsets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return offsets[a] < offsets[b]; });

  std::vector<std::size_t> where(offsets.size(), J);
  std::size_t next = 0;
  std::size_t node = entry;
  double clock = 0.0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::uint64_t events = 0; next < order.size(); ++events) {
    if (events >= kEventBudget) throw SimulationError("trajectory: event budget exhausted (routing loop?)");
    const double leave = clock + nodes[node].service.sample(rng);
    while (next < order.size() && offsets[order[next]] < leave) where[order[next++]] = node;
    if (next == order.size()) break;
    clock = leave;
    const auto& row = nodes[node].routing;
    double x = u(rng), acc = 0.0;
    std::size_t k = 0;
    for (; k < J; ++k) {
      acc += row[k];
      if (x < acc) break;
    }
    if (k == J) break;  // exited; remaining offsets keep J
    node = k;
  }
  return where;
}

void SimulationPlan::validate() const {
  if (!model) throw ValidationError("simulation plan: no model");
  model->validate();
  if (replications < 1) throw ValidationError("simulation plan: replications must be >= 1");
  if (times.empty()) throw ValidationError("simulation plan: no snapshot times");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0) || !std::isfinite(times[i])) throw ValidationError("simulation plan: times must be finite and >= 0");
    if (i > 0 && times[i] < times[i - 1]) throw ValidationError("simulation plan: times must be sorted");
  }
}

double SimulationEstimate::probability(std::size_t snapshot, std::size_t rank) const {
  return static_cast<double>(snapshots.at(snapshot).counts.at(rank)) / static_cast<double>(replications);
}

double SimulationEstimate::standard_error(std::size_t snapshot, std::size_t rank) const {
  const double p = probability(snapshot, rank);
  return std::sqrt(p * (1.0 - p) / static_cast<double>(replications));
}

double cell_z_score(double analytic, double empirical, std::uint64_t replications) {
  const double R = static_cast<double>(replications);
  const double p = empirical > 0.0 ? empirical : analytic;
  const double se = std::sqrt(std::clamp(p, 0.0, 1.0) * std::clamp(1.0 - p, 0.0, 1.0) / R);
  if (se > 0.0) return std::abs(empirical - analytic) / se;
  return empirical == analytic ? 0.0 : std::numeric_limits<double>::infinity();
}

LatticePmf SimulationEstimate::empirical(std::size_t snapshot) const {
  LatticePmf out(index);
  for (std::size_t r = 0; r < index->size(); ++r) out.prob[r] = probability(snapshot, r);
  out.tail_mass = static_cast<double>(snapshots.at(snapshot).overflow) / static_cast<double>(replications);
  return out;
}

SimulationEstimate run_simulation(const SimulationPlan& plan) {
  plan.validate();
  const NetworkModel& model = *plan.model;
  const std::size_t J = model.J();
  const std::size_t S = plan.times.size();
  const double horizon = plan.times.back();

  SimulationEstimate est;
  est.index = std::make_shared<const SimplexIndex>(J, plan.cap);
  est.replications = plan.replications;
  const std::size_t size = est.index->size();

  unsigned workers = plan.workers == 0 ? 1 : plan.workers;
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, plan.replications));
  std::vector<std::vector<std::uint64_t>> counts(workers, std::vector<std::uint64_t>(S * size, 0));
  std::vector<std::vector<std::uint64_t>> overflow(workers, std::vector<std::uint64_t>(S, 0));

  parallel_for(workers, workers, [&](std::size_t w) {
    const std::uint64_t lo = plan.replications * w / workers, hi = plan.replications * (w + 1) / workers;
    std::vector<std::uint32_t> occ(S * J);
    std::vector<double> offsets;
    std::vector<std::size_t> slots;
    for (std::uint64_t rep = lo; rep < hi; ++rep) {
      Rng rng = substream(plan.seed, rep);
      std::fill(occ.begin(), occ.end(), 0);
      for (double tau : sample_arrival_times(model.arrival, horizon, rng)) {
        Occupancy batch = model.batch.sample(rng);
        offsets.clear();
        slots.clear();
        for (std::size_t s = 0; s < S; ++s) {
          if (plan.times[s] > tau) {
            offsets.push_back(plan.times[s] - tau);
            slots.push_back(s);
          }
        }
        for (std::size_t j = 0; j < J; ++j) {
          for (std::uint32_t c = 0; c < batch[j]; ++c) {
            auto where = sample_trajectory(model.nodes, j, rng, offsets);
            for (std::size_t o = 0; o < where.size(); ++o) {
              if (where[o] < J) ++occ[slots[o] * J + where[o]];
            }
          }
        }
      }
      for (std::size_t s = 0; s < S; ++s) {
        std::size_t r = est.index->rank(std::span<const std::uint32_t>(occ.data() + s * J, J));
        if (r == SimplexIndex::npos) {
          ++overflow[w][s];
        } else {
          ++counts[w][s * size + r];
        }
      }
    }
  });

  est.snapshots.resize(S);
  for (std::size_t s = 0; s < S; ++s) {
    auto& snap = est.snapshots[s];
    snap.t = plan.times[s];
    snap.counts.assign(size, 0);
    for (unsigned w = 0; w < workers; ++w) {
      for (std::size_t r = 0; r < size; ++r) snap.counts[r] += counts[w][s * size + r];
      snap.overflow += overflow[w][s];
    }
  }
  return est;
}

}  // namespace bqnet
