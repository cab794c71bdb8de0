#include "bqnet/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "bqnet/errors.hpp"

namespace bqnet {

void QuadratureSpec::validate() const {
  if (nodes < 3 || nodes % 2 == 0) throw ValidationError("quadrature: node count must be odd and >= 3");
  if (!(rtol >= 0.0) || !(atol >= 0.0)) throw ValidationError("quadrature: tolerances must be >= 0");
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(threads, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t lo = n * w / workers, hi = n * (w + 1) / workers;
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

struct Segment {
  double lo, hi;
  // values[node * dim + c], nodes equally spaced on [lo, hi]
  std::vector<double> values;
  std::size_t count = 0;
};

void simpson_add(const Segment& s, std::size_t dim, std::vector<double>& acc) {
  const std::size_t n = s.count;
  const double h = (s.hi - s.lo) / static_cast<double>(n - 1);
  for (std::size_t c = 0; c < dim; ++c) {
    double sum = s.values[c] + s.values[(n - 1) * dim + c];
    for (std::size_t i = 1; i + 1 < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * s.values[i * dim + c];
    acc[c] += sum * h / 3.0;
  }
}

}  // namespace

QuadratureResult integrate(const VectorIntegrand& f, std::size_t dim, double a, double b,
                           std::span<const double> breaks, const QuadratureSpec& spec) {
  return integrate([&f](double tau, double, double, std::span<double> out) { f(tau, out); }, dim, a, b, breaks,
                   spec);
}

QuadratureResult integrate(const SegmentIntegrand& f, std::size_t dim, double a, double b,
                           std::span<const double> breaks, const QuadratureSpec& spec) {
  spec.validate();
  QuadratureResult result;
  result.value.assign(dim, 0.0);
  if (!(b > a)) return result;

  std::vector<double> cuts{a};
  for (double x : breaks) {
    if (x > a && x < b) cuts.push_back(x);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.push_back(b);

  std::vector<Segment> segs;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) segs.push_back({cuts[s], cuts[s + 1], {}, 0});

  // Fill segments with `count` nodes, evaluating only the odd ones when the
  // previous level is already present.
  auto refine = [&](std::size_t count, bool fresh) {
    struct Job {
      std::size_t seg, node;
      double tau;
    };
    std::vector<Job> jobs;
    for (std::size_t s = 0; s < segs.size(); ++s) {
      auto& sg = segs[s];
      std::vector<double> next(count * dim, 0.0);
      if (!fresh) {
        for (std::size_t i = 0; i < sg.count; ++i) {
          std::copy_n(sg.values.begin() + static_cast<std::ptrdiff_t>(i * dim), dim,
                      next.begin() + static_cast<std::ptrdiff_t>(2 * i * dim));
        }
      }
      const double h = (sg.hi - sg.lo) / static_cast<double>(count - 1);
      for (std::size_t i = 0; i < count; ++i) {
        if (!fresh && i % 2 == 0) continue;
        jobs.push_back({s, i, i + 1 == count ? sg.hi : sg.lo + h * static_cast<double>(i)});
      }
      sg.values = std::move(next);
      sg.count = count;
    }
    parallel_for(jobs.size(), spec.threads, [&](std::size_t k) {
      const auto& jb = jobs[k];
      auto& sg = segs[jb.seg];
      f(jb.tau, sg.lo, sg.hi, std::span<double>(sg.values.data() + jb.node * dim, dim));
    });
  };

  auto estimate = [&] {
    std::vector<double> acc(dim, 0.0);
    for (const auto& s : segs) simpson_add(s, dim, acc);
    return acc;
  };

  std::size_t count = spec.nodes;
  refine(count, true);
  std::vector<double> prev = estimate();
  for (unsigned d = 1; d <= spec.max_doublings; ++d) {
    count = 2 * count - 1;
    refine(count, false);
    std::vector<double> cur = estimate();
    std::size_t worst = 0;
    double worst_excess = -1.0;
    for (std::size_t c = 0; c < dim; ++c) {
      double excess = std::abs(cur[c] - prev[c]) - (spec.rtol * std::abs(cur[c]) + spec.atol);
      if (!std::isfinite(cur[c])) excess = INFINITY;
      if (excess > worst_excess) {
        worst_excess = excess;
        worst = c;
      }
    }
    if (worst_excess <= 0.0) {
      result.value = std::move(cur);
      result.nodes = segs.size() * (count - 1) + 1;
      result.doublings = d;
      return result;
    }
    if (d == spec.max_doublings) {
      throw ConvergenceError("quadrature: no convergence after " + std::to_string(d) + " doublings (component " +
                                 std::to_string(worst) + ")",
                             cur[worst], prev[worst]);
    }
    prev = std::move(cur);
  }
  // max_doublings == 0: accept the first level.
  result.value = std::move(prev);
  result.nodes = segs.size() * (count - 1) + 1;
  return result;
}

}  // namespace bqnet
