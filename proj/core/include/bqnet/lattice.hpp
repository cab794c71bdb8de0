#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace bqnet {

/// Enumerates the occupancy vectors {n in N^J : n_1 + ... + n_J <= cap}.
/// Storage order is lexicographic; shells (constant total) are exposed
/// separately so recursions can sweep in nondecreasing total.
class SimplexIndex {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  SimplexIndex(std::size_t dim, std::uint32_t cap);

  std::size_t dim() const noexcept { return dim_; }
  std::uint32_t cap() const noexcept { return cap_; }
  std::size_t size() const noexcept { return size_; }

  /// Position of n, or npos when sum(n) > cap.
  std::size_t rank(std::span<const std::uint32_t> n) const;
  std::span<const std::uint32_t> at(std::size_t idx) const {
    return {coords_.data() + idx * dim_, dim_};
  }
  std::uint32_t total(std::size_t idx) const { return totals_[idx]; }
  /// Indices with total == m, in lexicographic order.
  std::span<const std::size_t> shell(std::uint32_t m) const;

  /// Number of vectors of dimension d with sum <= c.
  static double count(std::size_t d, std::uint32_t c);

 private:
  std::size_t dim_;
  std::uint32_t cap_;
  std::size_t size_;
  std::vector<std::size_t> table_;  // table_[d * (cap+1) + c] = count(d, c)
  std::vector<std::uint32_t> coords_;
  std::vector<std::uint32_t> totals_;
  std::vector<std::size_t> shell_order_;
  std::vector<std::size_t> shell_start_;
};

/// Probability array over the simplex with explicitly tracked unassigned mass.
struct LatticePmf {
  std::shared_ptr<const SimplexIndex> index;
  std::vector<double> prob;
  double tail_mass = 0.0;

  LatticePmf() = default;
  explicit LatticePmf(std::shared_ptr<const SimplexIndex> idx)
      : index(std::move(idx)), prob(index->size(), 0.0) {}

  std::size_t dim() const { return index->dim(); }
  std::uint32_t cap() const { return index->cap(); }
  /// P(n), zero outside the lattice.
  double at(std::span<const std::uint32_t> n) const;
  double assigned() const;
  /// Recomputes tail_mass = 1 - assigned().
  void close();
};

}  // namespace bqnet
