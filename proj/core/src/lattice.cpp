#include "bqnet/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bqnet/errors.hpp"

namespace bqnet {

namespace {
constexpr double kMaxLatticeSize = 2.0e8;
}

double SimplexIndex::count(std::size_t d, std::uint32_t c) {
  // C(c + d, d)
  return std::round(std::exp(std::lgamma(c + d + 1.0) - std::lgamma(d + 1.0) - std::lgamma(c + 1.0)));
}

SimplexIndex::SimplexIndex(std::size_t dim, std::uint32_t cap) : dim_(dim), cap_(cap) {
  if (dim == 0) throw ValidationError("simplex index: dimension must be >= 1");
  const double n = count(dim, cap);
  if (n * static_cast<double>(dim) > kMaxLatticeSize) {
    throw ResourceError("simplex index: " + std::to_string(n) + " lattice points for dim " + std::to_string(dim) +
                        ", cap " + std::to_string(cap) + " exceeds the lattice budget");
  }
  size_ = static_cast<std::size_t>(n);

  const std::size_t width = cap_ + 1;
  table_.assign((dim_ + 1) * width, 0);
  for (std::uint32_t c = 0; c <= cap_; ++c) table_[c] = 1;
  for (std::size_t d = 1; d <= dim_; ++d) {
    std::size_t acc = 0;
    for (std::uint32_t c = 0; c <= cap_; ++c) {
      acc += table_[(d - 1) * width + c];
      table_[d * width + c] = acc;
    }
  }

  coords_.resize(size_ * dim_);
  totals_.resize(size_);
  std::vector<std::uint32_t> v(dim_, 0);
  std::uint32_t sum = 0;
  for (std::size_t idx = 0; idx < size_; ++idx) {
    std::copy(v.begin(), v.end(), coords_.begin() + static_cast<std::ptrdiff_t>(idx * dim_));
    totals_[idx] = sum;
    // Lexicographic successor within the simplex: bump the last coordinate
    // when room remains, otherwise carry leftwards.
    std::size_t k = dim_;
    while (k-- > 0) {
      if (sum < cap_) {
        ++v[k];
        ++sum;
        break;
      }
      sum -= v[k];
      v[k] = 0;
    }
  }

  shell_order_.resize(size_);
  std::iota(shell_order_.begin(), shell_order_.end(), std::size_t{0});
  std::stable_sort(shell_order_.begin(), shell_order_.end(),
                   [this](std::size_t a, std::size_t b) { return totals_[a] < totals_[b]; });
  shell_start_.assign(cap_ + 2, 0);
  for (std::size_t idx = 0; idx < size_; ++idx) ++shell_start_[totals_[idx] + 1];
  std::partial_sum(shell_start_.begin(), shell_start_.end(), shell_start_.begin());
}

std::size_t SimplexIndex::rank(std::span<const std::uint32_t> n) const {
  if (n.size() != dim_) throw ValidationError("simplex index: dimension mismatch");
  const std::size_t width = cap_ + 1;
  std::size_t r = 0;
  std::uint32_t remaining = cap_;
  for (std::size_t k = 0; k < dim_; ++k) {
    if (n[k] > remaining) return npos;
    const std::size_t d = dim_ - k - 1;
    // vectors agreeing on the prefix with a smaller k-th coordinate
    for (std::uint32_t x = 0; x < n[k]; ++x) r += table_[d * width + (remaining - x)];
    remaining -= n[k];
  }
  return r;
}

std::span<const std::size_t> SimplexIndex::shell(std::uint32_t m) const {
  if (m > cap_) return {};
  return {shell_order_.data() + shell_start_[m], shell_start_[m + 1] - shell_start_[m]};
}

double LatticePmf::at(std::span<const std::uint32_t> n) const {
  std::size_t r = index->rank(n);
  return r == SimplexIndex::npos ? 0.0 : prob[r];
}

double LatticePmf::assigned() const {
  double s = 0.0;
  for (double p : prob) s += p;
  return s;
}

void LatticePmf::close() { tail_mass = 1.0 - assigned(); }

}  // namespace bqnet
