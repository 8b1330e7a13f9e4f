#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "ckm/error.hpp"

namespace ckm {

// Square cost matrix stored row-major.
template <typename Cost>
class CostMatrix {
 public:
  CostMatrix() = default;
  explicit CostMatrix(std::size_t n, Cost fill = Cost{}) : n_(n), data_(n * n, fill) {}

  std::size_t size() const noexcept { return n_; }
  Cost& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
  const Cost& operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }

 private:
  std::size_t n_ = 0;
  std::vector<Cost> data_;
};

template <typename Cost>
struct MatchingResult {
  Cost cost{};
  // row_to_col[r] is the column matched to row r.
  std::vector<std::size_t> row_to_col;
};

// Min-cost perfect matching on a square matrix (Kuhn-Munkres with
// potentials, O(n^3)). The reported cost is re-summed row by row from the
// matrix, so it does not carry the rounding of the dual updates.
template <typename Cost>
MatchingResult<Cost> min_cost_matching(const CostMatrix<Cost>& m) {
  const std::size_t n = m.size();
  MatchingResult<Cost> out;
  out.row_to_col.assign(n, 0);
  if (n == 0) return out;

  const Cost inf = std::numeric_limits<Cost>::has_infinity ? std::numeric_limits<Cost>::infinity()
                                                           : std::numeric_limits<Cost>::max() / 4;
  // 1-based arrays; column 0 is the virtual root of each augmenting tree.
  std::vector<Cost> u(n + 1, Cost{}), v(n + 1, Cost{});
  std::vector<std::size_t> col_owner(n + 1, 0), way(n + 1, 0);
  std::vector<Cost> minv(n + 1);
  std::vector<char> used(n + 1);

  for (std::size_t row = 1; row <= n; ++row) {
    col_owner[0] = row;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = col_owner[j0];
      Cost delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const Cost cur = m(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[col_owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (col_owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      col_owner[j0] = col_owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (std::size_t j = 1; j <= n; ++j) out.row_to_col[col_owner[j] - 1] = j - 1;
  out.cost = Cost{};
  for (std::size_t r = 0; r < n; ++r) out.cost += m(r, out.row_to_col[r]);
  return out;
}

}  // namespace ckm
