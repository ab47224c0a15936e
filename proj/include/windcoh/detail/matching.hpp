#pragma once

#include <limits>
#include <vector>

namespace windcoh::detail {

// Hungarian assignment maximizing total overlap between two label sets.
// Returns, for each cluster of a, the matched cluster index of b (or -1 for
// padded rows). overlap(i,j) = |cluster_i(a)  intersect  cluster_j(b)|.
inline std::vector<int> max_overlap_assignment(
    const std::vector<std::vector<double>>& overlap) {
  const int ra = static_cast<int>(overlap.size());
  const int rb = ra ? static_cast<int>(overlap[0].size()) : 0;
  const int n = std::max(ra, rb);
  if (n == 0) return {};
  double maxv = 0.0;
  for (const auto& row : overlap)
    for (double v : row) maxv = std::max(maxv, v);
  // min-cost square matrix
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, maxv));
  for (int i = 0; i < ra; ++i)
    for (int j = 0; j < rb; ++j) cost[i][j] = maxv - overlap[i][j];

  // O(n^3) Hungarian with potentials (1-indexed internals)
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = std::numeric_limits<double>::infinity();
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> match(ra, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] >= 1 && p[j] <= ra && j <= rb) match[p[j] - 1] = j - 1;
  return match;
}

}  // namespace windcoh::detail
