#pragma once

#include <vector>

namespace rbldp {

/// Uniform grid t_k = k * horizon / n, k = 0..n.
///
/// The model lives on [0, 1]; a horizon below one restricts the grid to
/// [0, horizon], which is how small-time simulations are run.
struct Grid {
  int n = 1;
  double horizon = 1.0;

  Grid() = default;
  explicit Grid(int steps, double horizon_ = 1.0);

  double dt() const noexcept { return horizon / n; }
  double time(int k) const noexcept { return k == n ? horizon : horizon * k / n; }
  int size() const noexcept { return n + 1; }
  std::vector<double> times() const;

  void validate() const;
};

}  // namespace rbldp
