#pragma once

#include <stdexcept>
#include <vector>

namespace houli {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Uniform periodic grid on [0, 2pi).  n must be even: the sine/cosine
// transforms live on the half grid x_j = pi j / (n/2).
struct Grid {
  int n = 0;

  explicit Grid(int n_points) : n(n_points) {
    if (n < 4 || n % 2 != 0)
      throw std::invalid_argument("grid size must be even and >= 4");
  }

  int half() const { return n / 2; }

  double node(int j) const { return kTwoPi * j / n; }

  // Offset nodes 2pi(j + 1/2)/n never hit x = 0 or 2pi, so quadrature
  // against weights singular at the origin stays finite.
  double offset_node(int j) const { return kTwoPi * (j + 0.5) / n; }

  std::vector<double> offset_nodes() const {
    std::vector<double> x(n);
    for (int j = 0; j < n; ++j) x[j] = offset_node(j);
    return x;
  }

  // 2/3 dealiasing cutoff for quadratic products formed on this grid.
  int dealias_cutoff() const { return n / 3; }

  // Highest sine mode representable on the half grid.
  int max_modes() const { return n / 2 - 1; }
};

}  // namespace houli
