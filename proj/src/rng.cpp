#include "zerograds/rng.hpp"

#include <cmath>
#include <numbers>

namespace zg {

std::pair<double, double> Rng::normal_pair() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

void Rng::fill_normal(Vector& out) {
  const auto n = out.size();
  for (Eigen::Index i = 0; i < n; i += 2) {
    auto [z0, z1] = normal_pair();
    out[i] = z0;
    if (i + 1 < n) out[i + 1] = z1;
  }
}

}  // namespace zg
