#include "blaq/rng.hpp"

#include <cmath>

namespace blaq {

double Rng::normal() {
  double u1 = uniform();
  while (u1 == 0.0) u1 = uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do x = gen_();
  while (x >= limit);
  return x % n;
}

}  // namespace blaq
