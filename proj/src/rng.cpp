#include "flowlab/rng.hpp"

#include <cmath>

#include "flowlab/util.hpp"

namespace flowlab {

double SplitMix64::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  double u2 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  have_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t split_seed(std::uint64_t master, std::string_view purpose) {
  return SplitMix64(master ^ fnv1a64(purpose)).next();
}

std::vector<double> sample_gaussian(std::size_t count, int dim,
                                    std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> out(count * static_cast<std::size_t>(dim));
  for (double& v : out) v = rng.gaussian();
  return out;
}

}  // namespace flowlab
