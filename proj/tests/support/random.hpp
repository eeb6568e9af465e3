#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "forge/numcore/tensor.hpp"

namespace forge::testing {

inline num::Tensor random_tensor(std::mt19937_64& rng, num::Shape shape, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> data(num::shape_volume(shape));
  for (auto& v : data) v = dist(rng);
  return num::Tensor(std::move(shape), std::move(data));
}

}  // namespace forge::testing
