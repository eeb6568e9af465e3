#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "forge/numcore/tensor.hpp"

namespace forge::num {

// Plain (non-recording) tensor operations. Every op validates shapes and
// throws DimensionError naming both operands on mismatch.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
double sum(const Tensor& a);

// Softmax over the last axis. Each slice is shifted by its max first.
Tensor softmax_last(const Tensor& x);

// Bilinear resampling of an h x w x c grid with half-pixel centers
// (corners not aligned). Source coordinates below zero clamp to zero and the
// upper neighbour clamps to the last row/column.
Tensor bilinear_resize(const Tensor& grid, std::size_t target_h, std::size_t target_w);

// Channel-wise mean over all spatial positions of an h x w x c grid.
Tensor global_mean_pool(const Tensor& grid);

// [m x a] | [m x b] -> [m x (a+b)]; works on the last axis of rank-3 grids too.
Tensor concat_last(const Tensor& a, const Tensor& b);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count);
// [c] -> [n x c]
Tensor repeat_rows(const Tensor& row, std::size_t n);

// One axis of a bilinear resampling: output index -> two source taps.
struct LinearTaps {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double w_lo = 1.0;
  double w_hi = 0.0;
};
std::vector<LinearTaps> half_pixel_taps(std::size_t in, std::size_t out);

}  // namespace forge::num
