#include "forge/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "forge/error.hpp"

namespace forge::num {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + t.shape_string());
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + a.shape_string() + " by " + b.shape_string());
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n, 0.0);
  auto A = a.data();
  auto B = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * B[p * n + j];
    }
  }
  return Tensor({m, n}, std::move(out));
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a[i * n + j];
  return Tensor({n, m}, std::move(out));
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto out = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return Tensor(a.shape(), std::move(out));
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto out = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return Tensor(a.shape(), std::move(out));
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  auto out = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return Tensor(a.shape(), std::move(out));
}

Tensor scale(const Tensor& a, double s) {
  auto out = a.values();
  for (auto& v : out) v *= s;
  return Tensor(a.shape(), std::move(out));
}

double sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return s;
}

Tensor softmax_last(const Tensor& x) {
  if (x.empty()) throw DimensionError("softmax_last: empty tensor");
  const std::size_t n = x.shape().back();
  auto out = x.values();
  for (std::size_t base = 0; base < out.size(); base += n) {
    double mx = out[base];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, out[base + j]);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[base + j] = std::exp(out[base + j] - mx);
      z += out[base + j];
    }
    for (std::size_t j = 0; j < n; ++j) out[base + j] /= z;
  }
  return Tensor(x.shape(), std::move(out));
}

std::vector<LinearTaps> half_pixel_taps(std::size_t in, std::size_t out) {
  if (in == 0 || out == 0) throw InvalidArgument("bilinear taps need positive sizes");
  std::vector<LinearTaps> taps(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * ratio - 0.5;
    if (src < 0.0) src = 0.0;
    auto lo = static_cast<std::size_t>(src);
    if (lo > in - 1) lo = in - 1;
    const std::size_t hi = std::min(lo + 1, in - 1);
    const double frac = src - static_cast<double>(lo);
    taps[o] = {lo, hi, 1.0 - frac, frac};
  }
  return taps;
}

Tensor bilinear_resize(const Tensor& grid, std::size_t target_h, std::size_t target_w) {
  require_rank(grid, 3, "bilinear_resize");
  if (target_h == 0 || target_w == 0) throw InvalidArgument("bilinear_resize: target size must be positive");
  const std::size_t h = grid.dim(0), w = grid.dim(1), c = grid.dim(2);
  if (h == target_h && w == target_w) return grid;
  const auto rows = half_pixel_taps(h, target_h);
  const auto cols = half_pixel_taps(w, target_w);
  std::vector<double> out(target_h * target_w * c, 0.0);
  auto src = grid.data();
  for (std::size_t y = 0; y < target_h; ++y) {
    const auto& ry = rows[y];
    for (std::size_t x = 0; x < target_w; ++x) {
      const auto& cx = cols[x];
      const double w00 = ry.w_lo * cx.w_lo, w01 = ry.w_lo * cx.w_hi;
      const double w10 = ry.w_hi * cx.w_lo, w11 = ry.w_hi * cx.w_hi;
      const double* p00 = &src[(ry.lo * w + cx.lo) * c];
      const double* p01 = &src[(ry.lo * w + cx.hi) * c];
      const double* p10 = &src[(ry.hi * w + cx.lo) * c];
      const double* p11 = &src[(ry.hi * w + cx.hi) * c];
      double* dst = &out[(y * target_w + x) * c];
      for (std::size_t k = 0; k < c; ++k) dst[k] = w00 * p00[k] + w01 * p01[k] + w10 * p10[k] + w11 * p11[k];
    }
  }
  return Tensor({target_h, target_w, c}, std::move(out));
}

Tensor global_mean_pool(const Tensor& grid) {
  require_rank(grid, 3, "global_mean_pool");
  const std::size_t cells = grid.dim(0) * grid.dim(1), c = grid.dim(2);
  std::vector<double> out(c, 0.0);
  for (std::size_t p = 0; p < cells; ++p)
    for (std::size_t k = 0; k < c; ++k) out[k] += grid[p * c + k];
  for (auto& v : out) v /= static_cast<double>(cells);
  return Tensor({c}, std::move(out));
}

Tensor concat_last(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank() || a.rank() < 1) {
    throw DimensionError("concat_last: rank mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
  for (std::size_t i = 0; i + 1 < a.rank(); ++i) {
    if (a.dim(i) != b.dim(i)) {
      throw DimensionError("concat_last: leading axes differ " + a.shape_string() + " vs " + b.shape_string());
    }
  }
  const std::size_t ca = a.shape().back(), cb = b.shape().back();
  const std::size_t rows = a.size() / ca;
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  for (std::size_t r = 0; r < rows; ++r) {
    out.insert(out.end(), a.data().begin() + r * ca, a.data().begin() + (r + 1) * ca);
    out.insert(out.end(), b.data().begin() + r * cb, b.data().begin() + (r + 1) * cb);
  }
  Shape shape = a.shape();
  shape.back() = ca + cb;
  return Tensor(std::move(shape), std::move(out));
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: nothing to concatenate");
  const std::size_t cols = parts.front().rank() == 2 ? parts.front().dim(1) : 0;
  std::size_t rows = 0;
  std::vector<double> out;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.dim(1) != cols) {
      throw DimensionError("concat_rows: " + parts.front().shape_string() + " vs " + p.shape_string());
    }
    rows += p.dim(0);
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  return Tensor({rows, cols}, std::move(out));
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count) {
  require_rank(a, 2, "slice_rows");
  if (count == 0 || begin + count > a.dim(0)) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") out of range for " + a.shape_string());
  }
  const std::size_t c = a.dim(1);
  std::vector<double> out(a.data().begin() + begin * c, a.data().begin() + (begin + count) * c);
  return Tensor({count, c}, std::move(out));
}

Tensor repeat_rows(const Tensor& row, std::size_t n) {
  require_rank(row, 1, "repeat_rows");
  std::vector<double> out;
  out.reserve(row.size() * n);
  for (std::size_t i = 0; i < n; ++i) out.insert(out.end(), row.data().begin(), row.data().end());
  return Tensor({n, row.size()}, std::move(out));
}

}  // namespace forge::num
