#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "forge/error.hpp"
#include "forge/numcore/autodiff.hpp"
#include "forge/numcore/grad_check.hpp"
#include "forge/numcore/ops.hpp"
#include "forge/numcore/tensor_io.hpp"
#include "../support/random.hpp"

using namespace forge;
using namespace forge::num;
using forge::testing::random_tensor;

namespace {

// Textbook triple loop, kept separate from the library's i-p-j ordering.
Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  std::vector<double> out(a.dim(0) * b.dim(1));
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < b.dim(1); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.dim(1); ++p) s += a.at(i, p) * b.at(p, j);
      out[i * b.dim(1) + j] = s;
    }
  return Tensor({a.dim(0), b.dim(1)}, out);
}

// Single-channel bilinear sample with half-pixel centres, evaluated one
// output pixel at a time.
double scalar_bilinear(const std::vector<std::vector<double>>& g, double th, double tw, int y, int x) {
  const double h = static_cast<double>(g.size()), w = static_cast<double>(g[0].size());
  double sy = std::max(0.0, (y + 0.5) * h / th - 0.5);
  double sx = std::max(0.0, (x + 0.5) * w / tw - 0.5);
  int y0 = static_cast<int>(std::floor(sy)), x0 = static_cast<int>(std::floor(sx));
  int y1 = std::min(y0 + 1, static_cast<int>(h) - 1), x1 = std::min(x0 + 1, static_cast<int>(w) - 1);
  double ly = sy - y0, lx = sx - x0;
  return (1 - ly) * ((1 - lx) * g[y0][x0] + lx * g[y0][x1]) + ly * ((1 - lx) * g[y1][x0] + lx * g[y1][x1]);
}

}  // namespace

TEST_CASE("tensor construction enforces volume") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(Tensor({0}, {}), DimensionError);
  auto t = Tensor::matrix({{1, 2}, {3, 4}});
  CHECK(t.at(1, 0) == 3);
  CHECK(t.reshaped({4}).shape() == Shape{4});
}

TEST_CASE("matmul") {
  SUBCASE("identity") {
    auto b = Tensor::matrix({{1, 2}, {3, 4}});
    CHECK(max_abs_diff(matmul(Tensor::identity(2), b), b) == 0.0);
  }
  SUBCASE("selector row") {
    auto r = matmul(Tensor::matrix({{1, 0}}), Tensor::matrix({{2}, {5}}));
    CHECK(r.shape() == Shape{1, 1});
    CHECK(r[0] == 2.0);
  }
  SUBCASE("random against triple loop") {
    std::mt19937_64 rng(11);
    auto a = random_tensor(rng, {3, 4});
    auto b = random_tensor(rng, {4, 2});
    CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) < 1e-14);
  }
  SUBCASE("mismatch names both shapes") {
    try {
      matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      std::string msg = e.what();
      CHECK(msg.find("[2x3]") != std::string::npos);
      CHECK(msg.find("by [2x3]") != std::string::npos);
    }
  }
  SUBCASE("associativity") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      auto a = random_tensor(rng, {3, 5});
      auto b = random_tensor(rng, {5, 4});
      auto c = random_tensor(rng, {4, 2});
      CHECK(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) < 1e-9);
    }
  }
}

TEST_CASE("softmax_last") {
  CHECK(softmax_last(Tensor::vector({5.0}))[0] == 1.0);
  auto u = softmax_last(Tensor::vector({0, 0, 0, 0}));
  for (std::size_t i = 0; i < 4; ++i) CHECK(u[i] == 0.25);

  // direct exp/sum without the max shift
  auto s = softmax_last(Tensor::vector({1, 2, 3}));
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(std::abs(s[0] - std::exp(1.0) / z) < 1e-12);
  CHECK(std::abs(s[1] - std::exp(2.0) / z) < 1e-12);
  CHECK(std::abs(s[2] - std::exp(3.0) / z) < 1e-12);

  SUBCASE("normalised, nonnegative, order preserving, shift invariant") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      auto x = random_tensor(rng, {4, 6}, -10, 10);
      auto y = softmax_last(x);
      auto shifted = softmax_last(Tensor(x.shape(), [&] {
        auto v = x.values();
        for (auto& e : v) e += 123.0;
        return v;
      }()));
      CHECK(max_abs_diff(y, shifted) < 1e-12);
      for (std::size_t r = 0; r < 4; ++r) {
        double total = 0.0;
        for (std::size_t j = 0; j < 6; ++j) {
          CHECK(y.at(r, j) >= 0.0);
          total += y.at(r, j);
          for (std::size_t k = 0; k < 6; ++k) {
            if (x.at(r, j) < x.at(r, k)) CHECK(y.at(r, j) <= y.at(r, k));
          }
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
      }
    }
  }
  CHECK_THROWS(softmax_last(Tensor()));
}

TEST_CASE("bilinear_resize") {
  SUBCASE("constant preserved") {
    auto g = Tensor::filled({4, 4, 1}, 7.0);
    for (auto [h, w] : {std::pair{1, 1}, {3, 5}, {9, 9}, {13, 2}}) {
      auto r = bilinear_resize(g, h, w);
      for (double v : r.data()) CHECK(v == doctest::Approx(7.0).epsilon(1e-15));
    }
  }
  SUBCASE("identity resize") {
    std::mt19937_64 rng(1);
    auto g = random_tensor(rng, {3, 3, 2});
    CHECK(max_abs_diff(bilinear_resize(g, 3, 3), g) == 0.0);
  }
  SUBCASE("2x2 to 1x1 averages with half-pixel centres") {
    auto g = Tensor({2, 2, 1}, {0, 1, 2, 3});
    auto r = bilinear_resize(g, 1, 1);
    CHECK(r[0] == 1.5);
    CHECK(scalar_bilinear({{0, 1}, {2, 3}}, 1, 1, 0, 0) == 1.5);
  }
  SUBCASE("matches scalar oracle on random grids") {
    std::mt19937_64 rng(9);
    auto g = random_tensor(rng, {5, 7, 1});
    std::vector<std::vector<double>> rows(5, std::vector<double>(7));
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 7; ++x) rows[y][x] = g.at(y, x, 0);
    for (auto [th, tw] : {std::pair{3, 4}, {8, 11}, {5, 2}}) {
      auto r = bilinear_resize(g, th, tw);
      for (int y = 0; y < th; ++y)
        for (int x = 0; x < tw; ++x) CHECK(std::abs(r.at(y, x, 0) - scalar_bilinear(rows, th, tw, y, x)) < 1e-13);
    }
  }
  SUBCASE("matches frozen reference interpolation values") {
    // F.interpolate(mode='bilinear', align_corners=False) outputs, float64.
    std::vector<double> ramp(25);
    for (int i = 0; i < 25; ++i) ramp[i] = i;
    auto down = bilinear_resize(Tensor({5, 5, 1}, ramp), 3, 4);
    const double expected_down[] = {1.7916666666666667, 3.041666666666667,  4.291666666666667,  5.541666666666667,
                                    10.125,             11.375,             12.625,             13.875,
                                    18.458333333333336, 19.708333333333336, 20.958333333333336, 22.208333333333336};
    for (int i = 0; i < 12; ++i) CHECK(std::abs(down[i] - expected_down[i]) < 1e-12);

    auto up = bilinear_resize(Tensor({3, 3, 1}, {0, 1, 4, 2, 7, 3, 5, 5, 9}), 7, 5);
    const double expected_up[] = {0.0,
                                  0.39999999999999997,
                                  1.0,
                                  2.8,
                                  4.0,
                                  0.28571428571428564,
                                  0.9142857142857141,
                                  1.857142857142857,
                                  3.057142857142857,
                                  3.857142857142857,
                                  1.1428571428571428,
                                  2.457142857142857,
                                  4.428571428571429,
                                  3.828571428571429,
                                  3.428571428571429,
                                  2.0,
                                  4.0,
                                  7.0,
                                  4.6000000000000005,
                                  3.0,
                                  3.285714285714285,
                                  4.428571428571428,
                                  6.142857142857144,
                                  5.8,
                                  5.57142857142857,
                                  4.571428571428571,
                                  4.857142857142857,
                                  5.2857142857142865,
                                  6.999999999999999,
                                  8.142857142857142,
                                  5.0,
                                  5.000000000000001,
                                  5.0,
                                  7.3999999999999995,
                                  9.0};
    for (int i = 0; i < 35; ++i) CHECK(std::abs(up[i] - expected_up[i]) < 1e-12);
  }
  SUBCASE("linearity") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
      auto X = random_tensor(rng, {6, 5, 3});
      auto Y = random_tensor(rng, {6, 5, 3});
      const double a = 1.7, b = -0.3;
      auto lhs = bilinear_resize(add(scale(X, a), scale(Y, b)), 4, 9);
      auto rhs = add(scale(bilinear_resize(X, 4, 9), a), scale(bilinear_resize(Y, 4, 9), b));
      CHECK(max_abs_diff(lhs, rhs) < 1e-10);
    }
  }
  CHECK_THROWS_AS(bilinear_resize(Tensor::zeros({2, 2, 1}), 0, 2), InvalidArgument);
}

TEST_CASE("global_mean_pool") {
  CHECK(global_mean_pool(Tensor({2, 2, 1}, {1, 2, 3, 4}))[0] == 2.5);
  auto c = global_mean_pool(Tensor::filled({3, 2, 2}, -4.0));
  CHECK(c[0] == -4.0);
  CHECK(c[1] == -4.0);

  std::mt19937_64 rng(8);
  auto g = random_tensor(rng, {4, 3, 5});
  auto pooled = global_mean_pool(g);
  for (std::size_t k = 0; k < 5; ++k) {
    double s = 0.0;
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 3; ++x) s += g.at(y, x, k);
    CHECK(std::abs(pooled[k] - s / 12.0) < 1e-12);
  }
}

TEST_CASE("grad_check on simple functions") {
  SUBCASE("sum of squares") {
    std::vector<NamedTensor> params{{"x", Tensor::vector({1, 2})}};
    auto report = grad_check([](Tape&, std::span<const Var> p) { return sum(hadamard(p[0], p[0])); }, params);
    CHECK(report.params[0].analytic[0] == doctest::Approx(2.0));
    CHECK(report.params[0].analytic[1] == doctest::Approx(4.0));
    CHECK(report.max_rel_error < 1e-7);
  }
  SUBCASE("sum of a softmax is constant") {
    std::vector<NamedTensor> params{{"x", Tensor::matrix({{0.3, -1.2, 2.0}, {0.0, 0.5, 0.1}})}};
    auto report = grad_check([](Tape&, std::span<const Var> p) { return sum(softmax_last(p[0])); }, params);
    for (double g : report.params[0].analytic.data()) CHECK(std::abs(g) < 1e-15);
    for (double g : report.params[0].numeric.data()) CHECK(std::abs(g) < 1e-9);
    CHECK(report.max_abs_error < 1e-9);
  }
  SUBCASE("non-finite evaluation names the parameter") {
    std::vector<NamedTensor> params{{"blowup", Tensor::vector({1.0})}, {"fine", Tensor::vector({1.0})}};
    auto f = [](Tape&, std::span<const Var> p) {
      return sum(scale(hadamard(p[0], p[1]), p[0].value()[0] > 1.0 ? HUGE_VAL : 1.0));
    };
    try {
      grad_check(f, params, 1e-3);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("blowup") != std::string::npos);
    }
  }
}

TEST_CASE("every differentiable op passes grad_check at random points") {
  std::mt19937_64 rng(21);
  auto weights_like = [&](const Tensor& t) { return random_tensor(rng, t.shape()); };

  auto check = [&](const char* name, std::vector<NamedTensor> params, auto build) {
    Tape probe;
    std::vector<Var> vars;
    for (auto& p : params) vars.push_back(probe.constant(p.value));
    Tensor w = weights_like(build(vars).value());
    auto report = grad_check([&](Tape&, std::span<const Var> p) { return weighted_sum(build(p), w); }, params);
    INFO(name);
    CHECK(report.max_rel_error < 1e-6);
  };

  check("matmul", {{"a", random_tensor(rng, {3, 4})}, {"b", random_tensor(rng, {4, 2})}},
        [](std::span<const Var> p) { return matmul(p[0], p[1]); });
  check("add", {{"a", random_tensor(rng, {2, 3})}, {"b", random_tensor(rng, {2, 3})}},
        [](std::span<const Var> p) { return add(p[0], p[1]); });
  check("scale", {{"a", random_tensor(rng, {5})}}, [](std::span<const Var> p) { return scale(p[0], -2.5); });
  check("hadamard", {{"a", random_tensor(rng, {2, 3})}, {"b", random_tensor(rng, {2, 3})}},
        [](std::span<const Var> p) { return hadamard(p[0], p[1]); });
  check("softmax_last", {{"x", random_tensor(rng, {3, 5}, -2, 2)}},
        [](std::span<const Var> p) { return softmax_last(p[0]); });
  check("bilinear_resize", {{"g", random_tensor(rng, {5, 4, 2})}},
        [](std::span<const Var> p) { return bilinear_resize(p[0], 3, 7); });
  check("global_mean_pool", {{"g", random_tensor(rng, {3, 3, 4})}},
        [](std::span<const Var> p) { return global_mean_pool(p[0]); });
  check("concat_last", {{"a", random_tensor(rng, {3, 2})}, {"b", random_tensor(rng, {3, 4})}},
        [](std::span<const Var> p) { return concat_last(p[0], p[1]); });
  check("concat_rows", {{"a", random_tensor(rng, {2, 3})}, {"b", random_tensor(rng, {1, 3})}},
        [](std::span<const Var> p) { return concat_rows(p); });
  check("slice_rows", {{"a", random_tensor(rng, {5, 3})}},
        [](std::span<const Var> p) { return slice_rows(p[0], 1, 3); });
  check("repeat_rows", {{"r", random_tensor(rng, {4})}}, [](std::span<const Var> p) { return repeat_rows(p[0], 3); });
  check("reshape", {{"a", random_tensor(rng, {2, 6})}}, [](std::span<const Var> p) { return reshape(p[0], {3, 4}); });
  check("add_tiled", {{"g", random_tensor(rng, {4, 6, 2})}, {"p", random_tensor(rng, {2, 2, 2})}},
        [](std::span<const Var> p) { return add_tiled(p[0], p[1]); });

  std::vector<std::vector<KeyRef>> sets{{{0, 0}, {0, 2}, {1, 1}}, {{1, 0}}, {{0, 1}, {1, 2}, {1, 0}, {0, 0}}};
  check("indexed_attention",
        {{"q", random_tensor(rng, {3, 4})},
         {"k0", random_tensor(rng, {3, 4})},
         {"k1", random_tensor(rng, {3, 4})},
         {"v0", random_tensor(rng, {3, 4})},
         {"v1", random_tensor(rng, {3, 4})}},
        [&](std::span<const Var> p) {
          Var keys[] = {p[1], p[2]};
          Var values[] = {p[3], p[4]};
          return indexed_attention(p[0], keys, values, sets, 0.5);
        });
}

TEST_CASE("tape gives every parameter a same-shaped gradient") {
  Tape tape;
  auto a = tape.parameter("a", Tensor::matrix({{1, 2}, {3, 4}}));
  auto unused = tape.parameter("unused", Tensor::vector({1, 2, 3}));
  auto out = sum(matmul(a, a));
  tape.backward(out);
  for (const auto& p : tape.parameters()) CHECK(tape.grad(p).shape() == p.shape());
  CHECK(tape.grad(unused)[0] == 0.0);
  CHECK(tape.name(a) == "a");
  CHECK_THROWS_AS(tape.backward(a), DimensionError);
}

TEST_CASE("tensor text format round-trips") {
  std::mt19937_64 rng(2);
  std::vector<NamedTensor> bundle{{"grid", random_tensor(rng, {2, 3, 4})}, {"w", random_tensor(rng, {5, 5})}};
  std::stringstream ss;
  write_bundle(ss, bundle);
  auto back = read_bundle(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].name == "grid");
  CHECK(max_abs_diff(back[0].value, bundle[0].value) == 0.0);
  CHECK(max_abs_diff(back[1].value, bundle[1].value) == 0.0);

  std::istringstream plain("# comment\n2 2\n1 2\n3\n4\n");
  CHECK(max_abs_diff(read_tensor(plain), Tensor::matrix({{1, 2}, {3, 4}})) == 0.0);
  std::istringstream short_input("3\n1 2\n");
  CHECK_THROWS_AS(read_tensor(short_input), ParseError);
}
