#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <set>

#include "doctest.h"
#include "facnet/rng.hpp"
#include "facnet/tensor.hpp"

using namespace facnet;

TEST_CASE("shape equality, count and formatting") {
  Shape4 a{2, 3, 4, 5};
  CHECK(a.count() == 120);
  CHECK(a == Shape4{2, 3, 4, 5});
  CHECK_FALSE(a == Shape4{2, 3, 4, 6});
  CHECK(a.str() == "(2, 3, 4, 5)");
}

TEST_CASE("tensor is row-major in (n, c, t, f) order") {
  Tensor x(Shape4{2, 3, 4, 5});
  CHECK(x.shape().count() == 120);
  for (Index i = 0; i < 120; ++i) CHECK(x.data()[i] == 0.0);

  x(1, 2, 3, 4) = 7.5;
  CHECK(x.data()[((1 * 3 + 2) * 4 + 3) * 5 + 4] == 7.5);

  x(0, 0, 0, 1) = 1.0;
  CHECK(x.data()[1] == 1.0);
}

TEST_CASE("zero dimensions are rejected") {
  CHECK_THROWS_AS(Tensor(Shape4{0, 1, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor(Shape4{1, 1, 1, 0}), std::invalid_argument);
}

TEST_CASE("copies are deep") {
  Tensor a(Shape4{1, 1, 1, 3});
  a(0, 0, 0, 0) = 1.0;
  Tensor b = a;
  b(0, 0, 0, 0) = 2.0;
  CHECK(a(0, 0, 0, 0) == 1.0);
  CHECK(b(0, 0, 0, 0) == 2.0);
}

TEST_CASE("tensor_fill and set_zero") {
  Tensor x = tensor_fill(Shape4{1, 2, 2, 2}, 3.25);
  for (Index i = 0; i < 8; ++i) CHECK(x.data()[i] == 3.25);
  x.set_zero();
  for (Index i = 0; i < 8; ++i) CHECK(x.data()[i] == 0.0);
}

TEST_CASE("tensor_rand_uniform bounds, determinism and validation") {
  Rng rng(11);
  Tensor x = tensor_rand_uniform(Shape4{2, 3, 5, 7}, -0.5, 2.0, rng);
  for (Index i = 0; i < x.shape().count(); ++i) {
    CHECK(x.data()[i] >= -0.5);
    CHECK(x.data()[i] < 2.0);
  }

  Rng rng2(11);
  Tensor y = tensor_rand_uniform(Shape4{2, 3, 5, 7}, -0.5, 2.0, rng2);
  CHECK(max_abs_diff(x, y) == 0.0);

  Rng rng3(12);
  Tensor z = tensor_rand_uniform(Shape4{2, 3, 5, 7}, -0.5, 2.0, rng3);
  CHECK(max_abs_diff(x, z) > 0.0);

  CHECK_THROWS_AS(tensor_rand_uniform(Shape4{1, 1, 1, 1}, 1.0, 1.0, rng), std::invalid_argument);
}

TEST_CASE("shift_frequency moves bin f to f+delta mod F") {
  Tensor x(Shape4{1, 1, 1, 4});
  for (Index f = 0; f < 4; ++f) x(0, 0, 0, f) = static_cast<Scalar>(f + 1);  // [1,2,3,4]

  Tensor s1 = shift_frequency(x, 1);  // bin f -> f+1, so [4,1,2,3]
  CHECK(s1(0, 0, 0, 0) == 4.0);
  CHECK(s1(0, 0, 0, 1) == 1.0);
  CHECK(s1(0, 0, 0, 2) == 2.0);
  CHECK(s1(0, 0, 0, 3) == 3.0);

  CHECK(max_abs_diff(shift_frequency(x, 4), x) == 0.0);
  CHECK(max_abs_diff(shift_frequency(x, -1), shift_frequency(x, 3)) == 0.0);
  CHECK(max_abs_diff(shift_frequency(shift_frequency(x, 3), 1), x) == 0.0);
}

TEST_CASE("shift_frequency acts on every (n, c, t) row") {
  Rng rng(3);
  Tensor x = tensor_rand_uniform(Shape4{2, 2, 3, 8}, -1.0, 1.0, rng);
  Tensor s = shift_frequency(x, 5);
  for (Index n = 0; n < 2; ++n)
    for (Index c = 0; c < 2; ++c)
      for (Index t = 0; t < 3; ++t)
        for (Index f = 0; f < 8; ++f) CHECK(s(n, c, t, (f + 5) % 8) == x(n, c, t, f));
}

TEST_CASE("all_finite and max_abs_diff") {
  Tensor a(Shape4{1, 1, 2, 2});
  Tensor b(Shape4{1, 1, 2, 2});
  a(0, 0, 1, 1) = 3.0;
  b(0, 0, 1, 1) = -1.0;
  CHECK(max_abs_diff(a, b) == 4.0);
  CHECK(all_finite(a));
  a(0, 0, 0, 0) = std::numeric_limits<Scalar>::quiet_NaN();
  CHECK_FALSE(all_finite(a));
  a(0, 0, 0, 0) = std::numeric_limits<Scalar>::infinity();
  CHECK_FALSE(all_finite(a));
  CHECK_THROWS_AS(max_abs_diff(a, Tensor(Shape4{1, 1, 1, 4})), std::invalid_argument);
}

TEST_CASE("rng streams are deterministic per seed") {
  Rng a(99), b(99), c(100);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  bool differs = false;
  Rng a2(99);
  for (int i = 0; i < 100; ++i) differs |= a2.next_u64() != c.next_u64();
  CHECK(differs);
}

TEST_CASE("rng uniform, index and normal behave") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(-2.0, 3.0);
    CHECK(u >= -2.0);
    CHECK(u < 3.0);
  }
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t k = rng.index(7);
    CHECK(k < 7);
    seen.insert(k);
  }
  CHECK(seen.size() == 7);  // all residues reached
  double sum = 0.0, sum_sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.normal();
    CHECK(std::isfinite(g));
    sum += g;
    sum_sq += g * g;
  }
  CHECK(std::abs(sum / n) < 0.05);           // mean near 0
  CHECK(std::abs(sum_sq / n - 1.0) < 0.05);  // variance near 1
}
