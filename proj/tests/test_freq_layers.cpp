#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "facnet/conv.hpp"
#include "facnet/freq_layers.hpp"
#include "facnet/tensor.hpp"

using namespace facnet;

namespace {

const ConvSpec kSpec11{1, 1, 3, 3, PadMode::kZero, true};

/// Vanilla conv built from the same seed as a FacConv: because FAC draws its
/// attention parameters as zero-init (no rng consumption), both see the same
/// kernel stream.
Tensor vanilla_forward(const ConvSpec& spec, uint64_t seed, const Tensor& x) {
  Rng rng(seed);
  Conv2d conv(spec, rng);
  return conv.forward(x);
}

}  // namespace

TEST_CASE("frequency encoding initialization: sin(pi/2 * f/F)") {
  Eigen::ArrayXd enc = fac_encoding_init(4);
  CHECK(enc.size() == 4);
  CHECK(enc[0] == 0.0);
  CHECK(enc[1] == doctest::Approx(0.3826834323650898).epsilon(1e-15));
  CHECK(enc[2] == doctest::Approx(0.7071067811865476).epsilon(1e-15));
  CHECK(enc[3] == doctest::Approx(0.9238795325112867).epsilon(1e-15));

  Eigen::ArrayXd enc128 = fac_encoding_init(128);
  CHECK(enc128[64] == doctest::Approx(std::sin(std::numbers::pi / 4.0)).epsilon(1e-15));
  CHECK((enc128 >= 0.0).all());
  CHECK((enc128 < 1.0).all());

  CHECK_THROWS_AS(fac_encoding_init(0), std::invalid_argument);
}

TEST_CASE("alpha is 0.5 on zero input and exactly 1 in fixed mode") {
  Rng rng(3);
  FacConv fac(ConvSpec{2, 2, 3, 3, PadMode::kZero, true}, 8, FacMode::kAdaptDep, rng);
  Tensor zero(Shape4{2, 2, 4, 8});
  Eigen::MatrixXd a = fac.alpha(zero);
  CHECK(a.rows() == 2);
  CHECK(a.cols() == 2);
  for (Index n = 0; n < 2; ++n)
    for (Index c = 0; c < 2; ++c) CHECK(a(n, c) == 0.5);  // sigmoid(0)

  Rng rng2(3);
  FacConv fixed(ConvSpec{2, 2, 3, 3, PadMode::kZero, true}, 8, FacMode::kFixed, rng2);
  Eigen::MatrixXd af = fixed.alpha(tensor_rand_uniform(Shape4{2, 2, 4, 8}, -1.0, 1.0, rng2));
  for (Index n = 0; n < 2; ++n)
    for (Index c = 0; c < 2; ++c) CHECK(af(n, c) == 1.0);
}

TEST_CASE("alpha hand value from a chosen attention vector") {
  Rng rng(5);
  FacConv fac(ConvSpec{4, 4, 3, 3, PadMode::kZero, true}, 8, FacMode::kAdaptDep, rng);
  fac.attn_w().value << 1.0, -1.0, 1.0, -1.0;
  fac.attn_b().value[0] = 0.0;
  Tensor ones = tensor_fill(Shape4{1, 4, 2, 8}, 1.0);
  // Channel means are all 1, so the shared logit is 1-1+1-1 = 0 for every channel.
  Eigen::MatrixXd a = fac.alpha(ones);
  for (Index c = 0; c < 4; ++c) CHECK(a(0, c) == 0.5);
}

TEST_CASE("adapt mode shares one alpha across channels") {
  Rng rng(7);
  FacConv fac(ConvSpec{3, 3, 3, 3, PadMode::kZero, true}, 8, FacMode::kAdapt, rng);
  fac.attn_w().value << 0.3, -0.7, 0.2;
  fac.attn_b().value[0] = 0.1;
  Tensor x = tensor_rand_uniform(Shape4{2, 3, 4, 8}, -1.0, 1.0, rng);
  Eigen::MatrixXd a = fac.alpha(x);
  for (Index n = 0; n < 2; ++n) {
    CHECK(a(n, 0) == a(n, 1));
    CHECK(a(n, 0) == a(n, 2));
  }
  CHECK(a(0, 0) != a(1, 0));  // but it still depends on the sample
}

TEST_CASE("saturated-off attention collapses FAC to the vanilla conv") {
  Rng rng(11);
  FacConv fac(kSpec11, 6, FacMode::kAdapt, rng);
  fac.attn_b().value[0] = -1e6;  // sigmoid -> 0: no injection
  Tensor x = tensor_rand_uniform(Shape4{2, 1, 3, 6}, -1.0, 1.0, rng);
  Tensor vanilla = vanilla_forward(kSpec11, 11, x);
  CHECK(max_abs_diff(fac.forward(x), vanilla) < 1e-9);
}

TEST_CASE("saturated-on attention reproduces fixed mode") {
  Rng rng_a(13);
  FacConv on(kSpec11, 6, FacMode::kAdapt, rng_a);
  on.attn_b().value[0] = 1e6;  // sigmoid -> 1
  Rng rng_f(13);
  FacConv fixed(kSpec11, 6, FacMode::kFixed, rng_f);
  Rng rng_x(99);
  Tensor x = tensor_rand_uniform(Shape4{2, 1, 3, 6}, -1.0, 1.0, rng_x);
  CHECK(max_abs_diff(on.forward(x), fixed.forward(x)) < 1e-9);
}

TEST_CASE("zeroed encoding makes fixed mode exactly vanilla") {
  Rng rng(17);
  FacConv fac(kSpec11, 6, FacMode::kFixed, rng);
  fac.p_freq().value.setZero();
  Rng rng_x(100);
  Tensor x = tensor_rand_uniform(Shape4{1, 1, 4, 6}, -1.0, 1.0, rng_x);
  CHECK(max_abs_diff(fac.forward(x), vanilla_forward(kSpec11, 17, x)) == 0.0);
}

TEST_CASE("identity kernel on zero input reads the encoding back out") {
  Rng rng(19);
  FacConv fac(ConvSpec{1, 1, 1, 1, PadMode::kZero, false}, 5, FacMode::kFixed, rng);
  fac.conv().w_at(0, 0, 0, 0) = 1.0;
  Tensor y = fac.forward(Tensor(Shape4{1, 1, 2, 5}));
  for (Index t = 0; t < 2; ++t)
    for (Index f = 0; f < 5; ++f)
      CHECK(y(0, 0, t, f) == doctest::Approx(fac.p_freq().value[f]).epsilon(1e-15));
}

TEST_CASE("FAC breaks shift equivariance even under circular padding") {
  Rng rng(23);
  ConvSpec spec{1, 1, 3, 3, PadMode::kCircularFrequency, true};
  FacConv fac(spec, 8, FacMode::kFixed, rng);
  Tensor x = tensor_rand_uniform(Shape4{1, 1, 4, 8}, -1.0, 1.0, rng);
  Tensor lhs = fac.forward(shift_frequency(x, 1));
  Tensor rhs = shift_frequency(fac.forward(x), 1);
  CHECK(max_abs_diff(lhs, rhs) > 1e-6);

  // The plain circular conv with the same kernel IS equivariant; the
  // injection alone is what broke it.
  Rng rng2(23);
  Conv2d conv(spec, rng2);
  Tensor clhs = conv.forward(shift_frequency(x, 1));
  Tensor crhs = shift_frequency(conv.forward(x), 1);
  CHECK(max_abs_diff(clhs, crhs) < 1e-12);
}

TEST_CASE("adapt and adapt_dep agree when all channels carry the same signal") {
  Rng rng_a(29);
  FacConv adapt(ConvSpec{2, 2, 3, 3, PadMode::kZero, true}, 6, FacMode::kAdapt, rng_a);
  Rng rng_d(29);
  FacConv dep(ConvSpec{2, 2, 3, 3, PadMode::kZero, true}, 6, FacMode::kAdaptDep, rng_d);
  Rng rng_x(7);
  Tensor x(Shape4{1, 2, 3, 6});
  Tensor row = tensor_rand_uniform(Shape4{1, 1, 3, 6}, -1.0, 1.0, rng_x);
  for (Index c = 0; c < 2; ++c)
    for (Index t = 0; t < 3; ++t)
      for (Index f = 0; f < 6; ++f) x(0, c, t, f) = row(0, 0, t, f);
  // Same channel means -> the channel-averaged alpha equals each per-channel one.
  CHECK(max_abs_diff(adapt.forward(x), dep.forward(x)) < 1e-14);
}

TEST_CASE("FAC parameter overhead per mode") {
  Rng rng(31);
  auto count = [](FacConv& l) {
    Index total = 0;
    for (Param* p : l.params()) total += p->value.size();
    return total;
  };
  const Index f = 16;
  ConvSpec spec{2, 3, 3, 3, PadMode::kZero, true};
  Rng r1(31);
  Conv2d plain(spec, r1);
  Index base = 0;
  for (Param* p : plain.params()) base += p->value.size();

  FacConv fixed(spec, f, FacMode::kFixed, rng);
  CHECK(count(fixed) - base == f);
  FacConv adapt(spec, f, FacMode::kAdapt, rng);
  CHECK(count(adapt) - base == 2 * f + 1);
  FacConv dep(spec, f, FacMode::kAdaptDep, rng);
  CHECK(count(dep) - base == 2 * f + 1);
}

TEST_CASE("FDY with one basis kernel is a plain conv") {
  Rng rng(37);
  ConvSpec spec{2, 3, 3, 3, PadMode::kZero, true};
  FdyConv fdy(spec, 8, 1, rng);
  // Attention over a single kernel is softmax of one logit == 1 everywhere,
  // so the output must equal a conv using basis kernel 0.
  Rng rng2(1);
  Conv2d conv(spec, rng2);
  conv.weight().value = fdy.basis_w().value;
  conv.bias().value = fdy.basis_b().value;
  Rng rng_x(5);
  Tensor x = tensor_rand_uniform(Shape4{2, 2, 4, 8}, -1.0, 1.0, rng_x);
  CHECK(max_abs_diff(fdy.forward(x), conv.forward(x)) < 1e-12);
}

TEST_CASE("FDY attention is a distribution over kernels at every bin") {
  Rng rng(41);
  FdyConv fdy(ConvSpec{2, 2, 3, 3, PadMode::kZero, true}, 8, 4, rng);
  Tensor x = tensor_rand_uniform(Shape4{3, 2, 4, 8}, -1.0, 1.0, rng);
  Tensor pi = fdy.attention(x);
  CHECK(pi.shape() == Shape4{3, 4, 1, 8});
  for (Index n = 0; n < 3; ++n) {
    for (Index f = 0; f < 8; ++f) {
      Scalar sum = 0.0;
      for (Index k = 0; k < 4; ++k) {
        CHECK(pi(n, k, 0, f) >= 0.0);
        sum += pi(n, k, 0, f);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("FDY weighted-output and combined-kernel routes agree") {
  Rng rng(43);
  for (Index k : {1, 2, 4}) {
    ConvSpec spec{2, 3, 3, 3, PadMode::kZero, true};
    FdyConv fdy(spec, 8, k, rng);
    Tensor x = tensor_rand_uniform(Shape4{2, 2, 5, 8}, -2.0, 2.0, rng);
    Tensor a = fdy.forward(x);
    Tensor b = fdy.forward_combined(x);
    CHECK(max_abs_diff(a, b) < 1e-9);
  }
}

TEST_CASE("FDY two-route agreement on the pinned instance") {
  Rng rng(5);
  ConvSpec spec{2, 2, 3, 3, PadMode::kZero, true};
  FdyConv fdy(spec, 8, 4, rng);
  Tensor x = tensor_rand_uniform(Shape4{1, 2, 4, 8}, -1.0, 1.0, rng);
  Tensor a = fdy.forward(x);
  Tensor b = fdy.forward_combined(x);
  CHECK(max_abs_diff(a, b) < 1e-9);
  CHECK(all_finite(a));
}

TEST_CASE("uniform FDY attention averages the basis kernels") {
  Rng rng(47);
  ConvSpec spec{1, 2, 3, 3, PadMode::kZero, true};
  const Index k = 4;
  FdyConv fdy(spec, 8, k, rng);
  // Zero the second attention conv: logits become its (zero) bias for every
  // kernel, so softmax is uniform 1/K at every bin.
  fdy.attn_conv2().weight().value.setZero();
  fdy.attn_conv2().bias().value.setZero();
  Tensor x = tensor_rand_uniform(Shape4{2, 1, 4, 8}, -1.0, 1.0, rng);
  Tensor pi = fdy.attention(x);
  for (Index i = 0; i < pi.shape().count(); ++i)
    CHECK(pi.data()[i] == doctest::Approx(0.25).epsilon(1e-12));

  Rng rng2(1);
  Conv2d avg(spec, rng2);
  avg.weight().value = Eigen::ArrayXd::Zero(avg.weight().value.size());
  avg.bias().value = Eigen::ArrayXd::Zero(avg.bias().value.size());
  const Index wsize = avg.weight().value.size();
  for (Index j = 0; j < k; ++j) {
    avg.weight().value += fdy.basis_w().value.segment(j * wsize, wsize);
    avg.bias().value += fdy.basis_b().value.segment(j * 2, 2);
  }
  avg.weight().value /= static_cast<double>(k);
  avg.bias().value /= static_cast<double>(k);
  CHECK(max_abs_diff(fdy.forward(x), avg.forward(x)) < 1e-12);
}

TEST_CASE("FAConcat with a zeroed ramp kernel is the vanilla conv") {
  Rng rng(53);
  ConvSpec spec{2, 3, 3, 3, PadMode::kZero, true};
  FaConcatConv fa(spec, 8, rng);
  // The inner conv has in_channels C+1; slice its weights by input channel.
  Conv2d& inner = fa.conv();
  const Index cin = 3;  // 2 data + 1 ramp
  for (Index co = 0; co < 3; ++co)
    for (Index dt = 0; dt < 3; ++dt)
      for (Index df = 0; df < 3; ++df) inner.w_at(co, cin - 1, dt, df) = 0.0;

  Rng rng2(1);
  Conv2d plain(spec, rng2);
  // Copy the first-two-channel slices so both convs share a kernel.
  for (Index co = 0; co < 3; ++co)
    for (Index ci = 0; ci < 2; ++ci)
      for (Index dt = 0; dt < 3; ++dt)
        for (Index df = 0; df < 3; ++df)
          plain.w_at(co, ci, dt, df) = inner.w_at(co, ci, dt, df);
  plain.bias().value = inner.bias().value;

  Tensor x = tensor_rand_uniform(Shape4{2, 2, 4, 8}, -1.0, 1.0, rng);
  CHECK(max_abs_diff(fa.forward(x), plain.forward(x)) < 1e-12);
}

TEST_CASE("FAConcat output decomposes into data and ramp contributions") {
  Rng rng(59);
  ConvSpec spec{2, 2, 3, 3, PadMode::kZero, true};
  FaConcatConv fa(spec, 8, rng);
  Conv2d& inner = fa.conv();

  Tensor x = tensor_rand_uniform(Shape4{1, 2, 4, 8}, -1.0, 1.0, rng);
  Tensor full = fa.forward(x);

  // Route 1: the layer itself. Route 2: conv(x, k_data) + conv(ramp, k_ramp),
  // with the bias carried once by the data term.
  ConvSpec data_spec{2, 2, 3, 3, PadMode::kZero, true};
  Rng r_a(1);
  Conv2d data_conv(data_spec, r_a);
  for (Index co = 0; co < 2; ++co)
    for (Index ci = 0; ci < 2; ++ci)
      for (Index dt = 0; dt < 3; ++dt)
        for (Index df = 0; df < 3; ++df)
          data_conv.w_at(co, ci, dt, df) = inner.w_at(co, ci, dt, df);
  data_conv.bias().value = inner.bias().value;

  ConvSpec ramp_spec{1, 2, 3, 3, PadMode::kZero, false};
  Rng r_b(1);
  Conv2d ramp_conv(ramp_spec, r_b);
  for (Index co = 0; co < 2; ++co)
    for (Index dt = 0; dt < 3; ++dt)
      for (Index df = 0; df < 3; ++df)
        ramp_conv.w_at(co, 0, dt, df) = inner.w_at(co, 2, dt, df);

  Tensor ramp_x(Shape4{1, 1, 4, 8});
  Eigen::ArrayXd ramp = fa.ramp();
  for (Index t = 0; t < 4; ++t)
    for (Index f = 0; f < 8; ++f) ramp_x(0, 0, t, f) = ramp[f];

  Tensor sum = data_conv.forward(x);
  Tensor ramp_y = ramp_conv.forward(ramp_x);
  sum.array() += ramp_y.array();
  CHECK(max_abs_diff(full, sum) < 1e-12);
}

TEST_CASE("FAConcat ramp is f/F and its response is time-invariant on zero input") {
  Rng rng(61);
  FaConcatConv fa(ConvSpec{1, 1, 3, 3, PadMode::kZero, true}, 8, rng);
  Eigen::ArrayXd ramp = fa.ramp();
  CHECK(ramp.size() == 8);
  for (Index f = 0; f < 8; ++f)
    CHECK(ramp[f] == doctest::Approx(static_cast<double>(f) / 8.0).epsilon(1e-15));

  Tensor y = fa.forward(Tensor(Shape4{1, 1, 6, 8}));
  // Away from the time-padding edges every row sees the same ramp window.
  for (Index t = 2; t < 5; ++t)
    for (Index f = 0; f < 8; ++f)
      CHECK(y(0, 0, t, f) == doctest::Approx(y(0, 0, 1, f)).epsilon(1e-15));
}

TEST_CASE("frequency-aware layers reject bad frequency sizes") {
  Rng rng(67);
  CHECK_THROWS_AS(FacConv(kSpec11, 0, FacMode::kFixed, rng), std::invalid_argument);
  CHECK_THROWS_AS(FdyConv(kSpec11, 8, 0, rng), std::invalid_argument);
  CHECK_THROWS_AS(FaConcatConv(kSpec11, 0, rng), std::invalid_argument);
}
