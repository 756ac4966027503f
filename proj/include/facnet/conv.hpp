#pragma once

#include <Eigen/Dense>

#include "facnet/layer.hpp"
#include "facnet/rng.hpp"
#include "facnet/tensor.hpp"

namespace facnet {

/// Padding: time is always zero-padded; frequency is either zero-padded or
/// wraps around (circular), which makes frequency shifts an exact symmetry.
enum class PadMode { kZero, kCircularFrequency };

struct ConvSpec {
  Index in_channels = 1;
  Index out_channels = 1;
  Index kt = 3;  // kernel extent along time, odd
  Index kf = 3;  // kernel extent along frequency, odd
  PadMode pad = PadMode::kZero;
  bool bias = true;
};

using MatrixRM = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

/// Patch matrix for stride-1 same-size cross-correlation: one column per
/// output position m = (n*T + t)*F + f, one row per kernel tap
/// r = (ci*kt + dt)*kf + df. Out-of-range taps read 0 (zero padding) or wrap
/// along frequency (circular).
MatrixRM im2col(const Tensor& x, Index kt, Index kf, PadMode pad);

/// Scatter-add adjoint of im2col: accumulates column gradients back onto the
/// input layout, honoring the same padding rule.
void col2im_add(const MatrixRM& cols, Index kt, Index kf, PadMode pad, Tensor& x_grad);

}  // namespace detail

/// Kaiming-uniform draws in (-sqrt(6/fan_in), sqrt(6/fan_in)), consumed in
/// flat element order.
Eigen::ArrayXd kaiming_uniform(Index count, Index fan_in, Rng& rng);

/// Stride-1, same-size 2-D cross-correlation over (N,C,T,F) via im2col+GEMM.
/// Weight layout: (out, in, kt, kf) row-major; bias one scalar per out channel.
class Conv2d : public Layer {
 public:
  Conv2d(ConvSpec spec, Rng& rng);

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override;
  std::string kind() const override {
    return spec_.pad == PadMode::kZero ? "conv2d_zero" : "conv2d_circular";
  }
  Shape4 output_shape(Shape4 in) const override;

  const ConvSpec& spec() const { return spec_; }
  Param& weight() { return w_; }
  Param& bias() { return b_; }

  Scalar& w_at(Index co, Index ci, Index dt, Index df) {
    return w_.value[((co * spec_.in_channels + ci) * spec_.kt + dt) * spec_.kf + df];
  }

 private:
  ConvSpec spec_;
  Param w_;
  Param b_;
  bool has_cache_ = false;
  Shape4 in_shape_;
  MatrixRM patches_;
};

/// Reference cross-correlation with explicit loops and index tests — the
/// oracle the GEMM path is checked against in the tests.
Tensor conv2d_reference(const Tensor& x, const ConvSpec& spec, const Eigen::ArrayXd& w,
                        const Eigen::ArrayXd& b);

}  // namespace facnet
