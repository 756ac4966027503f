#pragma once

#include <memory>
#include <vector>

#include "facnet/conv.hpp"
#include "facnet/layers.hpp"

namespace facnet {

enum class FacMode { kFixed, kAdapt, kAdaptDep };

std::string fac_mode_name(FacMode mode);

/// Frequency positional encoding: v[f] = sin((pi/2) * f / F).
Eigen::ArrayXd fac_encoding_init(Index f_bins);

/// Frequency-aware convolution: adds a learnable per-bin encoding to the
/// input, scaled by a per-clip sigmoid attention coefficient, then convolves.
///
/// The modified input is x'(n,c,t,f) = x(n,c,t,f) + alpha(n,c) * p_freq(f).
/// alpha depends on the mode:
///   fixed     — alpha == 1 (no attention parameters),
///   adapt     — one alpha per clip, computed from the time- and
///               channel-averaged spectrum, shared by all channels,
///   adapt_dep — one alpha per clip and channel, from the time-averaged
///               spectrum; the F->1 attention map is shared across channels.
class FacConv : public Layer {
 public:
  FacConv(ConvSpec spec, Index in_f, FacMode mode, Rng& rng);

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override;
  std::string kind() const override { return "fac_" + fac_mode_name(mode_); }
  Shape4 output_shape(Shape4 in) const override { return conv_.output_shape(in); }

  /// Attention coefficients (N x C) for x under the current parameters.
  Eigen::MatrixXd alpha(const Tensor& x) const;

  FacMode mode() const { return mode_; }
  Index in_f() const { return in_f_; }
  Param& p_freq() { return p_freq_; }
  Param& attn_w() { return attn_w_; }
  Param& attn_b() { return attn_b_; }
  Conv2d& conv() { return conv_; }

 private:
  FacMode mode_;
  Index in_f_;
  Param p_freq_, attn_w_, attn_b_;
  Conv2d conv_;

  bool has_cache_ = false;
  Shape4 in_shape_;
  Eigen::MatrixXd alpha_;  // N x C
  MatrixRM xbar_;          // (N*C) x F time-averaged spectrum
  MatrixRM xbarc_;         // N x F channel average (adapt mode)
};

/// Frequency dynamic convolution: K basis kernels mixed per output frequency
/// bin by softmax attention computed from the time-averaged spectrum.
/// forward() takes the weighted-output route; forward_combined() takes the
/// combined-kernel route — the two must agree and that equivalence is part of
/// the test suite.
class FdyConv : public Layer {
 public:
  FdyConv(ConvSpec spec, Index in_f, Index k, Rng& rng);

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override;
  std::string kind() const override { return "fdy"; }
  Shape4 output_shape(Shape4 in) const override {
    return Shape4{in.n, spec_.out_channels, in.t, in.f};
  }
  void set_training(bool training) override;

  /// Combined-kernel route: mixes the basis kernels per (clip, frequency) and
  /// convolves once with the mixed kernel. Same result as forward(); kept as
  /// an independently coded cross-check. Overwrites the attention cache — do
  /// not interleave with a pending backward().
  Tensor forward_combined(const Tensor& x);

  /// Softmax attention weights as a (N, K, 1, F) tensor.
  Tensor attention(const Tensor& x);

  Index k() const { return k_; }
  const ConvSpec& spec() const { return spec_; }
  Param& basis_w() { return basis_w_; }
  Param& basis_b() { return basis_b_; }
  Conv2d& attn_conv1() { return attn_conv1_; }
  Conv2d& attn_conv2() { return attn_conv2_; }

 private:
  Tensor time_average(const Tensor& x) const;

  ConvSpec spec_;
  Index in_f_;
  Index k_;
  Param basis_w_;  // (K, out, in, kt, kf) row-major flat
  Param basis_b_;  // (K, out)
  Conv2d attn_conv1_;
  Relu attn_relu_;
  Conv2d attn_conv2_;

  bool has_cache_ = false;
  Shape4 in_shape_;
  MatrixRM patches_;
  std::vector<MatrixRM> basis_out_;  // per basis kernel: out_channels x (N*T*F)
  Tensor pi_;                        // (N, K, 1, F)
};

/// Frequency-aware concatenation baseline: appends the constant ramp channel
/// V(t,f) = f/F to the input, then convolves over in_channels+1 channels.
class FaConcatConv : public Layer {
 public:
  FaConcatConv(ConvSpec spec, Index in_f, Rng& rng);

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override { return conv_.params(); }
  std::string kind() const override { return "faconcat"; }
  Shape4 output_shape(Shape4 in) const override {
    return Shape4{in.n, conv_.spec().out_channels, in.t, in.f};
  }

  Index in_f() const { return in_f_; }
  Conv2d& conv() { return conv_; }

  /// The ramp values V(f) = f/F this layer concatenates.
  Eigen::ArrayXd ramp() const;

 private:
  Index data_channels_;
  Index in_f_;
  Conv2d conv_;
};

}  // namespace facnet
