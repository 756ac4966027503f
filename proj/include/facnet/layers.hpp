#pragma once

#include <vector>

#include "facnet/conv.hpp"
#include "facnet/layer.hpp"

namespace facnet {

enum class PoolKind { kAvg, kMax };

struct PoolSpec {
  PoolKind kind = PoolKind::kAvg;
  Index pt = 1;
  Index pf = 2;
};

/// Window pooling with stride equal to the window; input dims must divide.
/// Max-pool ties break to the lowest (row-major) window offset.
class Pool2d : public Layer {
 public:
  explicit Pool2d(PoolSpec spec);

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string kind() const override {
    return spec_.kind == PoolKind::kAvg ? "pool_avg" : "pool_max";
  }
  Shape4 output_shape(Shape4 in) const override;

  const PoolSpec& spec() const { return spec_; }

 private:
  PoolSpec spec_;
  bool has_cache_ = false;
  Shape4 in_shape_;
  std::vector<Index> argmax_;  // flat input index per output element (max only)
};

class Relu : public Layer {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string kind() const override { return "relu"; }
  Shape4 output_shape(Shape4 in) const override { return in; }

 private:
  bool has_cache_ = false;
  Tensor mask_;
};

class Sigmoid : public Layer {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string kind() const override { return "sigmoid"; }
  Shape4 output_shape(Shape4 in) const override { return in; }

 private:
  bool has_cache_ = false;
  Tensor y_;
};

/// Per-position channel mixing: y(n,o,t,f) = sum_c W(o,c) x(n,c,t,f) + b(o).
/// With T = F = 1 this is the ordinary fully connected layer.
class Linear : public Layer {
 public:
  Linear(Index in_channels, Index out_channels, Rng& rng);

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override { return {&w_, &b_}; }
  std::string kind() const override { return "linear"; }
  Shape4 output_shape(Shape4 in) const override {
    return Shape4{in.n, out_channels_, in.t, in.f};
  }

  Param& weight() { return w_; }
  Param& bias() { return b_; }

 private:
  Index in_channels_, out_channels_;
  Param w_, b_;
  bool has_cache_ = false;
  Tensor x_;
};

/// Gated activation y = x ⊙ sigmoid(Wx + b), W a per-position channel-mixing
/// square map.
class ContextGating : public Layer {
 public:
  ContextGating(Index channels, Rng& rng);

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override { return {&w_, &b_}; }
  std::string kind() const override { return "context_gating"; }
  Shape4 output_shape(Shape4 in) const override { return in; }

 private:
  Index channels_;
  Param w_, b_;
  bool has_cache_ = false;
  Tensor x_, gate_;
};

/// Per-channel batch normalization over (N,T,F) with learnable scale/shift.
/// Biased variance throughout; running statistics use momentum 0.1 and feed
/// only inference mode.
class BatchNorm : public Layer {
 public:
  explicit BatchNorm(Index channels);

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override { return {&gamma_, &beta_}; }
  std::string kind() const override { return "batchnorm"; }
  Shape4 output_shape(Shape4 in) const override { return in; }

  const Eigen::ArrayXd& running_mean() const { return running_mean_; }
  const Eigen::ArrayXd& running_var() const { return running_var_; }

  static constexpr Scalar kMomentum = 0.1;
  static constexpr Scalar kEps = 1e-5;

 private:
  Index channels_;
  Param gamma_, beta_;
  Eigen::ArrayXd running_mean_, running_var_;
  bool has_cache_ = false;
  bool cached_training_ = true;
  Tensor xhat_;
  Eigen::ArrayXd inv_std_;  // per channel, for the cached batch
};

/// Mean over (T,F): (N,C,T,F) -> (N,C,1,1).
class GlobalAvgPool : public Layer {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string kind() const override { return "global_avg_pool"; }
  Shape4 output_shape(Shape4 in) const override { return Shape4{in.n, in.c, 1, 1}; }

 private:
  bool has_cache_ = false;
  Shape4 in_shape_;
};

/// Mean cross-entropy of softmaxed logits (N, n_classes, 1, 1) against integer
/// labels. If dlogits is non-null it receives d(loss)/d(logits).
Scalar softmax_cross_entropy(const Tensor& logits, const std::vector<Index>& labels,
                             Tensor* dlogits);

/// Loss wrapped as a Layer (scalar output) so the gradient checker can drive
/// it like any other block. Labels are fixed at construction.
class SoftmaxCrossEntropyLoss : public Layer {
 public:
  explicit SoftmaxCrossEntropyLoss(std::vector<Index> labels) : labels_(std::move(labels)) {}

  Tensor forward(const Tensor& logits) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string kind() const override { return "softmax_cross_entropy"; }
  Shape4 output_shape(Shape4) const override { return Shape4{1, 1, 1, 1}; }

 private:
  std::vector<Index> labels_;
  bool has_cache_ = false;
  Tensor dlogits_;
};

}  // namespace facnet
