#include "facnet/layers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace facnet {

namespace {

// Contiguous (C, T*F) view of one batch item.
Eigen::Map<const MatrixRM> item_view(const Tensor& x, Index n) {
  const Shape4 s = x.shape();
  return Eigen::Map<const MatrixRM>(&x(n, 0, 0, 0), s.c, s.t * s.f);
}

Eigen::Map<MatrixRM> item_view(Tensor& x, Index n) {
  const Shape4 s = x.shape();
  return Eigen::Map<MatrixRM>(&x(n, 0, 0, 0), s.c, s.t * s.f);
}

}  // namespace

Pool2d::Pool2d(PoolSpec spec) : spec_(spec) {
  if (spec.pt <= 0 || spec.pf <= 0) {
    throw std::invalid_argument("Pool2d: window extents must be positive");
  }
}

Shape4 Pool2d::output_shape(Shape4 in) const {
  if (in.t % spec_.pt != 0 || in.f % spec_.pf != 0) {
    throw std::invalid_argument("Pool2d: input " + in.str() + " not divisible by window (" +
                                std::to_string(spec_.pt) + ", " + std::to_string(spec_.pf) + ")");
  }
  return Shape4{in.n, in.c, in.t / spec_.pt, in.f / spec_.pf};
}

Tensor Pool2d::forward(const Tensor& x) {
  const Shape4 s = x.shape();
  const Shape4 os = output_shape(s);
  in_shape_ = s;
  Tensor out(os);
  if (spec_.kind == PoolKind::kMax) argmax_.assign(os.count(), 0);

  const Scalar inv = 1.0 / static_cast<Scalar>(spec_.pt * spec_.pf);
  Index oi = 0;
  for (Index n = 0; n < os.n; ++n) {
    for (Index c = 0; c < os.c; ++c) {
      for (Index to = 0; to < os.t; ++to) {
        for (Index fo = 0; fo < os.f; ++fo, ++oi) {
          if (spec_.kind == PoolKind::kAvg) {
            Scalar acc = 0.0;
            for (Index dt = 0; dt < spec_.pt; ++dt) {
              for (Index df = 0; df < spec_.pf; ++df) {
                acc += x(n, c, to * spec_.pt + dt, fo * spec_.pf + df);
              }
            }
            out(n, c, to, fo) = acc * inv;
          } else {
            Scalar best = -std::numeric_limits<Scalar>::infinity();
            Index best_idx = 0;
            for (Index dt = 0; dt < spec_.pt; ++dt) {
              for (Index df = 0; df < spec_.pf; ++df) {
                const Index t = to * spec_.pt + dt, f = fo * spec_.pf + df;
                const Scalar v = x(n, c, t, f);
                if (v > best) {
                  best = v;
                  best_idx = ((n * s.c + c) * s.t + t) * s.f + f;
                }
              }
            }
            out(n, c, to, fo) = best;
            argmax_[oi] = best_idx;
          }
        }
      }
    }
  }
  has_cache_ = true;
  return out;
}

Tensor Pool2d::backward(const Tensor& grad_out) {
  require_cache(has_cache_, "Pool2d");
  const Shape4 os = output_shape(in_shape_);
  if (!(grad_out.shape() == os)) throw std::invalid_argument("Pool2d: cotangent shape mismatch");
  Tensor dx(in_shape_);

  if (spec_.kind == PoolKind::kMax) {
    for (Index oi = 0; oi < os.count(); ++oi) dx.array()[argmax_[oi]] += grad_out.array()[oi];
    return dx;
  }

  const Scalar inv = 1.0 / static_cast<Scalar>(spec_.pt * spec_.pf);
  for (Index n = 0; n < os.n; ++n) {
    for (Index c = 0; c < os.c; ++c) {
      for (Index to = 0; to < os.t; ++to) {
        for (Index fo = 0; fo < os.f; ++fo) {
          const Scalar g = grad_out(n, c, to, fo) * inv;
          for (Index dt = 0; dt < spec_.pt; ++dt) {
            for (Index df = 0; df < spec_.pf; ++df) {
              dx(n, c, to * spec_.pt + dt, fo * spec_.pf + df) += g;
            }
          }
        }
      }
    }
  }
  return dx;
}

Tensor Relu::forward(const Tensor& x) {
  mask_ = Tensor(x.shape());
  mask_.array() = (x.array() > 0.0).cast<Scalar>();
  has_cache_ = true;
  Tensor out(x.shape());
  out.array() = x.array().max(0.0);
  return out;
}

Tensor Relu::backward(const Tensor& grad_out) {
  require_cache(has_cache_, "Relu");
  if (!(grad_out.shape() == mask_.shape())) {
    throw std::invalid_argument("Relu: cotangent shape mismatch");
  }
  Tensor dx(grad_out.shape());
  dx.array() = grad_out.array() * mask_.array();
  return dx;
}

Tensor Sigmoid::forward(const Tensor& x) {
  y_ = Tensor(x.shape());
  y_.array() = 1.0 / (1.0 + (-x.array()).exp());
  has_cache_ = true;
  return y_;
}

Tensor Sigmoid::backward(const Tensor& grad_out) {
  require_cache(has_cache_, "Sigmoid");
  if (!(grad_out.shape() == y_.shape())) {
    throw std::invalid_argument("Sigmoid: cotangent shape mismatch");
  }
  Tensor dx(grad_out.shape());
  dx.array() = grad_out.array() * y_.array() * (1.0 - y_.array());
  return dx;
}

Linear::Linear(Index in_channels, Index out_channels, Rng& rng)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      w_("weight", in_channels * out_channels),
      b_("bias", out_channels) {
  if (in_channels <= 0 || out_channels <= 0) {
    throw std::invalid_argument("Linear: channel counts must be positive");
  }
  w_.value = kaiming_uniform(w_.value.size(), in_channels, rng);
}

Tensor Linear::forward(const Tensor& x) {
  if (x.shape().c != in_channels_) throw std::invalid_argument("Linear: channel mismatch");
  x_ = x;
  has_cache_ = true;
  Tensor out(output_shape(x.shape()));
  Eigen::Map<const MatrixRM> wmat(w_.value.data(), out_channels_, in_channels_);
  for (Index n = 0; n < x.shape().n; ++n) {
    item_view(out, n) = wmat * item_view(x, n);
    item_view(out, n).colwise() += Eigen::Map<const Eigen::VectorXd>(b_.value.data(), out_channels_);
  }
  return out;
}

Tensor Linear::backward(const Tensor& grad_out) {
  require_cache(has_cache_, "Linear");
  if (!(grad_out.shape() == output_shape(x_.shape()))) {
    throw std::invalid_argument("Linear: cotangent shape mismatch");
  }
  Eigen::Map<const MatrixRM> wmat(w_.value.data(), out_channels_, in_channels_);
  Eigen::Map<MatrixRM> dw(w_.grad.data(), out_channels_, in_channels_);
  Tensor dx(x_.shape());
  for (Index n = 0; n < x_.shape().n; ++n) {
    auto g = item_view(grad_out, n);
    dw += g * item_view(x_, n).transpose();
    b_.grad += g.rowwise().sum().array();
    item_view(dx, n) = wmat.transpose() * g;
  }
  return dx;
}

ContextGating::ContextGating(Index channels, Rng& rng)
    : channels_(channels), w_("weight", channels * channels), b_("bias", channels) {
  if (channels <= 0) throw std::invalid_argument("ContextGating: channels must be positive");
  w_.value = kaiming_uniform(w_.value.size(), channels, rng);
}

Tensor ContextGating::forward(const Tensor& x) {
  if (x.shape().c != channels_) throw std::invalid_argument("ContextGating: channel mismatch");
  x_ = x;
  gate_ = Tensor(x.shape());
  Eigen::Map<const MatrixRM> wmat(w_.value.data(), channels_, channels_);
  for (Index n = 0; n < x.shape().n; ++n) {
    auto g = item_view(gate_, n);
    g = wmat * item_view(x, n);
    g.colwise() += Eigen::Map<const Eigen::VectorXd>(b_.value.data(), channels_);
  }
  gate_.array() = 1.0 / (1.0 + (-gate_.array()).exp());
  has_cache_ = true;
  Tensor out(x.shape());
  out.array() = x.array() * gate_.array();
  return out;
}

Tensor ContextGating::backward(const Tensor& grad_out) {
  require_cache(has_cache_, "ContextGating");
  if (!(grad_out.shape() == x_.shape())) {
    throw std::invalid_argument("ContextGating: cotangent shape mismatch");
  }
  // y = x ⊙ g with g = σ(s), s = Wx + b.
  Tensor ds(x_.shape());
  ds.array() = grad_out.array() * x_.array() * gate_.array() * (1.0 - gate_.array());

  Eigen::Map<const MatrixRM> wmat(w_.value.data(), channels_, channels_);
  Eigen::Map<MatrixRM> dw(w_.grad.data(), channels_, channels_);
  Tensor dx(x_.shape());
  dx.array() = grad_out.array() * gate_.array();
  for (Index n = 0; n < x_.shape().n; ++n) {
    auto dsn = item_view(ds, n);
    dw += dsn * item_view(x_, n).transpose();
    b_.grad += dsn.rowwise().sum().array();
    item_view(dx, n) += (wmat.transpose() * dsn).eval();
  }
  return dx;
}

BatchNorm::BatchNorm(Index channels)
    : channels_(channels), gamma_("gamma", channels), beta_("beta", channels) {
  if (channels <= 0) throw std::invalid_argument("BatchNorm: channels must be positive");
  gamma_.value.setOnes();
  running_mean_ = Eigen::ArrayXd::Zero(channels);
  running_var_ = Eigen::ArrayXd::Ones(channels);
}

Tensor BatchNorm::forward(const Tensor& x) {
  const Shape4 s = x.shape();
  if (s.c != channels_) throw std::invalid_argument("BatchNorm: channel mismatch");
  const Index m = s.n * s.t * s.f;
  const Index tf = s.t * s.f;

  Eigen::ArrayXd mean(channels_), var(channels_);
  if (training_) {
    mean.setZero();
    var.setZero();
    for (Index n = 0; n < s.n; ++n) {
      for (Index c = 0; c < channels_; ++c) {
        mean[c] += Eigen::Map<const Eigen::ArrayXd>(&x(n, c, 0, 0), tf).sum();
      }
    }
    mean /= static_cast<Scalar>(m);
    for (Index n = 0; n < s.n; ++n) {
      for (Index c = 0; c < channels_; ++c) {
        var[c] += (Eigen::Map<const Eigen::ArrayXd>(&x(n, c, 0, 0), tf) - mean[c]).square().sum();
      }
    }
    var /= static_cast<Scalar>(m);
    running_mean_ = (1.0 - kMomentum) * running_mean_ + kMomentum * mean;
    running_var_ = (1.0 - kMomentum) * running_var_ + kMomentum * var;
  } else {
    mean = running_mean_;
    var = running_var_;
  }

  inv_std_ = 1.0 / (var + kEps).sqrt();
  xhat_ = Tensor(s);
  Tensor out(s);
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < channels_; ++c) {
      Eigen::Map<Eigen::ArrayXd> xh(&xhat_(n, c, 0, 0), tf);
      xh = (Eigen::Map<const Eigen::ArrayXd>(&x(n, c, 0, 0), tf) - mean[c]) * inv_std_[c];
      Eigen::Map<Eigen::ArrayXd>(&out(n, c, 0, 0), tf) = xh * gamma_.value[c] + beta_.value[c];
    }
  }
  cached_training_ = training_;
  has_cache_ = true;
  return out;
}

Tensor BatchNorm::backward(const Tensor& grad_out) {
  require_cache(has_cache_, "BatchNorm");
  const Shape4 s = xhat_.shape();
  if (!(grad_out.shape() == s)) throw std::invalid_argument("BatchNorm: cotangent shape mismatch");
  const Index m = s.n * s.t * s.f;
  const Index tf = s.t * s.f;

  Eigen::ArrayXd sum_dy(channels_), sum_dy_xhat(channels_);
  sum_dy.setZero();
  sum_dy_xhat.setZero();
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < channels_; ++c) {
      Eigen::Map<const Eigen::ArrayXd> dy(&grad_out(n, c, 0, 0), tf);
      Eigen::Map<const Eigen::ArrayXd> xh(&xhat_(n, c, 0, 0), tf);
      sum_dy[c] += dy.sum();
      sum_dy_xhat[c] += (dy * xh).sum();
    }
  }
  gamma_.grad += sum_dy_xhat;
  beta_.grad += sum_dy;

  Tensor dx(s);
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < channels_; ++c) {
      Eigen::Map<const Eigen::ArrayXd> dy(&grad_out(n, c, 0, 0), tf);
      Eigen::Map<const Eigen::ArrayXd> xh(&xhat_(n, c, 0, 0), tf);
      Eigen::Map<Eigen::ArrayXd> d(&dx(n, c, 0, 0), tf);
      if (cached_training_) {
        d = gamma_.value[c] * inv_std_[c] *
            (dy - sum_dy[c] / static_cast<Scalar>(m) -
             xh * sum_dy_xhat[c] / static_cast<Scalar>(m));
      } else {
        d = gamma_.value[c] * inv_std_[c] * dy;
      }
    }
  }
  return dx;
}

Tensor GlobalAvgPool::forward(const Tensor& x) {
  const Shape4 s = x.shape();
  in_shape_ = s;
  has_cache_ = true;
  const Index tf = s.t * s.f;
  Tensor out(output_shape(s));
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      out(n, c, 0, 0) =
          Eigen::Map<const Eigen::ArrayXd>(&x(n, c, 0, 0), tf).sum() / static_cast<Scalar>(tf);
    }
  }
  return out;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) {
  require_cache(has_cache_, "GlobalAvgPool");
  if (!(grad_out.shape() == output_shape(in_shape_))) {
    throw std::invalid_argument("GlobalAvgPool: cotangent shape mismatch");
  }
  const Index tf = in_shape_.t * in_shape_.f;
  Tensor dx(in_shape_);
  for (Index n = 0; n < in_shape_.n; ++n) {
    for (Index c = 0; c < in_shape_.c; ++c) {
      Eigen::Map<Eigen::ArrayXd>(&dx(n, c, 0, 0), tf)
          .setConstant(grad_out(n, c, 0, 0) / static_cast<Scalar>(tf));
    }
  }
  return dx;
}

Scalar softmax_cross_entropy(const Tensor& logits, const std::vector<Index>& labels,
                             Tensor* dlogits) {
  const Shape4 s = logits.shape();
  if (s.t != 1 || s.f != 1) {
    throw std::invalid_argument("softmax_cross_entropy: logits must be (N, classes, 1, 1)");
  }
  if (static_cast<Index>(labels.size()) != s.n) {
    throw std::invalid_argument("softmax_cross_entropy: label count mismatch");
  }
  const Index K = s.c;
  if (dlogits) *dlogits = Tensor(s);

  Scalar total = 0.0;
  for (Index n = 0; n < s.n; ++n) {
    if (labels[n] < 0 || labels[n] >= K) {
      throw std::invalid_argument("softmax_cross_entropy: label out of range");
    }
    Eigen::Map<const Eigen::ArrayXd> z(&logits(n, 0, 0, 0), K);
    const Scalar zmax = z.maxCoeff();
    Eigen::ArrayXd p = (z - zmax).exp();
    const Scalar denom = p.sum();
    p /= denom;
    total += std::log(denom) + zmax - z[labels[n]];
    if (dlogits) {
      Eigen::Map<Eigen::ArrayXd> d(&(*dlogits)(n, 0, 0, 0), K);
      d = p / static_cast<Scalar>(s.n);
      d[labels[n]] -= 1.0 / static_cast<Scalar>(s.n);
    }
  }
  return total / static_cast<Scalar>(s.n);
}

Tensor SoftmaxCrossEntropyLoss::forward(const Tensor& logits) {
  const Scalar loss = softmax_cross_entropy(logits, labels_, &dlogits_);
  has_cache_ = true;
  Tensor out(Shape4{1, 1, 1, 1});
  out(0, 0, 0, 0) = loss;
  return out;
}

Tensor SoftmaxCrossEntropyLoss::backward(const Tensor& grad_out) {
  require_cache(has_cache_, "SoftmaxCrossEntropyLoss");
  if (grad_out.size() != 1) {
    throw std::invalid_argument("SoftmaxCrossEntropyLoss: cotangent must be scalar");
  }
  Tensor dx(dlogits_.shape());
  dx.array() = dlogits_.array() * grad_out(0, 0, 0, 0);
  return dx;
}

}  // namespace facnet
