#include "facnet/freq_layers.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace facnet {

std::string fac_mode_name(FacMode mode) {
  switch (mode) {
    case FacMode::kFixed:
      return "fixed";
    case FacMode::kAdapt:
      return "adapt";
    case FacMode::kAdaptDep:
      return "adapt_dep";
  }
  throw std::logic_error("fac_mode_name: unreachable");
}

Eigen::ArrayXd fac_encoding_init(Index f_bins) {
  if (f_bins < 1) throw std::invalid_argument("fac_encoding_init: F must be >= 1");
  Eigen::ArrayXd v(f_bins);
  for (Index f = 0; f < f_bins; ++f) {
    v[f] = std::sin(std::numbers::pi / 2.0 * static_cast<Scalar>(f) / static_cast<Scalar>(f_bins));
  }
  return v;
}

FacConv::FacConv(ConvSpec spec, Index in_f, FacMode mode, Rng& rng)
    : mode_(mode),
      in_f_(in_f),
      p_freq_("p_freq", in_f),
      attn_w_("attn_w", in_f),
      attn_b_("attn_b", 1),
      conv_(spec, rng) {
  // The encoding starts at its analytic shape; the attention map starts at
  // zero so alpha begins at 0.5 and, like the encoding, draws nothing from
  // the rng stream — every mode consumes identical randomness.
  p_freq_.value = fac_encoding_init(in_f);
}

std::vector<Param*> FacConv::params() {
  std::vector<Param*> ps{&p_freq_};
  if (mode_ != FacMode::kFixed) {
    ps.push_back(&attn_w_);
    ps.push_back(&attn_b_);
  }
  for (Param* p : conv_.params()) ps.push_back(p);
  return ps;
}

Eigen::MatrixXd FacConv::alpha(const Tensor& x) const {
  const Shape4 s = x.shape();
  if (s.f != in_f_) throw std::invalid_argument("FacConv: frequency dim mismatch");
  Eigen::MatrixXd a(s.n, s.c);
  if (mode_ == FacMode::kFixed) {
    a.setOnes();
    return a;
  }
  const Scalar invT = 1.0 / static_cast<Scalar>(s.t);
  for (Index n = 0; n < s.n; ++n) {
    Eigen::ArrayXd xbarc = Eigen::ArrayXd::Zero(in_f_);
    for (Index c = 0; c < s.c; ++c) {
      Eigen::ArrayXd xbar = Eigen::ArrayXd::Zero(in_f_);
      for (Index t = 0; t < s.t; ++t) {
        xbar += Eigen::Map<const Eigen::ArrayXd>(&x(n, c, t, 0), in_f_);
      }
      xbar *= invT;
      if (mode_ == FacMode::kAdaptDep) {
        const Scalar z = (xbar * attn_w_.value).sum() + attn_b_.value[0];
        a(n, c) = 1.0 / (1.0 + std::exp(-z));
      } else {
        xbarc += xbar;
      }
    }
    if (mode_ == FacMode::kAdapt) {
      xbarc /= static_cast<Scalar>(s.c);
      const Scalar z = (xbarc * attn_w_.value).sum() + attn_b_.value[0];
      a.row(n).setConstant(1.0 / (1.0 + std::exp(-z)));
    }
  }
  return a;
}

Tensor FacConv::forward(const Tensor& x) {
  const Shape4 s = x.shape();
  if (s.f != in_f_) throw std::invalid_argument("FacConv: frequency dim mismatch");
  in_shape_ = s;
  const Scalar invT = 1.0 / static_cast<Scalar>(s.t);

  xbar_ = MatrixRM::Zero(s.n * s.c, in_f_);
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      auto row = xbar_.row(n * s.c + c);
      for (Index t = 0; t < s.t; ++t) {
        row += Eigen::Map<const Eigen::RowVectorXd>(&x(n, c, t, 0), in_f_);
      }
      row *= invT;
    }
  }

  alpha_.resize(s.n, s.c);
  if (mode_ == FacMode::kFixed) {
    alpha_.setOnes();
  } else if (mode_ == FacMode::kAdaptDep) {
    for (Index n = 0; n < s.n; ++n) {
      for (Index c = 0; c < s.c; ++c) {
        const Scalar z =
            (xbar_.row(n * s.c + c).array() * attn_w_.value.transpose()).sum() + attn_b_.value[0];
        alpha_(n, c) = 1.0 / (1.0 + std::exp(-z));
      }
    }
  } else {
    xbarc_ = MatrixRM::Zero(s.n, in_f_);
    for (Index n = 0; n < s.n; ++n) {
      for (Index c = 0; c < s.c; ++c) xbarc_.row(n) += xbar_.row(n * s.c + c);
      xbarc_.row(n) /= static_cast<Scalar>(s.c);
      const Scalar z =
          (xbarc_.row(n).array() * attn_w_.value.transpose()).sum() + attn_b_.value[0];
      alpha_.row(n).setConstant(1.0 / (1.0 + std::exp(-z)));
    }
  }

  Tensor xp(s);
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      const Scalar a = alpha_(n, c);
      for (Index t = 0; t < s.t; ++t) {
        Eigen::Map<Eigen::ArrayXd>(&xp(n, c, t, 0), in_f_) =
            Eigen::Map<const Eigen::ArrayXd>(&x(n, c, t, 0), in_f_) + a * p_freq_.value;
      }
    }
  }
  has_cache_ = true;
  return conv_.forward(xp);
}

Tensor FacConv::backward(const Tensor& grad_out) {
  require_cache(has_cache_, "FacConv");
  const Shape4 s = in_shape_;
  Tensor dxp = conv_.backward(grad_out);

  // Additive path: d p_freq and d alpha.
  Eigen::MatrixXd dalpha = Eigen::MatrixXd::Zero(s.n, s.c);
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      Eigen::ArrayXd dsum = Eigen::ArrayXd::Zero(in_f_);
      for (Index t = 0; t < s.t; ++t) {
        dsum += Eigen::Map<const Eigen::ArrayXd>(&dxp(n, c, t, 0), in_f_);
      }
      p_freq_.grad += alpha_(n, c) * dsum;
      dalpha(n, c) = (dsum * p_freq_.value).sum();
    }
  }

  Tensor dx = dxp;  // identity path through the addition
  if (mode_ == FacMode::kFixed) return dx;

  const Scalar invT = 1.0 / static_cast<Scalar>(s.t);
  if (mode_ == FacMode::kAdaptDep) {
    for (Index n = 0; n < s.n; ++n) {
      for (Index c = 0; c < s.c; ++c) {
        const Scalar a = alpha_(n, c);
        const Scalar dz = dalpha(n, c) * a * (1.0 - a);
        attn_w_.grad += dz * xbar_.row(n * s.c + c).transpose().array();
        attn_b_.grad[0] += dz;
        const Eigen::ArrayXd dxbar = dz * attn_w_.value * invT;
        for (Index t = 0; t < s.t; ++t) {
          Eigen::Map<Eigen::ArrayXd>(&dx(n, c, t, 0), in_f_) += dxbar;
        }
      }
    }
  } else {
    const Scalar invC = 1.0 / static_cast<Scalar>(s.c);
    for (Index n = 0; n < s.n; ++n) {
      const Scalar a = alpha_(n, 0);
      const Scalar dz = dalpha.row(n).sum() * a * (1.0 - a);
      attn_w_.grad += dz * xbarc_.row(n).transpose().array();
      attn_b_.grad[0] += dz;
      const Eigen::ArrayXd dxbar = dz * attn_w_.value * invC * invT;
      for (Index c = 0; c < s.c; ++c) {
        for (Index t = 0; t < s.t; ++t) {
          Eigen::Map<Eigen::ArrayXd>(&dx(n, c, t, 0), in_f_) += dxbar;
        }
      }
    }
  }
  return dx;
}

FdyConv::FdyConv(ConvSpec spec, Index in_f, Index k, Rng& rng)
    : spec_(spec),
      in_f_(in_f),
      k_(k),
      basis_w_("basis_w", k * spec.out_channels * spec.in_channels * spec.kt * spec.kf),
      basis_b_("basis_b", k * spec.out_channels),
      attn_conv1_(ConvSpec{spec.in_channels, spec.in_channels + 1, 1, 3, spec.pad, true}, rng),
      attn_conv2_(ConvSpec{spec.in_channels + 1, k, 1, 3, spec.pad, true}, rng) {
  if (k < 1) throw std::invalid_argument("FdyConv: K must be >= 1");
  // rng order: attention convs (member initialization), then the basis
  // kernels. Each basis kernel uses the same fan-in as a vanilla conv.
  basis_w_.value =
      kaiming_uniform(basis_w_.value.size(), spec.in_channels * spec.kt * spec.kf, rng);
}

void FdyConv::set_training(bool training) {
  training_ = training;
  attn_conv1_.set_training(training);
  attn_relu_.set_training(training);
  attn_conv2_.set_training(training);
}

std::vector<Param*> FdyConv::params() {
  std::vector<Param*> ps{&basis_w_};
  if (spec_.bias) ps.push_back(&basis_b_);
  for (Param* p : attn_conv1_.params()) ps.push_back(p);
  for (Param* p : attn_conv2_.params()) ps.push_back(p);
  return ps;
}

Tensor FdyConv::time_average(const Tensor& x) const {
  const Shape4 s = x.shape();
  Tensor xbar(Shape4{s.n, s.c, 1, s.f});
  const Scalar invT = 1.0 / static_cast<Scalar>(s.t);
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      Eigen::Map<Eigen::ArrayXd> row(&xbar(n, c, 0, 0), s.f);
      for (Index t = 0; t < s.t; ++t) {
        row += Eigen::Map<const Eigen::ArrayXd>(&x(n, c, t, 0), s.f);
      }
      row *= invT;
    }
  }
  return xbar;
}

Tensor FdyConv::attention(const Tensor& x) {
  const Shape4 s = x.shape();
  Tensor logits = attn_conv2_.forward(attn_relu_.forward(attn_conv1_.forward(time_average(x))));
  // Softmax over the K (channel) axis, per (n, f).
  Tensor pi(logits.shape());
  for (Index n = 0; n < s.n; ++n) {
    for (Index f = 0; f < s.f; ++f) {
      Scalar zmax = -std::numeric_limits<Scalar>::infinity();
      for (Index i = 0; i < k_; ++i) zmax = std::max(zmax, logits(n, i, 0, f));
      Scalar denom = 0.0;
      for (Index i = 0; i < k_; ++i) {
        const Scalar e = std::exp(logits(n, i, 0, f) - zmax);
        pi(n, i, 0, f) = e;
        denom += e;
      }
      for (Index i = 0; i < k_; ++i) pi(n, i, 0, f) /= denom;
    }
  }
  return pi;
}

Tensor FdyConv::forward(const Tensor& x) {
  const Shape4 s = x.shape();
  if (s.c != spec_.in_channels) throw std::invalid_argument("FdyConv: channel mismatch");
  if (s.f != in_f_) throw std::invalid_argument("FdyConv: frequency dim mismatch");
  in_shape_ = s;

  pi_ = attention(x);
  patches_ = detail::im2col(x, spec_.kt, spec_.kf, spec_.pad);

  const Index Cout = spec_.out_channels;
  const Index ksz = spec_.in_channels * spec_.kt * spec_.kf;
  basis_out_.assign(k_, MatrixRM());
  for (Index i = 0; i < k_; ++i) {
    Eigen::Map<const MatrixRM> wmat(basis_w_.value.data() + i * Cout * ksz, Cout, ksz);
    basis_out_[i] = wmat * patches_;
    if (spec_.bias) {
      basis_out_[i].colwise() +=
          Eigen::Map<const Eigen::VectorXd>(basis_b_.value.data() + i * Cout, Cout);
    }
  }

  Tensor out(output_shape(s));
  for (Index n = 0; n < s.n; ++n) {
    for (Index co = 0; co < Cout; ++co) {
      for (Index t = 0; t < s.t; ++t) {
        const Index m0 = (n * s.t + t) * s.f;
        for (Index f = 0; f < s.f; ++f) {
          Scalar acc = 0.0;
          for (Index i = 0; i < k_; ++i) acc += pi_(n, i, 0, f) * basis_out_[i](co, m0 + f);
          out(n, co, t, f) = acc;
        }
      }
    }
  }
  has_cache_ = true;
  return out;
}

Tensor FdyConv::backward(const Tensor& grad_out) {
  require_cache(has_cache_, "FdyConv");
  const Shape4 s = in_shape_;
  if (!(grad_out.shape() == output_shape(s))) {
    throw std::invalid_argument("FdyConv: cotangent shape mismatch");
  }
  const Index Cout = spec_.out_channels;
  const Index ksz = spec_.in_channels * spec_.kt * spec_.kf;
  const Index M = patches_.cols();

  // d pi (per n, i, f) and the per-basis conv cotangents.
  Tensor dpi(pi_.shape());
  MatrixRM dcols = MatrixRM::Zero(ksz, M);
  MatrixRM dyi(Cout, M);
  for (Index i = 0; i < k_; ++i) {
    for (Index n = 0; n < s.n; ++n) {
      for (Index co = 0; co < Cout; ++co) {
        for (Index t = 0; t < s.t; ++t) {
          const Index m0 = (n * s.t + t) * s.f;
          for (Index f = 0; f < s.f; ++f) {
            const Scalar g = grad_out(n, co, t, f);
            dyi(co, m0 + f) = g * pi_(n, i, 0, f);
            dpi(n, i, 0, f) += g * basis_out_[i](co, m0 + f);
          }
        }
      }
    }
    Eigen::Map<MatrixRM>(basis_w_.grad.data() + i * Cout * ksz, Cout, ksz) +=
        dyi * patches_.transpose();
    if (spec_.bias) {
      Eigen::Map<Eigen::ArrayXd>(basis_b_.grad.data() + i * Cout, Cout) +=
          dyi.rowwise().sum().array();
    }
    Eigen::Map<const MatrixRM> wmat(basis_w_.value.data() + i * Cout * ksz, Cout, ksz);
    dcols += wmat.transpose() * dyi;
  }
  Tensor dx(s);
  detail::col2im_add(dcols, spec_.kt, spec_.kf, spec_.pad, dx);

  // Softmax backward, then through the attention net.
  Tensor dlogits(pi_.shape());
  for (Index n = 0; n < s.n; ++n) {
    for (Index f = 0; f < s.f; ++f) {
      Scalar dot = 0.0;
      for (Index i = 0; i < k_; ++i) dot += pi_(n, i, 0, f) * dpi(n, i, 0, f);
      for (Index i = 0; i < k_; ++i) {
        dlogits(n, i, 0, f) = pi_(n, i, 0, f) * (dpi(n, i, 0, f) - dot);
      }
    }
  }
  Tensor dxbar = attn_conv1_.backward(attn_relu_.backward(attn_conv2_.backward(dlogits)));
  const Scalar invT = 1.0 / static_cast<Scalar>(s.t);
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      for (Index t = 0; t < s.t; ++t) {
        Eigen::Map<Eigen::ArrayXd>(&dx(n, c, t, 0), s.f) +=
            invT * Eigen::Map<const Eigen::ArrayXd>(&dxbar(n, c, 0, 0), s.f);
      }
    }
  }
  return dx;
}

Tensor FdyConv::forward_combined(const Tensor& x) {
  const Shape4 s = x.shape();
  if (s.c != spec_.in_channels) throw std::invalid_argument("FdyConv: channel mismatch");
  if (s.f != in_f_) throw std::invalid_argument("FdyConv: frequency dim mismatch");
  const Tensor pi = attention(x);

  const Index Cin = spec_.in_channels, Cout = spec_.out_channels;
  const Index kt = spec_.kt, kf = spec_.kf, rt = kt / 2, rf = kf / 2;
  const Index ksz = Cin * kt * kf;

  Tensor out(output_shape(s));
  Eigen::ArrayXd wbar(Cout * ksz);
  Eigen::ArrayXd bbar(Cout);
  for (Index n = 0; n < s.n; ++n) {
    for (Index f = 0; f < s.f; ++f) {
      wbar.setZero();
      bbar.setZero();
      for (Index i = 0; i < k_; ++i) {
        const Scalar p = pi(n, i, 0, f);
        wbar += p * Eigen::Map<const Eigen::ArrayXd>(basis_w_.value.data() + i * Cout * ksz,
                                                     Cout * ksz);
        if (spec_.bias) {
          bbar += p * Eigen::Map<const Eigen::ArrayXd>(basis_b_.value.data() + i * Cout, Cout);
        }
      }
      for (Index co = 0; co < Cout; ++co) {
        for (Index t = 0; t < s.t; ++t) {
          Scalar acc = bbar[co];
          for (Index ci = 0; ci < Cin; ++ci) {
            for (Index dt = 0; dt < kt; ++dt) {
              const Index tau = t + dt - rt;
              if (tau < 0 || tau >= s.t) continue;
              for (Index df = 0; df < kf; ++df) {
                Index phi = f + df - rf;
                if (spec_.pad == PadMode::kCircularFrequency) {
                  phi = ((phi % s.f) + s.f) % s.f;
                } else if (phi < 0 || phi >= s.f) {
                  continue;
                }
                acc += wbar[((co * Cin + ci) * kt + dt) * kf + df] * x(n, ci, tau, phi);
              }
            }
          }
          out(n, co, t, f) = acc;
        }
      }
    }
  }
  return out;
}

FaConcatConv::FaConcatConv(ConvSpec spec, Index in_f, Rng& rng)
    : data_channels_(spec.in_channels),
      in_f_(in_f),
      conv_(ConvSpec{spec.in_channels + 1, spec.out_channels, spec.kt, spec.kf, spec.pad,
                     spec.bias},
            rng) {
  if (in_f < 1) throw std::invalid_argument("FaConcatConv: F must be >= 1");
}

Eigen::ArrayXd FaConcatConv::ramp() const {
  Eigen::ArrayXd v(in_f_);
  for (Index f = 0; f < in_f_; ++f) v[f] = static_cast<Scalar>(f) / static_cast<Scalar>(in_f_);
  return v;
}

Tensor FaConcatConv::forward(const Tensor& x) {
  const Shape4 s = x.shape();
  if (s.c != data_channels_) throw std::invalid_argument("FaConcatConv: channel mismatch");
  if (s.f != in_f_) throw std::invalid_argument("FaConcatConv: frequency dim mismatch");

  Tensor xv(Shape4{s.n, s.c + 1, s.t, s.f});
  const Eigen::ArrayXd v = ramp();
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      for (Index t = 0; t < s.t; ++t) {
        Eigen::Map<Eigen::ArrayXd>(&xv(n, c, t, 0), s.f) =
            Eigen::Map<const Eigen::ArrayXd>(&x(n, c, t, 0), s.f);
      }
    }
    for (Index t = 0; t < s.t; ++t) {
      Eigen::Map<Eigen::ArrayXd>(&xv(n, s.c, t, 0), s.f) = v;
    }
  }
  return conv_.forward(xv);
}

Tensor FaConcatConv::backward(const Tensor& grad_out) {
  Tensor dxv = conv_.backward(grad_out);
  const Shape4 s = dxv.shape();
  Tensor dx(Shape4{s.n, s.c - 1, s.t, s.f});
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c + 1 < s.c; ++c) {
      for (Index t = 0; t < s.t; ++t) {
        Eigen::Map<Eigen::ArrayXd>(&dx(n, c, t, 0), s.f) =
            Eigen::Map<const Eigen::ArrayXd>(&dxv(n, c, t, 0), s.f);
      }
    }
  }
  return dx;
}

}  // namespace facnet
