#include "facnet/conv.hpp"

#include <cmath>
#include <stdexcept>

namespace facnet {

namespace detail {

namespace {

void check_kernel(Index kt, Index kf) {
  if (kt <= 0 || kf <= 0 || kt % 2 == 0 || kf % 2 == 0) {
    throw std::invalid_argument("conv: kernel extents must be positive and odd");
  }
}

}  // namespace

MatrixRM im2col(const Tensor& x, Index kt, Index kf, PadMode pad) {
  check_kernel(kt, kf);
  const Shape4 s = x.shape();
  const Index N = s.n, C = s.c, T = s.t, F = s.f;
  const Index rt = kt / 2, rf = kf / 2;
  MatrixRM cols(C * kt * kf, N * T * F);

  for (Index ci = 0; ci < C; ++ci) {
    for (Index dt = 0; dt < kt; ++dt) {
      for (Index df = 0; df < kf; ++df) {
        const Index r = (ci * kt + dt) * kf + df;
        Scalar* dst_row = cols.data() + r * cols.cols();
        for (Index n = 0; n < N; ++n) {
          for (Index t = 0; t < T; ++t) {
            Scalar* dst = dst_row + (n * T + t) * F;
            const Index tau = t + dt - rt;
            if (tau < 0 || tau >= T) {
              std::fill(dst, dst + F, 0.0);
              continue;
            }
            const Scalar* src = &x(n, ci, tau, 0);
            if (pad == PadMode::kZero) {
              const Index shift = df - rf;  // source bin = f + shift
              const Index f0 = std::max<Index>(0, -shift);
              const Index f1 = std::min<Index>(F, F - shift);
              std::fill(dst, dst + f0, 0.0);
              for (Index f = f0; f < f1; ++f) dst[f] = src[f + shift];
              std::fill(dst + std::max(f0, f1), dst + F, 0.0);
            } else {
              const Index shift = (((df - rf) % F) + F) % F;
              const Index split = F - shift;  // f < split reads src[f+shift]
              for (Index f = 0; f < split; ++f) dst[f] = src[f + shift];
              for (Index f = split; f < F; ++f) dst[f] = src[f + shift - F];
            }
          }
        }
      }
    }
  }
  return cols;
}

void col2im_add(const MatrixRM& cols, Index kt, Index kf, PadMode pad, Tensor& x_grad) {
  check_kernel(kt, kf);
  const Shape4 s = x_grad.shape();
  const Index N = s.n, C = s.c, T = s.t, F = s.f;
  const Index rt = kt / 2, rf = kf / 2;
  if (cols.rows() != C * kt * kf || cols.cols() != N * T * F) {
    throw std::invalid_argument("col2im_add: column matrix does not match target shape");
  }

  for (Index ci = 0; ci < C; ++ci) {
    for (Index dt = 0; dt < kt; ++dt) {
      for (Index df = 0; df < kf; ++df) {
        const Index r = (ci * kt + dt) * kf + df;
        const Scalar* src_row = cols.data() + r * cols.cols();
        for (Index n = 0; n < N; ++n) {
          for (Index t = 0; t < T; ++t) {
            const Scalar* src = src_row + (n * T + t) * F;
            const Index tau = t + dt - rt;
            if (tau < 0 || tau >= T) continue;
            Scalar* dst = &x_grad(n, ci, tau, 0);
            if (pad == PadMode::kZero) {
              const Index shift = df - rf;
              const Index f0 = std::max<Index>(0, -shift);
              const Index f1 = std::min<Index>(F, F - shift);
              for (Index f = f0; f < f1; ++f) dst[f + shift] += src[f];
            } else {
              const Index shift = (((df - rf) % F) + F) % F;
              const Index split = F - shift;
              for (Index f = 0; f < split; ++f) dst[f + shift] += src[f];
              for (Index f = split; f < F; ++f) dst[f + shift - F] += src[f];
            }
          }
        }
      }
    }
  }
}

}  // namespace detail

Eigen::ArrayXd kaiming_uniform(Index count, Index fan_in, Rng& rng) {
  if (fan_in <= 0) throw std::invalid_argument("kaiming_uniform: fan_in must be positive");
  const Scalar bound = std::sqrt(6.0 / static_cast<Scalar>(fan_in));
  Eigen::ArrayXd out(count);
  for (Index i = 0; i < count; ++i) out[i] = rng.uniform(-bound, bound);
  return out;
}

Conv2d::Conv2d(ConvSpec spec, Rng& rng)
    : spec_(spec),
      w_("weight", spec.out_channels * spec.in_channels * spec.kt * spec.kf),
      b_("bias", spec.out_channels) {
  if (spec.in_channels <= 0 || spec.out_channels <= 0) {
    throw std::invalid_argument("Conv2d: channel counts must be positive");
  }
  detail::check_kernel(spec.kt, spec.kf);
  w_.value = kaiming_uniform(w_.value.size(), spec.in_channels * spec.kt * spec.kf, rng);
}

std::vector<Param*> Conv2d::params() {
  std::vector<Param*> ps{&w_};
  if (spec_.bias) ps.push_back(&b_);
  return ps;
}

Shape4 Conv2d::output_shape(Shape4 in) const {
  return Shape4{in.n, spec_.out_channels, in.t, in.f};
}

Tensor Conv2d::forward(const Tensor& x) {
  const Shape4 s = x.shape();
  if (s.c != spec_.in_channels) {
    throw std::invalid_argument("Conv2d: expected " + std::to_string(spec_.in_channels) +
                                " input channels, got " + std::to_string(s.c));
  }
  in_shape_ = s;
  patches_ = detail::im2col(x, spec_.kt, spec_.kf, spec_.pad);
  has_cache_ = true;

  const Index Cout = spec_.out_channels;
  const Index K = patches_.rows();
  Eigen::Map<const MatrixRM> wmat(w_.value.data(), Cout, K);
  MatrixRM y = wmat * patches_;  // Cout x (N*T*F)

  Tensor out(output_shape(s));
  const Index tf = s.t * s.f;
  for (Index n = 0; n < s.n; ++n) {
    for (Index co = 0; co < Cout; ++co) {
      Eigen::Map<Eigen::RowVectorXd> slice(&out(n, co, 0, 0), tf);
      slice = y.row(co).segment(n * tf, tf);
      if (spec_.bias) slice.array() += b_.value[co];
    }
  }
  return out;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  require_cache(has_cache_, "Conv2d");
  const Shape4 s = in_shape_;
  const Index Cout = spec_.out_channels;
  const Index K = patches_.rows();
  const Index M = patches_.cols();
  const Index tf = s.t * s.f;
  if (!(grad_out.shape() == output_shape(s))) {
    throw std::invalid_argument("Conv2d: cotangent shape mismatch");
  }

  MatrixRM g(Cout, M);
  for (Index n = 0; n < s.n; ++n) {
    for (Index co = 0; co < Cout; ++co) {
      g.row(co).segment(n * tf, tf) =
          Eigen::Map<const Eigen::RowVectorXd>(&grad_out(n, co, 0, 0), tf);
    }
  }

  Eigen::Map<MatrixRM>(w_.grad.data(), Cout, K) += g * patches_.transpose();
  if (spec_.bias) b_.grad += g.rowwise().sum().array();

  Eigen::Map<const MatrixRM> wmat(w_.value.data(), Cout, K);
  MatrixRM dcols = wmat.transpose() * g;
  Tensor dx(s);
  detail::col2im_add(dcols, spec_.kt, spec_.kf, spec_.pad, dx);
  return dx;
}

Tensor conv2d_reference(const Tensor& x, const ConvSpec& spec, const Eigen::ArrayXd& w,
                        const Eigen::ArrayXd& b) {
  const Shape4 s = x.shape();
  const Index Cin = spec.in_channels, Cout = spec.out_channels;
  const Index kt = spec.kt, kf = spec.kf, rt = kt / 2, rf = kf / 2;
  if (s.c != Cin) throw std::invalid_argument("conv2d_reference: channel mismatch");
  if (w.size() != Cout * Cin * kt * kf) {
    throw std::invalid_argument("conv2d_reference: weight size mismatch");
  }

  Tensor out(Shape4{s.n, Cout, s.t, s.f});
  for (Index n = 0; n < s.n; ++n) {
    for (Index co = 0; co < Cout; ++co) {
      const Scalar bias = (spec.bias && b.size() > 0) ? b[co] : 0.0;
      for (Index t = 0; t < s.t; ++t) {
        for (Index f = 0; f < s.f; ++f) {
          Scalar acc = bias;
          for (Index ci = 0; ci < Cin; ++ci) {
            for (Index dt = 0; dt < kt; ++dt) {
              const Index tau = t + dt - rt;
              if (tau < 0 || tau >= s.t) continue;
              for (Index df = 0; df < kf; ++df) {
                Index phi = f + df - rf;
                if (spec.pad == PadMode::kCircularFrequency) {
                  phi = ((phi % s.f) + s.f) % s.f;
                } else if (phi < 0 || phi >= s.f) {
                  continue;
                }
                acc += w[((co * Cin + ci) * kt + dt) * kf + df] * x(n, ci, tau, phi);
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

}  // namespace facnet
