#include "facnet/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace facnet {

std::string Shape4::str() const {
  std::ostringstream os;
  os << "(" << n << ", " << c << ", " << t << ", " << f << ")";
  return os.str();
}

Tensor::Tensor(Shape4 shape, Scalar value) : shape_(shape) {
  if (shape.n <= 0 || shape.c <= 0 || shape.t <= 0 || shape.f <= 0) {
    throw std::invalid_argument("Tensor: all dimensions must be positive, got " + shape.str());
  }
  data_ = Eigen::ArrayXd::Constant(shape.count(), value);
}

Tensor tensor_fill(Shape4 shape, Scalar value) { return Tensor(shape, value); }

Tensor tensor_rand_uniform(Shape4 shape, Scalar lo, Scalar hi, Rng& rng) {
  if (!(lo < hi)) {
    throw std::invalid_argument("tensor_rand_uniform: requires lo < hi");
  }
  Tensor out(shape);
  for (Index i = 0; i < out.size(); ++i) {
    out.array()[i] = rng.uniform(lo, hi);
  }
  return out;
}

Tensor shift_frequency(const Tensor& x, Index delta) {
  const Shape4 s = x.shape();
  Tensor out(s);
  const Index F = s.f;
  // Normalize delta into [0, F).
  Index d = ((delta % F) + F) % F;
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      for (Index t = 0; t < s.t; ++t) {
        for (Index f = 0; f < F; ++f) {
          Index dst = f + d;
          if (dst >= F) dst -= F;
          out(n, c, t, dst) = x(n, c, t, f);
        }
      }
    }
  }
  return out;
}

bool all_finite(const Tensor& x) { return x.array().isFinite().all(); }

Scalar max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape())) {
    throw std::invalid_argument("max_abs_diff: shape mismatch " + a.shape().str() + " vs " +
                                b.shape().str());
  }
  if (a.size() == 0) return 0.0;
  return (a.array() - b.array()).abs().maxCoeff();
}

}  // namespace facnet
