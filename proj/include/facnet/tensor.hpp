#pragma once

#include <Eigen/Core>

#include <string>

#include "facnet/rng.hpp"

namespace facnet {

using Scalar = double;
using Index = Eigen::Index;

/// Dimensions of a rank-4 (batch, channel, time, frequency) tensor.
struct Shape4 {
  Index n = 1;
  Index c = 1;
  Index t = 1;
  Index f = 1;

  Index count() const { return n * c * t * f; }
  bool operator==(const Shape4&) const = default;
  std::string str() const;
};

/// Dense rank-4 value type: row-major doubles in (n, c, t, f) order.
/// Copies are deep; distinct instances share nothing.
class Tensor {
 public:
  Tensor() : Tensor(Shape4{}) {}
  explicit Tensor(Shape4 shape, Scalar value = 0.0);

  const Shape4& shape() const { return shape_; }
  Index size() const { return data_.size(); }

  Scalar& operator()(Index n, Index c, Index t, Index f) { return data_[offset(n, c, t, f)]; }
  const Scalar& operator()(Index n, Index c, Index t, Index f) const {
    return data_[offset(n, c, t, f)];
  }

  Eigen::ArrayXd& array() { return data_; }
  const Eigen::ArrayXd& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  void set_zero() { data_.setZero(); }

 private:
  Index offset(Index n, Index c, Index t, Index f) const {
    return ((n * shape_.c + c) * shape_.t + t) * shape_.f + f;
  }

  Shape4 shape_;
  Eigen::ArrayXd data_;
};

Tensor tensor_fill(Shape4 shape, Scalar value);

/// Elementwise uniform draws in [lo, hi), consumed from rng in row-major
/// element order. Requires lo < hi.
Tensor tensor_rand_uniform(Shape4 shape, Scalar lo, Scalar hi, Rng& rng);

/// Circular shift along frequency: bin b of the input lands at bin
/// (b + delta) mod F. Negative deltas shift downward.
Tensor shift_frequency(const Tensor& x, Index delta);

bool all_finite(const Tensor& x);

/// Largest elementwise |a - b|; shapes must match.
Scalar max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace facnet
