#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "facnet/tensor.hpp"

namespace facnet {

/// One learnable array plus its gradient accumulator. Flat storage; the
/// owning layer defines the indexing.
struct Param {
  std::string name;
  Eigen::ArrayXd value;
  Eigen::ArrayXd grad;

  Param(std::string name_, Index size) : name(std::move(name_)) {
    value = Eigen::ArrayXd::Zero(size);
    grad = Eigen::ArrayXd::Zero(size);
  }
};

/// Base class for differentiable blocks. forward() caches whatever the
/// matching backward() needs; backward() accumulates into Param::grad and
/// returns the gradient with respect to the forward input.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& x) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;

  /// Live pointers into the layer's parameter storage (empty if stateless).
  virtual std::vector<Param*> params() { return {}; }

  virtual std::string kind() const = 0;
  virtual Shape4 output_shape(Shape4 in) const = 0;

  void zero_grad() {
    for (Param* p : params()) p->grad.setZero();
  }

  /// Training-vs-inference switch; only stateful layers (batch norm) care.
  virtual void set_training(bool training) { training_ = training; }
  bool training() const { return training_; }

 protected:
  /// Guard for backward() being called without a cached forward().
  void require_cache(bool have, const char* who) const {
    if (!have) {
      throw std::logic_error(std::string(who) + ": backward called before forward");
    }
  }

  bool training_ = true;
};

}  // namespace facnet
