#pragma once

#include <vector>

#include "facnet/model.hpp"
#include "facnet/synth.hpp"

namespace facnet {

struct TrainSpec {
  Scalar lr = 3e-3;
  Index batch_size = 16;
  Index epochs = 50;
  std::uint64_t seed = 42;
  /// Stop after an epoch whose mean train loss drops below this (0 disables).
  Scalar early_stop_loss = 0.0;
};

struct EpochRow {
  Index epoch;  // 1-based
  Scalar train_loss;
  Scalar test_acc;
};

struct TrainHistory {
  std::vector<EpochRow> rows;
  Scalar final_test_acc = 0.0;
};

/// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8 over live Param pointers.
class Adam {
 public:
  Adam(std::vector<Param*> params, Scalar lr);
  void step();

  static constexpr Scalar kBeta1 = 0.9;
  static constexpr Scalar kBeta2 = 0.999;
  static constexpr Scalar kEps = 1e-8;

 private:
  std::vector<Param*> params_;
  std::vector<Eigen::ArrayXd> m_, v_;
  Scalar lr_;
  long t_ = 0;
};

/// Stacks samples (each (1, C, T, F)) at the given indices into one batch.
Tensor make_batch(const std::vector<Tensor>& xs, const std::vector<Index>& indices);

/// Minibatch Adam training with a deterministic per-epoch shuffle drawn from
/// spec.seed. Evaluates test accuracy (inference mode) after every epoch.
/// Throws on non-finite loss, naming epoch and batch.
TrainHistory train_model(Model& model, const Dataset& data, const TrainSpec& spec);

/// Fraction of argmax-correct predictions, computed in inference mode; the
/// model is returned to training mode afterwards.
Scalar evaluate_accuracy(Model& model, const std::vector<Tensor>& xs,
                         const std::vector<Index>& ys, Index batch_size);

/// Logits (rows: samples) in inference mode.
Eigen::MatrixXd model_logits(Model& model, const std::vector<Tensor>& xs, Index batch_size);

/// Largest elementwise logit difference across twin pairs (2i, 2i+1) of the
/// dataset's test split.
Scalar max_paired_logit_gap(Model& model, const Dataset& data, Index batch_size);

}  // namespace facnet
