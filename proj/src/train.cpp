#include "facnet/train.hpp"

#include <cmath>
#include <stdexcept>

#include "facnet/layers.hpp"

namespace facnet {

Adam::Adam(std::vector<Param*> params, Scalar lr) : params_(std::move(params)), lr_(lr) {
  if (lr < 0.0) throw std::invalid_argument("Adam: lr must be >= 0");
  for (Param* p : params_) {
    m_.push_back(Eigen::ArrayXd::Zero(p->value.size()));
    v_.push_back(Eigen::ArrayXd::Zero(p->value.size()));
  }
}

void Adam::step() {
  ++t_;
  const Scalar bc1 = 1.0 - std::pow(kBeta1, static_cast<Scalar>(t_));
  const Scalar bc2 = 1.0 - std::pow(kBeta2, static_cast<Scalar>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Param* p = params_[i];
    m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * p->grad;
    v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * p->grad.square();
    p->value -= lr_ * (m_[i] / bc1) / ((v_[i] / bc2).sqrt() + kEps);
  }
}

Tensor make_batch(const std::vector<Tensor>& xs, const std::vector<Index>& indices) {
  if (indices.empty()) throw std::invalid_argument("make_batch: empty index list");
  const Shape4 s = xs.at(indices[0]).shape();
  Tensor batch(Shape4{static_cast<Index>(indices.size()), s.c, s.t, s.f});
  const Index stride = s.c * s.t * s.f;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Tensor& x = xs.at(indices[i]);
    if (!(x.shape() == s)) throw std::invalid_argument("make_batch: mixed sample shapes");
    std::copy(x.data(), x.data() + stride, batch.data() + static_cast<Index>(i) * stride);
  }
  return batch;
}

namespace {

std::vector<Index> shuffled_indices(Index n, Rng& rng) {
  std::vector<Index> order(n);
  for (Index i = 0; i < n; ++i) order[i] = i;
  for (Index i = n - 1; i > 0; --i) {
    const Index j = static_cast<Index>(rng.index(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  return order;
}

}  // namespace

TrainHistory train_model(Model& model, const Dataset& data, const TrainSpec& spec) {
  if (spec.epochs < 1) throw std::invalid_argument("train_model: epochs must be >= 1");
  if (spec.batch_size < 1) throw std::invalid_argument("train_model: batch_size must be >= 1");
  const Index n = static_cast<Index>(data.train_x.size());
  if (n == 0) throw std::invalid_argument("train_model: empty training set");

  Rng rng(spec.seed);
  Adam opt(model.params(), spec.lr);
  model.set_training(true);

  TrainHistory history;
  for (Index epoch = 1; epoch <= spec.epochs; ++epoch) {
    const std::vector<Index> order = shuffled_indices(n, rng);
    Scalar loss_sum = 0.0;
    Index batch_count = 0;
    for (Index start = 0; start < n; start += spec.batch_size, ++batch_count) {
      const Index end = std::min(start + spec.batch_size, n);
      std::vector<Index> idx(order.begin() + start, order.begin() + end);
      std::vector<Index> labels(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = data.train_y[idx[i]];

      Tensor logits = model.forward(make_batch(data.train_x, idx));
      Tensor dlogits;
      const Scalar loss = softmax_cross_entropy(logits, labels, &dlogits);
      if (!std::isfinite(loss)) {
        throw std::runtime_error("train_model: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(batch_count));
      }
      loss_sum += loss * static_cast<Scalar>(idx.size());
      model.zero_grad();
      model.backward(dlogits);
      opt.step();
    }
    const Scalar train_loss = loss_sum / static_cast<Scalar>(n);
    const Scalar test_acc =
        evaluate_accuracy(model, data.test_x, data.test_y, spec.batch_size);
    history.rows.push_back({epoch, train_loss, test_acc});
    if (spec.early_stop_loss > 0.0 && train_loss < spec.early_stop_loss) break;
  }
  history.final_test_acc = history.rows.back().test_acc;
  return history;
}

Eigen::MatrixXd model_logits(Model& model, const std::vector<Tensor>& xs, Index batch_size) {
  const Index n = static_cast<Index>(xs.size());
  if (n == 0) throw std::invalid_argument("model_logits: empty sample list");
  model.set_training(false);
  Eigen::MatrixXd out;
  for (Index start = 0; start < n; start += batch_size) {
    const Index end = std::min(start + batch_size, n);
    std::vector<Index> idx(end - start);
    for (Index i = start; i < end; ++i) idx[i - start] = i;
    Tensor logits = model.forward(make_batch(xs, idx));
    const Shape4 s = logits.shape();
    if (out.size() == 0) out.resize(n, s.c);
    for (Index i = 0; i < s.n; ++i) {
      for (Index k = 0; k < s.c; ++k) out(start + i, k) = logits(i, k, 0, 0);
    }
  }
  model.set_training(true);
  return out;
}

Scalar evaluate_accuracy(Model& model, const std::vector<Tensor>& xs,
                         const std::vector<Index>& ys, Index batch_size) {
  if (xs.size() != ys.size()) throw std::invalid_argument("evaluate_accuracy: size mismatch");
  const Eigen::MatrixXd logits = model_logits(model, xs, batch_size);
  Index correct = 0;
  for (Index i = 0; i < logits.rows(); ++i) {
    Index arg = 0;
    for (Index k = 1; k < logits.cols(); ++k) {
      if (logits(i, k) > logits(i, arg)) arg = k;
    }
    if (arg == ys[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<Scalar>(correct) / static_cast<Scalar>(logits.rows());
}

Scalar max_paired_logit_gap(Model& model, const Dataset& data, Index batch_size) {
  const Eigen::MatrixXd logits = model_logits(model, data.test_x, batch_size);
  if (logits.rows() % 2 != 0) {
    throw std::invalid_argument("max_paired_logit_gap: test split is not paired");
  }
  Scalar worst = 0.0;
  for (Index i = 0; i + 1 < logits.rows(); i += 2) {
    worst = std::max(worst, (logits.row(i) - logits.row(i + 1)).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace facnet
