#include "facnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "facnet/freq_layers.hpp"
#include "facnet/layers.hpp"

namespace facnet {

namespace {

Scalar rel_err(Scalar analytic, Scalar numeric) {
  const Scalar denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

Scalar weighted_sum(Layer& layer, const Tensor& input, const Tensor& cotangent,
                    const std::string& name) {
  Tensor y = layer.forward(input);
  if (!all_finite(y)) {
    throw std::runtime_error("grad_check: non-finite output in layer " + name);
  }
  return (y.array() * cotangent.array()).sum();
}

}  // namespace

GradCheckReport grad_check(Layer& layer, const Tensor& input, double step, double tolerance,
                           Rng& rng) {
  if (step <= 0.0) throw std::invalid_argument("grad_check: step must be positive");
  const std::string name = layer.kind();
  if (!all_finite(input)) {
    throw std::runtime_error("grad_check: non-finite input for layer " + name);
  }

  Tensor y0 = layer.forward(input);
  if (!all_finite(y0)) {
    throw std::runtime_error("grad_check: non-finite output in layer " + name);
  }
  Tensor cotangent = tensor_rand_uniform(y0.shape(), -1.0, 1.0, rng);

  layer.zero_grad();
  Tensor dx = layer.backward(cotangent);
  if (!all_finite(dx)) {
    throw std::runtime_error("grad_check: non-finite input gradient in layer " + name);
  }
  if (!(dx.shape() == input.shape())) {
    throw std::runtime_error("grad_check: gradient shape mismatch in layer " + name);
  }
  std::vector<std::pair<std::string, Eigen::ArrayXd>> analytic_grads;
  for (Param* p : layer.params()) {
    if (!p->grad.isFinite().all()) {
      throw std::runtime_error("grad_check: non-finite gradient for " + name + "." + p->name);
    }
    analytic_grads.emplace_back(p->name, p->grad);
  }

  GradCheckReport report;
  report.step = step;
  report.tolerance = tolerance;

  Tensor probe = input;
  for (Index i = 0; i < probe.size(); ++i) {
    const Scalar saved = probe.array()[i];
    probe.array()[i] = saved + step;
    const Scalar lp = weighted_sum(layer, probe, cotangent, name);
    probe.array()[i] = saved - step;
    const Scalar lm = weighted_sum(layer, probe, cotangent, name);
    probe.array()[i] = saved;
    const Scalar numeric = (lp - lm) / (2.0 * step);
    report.max_input_err = std::max(report.max_input_err, rel_err(dx.array()[i], numeric));
  }

  auto params = layer.params();
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Param* p = params[pi];
    Scalar worst = 0.0;
    for (Index i = 0; i < p->value.size(); ++i) {
      const Scalar saved = p->value[i];
      p->value[i] = saved + step;
      const Scalar lp = weighted_sum(layer, input, cotangent, name);
      p->value[i] = saved - step;
      const Scalar lm = weighted_sum(layer, input, cotangent, name);
      p->value[i] = saved;
      const Scalar numeric = (lp - lm) / (2.0 * step);
      worst = std::max(worst, rel_err(analytic_grads[pi].second[i], numeric));
    }
    report.param_errs.emplace_back(p->name, worst);
  }

  report.max_err = report.max_input_err;
  for (const auto& [_, e] : report.param_errs) report.max_err = std::max(report.max_err, e);
  report.pass = report.max_err < tolerance;
  return report;
}

namespace {

/// Negative control: ReLU whose backward is scaled by 1.1 — grad_check must
/// flag it.
class CorruptRelu : public Relu {
 public:
  Tensor backward(const Tensor& grad_out) override {
    Tensor dx = Relu::backward(grad_out);
    dx.array() *= 1.1;
    return dx;
  }
  std::string kind() const override { return "corrupt_relu"; }
};

void check(std::vector<GradCheckEntry>& out, const std::string& name, Layer& layer, Shape4 shape,
           Rng& rng, Scalar lo = -1.0, Scalar hi = 1.0) {
  Tensor input = tensor_rand_uniform(shape, lo, hi, rng);
  out.push_back({name, grad_check(layer, input, rng)});
}

}  // namespace

std::vector<GradCheckEntry> run_gradcheck_suite(std::uint64_t seed, bool include_corrupt) {
  Rng rng(seed);
  std::vector<GradCheckEntry> out;

  const Shape4 shapes[] = {{1, 2, 5, 7}, {2, 3, 4, 6}, {1, 1, 3, 9}};
  const Shape4 pool_shapes[] = {{1, 2, 4, 8}, {2, 1, 6, 4}, {1, 3, 2, 8}};

  for (PadMode pad : {PadMode::kZero, PadMode::kCircularFrequency}) {
    const std::string base = pad == PadMode::kZero ? "conv2d_zero" : "conv2d_circular";
    for (const Shape4& s : shapes) {
      Conv2d layer(ConvSpec{s.c, s.c + 1, 3, 3, pad, true}, rng);
      check(out, base, layer, s, rng);
    }
  }

  for (PoolKind kind : {PoolKind::kAvg, PoolKind::kMax}) {
    const std::string base = kind == PoolKind::kAvg ? "pool_avg" : "pool_max";
    const PoolSpec specs[] = {{kind, 1, 2}, {kind, 2, 2}, {kind, 1, 4}};
    for (int i = 0; i < 3; ++i) {
      Pool2d layer(specs[i]);
      check(out, base, layer, pool_shapes[i], rng);
    }
  }

  for (const Shape4& s : shapes) {
    Relu relu;
    check(out, "relu", relu, s, rng);
    Sigmoid sigm;
    check(out, "sigmoid", sigm, s, rng);
    ContextGating cg(s.c, rng);
    check(out, "context_gating", cg, s, rng);
    Linear lin(s.c, s.c + 2, rng);
    check(out, "linear", lin, s, rng);
    BatchNorm bn(s.c);
    check(out, "batchnorm", bn, s, rng);
    GlobalAvgPool gap;
    check(out, "global_avg_pool", gap, s, rng);
  }

  for (Index n : {2, 3, 4}) {
    std::vector<Index> labels(n);
    for (Index i = 0; i < n; ++i) labels[i] = rng.index(3);
    SoftmaxCrossEntropyLoss loss(labels);
    check(out, "softmax_cross_entropy", loss, Shape4{n, 3, 1, 1}, rng);
  }

  for (const Shape4& s : shapes) {
    FaConcatConv fc(ConvSpec{s.c, 2, 3, 3, PadMode::kZero, true}, s.f, rng);
    check(out, "faconcat", fc, s, rng);
  }

  for (Index k : {Index{1}, Index{4}}) {
    for (const Shape4& s : shapes) {
      FdyConv fdy(ConvSpec{s.c, 2, 3, 3, PadMode::kZero, true}, s.f, k, rng);
      check(out, "fdy_k" + std::to_string(k), fdy, s, rng);
    }
  }

  for (FacMode mode : {FacMode::kFixed, FacMode::kAdapt, FacMode::kAdaptDep}) {
    for (const Shape4& s : shapes) {
      FacConv fac(ConvSpec{s.c, 2, 3, 3, PadMode::kCircularFrequency, true}, s.f, mode, rng);
      check(out, "fac_" + fac_mode_name(mode), fac, s, rng);
    }
  }

  if (include_corrupt) {
    CorruptRelu corrupt;
    check(out, "corrupt_relu", corrupt, shapes[0], rng);
  }
  return out;
}

bool suite_passes(const std::vector<GradCheckEntry>& entries) {
  return std::all_of(entries.begin(), entries.end(),
                     [](const GradCheckEntry& e) { return e.report.pass; });
}

}  // namespace facnet
