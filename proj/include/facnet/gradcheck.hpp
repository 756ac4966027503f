#pragma once

#include <string>
#include <utility>
#include <vector>

#include "facnet/layer.hpp"
#include "facnet/rng.hpp"

namespace facnet {

struct GradCheckReport {
  double step = 1e-5;
  double tolerance = 1e-4;
  double max_input_err = 0.0;
  std::vector<std::pair<std::string, double>> param_errs;  // per-param max rel. error
  double max_err = 0.0;                                    // max over input + params
  bool pass = false;
};

/// Central-difference check of layer.backward against the loss
/// L(x) = sum(cotangent ⊙ layer.forward(x)) with a random cotangent drawn
/// from rng. Relative error is |a−n| / max(|a|, |n|, 1e-8), elementwise max.
/// Throws on non-finite values, naming the layer.
GradCheckReport grad_check(Layer& layer, const Tensor& input, double step, double tolerance,
                           Rng& rng);

inline GradCheckReport grad_check(Layer& layer, const Tensor& input, Rng& rng) {
  return grad_check(layer, input, 1e-5, 1e-4, rng);
}

struct GradCheckEntry {
  std::string name;
  GradCheckReport report;
};

/// Checks every layer kind in the library over at least three random shapes
/// each. include_corrupt adds a deliberately broken backward as a negative
/// control (its entry must fail, and counts as a suite failure).
std::vector<GradCheckEntry> run_gradcheck_suite(std::uint64_t seed, bool include_corrupt);

bool suite_passes(const std::vector<GradCheckEntry>& entries);

}  // namespace facnet
