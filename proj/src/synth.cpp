#include "facnet/synth.hpp"

#include <stdexcept>

namespace facnet {

namespace {

void validate(const SynthSpec& spec) {
  if (spec.t < 1 || spec.f < 1) throw std::invalid_argument("gen_synth: dims must be >= 1");
  if (spec.width < 1 || spec.width % 2 == 0) {
    throw std::invalid_argument("gen_synth: width must be odd and >= 1");
  }
  if (spec.n_train % 2 != 0 || spec.n_test % 2 != 0 || spec.n_train < 2 || spec.n_test < 2) {
    throw std::invalid_argument("gen_synth: n_train and n_test must be positive and even");
  }
  if (spec.jitter.empty()) throw std::invalid_argument("gen_synth: jitter set must be non-empty");
  if (!(spec.amp_lo <= spec.amp_hi) || spec.amp_lo <= 0.0) {
    throw std::invalid_argument("gen_synth: need 0 < amp_lo <= amp_hi");
  }
  const Index half = spec.width / 2;
  for (Index j : spec.jitter) {
    const Index lo = spec.center0 + j - half;
    const Index hi = spec.center0 + j + half;
    if (lo < 0 || hi >= spec.f) {
      throw std::invalid_argument("gen_synth: pattern out of range (center " +
                                  std::to_string(spec.center0) + ", jitter " + std::to_string(j) +
                                  ", width " + std::to_string(spec.width) + ", F " +
                                  std::to_string(spec.f) + ")");
    }
  }
  if (spec.center1 < 0 || spec.center1 >= spec.f) {
    throw std::invalid_argument("gen_synth: center1 out of range");
  }
}

void gen_pairs(Index n_pairs, const SynthSpec& spec, Rng& rng, std::vector<Tensor>& xs,
               std::vector<Index>& ys) {
  const Index half = spec.width / 2;
  const Index shift = spec.center1 - spec.center0;
  for (Index i = 0; i < n_pairs; ++i) {
    const Scalar amp =
        spec.amp_lo < spec.amp_hi ? rng.uniform(spec.amp_lo, spec.amp_hi) : spec.amp_lo;
    const Index j = spec.jitter[rng.index(spec.jitter.size())];

    Tensor x(Shape4{1, 1, spec.t, spec.f});
    for (Index t = 0; t < spec.t; ++t) {
      for (Index d = -half; d <= half; ++d) x(0, 0, t, spec.center0 + j + d) = amp;
    }
    if (spec.noise_std > 0.0) {
      for (Index k = 0; k < x.size(); ++k) x.array()[k] += spec.noise_std * rng.normal();
    }
    xs.push_back(x);
    ys.push_back(0);
    xs.push_back(shift_frequency(x, shift));
    ys.push_back(1);
  }
}

}  // namespace

Dataset gen_synth(const SynthSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  Dataset data;
  data.pair_shift = spec.center1 - spec.center0;
  gen_pairs(spec.n_train / 2, spec, rng, data.train_x, data.train_y);
  gen_pairs(spec.n_test / 2, spec, rng, data.test_x, data.test_y);
  return data;
}

}  // namespace facnet
