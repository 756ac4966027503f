#pragma once

#include <vector>

#include "facnet/rng.hpp"
#include "facnet/tensor.hpp"

namespace facnet {

/// Two-class spectrogram task whose classes differ only by a circular
/// frequency shift: class 1 samples are exact circular shifts (by
/// center1 − center0) of class 0 samples, noise included. When the shift is a
/// multiple of a network's cumulative frequency-pooling factor, a
/// circularly-padded vanilla network provably cannot tell the classes apart.
struct SynthSpec {
  Index t = 8;
  Index f = 64;
  Index center0 = 16;  // class-0 line center bin
  Index center1 = 48;  // class-1 line center bin
  Index width = 3;     // line width in bins, odd
  std::vector<Index> jitter = {0};  // per-pair circular shift, drawn uniformly
  Scalar amp_lo = 1.0;  // per-pair multiplicative amplitude ~ U[amp_lo, amp_hi]
  Scalar amp_hi = 1.0;
  Scalar noise_std = 0.05;
  Index n_train = 128;  // even: generated as class-0/class-1 pairs
  Index n_test = 64;    // even
  std::uint64_t seed = 42;
};

/// Samples are (1, 1, T, F) tensors; labels 0/1. Index 2i is the class-0
/// member of pair i and index 2i+1 its shifted class-1 twin, in both splits.
struct Dataset {
  std::vector<Tensor> train_x;
  std::vector<Index> train_y;
  std::vector<Tensor> test_x;
  std::vector<Index> test_y;
  Index pair_shift = 0;  // the circular shift relating twins
};

/// Deterministic in spec.seed. Throws if the class-0 line (center + jitter
/// ± width/2) leaves [0, F) or the sample counts are odd.
Dataset gen_synth(const SynthSpec& spec);

}  // namespace facnet
