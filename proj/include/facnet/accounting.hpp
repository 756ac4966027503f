#pragma once

#include <string>
#include <vector>

#include "facnet/model.hpp"

namespace facnet {

struct CountRow {
  std::string name;
  long long params = 0;
  long long macs = 0;
  long long flops = 0;
};

struct CountReport {
  std::string convention;
  std::vector<CountRow> rows;

  long long total_params() const;
  long long total_macs() const;
  long long total_flops() const;

  /// "# convention: ..." comment, then layer,name,params,flops rows and a
  /// trailing totals row. The layer column is the row index.
  std::string to_csv() const;
};

/// Static trainable-parameter counts per layer; no tensors are allocated.
/// Batch-norm running statistics are not parameters. The GRU named by
/// head.gru_hidden is counted (bidirectional, 3 gates, 2 bias vectors per
/// gate) even though nothing ever executes it.
CountReport count_params(const ModelConfig& config);

/// Static flop counts at the given input, 1 multiply-accumulate = 2 flops,
/// with per-row MAC counts alongside. Pooling that does not divide evenly
/// floors the dimension — only this walker tolerates that; the builder
/// rejects it.
CountReport count_flops(const ModelConfig& config, Shape4 input);

/// Parameter overhead of config versus the same config with every block
/// vanilla.
long long param_overhead(const ModelConfig& config);

/// Flop overhead of config versus all-vanilla at the given input.
long long flop_overhead(const ModelConfig& config, Shape4 input);

}  // namespace facnet
