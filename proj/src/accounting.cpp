#include "facnet/accounting.hpp"

#include <numeric>
#include <sstream>

namespace facnet {

namespace {

constexpr const char* kConvention =
    "trainable parameters only; 1 MAC = 2 flops; non-MAC elementwise ops counted as 1 flop, "
    "sigmoid as 4";

long long conv_params(Index cin, Index cout, Index kt, Index kf, bool bias) {
  return static_cast<long long>(kt) * kf * cin * cout + (bias ? cout : 0);
}

// Attention net of the fdy layer: two 1x3 convs over frequency with a
// bottleneck of C+1 channels, softmax over K.
long long fdy_attn_params(Index cin, Index k) {
  const Index h = cin + 1;
  return (3 * cin * h + h) + (3 * h * k + k);
}

struct FlopAcc {
  long long macs = 0;
  long long adds = 0;  // non-MAC flops
  long long flops() const { return 2 * macs + adds; }
};

}  // namespace

long long CountReport::total_params() const {
  return std::accumulate(rows.begin(), rows.end(), 0LL,
                         [](long long a, const CountRow& r) { return a + r.params; });
}

long long CountReport::total_macs() const {
  return std::accumulate(rows.begin(), rows.end(), 0LL,
                         [](long long a, const CountRow& r) { return a + r.macs; });
}

long long CountReport::total_flops() const {
  return std::accumulate(rows.begin(), rows.end(), 0LL,
                         [](long long a, const CountRow& r) { return a + r.flops; });
}

std::string CountReport::to_csv() const {
  std::ostringstream os;
  os << "# convention: " << convention << "\n";
  os << "layer,name,params,flops\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    os << i << "," << rows[i].name << "," << rows[i].params << "," << rows[i].flops << "\n";
  }
  os << rows.size() << ",total," << total_params() << "," << total_flops() << "\n";
  return os.str();
}

CountReport count_params(const ModelConfig& config) {
  const DimWalk walk = walk_dims(config, /*strict=*/false);
  CountReport report;
  report.convention = kConvention;

  for (std::size_t b = 0; b < config.blocks.size(); ++b) {
    const BlockConfig& block = config.blocks[b];
    const Dims3 in = walk.block_inputs[b];
    const std::string prefix = "block" + std::to_string(b + 1) + ".";
    const long long vanilla = conv_params(in.c, block.out_channels, block.kt, block.kf, true);

    CountRow conv;
    switch (block.layer_kind) {
      case LayerKind::kVanilla:
        conv = {prefix + "conv", vanilla, 0, 0};
        break;
      case LayerKind::kFac: {
        long long extra = in.f;  // the encoding vector
        if (block.fac_mode != FacMode::kFixed) extra += in.f + 1;  // attention map + bias
        conv = {prefix + "fac_conv", vanilla + extra, 0, 0};
        break;
      }
      case LayerKind::kFdy:
        conv = {prefix + "fdy_conv", block.fdy_k * vanilla + fdy_attn_params(in.c, block.fdy_k),
                0, 0};
        break;
      case LayerKind::kFaConcat:
        conv = {prefix + "faconcat_conv",
                conv_params(in.c + 1, block.out_channels, block.kt, block.kf, true), 0, 0};
        break;
    }
    report.rows.push_back(conv);
    if (block.batchnorm) {
      report.rows.push_back({prefix + "batchnorm", 2 * block.out_channels, 0, 0});
    }
    if (block.activation == Activation::kContextGating) {
      report.rows.push_back({prefix + "context_gating",
                             static_cast<long long>(block.out_channels) * block.out_channels +
                                 block.out_channels,
                             0, 0});
    } else {
      report.rows.push_back({prefix + "relu", 0, 0, 0});
    }
    if (block.pool.pt > 1 || block.pool.pf > 1) {
      report.rows.push_back({prefix + "pool", 0, 0, 0});
    }
  }

  const Index last_c = config.blocks.empty() ? config.in_c : config.blocks.back().out_channels;
  if (config.head.gru_hidden > 0) {
    const long long h = config.head.gru_hidden;
    report.rows.push_back({"head.gru", 2 * 3 * (last_c * h + h * h + 2 * h), 0, 0});
  }
  report.rows.push_back({"head.global_avg_pool", 0, 0, 0});
  report.rows.push_back(
      {"head.linear", static_cast<long long>(last_c) * config.head.n_classes + config.head.n_classes,
       0, 0});
  return report;
}

CountReport count_flops(const ModelConfig& config, Shape4 input) {
  ModelConfig cfg = config;
  cfg.in_c = input.c;
  cfg.in_t = input.t;
  cfg.in_f = input.f;
  const DimWalk walk = walk_dims(cfg, /*strict=*/false);
  const long long N = input.n;

  CountReport report = count_params(cfg);
  std::size_t row = 0;
  auto fill = [&](long long macs, long long adds) {
    report.rows[row].macs = N * macs;
    report.rows[row].flops = N * (2 * macs + adds);
    ++row;
  };

  for (std::size_t b = 0; b < cfg.blocks.size(); ++b) {
    const BlockConfig& block = cfg.blocks[b];
    const Dims3 in = walk.block_inputs[b];
    const long long tf = static_cast<long long>(in.t) * in.f;
    const long long conv_macs =
        static_cast<long long>(block.kt) * block.kf * in.c * block.out_channels * tf;

    switch (block.layer_kind) {
      case LayerKind::kVanilla:
        fill(conv_macs, 0);
        break;
      case LayerKind::kFac: {
        if (block.fac_mode == FacMode::kFixed) {
          // alpha == 1: injection is a pure add.
          fill(conv_macs, in.c * tf);
        } else {
          // scale+add (1 MAC per element), time pooling (adds), attention
          // linear (C*F MACs).
          fill(conv_macs + in.c * tf + in.c * in.f, in.c * tf);
        }
        break;
      }
      case LayerKind::kFdy: {
        const Index h = in.c + 1;
        const long long attn_macs = 3LL * in.c * h * in.f + 3LL * h * block.fdy_k * in.f;
        const long long mix_macs = static_cast<long long>(block.fdy_k) * block.out_channels * tf;
        const long long softmax_adds = 3LL * block.fdy_k * in.f;
        fill(block.fdy_k * conv_macs + attn_macs + mix_macs, in.c * tf + softmax_adds);
        break;
      }
      case LayerKind::kFaConcat:
        fill(static_cast<long long>(block.kt) * block.kf * (in.c + 1) * block.out_channels * tf,
             0);
        break;
    }
    const long long out_tf = tf;  // conv keeps spatial dims
    if (block.batchnorm) fill(block.out_channels * out_tf, 0);
    if (block.activation == Activation::kContextGating) {
      fill(static_cast<long long>(block.out_channels) * block.out_channels * out_tf,
           5LL * block.out_channels * out_tf);
    } else {
      fill(0, block.out_channels * out_tf);
    }
    if (block.pool.pt > 1 || block.pool.pf > 1) fill(0, block.out_channels * out_tf);
  }

  const Index last_c = cfg.blocks.empty() ? cfg.in_c : cfg.blocks.back().out_channels;
  if (cfg.head.gru_hidden > 0) {
    const long long h = cfg.head.gru_hidden;
    fill(2LL * 3 * (last_c * h + h * h) * walk.final_dims.t, 0);
  }
  fill(0, static_cast<long long>(last_c) * walk.final_dims.t * walk.final_dims.f);
  fill(static_cast<long long>(last_c) * cfg.head.n_classes, 0);
  return report;
}

long long param_overhead(const ModelConfig& config) {
  return count_params(config).total_params() -
         count_params(set_all_kind(config, LayerKind::kVanilla)).total_params();
}

long long flop_overhead(const ModelConfig& config, Shape4 input) {
  return count_flops(config, input).total_flops() -
         count_flops(set_all_kind(config, LayerKind::kVanilla), input).total_flops();
}

}  // namespace facnet
