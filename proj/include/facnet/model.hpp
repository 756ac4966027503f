#pragma once

#include <memory>
#include <string>
#include <vector>

#include "facnet/freq_layers.hpp"
#include "facnet/layers.hpp"

namespace facnet {

enum class LayerKind { kVanilla, kFac, kFdy, kFaConcat };
enum class Activation { kRelu, kContextGating };

std::string layer_kind_name(LayerKind kind);
std::string activation_name(Activation a);

struct BlockConfig {
  LayerKind layer_kind = LayerKind::kVanilla;
  Index out_channels = 1;
  Index kt = 3, kf = 3;
  Activation activation = Activation::kRelu;
  bool batchnorm = true;
  PoolSpec pool{PoolKind::kAvg, 1, 1};
  PadMode padding_mode = PadMode::kZero;
  FacMode fac_mode = FacMode::kAdaptDep;  // used when layer_kind == fac
  Index fdy_k = 4;                        // used when layer_kind == fdy
};

struct HeadConfig {
  Index n_classes = 2;
  Index gru_hidden = 0;  // counted by the accounting module, never executed
};

struct ModelConfig {
  std::string name = "custom";
  Index in_c = 1, in_t = 8, in_f = 64;
  std::vector<BlockConfig> blocks;
  HeadConfig head;
};

struct Dims3 {
  Index c = 1, t = 1, f = 1;
};

struct DimWalk {
  std::vector<Dims3> block_inputs;  // per block, before its conv
  Dims3 final_dims;                 // after the last block's pool
};

/// Per-block input dimensions for the config. strict mode throws (naming the
/// offending block, 1-based) when a pooling window does not divide its input;
/// otherwise division floors, which only the static flop accounting uses.
DimWalk walk_dims(const ModelConfig& config, bool strict);

class Model {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);

  /// Runs only the convolutional blocks: the feature map before the head.
  Tensor forward_blocks(const Tensor& x);

  std::vector<Param*> params();
  void zero_grad();
  void set_training(bool training);

  const ModelConfig& config() const { return config_; }
  Shape4 output_shape(Shape4 in) const;

  /// FAC layers in block order, with their 1-based block indices.
  std::vector<std::pair<Index, FacConv*>> fac_layers();

 private:
  friend Model build_model(const ModelConfig& config, Rng& rng);

  ModelConfig config_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::size_t head_start_ = 0;
  std::vector<std::pair<Index, std::size_t>> fac_positions_;  // (block, layer index)
};

/// Deterministic for a fixed config + rng seed: parameters are drawn in layer
/// order. Throws on divisibility violations, naming the block.
Model build_model(const ModelConfig& config, Rng& rng);

/// First n blocks become fac, the rest vanilla. n must be in [0, blocks].
ModelConfig set_n_fac(ModelConfig config, Index n);

/// All blocks become the given kind (used for fdy/faconcat variants).
ModelConfig set_all_kind(ModelConfig config, LayerKind kind);

ModelConfig set_fac_mode(ModelConfig config, FacMode mode);

struct EncodingRow {
  Index block;  // 1-based
  Index f_bins;
  Eigen::ArrayXd values;
};

/// One row per FAC block; throws if the model has none.
std::vector<EncodingRow> export_encodings(Model& model);

/// Named presets: "fig1-probe", "crnn-conv", "crnn-lite". Throws on unknown
/// names listing the valid ones.
ModelConfig preset(const std::string& name);

ModelConfig preset_fig1_probe(PadMode pad);
ModelConfig preset_crnn_conv();
ModelConfig preset_crnn_lite();

}  // namespace facnet
