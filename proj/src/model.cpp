#include "facnet/model.hpp"

#include <stdexcept>

namespace facnet {

std::string layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kVanilla:
      return "vanilla";
    case LayerKind::kFac:
      return "fac";
    case LayerKind::kFdy:
      return "fdy";
    case LayerKind::kFaConcat:
      return "faconcat";
  }
  throw std::logic_error("layer_kind_name: unreachable");
}

std::string activation_name(Activation a) {
  return a == Activation::kRelu ? "relu" : "context_gating";
}

DimWalk walk_dims(const ModelConfig& config, bool strict) {
  DimWalk walk;
  Dims3 dims{config.in_c, config.in_t, config.in_f};
  if (dims.c < 1 || dims.t < 1 || dims.f < 1) {
    throw std::invalid_argument("walk_dims: input dimensions must be >= 1");
  }
  for (std::size_t b = 0; b < config.blocks.size(); ++b) {
    const BlockConfig& block = config.blocks[b];
    walk.block_inputs.push_back(dims);
    dims.c = block.out_channels;
    if (strict && (dims.t % block.pool.pt != 0 || dims.f % block.pool.pf != 0)) {
      throw std::invalid_argument("block " + std::to_string(b + 1) + ": dims (" +
                                  std::to_string(dims.t) + ", " + std::to_string(dims.f) +
                                  ") not divisible by pool window (" +
                                  std::to_string(block.pool.pt) + ", " +
                                  std::to_string(block.pool.pf) + ")");
    }
    dims.t /= block.pool.pt;
    dims.f /= block.pool.pf;
    if (dims.t < 1 || dims.f < 1) {
      throw std::invalid_argument("block " + std::to_string(b + 1) +
                                  ": pooling exhausts a dimension");
    }
  }
  walk.final_dims = dims;
  return walk;
}

Model build_model(const ModelConfig& config, Rng& rng) {
  const DimWalk walk = walk_dims(config, /*strict=*/true);
  Model model;
  model.config_ = config;

  for (std::size_t b = 0; b < config.blocks.size(); ++b) {
    const BlockConfig& block = config.blocks[b];
    const Dims3 in = walk.block_inputs[b];
    ConvSpec conv{in.c, block.out_channels, block.kt, block.kf, block.padding_mode, true};
    switch (block.layer_kind) {
      case LayerKind::kVanilla:
        model.layers_.push_back(std::make_unique<Conv2d>(conv, rng));
        break;
      case LayerKind::kFac:
        model.fac_positions_.emplace_back(static_cast<Index>(b + 1), model.layers_.size());
        model.layers_.push_back(std::make_unique<FacConv>(conv, in.f, block.fac_mode, rng));
        break;
      case LayerKind::kFdy:
        model.layers_.push_back(std::make_unique<FdyConv>(conv, in.f, block.fdy_k, rng));
        break;
      case LayerKind::kFaConcat:
        model.layers_.push_back(std::make_unique<FaConcatConv>(conv, in.f, rng));
        break;
    }
    if (block.batchnorm) {
      model.layers_.push_back(std::make_unique<BatchNorm>(block.out_channels));
    }
    if (block.activation == Activation::kRelu) {
      model.layers_.push_back(std::make_unique<Relu>());
    } else {
      model.layers_.push_back(std::make_unique<ContextGating>(block.out_channels, rng));
    }
    if (block.pool.pt > 1 || block.pool.pf > 1) {
      model.layers_.push_back(std::make_unique<Pool2d>(block.pool));
    }
  }

  model.head_start_ = model.layers_.size();
  model.layers_.push_back(std::make_unique<GlobalAvgPool>());
  const Index last_c = config.blocks.empty() ? config.in_c : config.blocks.back().out_channels;
  model.layers_.push_back(std::make_unique<Linear>(last_c, config.head.n_classes, rng));
  return model;
}

Tensor Model::forward(const Tensor& x) {
  Tensor h = x;
  for (auto& layer : layers_) h = layer->forward(h);
  return h;
}

Tensor Model::forward_blocks(const Tensor& x) {
  Tensor h = x;
  for (std::size_t i = 0; i < head_start_; ++i) h = layers_[i]->forward(h);
  return h;
}

Tensor Model::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

std::vector<Param*> Model::params() {
  std::vector<Param*> out;
  for (auto& layer : layers_) {
    for (Param* p : layer->params()) out.push_back(p);
  }
  return out;
}

void Model::zero_grad() {
  for (auto& layer : layers_) layer->zero_grad();
}

void Model::set_training(bool training) {
  for (auto& layer : layers_) layer->set_training(training);
}

Shape4 Model::output_shape(Shape4 in) const {
  for (const auto& layer : layers_) in = layer->output_shape(in);
  return in;
}

std::vector<std::pair<Index, FacConv*>> Model::fac_layers() {
  std::vector<std::pair<Index, FacConv*>> out;
  for (const auto& [block, idx] : fac_positions_) {
    out.emplace_back(block, static_cast<FacConv*>(layers_[idx].get()));
  }
  return out;
}

ModelConfig set_n_fac(ModelConfig config, Index n) {
  if (n < 0 || n > static_cast<Index>(config.blocks.size())) {
    throw std::invalid_argument("set_n_fac: n must be in [0, " +
                                std::to_string(config.blocks.size()) + "], got " +
                                std::to_string(n));
  }
  for (Index b = 0; b < static_cast<Index>(config.blocks.size()); ++b) {
    config.blocks[b].layer_kind = b < n ? LayerKind::kFac : LayerKind::kVanilla;
  }
  return config;
}

ModelConfig set_all_kind(ModelConfig config, LayerKind kind) {
  for (BlockConfig& b : config.blocks) b.layer_kind = kind;
  return config;
}

ModelConfig set_fac_mode(ModelConfig config, FacMode mode) {
  for (BlockConfig& b : config.blocks) b.fac_mode = mode;
  return config;
}

std::vector<EncodingRow> export_encodings(Model& model) {
  auto fac = model.fac_layers();
  if (fac.empty()) {
    throw std::invalid_argument("export_encodings: model has no FAC blocks");
  }
  std::vector<EncodingRow> rows;
  for (auto& [block, layer] : fac) {
    rows.push_back({block, layer->in_f(), layer->p_freq().value});
  }
  return rows;
}

ModelConfig preset_fig1_probe(PadMode pad) {
  ModelConfig config;
  config.name = "fig1-probe";
  config.in_c = 1;
  config.in_t = 8;
  config.in_f = 64;
  for (int b = 0; b < 4; ++b) {
    BlockConfig block;
    block.out_channels = 1;
    block.batchnorm = false;
    block.pool = PoolSpec{PoolKind::kAvg, 1, 2};
    block.padding_mode = pad;
    config.blocks.push_back(block);
  }
  config.head.n_classes = 2;
  return config;
}

ModelConfig preset_crnn_conv() {
  ModelConfig config;
  config.name = "crnn-conv";
  config.in_c = 1;
  config.in_t = 624;
  config.in_f = 128;
  const Index channels[] = {32, 64, 128, 256, 256, 256, 256};
  const Index pool_t[] = {2, 2, 1, 1, 1, 1, 1};
  for (int b = 0; b < 7; ++b) {
    BlockConfig block;
    block.out_channels = channels[b];
    block.activation = Activation::kContextGating;
    block.batchnorm = true;
    block.pool = PoolSpec{PoolKind::kAvg, pool_t[b], 2};
    config.blocks.push_back(block);
  }
  config.head.n_classes = 10;
  config.head.gru_hidden = 256;
  return config;
}

ModelConfig preset_crnn_lite() {
  ModelConfig config;
  config.name = "crnn-lite";
  config.in_c = 1;
  config.in_t = 8;
  config.in_f = 64;
  const Index channels[] = {4, 8, 16, 16};
  for (int b = 0; b < 4; ++b) {
    BlockConfig block;
    block.out_channels = channels[b];
    block.batchnorm = true;
    block.pool = PoolSpec{PoolKind::kAvg, 1, 2};
    block.padding_mode = PadMode::kCircularFrequency;
    config.blocks.push_back(block);
  }
  config.head.n_classes = 2;
  return config;
}

ModelConfig preset(const std::string& name) {
  if (name == "fig1-probe") return preset_fig1_probe(PadMode::kZero);
  if (name == "crnn-conv") return preset_crnn_conv();
  if (name == "crnn-lite") return preset_crnn_lite();
  throw std::invalid_argument("unknown preset '" + name +
                              "' (valid: fig1-probe, crnn-conv, crnn-lite)");
}

}  // namespace facnet
