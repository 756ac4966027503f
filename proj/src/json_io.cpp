#include "facnet/json_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace facnet {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::string& where) {
  if (!obj.is_object()) throw std::invalid_argument(where + ": expected a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      throw std::invalid_argument(where + ": unknown field '" + key + "'");
    }
  }
}

const json& get_field(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw std::invalid_argument(where + ": missing field '" + key + "'");
  return obj.at(key);
}

Index get_count(const json& obj, const std::string& key, const std::string& where) {
  const json& v = get_field(obj, key, where);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw std::invalid_argument(where + "." + key + ": expected a non-negative integer");
  }
  return v.get<Index>();
}

PadMode parse_pad(const std::string& s, const std::string& where) {
  if (s == "zero") return PadMode::kZero;
  if (s == "circular_frequency") return PadMode::kCircularFrequency;
  throw std::invalid_argument(where + ": padding_mode must be 'zero' or 'circular_frequency'");
}

LayerKind parse_layer_kind(const std::string& s, const std::string& where) {
  if (s == "vanilla") return LayerKind::kVanilla;
  if (s == "fac") return LayerKind::kFac;
  if (s == "fdy") return LayerKind::kFdy;
  if (s == "faconcat") return LayerKind::kFaConcat;
  throw std::invalid_argument(where + ": layer_kind must be vanilla|fac|fdy|faconcat");
}

Activation parse_activation(const std::string& s, const std::string& where) {
  if (s == "relu") return Activation::kRelu;
  if (s == "context_gating") return Activation::kContextGating;
  throw std::invalid_argument(where + ": activation must be relu|context_gating");
}

FacMode parse_fac_mode(const std::string& s, const std::string& where) {
  if (s == "fixed") return FacMode::kFixed;
  if (s == "adapt") return FacMode::kAdapt;
  if (s == "adapt_dep") return FacMode::kAdaptDep;
  throw std::invalid_argument(where + ": fac_mode must be fixed|adapt|adapt_dep");
}

PoolSpec parse_pool(const json& obj, const std::string& where) {
  require_keys(obj, {"kind", "window"}, where);
  PoolSpec pool;
  const std::string kind = get_field(obj, "kind", where).get<std::string>();
  if (kind == "average") {
    pool.kind = PoolKind::kAvg;
  } else if (kind == "max") {
    pool.kind = PoolKind::kMax;
  } else {
    throw std::invalid_argument(where + ".kind: must be 'average' or 'max'");
  }
  const json& w = get_field(obj, "window", where);
  if (!w.is_array() || w.size() != 2) {
    throw std::invalid_argument(where + ".window: expected [pt, pf]");
  }
  pool.pt = w[0].get<Index>();
  pool.pf = w[1].get<Index>();
  return pool;
}

BlockConfig parse_block(const json& obj, std::size_t index) {
  const std::string where = "blocks[" + std::to_string(index) + "]";
  require_keys(obj,
               {"layer_kind", "out_channels", "kernel", "activation", "batchnorm", "pool",
                "padding_mode", "fac_mode", "fdy_k"},
               where);
  BlockConfig block;
  block.out_channels = get_count(obj, "out_channels", where);
  if (obj.contains("layer_kind")) {
    block.layer_kind = parse_layer_kind(obj["layer_kind"].get<std::string>(), where);
  }
  if (obj.contains("kernel")) {
    const json& k = obj["kernel"];
    if (!k.is_array() || k.size() != 2) {
      throw std::invalid_argument(where + ".kernel: expected [kt, kf]");
    }
    block.kt = k[0].get<Index>();
    block.kf = k[1].get<Index>();
  }
  if (obj.contains("activation")) {
    block.activation = parse_activation(obj["activation"].get<std::string>(), where);
  }
  if (obj.contains("batchnorm")) block.batchnorm = obj["batchnorm"].get<bool>();
  if (obj.contains("pool")) block.pool = parse_pool(obj["pool"], where + ".pool");
  if (obj.contains("padding_mode")) {
    block.padding_mode = parse_pad(obj["padding_mode"].get<std::string>(), where);
  }
  if (obj.contains("fac_mode")) {
    block.fac_mode = parse_fac_mode(obj["fac_mode"].get<std::string>(), where);
  }
  if (obj.contains("fdy_k")) block.fdy_k = get_count(obj, "fdy_k", where);
  return block;
}

}  // namespace

ModelConfig model_config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  require_keys(doc, {"name", "input_shape", "blocks", "head"}, "config");

  ModelConfig config;
  if (doc.contains("name")) config.name = doc["name"].get<std::string>();

  const json& shape = get_field(doc, "input_shape", "config");
  if (!shape.is_array() || shape.size() != 3) {
    throw std::invalid_argument("config.input_shape: expected [C, T, F]");
  }
  config.in_c = shape[0].get<Index>();
  config.in_t = shape[1].get<Index>();
  config.in_f = shape[2].get<Index>();

  const json& blocks = get_field(doc, "blocks", "config");
  if (!blocks.is_array()) throw std::invalid_argument("config.blocks: expected an array");
  config.blocks.clear();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    config.blocks.push_back(parse_block(blocks[i], i));
  }

  const json& head = get_field(doc, "head", "config");
  require_keys(head, {"n_classes", "gru_hidden"}, "head");
  config.head.n_classes = get_count(head, "n_classes", "head");
  if (head.contains("gru_hidden")) config.head.gru_hidden = get_count(head, "gru_hidden", "head");

  walk_dims(config, /*strict=*/false);  // basic dimension sanity
  return config;
}

std::string model_config_to_json(const ModelConfig& config) {
  json doc;
  doc["name"] = config.name;
  doc["input_shape"] = {config.in_c, config.in_t, config.in_f};
  doc["blocks"] = json::array();
  for (const BlockConfig& b : config.blocks) {
    json block;
    block["layer_kind"] = layer_kind_name(b.layer_kind);
    block["out_channels"] = b.out_channels;
    block["kernel"] = {b.kt, b.kf};
    block["activation"] = activation_name(b.activation);
    block["batchnorm"] = b.batchnorm;
    block["pool"] = {{"kind", b.pool.kind == PoolKind::kAvg ? "average" : "max"},
                     {"window", {b.pool.pt, b.pool.pf}}};
    block["padding_mode"] = b.padding_mode == PadMode::kZero ? "zero" : "circular_frequency";
    block["fac_mode"] = fac_mode_name(b.fac_mode);
    block["fdy_k"] = b.fdy_k;
    doc["blocks"].push_back(block);
  }
  doc["head"] = {{"n_classes", config.head.n_classes}, {"gru_hidden", config.head.gru_hidden}};
  return doc.dump(2) + "\n";
}

ModelConfig load_model_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("config: cannot open file '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return model_config_from_json(buffer.str());
}

}  // namespace facnet
