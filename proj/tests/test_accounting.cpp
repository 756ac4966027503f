#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <sstream>
#include <string>

#include "doctest.h"
#include "facnet/accounting.hpp"
#include "facnet/json_io.hpp"

using namespace facnet;

namespace {

ModelConfig one_block(Index in_c, Index out_c, Index kt, Index kf) {
  ModelConfig config;
  config.name = "one-block";
  config.in_c = in_c;
  config.in_t = 4;
  config.in_f = 8;
  BlockConfig block;
  block.out_channels = out_c;
  block.kt = kt;
  block.kf = kf;
  block.batchnorm = false;
  config.blocks.push_back(block);
  config.head.n_classes = 2;
  return config;
}

}  // namespace

TEST_CASE("a 3x3 conv from 2 to 4 channels holds 76 parameters") {
  ModelConfig config = one_block(2, 4, 3, 3);
  CountReport report = count_params(config);
  // 4*2*3*3 weights + 4 biases = 76 in the conv row.
  bool found = false;
  for (const CountRow& row : report.rows) {
    if (row.name.find("conv") != std::string::npos) {
      CHECK(row.params == 76);
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("crnn-conv FAC overhead: 515 at n=7 and the exact prefix ladder") {
  ModelConfig base = preset_crnn_conv();
  CHECK(param_overhead(set_n_fac(base, 0)) == 0);
  CHECK(param_overhead(set_n_fac(base, 1)) == 257);  // 2*128+1
  const long long want[] = {0, 257, 386, 451, 484, 501, 510, 515};
  for (Index n = 0; n <= 7; ++n) {
    CHECK(param_overhead(set_n_fac(base, n)) == want[n]);
  }
  CHECK(param_overhead(set_n_fac(base, 7)) == 515);
}

TEST_CASE("the overhead ladder matches the closed form sum of 2F_b + 1") {
  ModelConfig base = preset_crnn_conv();
  DimWalk walk = walk_dims(base, true);
  long long acc = 0;
  for (Index n = 1; n <= 7; ++n) {
    acc += 2 * walk.block_inputs[n - 1].f + 1;
    CHECK(param_overhead(set_n_fac(base, n)) == acc);
  }
}

TEST_CASE("fixed-mode FAC overhead drops to the bare encodings") {
  ModelConfig config = set_fac_mode(set_n_fac(preset_crnn_conv(), 7), FacMode::kFixed);
  DimWalk walk = walk_dims(config, true);
  long long sum_f = 0;
  for (const Dims3& d : walk.block_inputs) sum_f += d.f;
  CHECK(param_overhead(config) == sum_f);
}

TEST_CASE("FDY overhead is affine in K and lands near the published budget") {
  ModelConfig base = preset_crnn_conv();
  ModelConfig fdy = set_all_kind(base, LayerKind::kFdy);

  long long at[9] = {};
  for (Index k : {1, 2, 4, 8}) {
    ModelConfig cfg = fdy;
    for (BlockConfig& b : cfg.blocks) b.fdy_k = k;
    at[k] = param_overhead(cfg);
  }
  // Affine in K: equal slope between consecutive doublings.
  CHECK(at[2] - at[1] == (at[4] - at[2]) / 2);
  CHECK(at[4] - at[2] == (at[8] - at[4]) / 2);

  const long long k4 = at[4];
  CHECK(k4 == 7144586);
  const double target = 8.02e6;
  CHECK(std::abs(static_cast<double>(k4) - target) / target < 0.15);
}

TEST_CASE("a 1x1 conv over four bins costs 8 flops") {
  ModelConfig config = one_block(1, 1, 1, 1);
  config.in_t = 1;
  config.in_f = 4;
  CountReport report = count_flops(config, Shape4{1, 1, 1, 4});
  bool found = false;
  for (const CountRow& row : report.rows) {
    if (row.name.find("conv") != std::string::npos) {
      CHECK(row.macs == 4);
      CHECK(row.flops == 8);
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("flops scale linearly in batch and time") {
  ModelConfig config = preset_crnn_lite();
  const long long base = count_flops(config, Shape4{1, 1, 8, 64}).total_flops();
  CHECK(count_flops(config, Shape4{3, 1, 8, 64}).total_flops() == 3 * base);

  ModelConfig conv = preset_crnn_conv();
  CountReport r624 = count_flops(conv, Shape4{1, 1, 624, 128});
  CountReport r1248 = count_flops(conv, Shape4{1, 1, 1248, 128});
  // Everything before the classifier scales with clip length; the final
  // linear acts after global pooling and is the one T-independent row.
  long long linear_flops = 0;
  for (const CountRow& row : r624.rows) {
    if (row.name == "head.linear") linear_flops = row.flops;
  }
  CHECK(linear_flops > 0);
  CHECK(r1248.total_flops() == 2 * r624.total_flops() - linear_flops);
}

TEST_CASE("counting is pure: repeat calls agree and the config is untouched") {
  ModelConfig config = set_n_fac(preset_crnn_conv(), 7);
  const std::string before = model_config_to_json(config);
  CountReport a = count_params(config);
  CountReport b = count_params(config);
  CHECK(a.total_params() == b.total_params());
  CHECK(a.to_csv() == b.to_csv());
  CountReport fa = count_flops(config, Shape4{1, 1, 626, 128});
  CountReport fb = count_flops(config, Shape4{1, 1, 626, 128});
  CHECK(fa.total_flops() == fb.total_flops());
  CHECK(model_config_to_json(config) == before);
}

TEST_CASE("FAC flop overhead at the reference input") {
  ModelConfig config = set_n_fac(preset_crnn_conv(), 7);
  const long long overhead = flop_overhead(config, Shape4{1, 1, 626, 128});
  CHECK(overhead == 5777408);
  // Order of magnitude comparable to a 1.92 MFLOP budget: within [0.1, 10]x.
  const double ratio = static_cast<double>(overhead) / 1.92e6;
  CHECK(ratio > 0.1);
  CHECK(ratio < 10.0);
}

TEST_CASE("the GRU is counted exactly once and only when configured") {
  ModelConfig with = preset_crnn_conv();
  CountReport report = count_params(with);
  long long gru = 0;
  int gru_rows = 0;
  for (const CountRow& row : report.rows) {
    if (row.name.find("gru") != std::string::npos) {
      gru += row.params;
      ++gru_rows;
    }
  }
  CHECK(gru_rows == 1);
  CHECK(gru == 789504);

  ModelConfig without = with;
  without.head.gru_hidden = 0;
  for (const CountRow& row : count_params(without).rows) {
    CHECK(row.name.find("gru") == std::string::npos);
  }
  CHECK(count_params(with).total_params() - count_params(without).total_params() == 789504);
}

TEST_CASE("csv report format") {
  ModelConfig config = one_block(1, 2, 3, 3);
  CountReport report = count_flops(config, Shape4{1, 1, 4, 8});
  const std::string csv = report.to_csv();
  std::istringstream in(csv);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line.rfind("# convention:", 0) == 0);
  REQUIRE(std::getline(in, line));
  CHECK(line == "layer,name,params,flops");

  long long params_sum = 0, flops_sum = 0;
  std::string last;
  int data_rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    last = line;
    std::istringstream cells(line);
    std::string layer, name, params, flops;
    REQUIRE(std::getline(cells, layer, ','));
    REQUIRE(std::getline(cells, name, ','));
    REQUIRE(std::getline(cells, params, ','));
    REQUIRE(std::getline(cells, flops, ','));
    if (name != "total") {
      params_sum += std::atoll(params.c_str());
      flops_sum += std::atoll(flops.c_str());
      ++data_rows;
    }
  }
  CHECK(data_rows == static_cast<int>(report.rows.size()));
  // The trailing totals row equals the column sums.
  std::istringstream cells(last);
  std::string layer, name, params, flops;
  std::getline(cells, layer, ',');
  std::getline(cells, name, ',');
  std::getline(cells, params, ',');
  std::getline(cells, flops, ',');
  CHECK(name == "total");
  CHECK(std::atoll(params.c_str()) == params_sum);
  CHECK(std::atoll(flops.c_str()) == flops_sum);
  CHECK(params_sum == report.total_params());
  CHECK(flops_sum == report.total_flops());
}

TEST_CASE("FAConcat overhead at the reference model") {
  ModelConfig config = set_all_kind(preset_crnn_conv(), LayerKind::kFaConcat);
  CHECK(param_overhead(config) == 11232);
}
