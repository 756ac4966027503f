#include "facnet/cli.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "facnet/accounting.hpp"
#include "facnet/csv.hpp"
#include "facnet/experiments.hpp"
#include "facnet/gradcheck.hpp"
#include "facnet/json_io.hpp"
#include "facnet/model.hpp"
#include "facnet/synth.hpp"
#include "facnet/train.hpp"

namespace facnet {
namespace {

namespace fs = std::filesystem;

std::uint64_t apply_env_seed(std::uint64_t seed) {
  const char* env = std::getenv("FACNET_SEED");
  if (env == nullptr) return seed;
  const char* end = env + std::strlen(env);
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(env, end, value);
  if (env == end || ec != std::errc{} || ptr != end) {
    throw std::invalid_argument("FACNET_SEED must be an unsigned integer, got '" +
                                std::string(env) + "'");
  }
  return value;
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

PadMode parse_pad(const std::string& s) {
  return s == "zero" ? PadMode::kZero : PadMode::kCircularFrequency;
}

FacMode parse_fac_mode(const std::string& s) {
  if (s == "fixed") return FacMode::kFixed;
  if (s == "adapt") return FacMode::kAdapt;
  return FacMode::kAdaptDep;
}

struct CommonOpts {
  std::uint64_t seed = 42;
  std::string out = "out";
  bool force = false;
};

fs::path out_path(const CommonOpts& common, const std::string& file) {
  fs::create_directories(common.out);
  return fs::path(common.out) / file;
}

/// Preset name or JSON file -> (config, identifier for output file names).
std::pair<ModelConfig, std::string> resolve_model(const std::string& preset_name,
                                                  const std::string& config_path) {
  if (!config_path.empty()) {
    return {load_model_config(config_path), fs::path(config_path).stem().string()};
  }
  return {preset(preset_name), preset_name};
}

/// Default FAC depth when --n-fac is not given: every block for crnn-conv,
/// the benchmark's single block for crnn-lite, none for fig1-probe.
Index default_n_fac(const std::string& preset_name) {
  if (preset_name == "crnn-conv") return 7;
  if (preset_name == "crnn-lite") return 1;
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckOpts {
  std::string config_path;
  bool corrupt = false;
  std::vector<std::string> layers;
};

void load_gradcheck_config(GradcheckOpts& opts) {
  std::ifstream in(opts.config_path);
  if (!in) {
    throw std::invalid_argument("cannot open config file '" + opts.config_path + "'");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config '" + opts.config_path + "': " + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("gradcheck config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "corrupt") {
      if (!value.is_boolean()) throw std::invalid_argument("gradcheck config: corrupt must be a bool");
      opts.corrupt = value.get<bool>();
    } else if (key == "layers") {
      if (!value.is_array()) throw std::invalid_argument("gradcheck config: layers must be an array");
      for (const auto& name : value) {
        if (!name.is_string()) throw std::invalid_argument("gradcheck config: layers must be strings");
        opts.layers.push_back(name.get<std::string>());
      }
    } else {
      throw std::invalid_argument("gradcheck config: unknown field '" + key + "'");
    }
  }
}

int cmd_gradcheck(const CommonOpts& common, GradcheckOpts opts) {
  if (!opts.config_path.empty()) load_gradcheck_config(opts);

  std::vector<GradCheckEntry> entries = run_gradcheck_suite(common.seed, opts.corrupt);
  if (!opts.layers.empty()) {
    std::vector<GradCheckEntry> kept;
    for (const std::string& want : opts.layers) {
      bool found = false;
      for (const GradCheckEntry& e : entries) {
        if (e.name == want) {
          kept.push_back(e);
          found = true;
        }
      }
      if (!found) throw std::invalid_argument("gradcheck config: unknown layer kind '" + want + "'");
    }
    entries = std::move(kept);
  }

  int passed = 0;
  for (const GradCheckEntry& e : entries) {
    passed += e.report.pass ? 1 : 0;
    std::cout << "gradcheck: " << e.name << " max_rel_err=" << fmt4(e.report.max_err) << " "
              << (e.report.pass ? "pass" : "FAIL") << "\n";
  }
  const bool ok = suite_passes(entries);
  std::cout << "gradcheck: " << passed << "/" << entries.size() << " passed (tolerance "
            << fmt4(1e-4) << ", step " << fmt4(1e-5) << ")\n";
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// shift-probe

struct ShiftProbeOpts {
  std::string padding = "circular";
  Index base_bin = 19;
  int index_base = 0;
  std::vector<Index> shifts = {0, 1, 2, 4, 8, 10, 16, 32};
  Scalar epsilon = 1e-9;
};

int cmd_shift_probe(const CommonOpts& common, const ShiftProbeOpts& opts) {
  const Index bin = opts.base_bin - opts.index_base;
  if (bin < 0) {
    throw std::invalid_argument("--base-bin " + std::to_string(opts.base_bin) +
                                " is below index base " + std::to_string(opts.index_base));
  }
  Rng rng(common.seed);
  Model model = build_model(preset_fig1_probe(parse_pad(opts.padding)), rng);
  const ShiftProbeResult result = run_shift_probe(model, bin, opts.shifts, opts.epsilon);

  const fs::path path =
      out_path(common, "shift_probe_" + opts.padding + "_seed" + std::to_string(common.seed) + ".csv");
  write_shift_probe_csv(result, path, common.force);
  std::cout << "shift-probe: padding=" << opts.padding << " base_bin=" << opts.base_bin
            << " tolerated_shift=" << result.tolerated_shift << " -> " << path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOpts {
  std::string model = "fac";
  Index epochs = -1;  // -1: benchmark default
};

int cmd_synth(const CommonOpts& common, const SynthOpts& opts) {
  ModelConfig config = benchmark_model_config();
  if (opts.model == "fac") config = set_n_fac(config, 1);
  const Dataset data = gen_synth(benchmark_synth_spec(common.seed));
  TrainSpec spec = benchmark_train_spec(common.seed);
  if (opts.epochs > 0) spec.epochs = opts.epochs;

  Rng rng(common.seed);
  Model model = build_model(config, rng);
  const TrainHistory history = train_model(model, data, spec);
  const Scalar gap = max_paired_logit_gap(model, data, spec.batch_size);

  const fs::path path =
      out_path(common, "synth_" + opts.model + "_seed" + std::to_string(common.seed) + ".csv");
  write_history_csv(history, path, common.force);
  std::cout << "synth: model=" << opts.model << " epochs=" << history.rows.size()
            << " final_test_acc=" << fmt4(history.final_test_acc)
            << " paired_logit_gap=" << fmt4(gap) << " -> " << path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

int cmd_sweep(const CommonOpts& common, const std::vector<Index>& n_values) {
  const ModelConfig config = benchmark_model_config();
  const Dataset data = gen_synth(benchmark_synth_spec(common.seed));
  const std::vector<SweepRow> rows =
      run_nfac_sweep(config, n_values, data, benchmark_train_spec(common.seed));

  const fs::path path = out_path(common, "sweep_seed" + std::to_string(common.seed) + ".csv");
  write_sweep_csv(rows, path, common.force);
  std::ostringstream line;
  line << "sweep:";
  for (const SweepRow& row : rows) {
    line << " n=" << row.n_fac << " acc=" << fmt4(row.test_acc) << " (+" << row.param_overhead
         << "p)";
  }
  std::cout << line.str() << " -> " << path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// ablation

int cmd_ablation(const CommonOpts& common, Index n_seeds) {
  const ModelConfig config = ablation_model_config();
  const Dataset data = gen_synth(ablation_synth_spec(common.seed));
  TrainSpec spec = ablation_train_spec(common.seed);
  const AblationResult result = run_ablation(config, data, spec, n_seeds);

  const std::string suffix = "_seed" + std::to_string(common.seed) + ".csv";
  const fs::path runs_path = out_path(common, "ablation_runs" + suffix);
  const fs::path summary_path = out_path(common, "ablation_summary" + suffix);
  write_ablation_csvs(result, runs_path, summary_path, common.force);

  std::ostringstream line;
  line << "ablation:";
  for (const AblationSummary& s : result.summary) {
    line << " " << fac_mode_name(s.mode) << "=" << fmt4(s.mean_acc) << "(" << fmt4(s.std_acc)
         << ")";
  }
  std::cout << line.str() << " -> " << summary_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// count

struct CountOpts {
  std::string preset_name = "crnn-conv";
  std::string config_path;
  std::string layer = "fac";
  Index n_fac = -1;
  std::optional<FacMode> fac_mode;
  Index fdy_k = 4;
  std::vector<long long> input_dims;
};

const char* layer_label(const std::string& layer) {
  if (layer == "fac") return "FAC";
  if (layer == "fdy") return "FDY";
  if (layer == "faconcat") return "FAConcat";
  return "vanilla";
}

int cmd_count(const CommonOpts& common, const CountOpts& opts) {
  auto [config, id] = resolve_model(opts.preset_name, opts.config_path);

  if (opts.layer == "vanilla") {
    config = set_all_kind(std::move(config), LayerKind::kVanilla);
  } else if (opts.layer == "fdy") {
    config = set_all_kind(std::move(config), LayerKind::kFdy);
    for (BlockConfig& b : config.blocks) b.fdy_k = opts.fdy_k;
  } else if (opts.layer == "faconcat") {
    config = set_all_kind(std::move(config), LayerKind::kFaConcat);
  } else {
    Index n = opts.n_fac;
    if (n < 0) n = opts.config_path.empty() ? default_n_fac(opts.preset_name) : -1;
    if (n >= 0) config = set_n_fac(std::move(config), n);
    if (opts.fac_mode) config = set_fac_mode(std::move(config), *opts.fac_mode);
  }

  Shape4 input{1, config.in_c, config.in_t, config.in_f};
  if (!opts.input_dims.empty()) {
    if (opts.input_dims.size() != 4 ||
        std::any_of(opts.input_dims.begin(), opts.input_dims.end(),
                    [](long long d) { return d <= 0; })) {
      throw std::invalid_argument("--input expects four positive values N,C,T,F");
    }
    input = Shape4{opts.input_dims[0], opts.input_dims[1], opts.input_dims[2],
                   opts.input_dims[3]};
  } else if (opts.config_path.empty() && opts.preset_name == "crnn-conv") {
    input = Shape4{1, 1, 626, 128};
  }

  const CountReport report = count_flops(config, input);
  const fs::path path = out_path(common, "count_" + id + "_" + opts.layer + "_seed" +
                                             std::to_string(common.seed) + ".csv");
  write_count_csv(report.to_csv(), path, common.force);

  std::cout << "count: " << id << " layer=" << opts.layer;
  if (opts.layer == "fac") {
    Index n_fac_blocks = 0;
    for (const BlockConfig& b : config.blocks) n_fac_blocks += b.layer_kind == LayerKind::kFac;
    std::cout << " mode=" << fac_mode_name(config.blocks.empty() ? FacMode::kAdaptDep
                                                                 : config.blocks.front().fac_mode)
              << " n_fac=" << n_fac_blocks;
  } else if (opts.layer == "fdy") {
    std::cout << " K=" << opts.fdy_k;
  }
  std::cout << " input=" << input.str() << "\n";
  std::cout << "total params: " << report.total_params() << "\n";
  std::cout << "total flops: " << report.total_flops() << " (" << report.total_macs()
            << " MACs)\n";
  std::cout << layer_label(opts.layer) << " overhead: " << param_overhead(config) << " params\n";
  std::cout << layer_label(opts.layer) << " flop overhead: " << flop_overhead(config, input)
            << " flops\n";
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// export-encodings

struct ExportOpts {
  std::string preset_name = "crnn-lite";
  std::string config_path;
  Index n_fac = -1;
};

int cmd_export_encodings(const CommonOpts& common, const ExportOpts& opts) {
  auto [config, id] = resolve_model(opts.preset_name, opts.config_path);
  Index n = opts.n_fac;
  if (n < 0 && opts.config_path.empty()) n = default_n_fac(opts.preset_name);
  if (n >= 0) config = set_n_fac(std::move(config), n);

  Rng rng(common.seed);
  Model model = build_model(config, rng);
  const std::vector<EncodingRow> rows = export_encodings(model);

  const fs::path path =
      out_path(common, "encodings_" + id + "_seed" + std::to_string(common.seed) + ".csv");
  write_encodings_csv(rows, path, common.force);
  std::cout << "export-encodings: " << rows.size() << " FAC block(s) -> " << path.string()
            << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"facnet: frequency-aware convolution experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonOpts common;
  app.add_option("--seed", common.seed,
                 "PRNG seed for weights, data and shuffling (FACNET_SEED overrides)")
      ->capture_default_str();
  app.add_option("--out", common.out, "output directory, created if missing")
      ->capture_default_str();
  app.add_flag("--force", common.force, "overwrite existing output files");

  std::function<int()> action;
  std::string subname;

  // gradcheck
  GradcheckOpts gc;
  auto* gradcheck = app.add_subcommand(
      "gradcheck", "finite-difference check of every layer's backward pass");
  gradcheck->add_option("--config", gc.config_path,
                        "JSON config: {\"layers\": [kinds...], \"corrupt\": bool}");
  gradcheck->add_flag("--corrupt", gc.corrupt,
                      "include a deliberately broken layer (negative control; fails the run)");
  gradcheck->callback([&] {
    subname = "gradcheck";
    action = [&] { return cmd_gradcheck(common, gc); };
  });

  // shift-probe
  ShiftProbeOpts sp;
  auto* shift_probe = app.add_subcommand(
      "shift-probe", "delta-spectrogram frequency-shift probe on the fig1-probe network");
  shift_probe->add_option("--padding", sp.padding, "frequency padding mode")
      ->check(CLI::IsMember({"zero", "circular"}))
      ->capture_default_str();
  shift_probe->add_option("--base-bin", sp.base_bin, "frequency bin of the unshifted line")
      ->capture_default_str();
  shift_probe->add_option("--index-base", sp.index_base, "0- or 1-based bin indexing")
      ->check(CLI::Range(0, 1))
      ->capture_default_str();
  shift_probe->add_option("--shifts", sp.shifts, "comma-separated shift list")
      ->delimiter(',')
      ->capture_default_str();
  shift_probe->add_option("--epsilon", sp.epsilon, "threshold for tolerated_shift")
      ->capture_default_str();
  shift_probe->callback([&] {
    subname = "shift-probe";
    action = [&] { return cmd_shift_probe(common, sp); };
  });

  // synth
  SynthOpts sy;
  auto* synth = app.add_subcommand(
      "synth", "train on the shift-paired synthetic benchmark and report accuracy");
  synth->add_option("--model", sy.model, "vanilla baseline or FAC variant")
      ->check(CLI::IsMember({"vanilla", "fac"}))
      ->capture_default_str();
  synth->add_option("--epochs", sy.epochs, "override the benchmark epoch budget")
      ->check(CLI::PositiveNumber);
  synth->callback([&] {
    subname = "synth";
    action = [&] { return cmd_synth(common, sy); };
  });

  // sweep
  std::vector<Index> n_values = {0, 1, 2, 3, 4};
  auto* sweep =
      app.add_subcommand("sweep", "train one benchmark model per n_FAC value");
  sweep->add_option("--n-values", n_values, "comma-separated n_FAC list")
      ->delimiter(',')
      ->capture_default_str();
  sweep->callback([&] {
    subname = "sweep";
    action = [&] { return cmd_sweep(common, n_values); };
  });

  // ablation
  Index n_seeds = 5;
  auto* ablation = app.add_subcommand(
      "ablation", "compare fixed/adapt/adapt_dep amplitude modes under amplitude jitter");
  ablation->add_option("--n-seeds", n_seeds, "seeds per mode")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  ablation->callback([&] {
    subname = "ablation";
    action = [&] { return cmd_ablation(common, n_seeds); };
  });

  // count
  CountOpts co;
  std::string count_fac_mode = "adapt_dep";
  auto* count = app.add_subcommand(
      "count", "static parameter and flop accounting for a preset or config");
  count->add_option("--preset", co.preset_name, "model preset name")
      ->check(CLI::IsMember({"fig1-probe", "crnn-conv", "crnn-lite"}))
      ->capture_default_str();
  auto* count_config = count->add_option("--config", co.config_path, "JSON model config file");
  count->add_option("--layer", co.layer, "which frequency-aware layer to apply")
      ->check(CLI::IsMember({"vanilla", "fac", "fdy", "faconcat"}))
      ->capture_default_str();
  count->add_option("--n-fac", co.n_fac,
                    "FAC depth; -1 keeps the preset default (7/1/0) or the config's own kinds")
      ->capture_default_str();
  auto* count_mode = count->add_option("--fac-mode", count_fac_mode, "FAC amplitude mode")
                         ->check(CLI::IsMember({"fixed", "adapt", "adapt_dep"}))
                         ->capture_default_str();
  count->add_option("--fdy-k", co.fdy_k, "FDY basis kernel count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  count->add_option("--input", co.input_dims,
                    "flop-count input as N,C,T,F (default: config dims; crnn-conv: 1,1,626,128)")
      ->delimiter(',');
  count->callback([&] {
    subname = "count";
    if (count_mode->count() > 0) co.fac_mode = parse_fac_mode(count_fac_mode);
    action = [&] { return cmd_count(common, co); };
  });
  count_config->excludes(count->get_option("--preset"));

  // export-encodings
  ExportOpts ex;
  auto* export_enc = app.add_subcommand(
      "export-encodings", "write every FAC block's frequency encoding to CSV");
  export_enc->add_option("--preset", ex.preset_name, "model preset name")
      ->check(CLI::IsMember({"fig1-probe", "crnn-conv", "crnn-lite"}))
      ->capture_default_str();
  auto* export_config =
      export_enc->add_option("--config", ex.config_path, "JSON model config file");
  export_enc->add_option("--n-fac", ex.n_fac, "FAC depth; -1 keeps the preset default")
      ->capture_default_str();
  export_enc->callback([&] {
    subname = "export-encodings";
    action = [&] { return cmd_export_encodings(common, ex); };
  });
  export_config->excludes(export_enc->get_option("--preset"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    common.seed = apply_env_seed(common.seed);
    return action();
  } catch (const std::invalid_argument& e) {
    std::cerr << "facnet " << subname << ": error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "facnet " << subname << ": error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace facnet
