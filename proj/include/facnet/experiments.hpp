#pragma once

#include <filesystem>
#include <vector>

#include "facnet/model.hpp"
#include "facnet/synth.hpp"
#include "facnet/train.hpp"

namespace facnet {

struct ShiftProbeRow {
  Index delta;
  Scalar raw_diff;     // feature-map difference; aligned when the cumulative
                       // pooling factor divides delta, plain otherwise
  Scalar pooled_diff;  // after global average pooling over (T, F)
};

struct ShiftProbeResult {
  std::vector<ShiftProbeRow> rows;
  Index tolerated_shift = -1;  // largest delta with pooled_diff < epsilon
  Scalar epsilon = 1e-9;
};

/// Feeds delta spectrograms (all-time line at one bin) through the model's
/// blocks and compares each shifted run against the unshifted one. base_bin
/// plus every shift must stay inside the input frequency range.
ShiftProbeResult run_shift_probe(Model& model, Index base_bin, const std::vector<Index>& shifts,
                                 Scalar epsilon);

/// Product of the per-block frequency pooling windows.
Index cumulative_freq_pool(const ModelConfig& config);

struct SweepRow {
  Index n_fac;
  long long param_overhead;
  Scalar test_acc;
};

/// Trains one model per n (first n blocks FAC); build and shuffle seeds are
/// offset by n so runs are deterministic yet independent.
std::vector<SweepRow> run_nfac_sweep(const ModelConfig& base, const std::vector<Index>& ns,
                                     const Dataset& data, const TrainSpec& spec);

struct AblationRun {
  FacMode mode;
  std::uint64_t seed;
  Scalar test_acc;
};

struct AblationSummary {
  FacMode mode;
  Scalar mean_acc;
  Scalar std_acc;  // sample standard deviation over seeds
};

struct AblationResult {
  std::vector<AblationRun> runs;
  std::vector<AblationSummary> summary;  // fixed, adapt, adapt_dep order
};

/// Trains the FAC config once per mode and seed. Seed s uses build/shuffle
/// seed base+s for every mode, so modes start from identical convolution
/// weights (the FAC attention parameters draw nothing from the rng).
AblationResult run_ablation(const ModelConfig& fac_config, const Dataset& data,
                            const TrainSpec& spec, Index n_seeds);

/// The synthetic-benchmark settings the acceptance checks are pinned to.
ModelConfig benchmark_model_config();
SynthSpec benchmark_synth_spec(std::uint64_t seed);
TrainSpec benchmark_train_spec(std::uint64_t seed);

/// Ablation settings: amplitude jitter on, so a fixed injection scale is
/// sometimes too strong and sometimes too weak.
ModelConfig ablation_model_config();
SynthSpec ablation_synth_spec(std::uint64_t seed);
TrainSpec ablation_train_spec(std::uint64_t seed);

// CSV emitters. Every writer refuses to overwrite unless force is set and
// writes "\n" line endings with %.17g float formatting, so identical inputs
// produce byte-identical files.
void write_shift_probe_csv(const ShiftProbeResult& result, const std::filesystem::path& path,
                           bool force);
void write_history_csv(const TrainHistory& history, const std::filesystem::path& path,
                       bool force);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path,
                     bool force);
void write_ablation_csvs(const AblationResult& result, const std::filesystem::path& runs_path,
                         const std::filesystem::path& summary_path, bool force);
void write_encodings_csv(const std::vector<EncodingRow>& rows, const std::filesystem::path& path,
                         bool force);
void write_count_csv(const std::string& csv_text, const std::filesystem::path& path, bool force);

}  // namespace facnet
