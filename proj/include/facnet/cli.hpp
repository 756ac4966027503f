#pragma once

namespace facnet {

/// Parses argv and runs one subcommand (gradcheck, shift-probe, synth, sweep,
/// ablation, count, export-encodings). Returns the process exit code:
/// 0 success, 1 failed check, 2 usage or configuration error. The FACNET_SEED
/// environment variable, when set, overrides --seed.
int run_cli(int argc, char** argv);

}  // namespace facnet
