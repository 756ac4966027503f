#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

std::string binary() {
  if (const char* env = std::getenv("FACNET_BIN")) return env;
  return FACNET_BIN_PATH;
}

struct Run {
  int code = -1;
  std::string out;
};

/// Runs the CLI with a scrubbed FACNET_SEED, capturing stdout+stderr.
Run run_cli(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const fs::path log = fs::current_path() / ("cli_out_" + std::to_string(counter++) + ".log");
  std::string cmd = "env -u FACNET_SEED " + env + (env.empty() ? "" : " ") + "\"" + binary() +
                    "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  Run result;
  if (WIFEXITED(status)) result.code = WEXITSTATUS(status);
  std::ifstream in(log);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  result.out = buffer.str();
  fs::remove(log);
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::current_path() / name) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string arg() const { return " --out \"" + path.string() + "\""; }
};

}  // namespace

TEST_CASE("gradcheck exits 0 clean and 1 with the corrupt control") {
  CHECK(run_cli("gradcheck").code == 0);
  Run corrupt = run_cli("gradcheck --corrupt");
  CHECK(corrupt.code == 1);
  CHECK(corrupt.out.find("corrupt_relu") != std::string::npos);
  CHECK(corrupt.out.find("FAIL") != std::string::npos);
}

TEST_CASE("count reports the 515-parameter FAC overhead") {
  TempDir tmp("cli_tmp_count");
  Run r = run_cli("count --preset crnn-conv --layer fac" + tmp.arg());
  CHECK(r.code == 0);
  CHECK(r.out.find("FAC overhead: 515 params") != std::string::npos);
  CHECK(r.out.find("total params:") != std::string::npos);
  CHECK(fs::exists(tmp.path / "count_crnn-conv_fac_seed42.csv"));
}

TEST_CASE("count reruns are byte-identical") {
  TempDir a("cli_tmp_bytes_a");
  TempDir b("cli_tmp_bytes_b");
  CHECK(run_cli("count --preset crnn-conv --layer fdy" + a.arg()).code == 0);
  CHECK(run_cli("count --preset crnn-conv --layer fdy" + b.arg()).code == 0);
  CHECK(slurp(a.path / "count_crnn-conv_fdy_seed42.csv") ==
        slurp(b.path / "count_crnn-conv_fdy_seed42.csv"));
}

TEST_CASE("usage errors exit 2") {
  CHECK(run_cli("").code == 2);                        // no subcommand
  CHECK(run_cli("frobnicate").code == 2);              // unknown subcommand
  CHECK(run_cli("count --bogus-flag").code == 2);      // unknown flag
  CHECK(run_cli("count --preset nope").code == 2);     // bad preset name
  CHECK(run_cli("count --config missing.json").code == 2);
  TempDir tmp("cli_tmp_probe_err");
  // base bin 60 + shift 32 leaves the 64-bin range
  CHECK(run_cli("shift-probe --base-bin 60 --shifts 32" + tmp.arg()).code == 2);
  // fig1-probe has no FAC layers to export
  CHECK(run_cli("export-encodings --preset fig1-probe" + tmp.arg()).code == 2);
}

TEST_CASE("help exits 0 and lists the subcommands") {
  Run r = run_cli("--help");
  CHECK(r.code == 0);
  for (const char* sub :
       {"gradcheck", "shift-probe", "synth", "sweep", "ablation", "count", "export-encodings"}) {
    INFO("subcommand: ", sub);
    CHECK(r.out.find(sub) != std::string::npos);
  }
}

TEST_CASE("FACNET_SEED overrides the flag and rejects garbage") {
  TempDir tmp("cli_tmp_seed");
  Run r = run_cli("export-encodings --seed 5" + tmp.arg(), "FACNET_SEED=7");
  CHECK(r.code == 0);
  CHECK(fs::exists(tmp.path / "encodings_crnn-lite_seed7.csv"));
  CHECK(run_cli("gradcheck", "FACNET_SEED=abc").code == 2);
  CHECK(run_cli("gradcheck", "FACNET_SEED=").code == 2);
}

TEST_CASE("shift-probe writes the probe table") {
  TempDir tmp("cli_tmp_probe");
  Run r = run_cli("shift-probe --padding circular --shifts 0" + tmp.arg());
  CHECK(r.code == 0);
  const std::string text = slurp(tmp.path / "shift_probe_circular_seed42.csv");
  CHECK(text.find("delta,raw_diff,pooled_diff") != std::string::npos);
  CHECK(text.find("0,0,0") != std::string::npos);
}

TEST_CASE("overwrite refusal and --force") {
  TempDir tmp("cli_tmp_force");
  CHECK(run_cli("export-encodings" + tmp.arg()).code == 0);
  Run refuse = run_cli("export-encodings" + tmp.arg());
  CHECK(refuse.code == 2);
  CHECK(refuse.out.find("--force") != std::string::npos);
  const std::string before = slurp(tmp.path / "encodings_crnn-lite_seed42.csv");
  CHECK(run_cli("export-encodings --force" + tmp.arg()).code == 0);
  CHECK(slurp(tmp.path / "encodings_crnn-lite_seed42.csv") == before);
}

TEST_CASE("one-indexed probe bins shift the base") {
  TempDir a("cli_tmp_idx_a");
  TempDir b("cli_tmp_idx_b");
  // --base-bin 20 with 1-based indexing is bin 19 in 0-based terms.
  CHECK(run_cli("shift-probe --base-bin 20 --index-base 1 --shifts 0,16" + a.arg()).code == 0);
  CHECK(run_cli("shift-probe --base-bin 19 --index-base 0 --shifts 0,16" + b.arg()).code == 0);
  CHECK(slurp(a.path / "shift_probe_circular_seed42.csv") ==
        slurp(b.path / "shift_probe_circular_seed42.csv"));
}

TEST_CASE("synth smoke run trains and reports the paired gap") {
  TempDir tmp("cli_tmp_synth");
  Run r = run_cli("synth --model fac --epochs 2" + tmp.arg());
  CHECK(r.code == 0);
  CHECK(r.out.find("final_test_acc") != std::string::npos);
  CHECK(r.out.find("paired_logit_gap") != std::string::npos);
  CHECK(fs::exists(tmp.path / "synth_fac_seed42.csv"));
}
