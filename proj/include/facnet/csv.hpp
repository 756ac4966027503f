#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "facnet/tensor.hpp"

namespace facnet {

/// Shortest round-trip decimal form ("%.17g"): equal doubles always print
/// identically, so repeated runs produce byte-identical files.
std::string fmt_g17(Scalar v);

/// CSV sink with "\n" line endings. Creates parent directories; refuses to
/// overwrite an existing file unless force is set.
class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, bool force);

  void comment(const std::string& text);           // "# text"
  void header(const std::vector<std::string>& cols);
  void row(const std::vector<std::string>& cells);
  void raw(const std::string& text);               // pre-formatted content

 private:
  std::ofstream out_;
};

}  // namespace facnet
