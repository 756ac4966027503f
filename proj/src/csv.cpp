#include "facnet/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace facnet {

std::string fmt_g17(Scalar v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvFile::CsvFile(const std::filesystem::path& path, bool force) {
  if (!force && std::filesystem::exists(path)) {
    throw std::invalid_argument("refusing to overwrite '" + path.string() +
                                "' (pass --force to allow)");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot write '" + path.string() + "'");
}

void CsvFile::comment(const std::string& text) { out_ << "# " << text << "\n"; }

void CsvFile::header(const std::vector<std::string>& cols) { row(cols); }

void CsvFile::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ",";
    out_ << cells[i];
  }
  out_ << "\n";
}

void CsvFile::raw(const std::string& text) { out_ << text; }

}  // namespace facnet
