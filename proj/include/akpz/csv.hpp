#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "akpz/common.hpp"

namespace akpz {

// Minimal CSV writer with deterministic number formatting, so identical
// data always produces identical bytes.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path)
      : f_(std::fopen(path.c_str(), "wb")), owned_(true) {
    if (!f_) throw error("cannot open " + path + " for writing");
  }
  // non-owning: write rows to an already-open stream such as stdout
  explicit CsvWriter(std::FILE* f) : f_(f), owned_(false) {}
  ~CsvWriter() {
    if (f_ && owned_) std::fclose(f_);
  }
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void header(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i)
      std::fprintf(f_, "%s%s", i ? "," : "", cols[i].c_str());
    std::fputc('\n', f_);
  }

  void field(std::int64_t v) {
    sep();
    std::fprintf(f_, "%lld", static_cast<long long>(v));
  }
  void field(double v) {
    sep();
    std::fprintf(f_, "%.17g", v);
  }
  void field(const std::string& v) {
    sep();
    std::fputs(v.c_str(), f_);
  }
  void end_row() {
    std::fputc('\n', f_);
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) std::fputc(',', f_);
    first_ = false;
  }
  std::FILE* f_;
  bool owned_;
  bool first_ = true;
};

// Reads a CSV file written by CsvWriter (no quoting, no embedded commas).
std::vector<std::vector<std::string>> read_csv(const std::string& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // index of a named column; throws config_error when absent
  int column(const std::string& name) const;
};

CsvTable read_csv_table(const std::string& path);

}  // namespace akpz
