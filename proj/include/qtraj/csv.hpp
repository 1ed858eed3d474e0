#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "qtraj/types.hpp"

namespace qtraj {

/// Deterministic CSV writer: fixed column set, shortest round-trip double
/// formatting, no locale surprises. Byte-identical output for identical data.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns)
      : out_(path, std::ios::binary), columns_(columns.size()) {
    if (!out_) throw StructuralError("csv: cannot open " + path);
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out_ << ',';
      out_ << columns[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    if (values.size() != columns_) throw StructuralError("csv: column count mismatch");
    char buf[40];
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      std::snprintf(buf, sizeof buf, "%.17g", values[i]);
      out_ << buf;
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace qtraj
