// Copyright 2026 The gpclab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GPCLAB_CSV_HPP_
#define GPCLAB_CSV_HPP_

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpc::cli {

// Round-trip-exact, locale-independent number formatting ('.' decimal).
inline std::string CsvNumber(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Minimal CSV writer: mandatory header, newline-terminated rows.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : file_(path) {
    if (!file_) throw std::runtime_error("cannot write CSV: " + path);
    WriteRow(header);
  }

  void WriteRow(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) file_ << ',';
      file_ << cells[i];
    }
    file_ << '\n';
  }

 private:
  std::ofstream file_;
};

}  // namespace gpc::cli

#endif  // GPCLAB_CSV_HPP_
