#pragma once

#include "cndr/kernels.hpp"

#include <istream>
#include <string>
#include <string_view>

namespace cndr {

enum class DataFormat { csv, svmlight };

DataFormat data_format_from_string(std::string_view name);

struct LabeledData {
  PointSet points;
  Vector labels;  // entries in {-1, +1}
};

// CSV: header-free rows `label,f1,...,fd`; unlabeled files omit the label.
// svmlight: `label idx:val ...` with 1-based indices; unlabeled lines omit the
// label. `dim` fixes the dimension (0 infers it: row width for CSV, largest
// index for svmlight). Blank lines and lines starting with '#' are skipped.
// Errors carry `source:line`.
LabeledData parse_labeled(std::istream& in, DataFormat format, const std::string& source, int dim = 0);
PointSet parse_unlabeled(std::istream& in, DataFormat format, const std::string& source, int dim = 0);

LabeledData load_labeled(const std::string& path, DataFormat format, int dim = 0);
PointSet load_unlabeled(const std::string& path, DataFormat format, int dim = 0);

// Dense header-free CSV of reals.
Matrix load_matrix_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

// Row-major CSV of a labeled sample, labels first.
std::string to_csv(const LabeledData& data);

}  // namespace cndr
