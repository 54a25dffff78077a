#include "cndr/io.hpp"

#include "cndr/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace cndr {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& source, int line, const std::string& msg) {
  throw DataError(source + ":" + std::to_string(line) + ": " + msg);
}

double parse_real(std::string_view tok, const std::string& source, int line) {
  tok = trim(tok);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    fail(source, line, "cannot parse number '" + std::string(tok) + "'");
  if (!std::isfinite(v)) fail(source, line, "non-finite value '" + std::string(tok) + "'");
  return v;
}

double parse_label(std::string_view tok, const std::string& source, int line) {
  const double v = parse_real(tok, source, line);
  if (v != 1.0 && v != -1.0) fail(source, line, "label must be -1 or +1, got '" + std::string(trim(tok)) + "'");
  return v;
}

struct Row {
  std::vector<std::pair<int, double>> entries;  // 0-based index, value
  double label = 0.0;
  int line = 0;
};

std::vector<Row> read_rows(std::istream& in, DataFormat format, const std::string& source, bool labeled,
                           int& width) {
  std::vector<Row> rows;
  std::string raw;
  int line = 0;
  width = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view s = trim(raw);
    if (s.empty() || s.front() == '#') continue;
    Row row;
    row.line = line;
    if (format == DataFormat::csv) {
      std::vector<std::string_view> toks;
      std::size_t start = 0;
      while (true) {
        const auto pos = s.find(',', start);
        toks.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
      }
      std::size_t first = 0;
      if (labeled) {
        row.label = parse_label(toks[0], source, line);
        first = 1;
      }
      if (toks.size() <= first) fail(source, line, "row has no features");
      for (std::size_t i = first; i < toks.size(); ++i)
        row.entries.emplace_back(static_cast<int>(i - first), parse_real(toks[i], source, line));
      const int w = static_cast<int>(toks.size() - first);
      if (width == 0) {
        width = w;
      } else if (w != width) {
        fail(source, line, "expected " + std::to_string(width) + " features, found " + std::to_string(w));
      }
    } else {
      std::istringstream ts{std::string(s)};
      std::string tok;
      bool first = true;
      int last = -1;
      while (ts >> tok) {
        const auto colon = tok.find(':');
        if (first && labeled) {
          if (colon != std::string::npos) fail(source, line, "missing label");
          row.label = parse_label(tok, source, line);
          first = false;
          continue;
        }
        first = false;
        if (colon == std::string::npos) fail(source, line, "expected index:value, got '" + tok + "'");
        const std::string_view idx_s(tok.data(), colon);
        int idx = 0;
        const auto res = std::from_chars(idx_s.data(), idx_s.data() + idx_s.size(), idx);
        if (idx_s.empty() || res.ec != std::errc() || res.ptr != idx_s.data() + idx_s.size() || idx < 1)
          fail(source, line, "invalid feature index '" + std::string(idx_s) + "' (indices are 1-based)");
        if (idx - 1 <= last) fail(source, line, "feature indices must be strictly increasing");
        last = idx - 1;
        row.entries.emplace_back(idx - 1, parse_real(std::string_view(tok).substr(colon + 1), source, line));
        width = std::max(width, idx);
      }
      if (first && labeled) fail(source, line, "missing label");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(source + ": no data rows");
  return rows;
}

PointSet assemble(const std::vector<Row>& rows, int width, int dim, const std::string& source) {
  const int d = dim > 0 ? dim : width;
  if (d < 1) throw DataError(source + ": cannot determine the dimension");
  PointSet x = PointSet::Zero(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [idx, val] : rows[i].entries) {
      if (idx >= d)
        fail(source, rows[i].line,
             "feature index " + std::to_string(idx + 1) + " exceeds dimension " + std::to_string(d));
      x(static_cast<Eigen::Index>(i), idx) = val;
    }
  }
  return x;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

}  // namespace

DataFormat data_format_from_string(std::string_view name) {
  if (name == "csv") return DataFormat::csv;
  if (name == "svmlight" || name == "libsvm") return DataFormat::svmlight;
  throw ConfigError("unknown data format '" + std::string(name) + "'");
}

LabeledData parse_labeled(std::istream& in, DataFormat format, const std::string& source, int dim) {
  int width = 0;
  const auto rows = read_rows(in, format, source, true, width);
  if (format == DataFormat::csv && dim > 0 && width != dim)
    throw DataError(source + ": expected " + std::to_string(dim) + " features, found " + std::to_string(width));
  LabeledData out;
  out.points = assemble(rows, width, dim, source);
  out.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out.labels(static_cast<Eigen::Index>(i)) = rows[i].label;
  return out;
}

PointSet parse_unlabeled(std::istream& in, DataFormat format, const std::string& source, int dim) {
  int width = 0;
  const auto rows = read_rows(in, format, source, false, width);
  if (format == DataFormat::csv && dim > 0 && width != dim)
    throw DataError(source + ": expected " + std::to_string(dim) + " features, found " + std::to_string(width));
  return assemble(rows, width, dim, source);
}

LabeledData load_labeled(const std::string& path, DataFormat format, int dim) {
  auto in = open_or_throw(path);
  return parse_labeled(in, format, path, dim);
}

PointSet load_unlabeled(const std::string& path, DataFormat format, int dim) {
  auto in = open_or_throw(path);
  return parse_unlabeled(in, format, path, dim);
}

Matrix load_matrix_csv(const std::string& path) {
  auto in = open_or_throw(path);
  return parse_unlabeled(in, DataFormat::csv, path);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << content;
  if (!out) throw DataError("failed writing '" + path + "'");
}

std::string to_csv(const LabeledData& data) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < data.points.rows(); ++i) {
    os << (data.labels(i) > 0 ? "+1" : "-1");
    for (Eigen::Index c = 0; c < data.points.cols(); ++c) os << ',' << data.points(i, c);
    os << '\n';
  }
  return os.str();
}

}  // namespace cndr
