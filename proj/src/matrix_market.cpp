#include "stochlin/matrix_market.hpp"

#include "stochlin/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace stochlin {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string t; ss >> t;) out.push_back(t);
  return out;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

double parse_real(const std::string& tok, const std::string& path, std::size_t line) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || p != end) throw ParseError(path, line, "invalid number '" + tok + "'");
  return v;
}

long long parse_int(const std::string& tok, const std::string& path, std::size_t line) {
  long long v = 0;
  const auto* end = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || p != end) throw ParseError(path, line, "invalid integer '" + tok + "'");
  return v;
}

}  // namespace

Matrix parse_matrix_market(const std::string& text, const std::string& path) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(path, 1, "empty file");
  ++lineno;
  const auto header = tokens(line);
  if (header.size() != 5 || lower(header[0]) != "%%matrixmarket" || lower(header[1]) != "matrix") {
    throw ParseError(path, lineno, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'");
  }
  const std::string format = lower(header[2]);
  const std::string field = lower(header[3]);
  const std::string symmetry = lower(header[4]);
  if (format != "coordinate" && format != "array") {
    throw ParseError(path, lineno, "unsupported format '" + header[2] + "'");
  }
  if (field != "real" && field != "integer" && field != "pattern" && field != "double") {
    throw ParseError(path, lineno, "unsupported field '" + header[3] + "'");
  }
  if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric") {
    throw ParseError(path, lineno, "unsupported symmetry '" + header[4] + "'");
  }
  if (field == "pattern" && format == "array") {
    throw ParseError(path, lineno, "pattern field requires coordinate format");
  }

  // size line
  std::vector<std::string> size;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line) || line[0] == '%') continue;
    size = tokens(line);
    break;
  }
  const std::size_t want = format == "coordinate" ? 3 : 2;
  if (size.size() != want) throw ParseError(path, lineno, "malformed size line");
  const long long rows = parse_int(size[0], path, lineno);
  const long long cols = parse_int(size[1], path, lineno);
  if (rows <= 0 || cols <= 0) throw ParseError(path, lineno, "dimensions must be positive");
  if (symmetry != "general" && rows != cols) {
    throw ParseError(path, lineno, "symmetric storage requires a square matrix");
  }
  Matrix m = Matrix::Zero(rows, cols);
  const bool skew = symmetry == "skew-symmetric";
  const bool sym = symmetry != "general";

  if (format == "coordinate") {
    const long long nnz = parse_int(size[2], path, lineno);
    if (nnz < 0) throw ParseError(path, lineno, "negative entry count");
    long long seen = 0;
    const std::size_t fields = field == "pattern" ? 2 : 3;
    while (std::getline(in, line)) {
      ++lineno;
      if (blank(line) || line[0] == '%') continue;
      const auto t = tokens(line);
      if (t.size() != fields) throw ParseError(path, lineno, "expected " + std::to_string(fields) + " fields");
      if (seen == nnz) throw ParseError(path, lineno, "more entries than declared");
      const long long i = parse_int(t[0], path, lineno);
      const long long j = parse_int(t[1], path, lineno);
      if (i < 1 || i > rows || j < 1 || j > cols) {
        throw ParseError(path, lineno, "entry index (" + t[0] + ", " + t[1] + ") out of bounds");
      }
      if (sym && j > i) throw ParseError(path, lineno, "symmetric storage must be lower triangular");
      if (skew && i == j) throw ParseError(path, lineno, "skew-symmetric diagonal must be empty");
      const double v = field == "pattern" ? 1.0 : parse_real(t[2], path, lineno);
      m(i - 1, j - 1) += v;
      if (sym && i != j) m(j - 1, i - 1) += skew ? -v : v;
      ++seen;
    }
    if (seen != nnz) {
      throw ParseError(path, lineno, "expected " + std::to_string(nnz) + " entries, found " +
                                          std::to_string(seen));
    }
  } else {
    // column-major; symmetric variants store the lower triangle only
    std::vector<std::pair<long long, long long>> slots;
    for (long long j = 0; j < cols; ++j) {
      for (long long i = sym ? j + (skew ? 1 : 0) : 0; i < rows; ++i) slots.emplace_back(i, j);
    }
    std::size_t next = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (blank(line) || line[0] == '%') continue;
      const auto t = tokens(line);
      if (t.size() != 1) throw ParseError(path, lineno, "array entries take one value per line");
      if (next == slots.size()) throw ParseError(path, lineno, "more entries than the dimensions allow");
      const double v = parse_real(t[0], path, lineno);
      const auto [i, j] = slots[next++];
      m(i, j) = v;
      if (sym && i != j) m(j, i) = skew ? -v : v;
    }
    if (next != slots.size()) {
      throw ParseError(path, lineno, "expected " + std::to_string(slots.size()) + " entries, found " +
                                          std::to_string(next));
    }
  }
  require_finite(m, path.c_str());
  return m;
}

Matrix load_matrix_market(const std::string& path) { return parse_matrix_market(read_file(path), path); }

Vector load_vector(const std::string& path) {
  const std::string text = read_file(path);
  if (text.rfind("%%MatrixMarket", 0) == 0 || text.rfind("%%matrixmarket", 0) == 0) {
    const Matrix m = parse_matrix_market(text, path);
    if (m.cols() == 1) return m.col(0);
    if (m.rows() == 1) return m.row(0).transpose();
    throw InvalidInput(path + ": expected a vector (n x 1 or 1 x n)");
  }
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line) || line[0] == '#' || line[0] == '%') continue;
    const auto t = tokens(line);
    if (t.size() != 1) throw ParseError(path, lineno, "expected one value per line");
    values.push_back(parse_real(t[0], path, lineno));
  }
  if (values.empty()) throw ParseError(path, lineno, "no values");
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<Eigen::Index>(i)) = values[i];
  require_finite(v, path.c_str());
  return v;
}

}  // namespace stochlin
