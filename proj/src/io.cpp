#include "nmfident/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nmfident::io {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double parse_double(const std::string& tok) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw Error(ErrorKind::Io, "bad number '" + tok + "'");
    return v;
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::Io, "bad number '" + tok + "'");
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Mat read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Io, "empty Matrix Market stream");
  std::istringstream header(lower(line));
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%matrixmarket" || object != "matrix")
    throw Error(ErrorKind::Io, "missing %%MatrixMarket matrix banner");
  if (field != "real" && field != "integer" && field != "double")
    throw Error(ErrorKind::Io, "unsupported Matrix Market field '" + field + "'");
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general")
    throw Error(ErrorKind::Io, "unsupported Matrix Market symmetry '" + symmetry + "'");

  do {
    if (!std::getline(in, line)) throw Error(ErrorKind::Io, "missing Matrix Market size line");
  } while (trim(line).empty() || line[0] == '%');

  std::istringstream sizes(line);
  long long rows = 0, cols = 0, nnz = 0;
  sizes >> rows >> cols;
  if (format == "coordinate") sizes >> nnz;
  if (!sizes || rows < 1 || cols < 1) throw Error(ErrorKind::Io, "bad Matrix Market size line");

  Mat m = Mat::Zero(rows, cols);
  std::string tok;
  if (format == "coordinate") {
    for (long long k = 0; k < nnz; ++k) {
      long long i = 0, j = 0;
      if (!(in >> i >> j >> tok)) throw Error(ErrorKind::Io, "truncated Matrix Market entries");
      if (i < 1 || i > rows || j < 1 || j > cols) throw Error(ErrorKind::Io, "entry index out of range");
      const double v = parse_double(tok);
      m(i - 1, j - 1) = v;
      if (symmetric) m(j - 1, i - 1) = v;
    }
  } else if (format == "array") {
    for (long long j = 0; j < cols; ++j) {
      for (long long i = symmetric ? j : 0; i < rows; ++i) {
        if (!(in >> tok)) throw Error(ErrorKind::Io, "truncated Matrix Market array");
        m(i, j) = parse_double(tok);
        if (symmetric) m(j, i) = m(i, j);
      }
    }
  } else {
    throw Error(ErrorKind::Io, "unsupported Matrix Market format '" + format + "'");
  }
  require_finite(m, "matrix file");
  return m;
}

Mat read_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_double(trim(cell)));
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(ErrorKind::Io, "ragged CSV rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) throw Error(ErrorKind::Io, "empty CSV");
  Mat m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  require_finite(m, "CSV file");
  return m;
}

void write_matrix_market(std::ostream& out, const Mat& m) {
  out << "%%MatrixMarket matrix array real general\n" << m.rows() << ' ' << m.cols() << '\n';
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) out << format_double(m(i, j)) << '\n';
}

void write_csv(std::ostream& out, const Mat& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Mat read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  return ends_with(lower(path), ".mtx") ? read_matrix_market(in) : read_csv(in);
}

void write_matrix(const std::string& path, const Mat& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  if (ends_with(lower(path), ".mtx"))
    write_matrix_market(out, m);
  else
    write_csv(out, m);
}

std::vector<Index> read_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::vector<Index> tokens;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty()) continue;
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || v < 0)
      throw Error(ErrorKind::Io, "bad token '" + t + "'");
    tokens.push_back(static_cast<Index>(v));
  }
  if (tokens.size() < 2) throw Error(ErrorKind::Io, "token file needs at least two tokens");
  return tokens;
}

}  // namespace nmfident::io
