#include "rankcalm/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace rankcalm::io {

ParseError::ParseError(const std::string& name, int line, int col, const std::string& message)
    : std::runtime_error(name + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                         message),
      line_(line),
      col_(col) {}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  return in;
}

// Tokenizer that tracks line/column for error reporting.
struct Scanner {
  std::istream& in;
  std::string name;
  int line = 1, col = 0;

  int get() {
    const int c = in.get();
    if (c == '\n') {
      ++line;
      col = 0;
    } else if (c != EOF) {
      ++col;
    }
    return c;
  }

  bool next_token(std::string& tok, int& tline, int& tcol) {
    tok.clear();
    int c = get();
    while (c != EOF && std::isspace(c)) c = get();
    if (c == EOF) return false;
    tline = line;
    tcol = col;
    while (c != EOF && !std::isspace(c)) {
      tok.push_back(static_cast<char>(c));
      c = get();
    }
    return true;
  }

  double next_double(const char* what) {
    std::string tok;
    int tl, tc;
    if (!next_token(tok, tl, tc))
      throw ParseError(name, line, col, std::string("unexpected end of input, expected ") + what);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      throw ParseError(name, tl, tc, std::string("not a number: '") + tok + "' (" + what + ")");
    return v;
  }

  long next_integer(const char* what) {
    std::string tok;
    int tl, tc;
    if (!next_token(tok, tl, tc))
      throw ParseError(name, line, col, std::string("unexpected end of input, expected ") + what);
    char* end = nullptr;
    const long v = std::strtol(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0')
      throw ParseError(name, tl, tc, std::string("not an integer: '") + tok + "' (" + what + ")");
    return v;
  }
};

}  // namespace

Matrix read_matrix_text(std::istream& in, const std::string& name) {
  std::string header;
  int hline = 1;
  while (std::getline(in, header)) {
    if (!trim(header).empty()) break;
    ++hline;
  }
  std::istringstream hs(header);
  long rows = 0, cols = 0;
  std::string symtag;
  if (!(hs >> rows >> cols)) throw ParseError(name, hline, 1, "expected header 'rows cols [sym]'");
  bool sym = false;
  if (hs >> symtag) {
    if (lower(symtag) != "sym")
      throw ParseError(name, hline, 1, "unknown header tag '" + symtag + "'");
    sym = true;
  }
  if (rows <= 0 || cols <= 0) throw ParseError(name, hline, 1, "nonpositive dimensions");

  Scanner sc{in, name, hline + 1, 0};
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) m(i, j) = sc.next_double("matrix entry");

  Matrix out{std::move(m), sym};
  out.validate();
  return out;
}

Matrix read_matrix_text_file(const std::string& path) {
  auto in = open_or_throw(path);
  return read_matrix_text(in, path);
}

void write_matrix_text(std::ostream& out, const Matrix& m) {
  out << m.rows() << " " << m.cols();
  if (m.symmetric) out << " sym";
  out << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m.values(i, j));
      out << (j ? " " : "") << buf;
    }
    out << "\n";
  }
}

void write_matrix_text_file(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  write_matrix_text(out, m);
}

CoordinateMatrix read_matrix_market(std::istream& in, const std::string& name) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError(name, 1, 1, "empty MatrixMarket file");
  std::istringstream hs(header);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix")
    throw ParseError(name, 1, 1, "expected '%%MatrixMarket matrix ...' banner");
  if (lower(format) != "coordinate")
    throw ParseError(name, 1, 1, "only the coordinate format is supported");
  CoordinateMatrix cm;
  const std::string f = lower(field);
  if (f == "pattern")
    cm.pattern = true;
  else if (f != "real" && f != "integer")
    throw ParseError(name, 1, 1, "unsupported field '" + field + "'");
  const std::string s = lower(symmetry);
  if (s == "symmetric")
    cm.symmetric = true;
  else if (s != "general")
    throw ParseError(name, 1, 1, "unsupported symmetry '" + symmetry + "'");

  int line = 2;
  std::string row;
  while (std::getline(in, row)) {
    const std::string t = trim(row);
    if (!t.empty() && t[0] != '%') break;
    ++line;
  }
  std::istringstream ds(row);
  long rows, cols, nnz;
  if (!(ds >> rows >> cols >> nnz))
    throw ParseError(name, line, 1, "expected size line 'rows cols nnz'");
  if (rows <= 0 || cols <= 0 || nnz < 0) throw ParseError(name, line, 1, "bad dimensions");
  cm.rows = static_cast<int>(rows);
  cm.cols = static_cast<int>(cols);

  Scanner sc{in, name, line + 1, 0};
  cm.entries.reserve(static_cast<size_t>(nnz));
  for (long k = 0; k < nnz; ++k) {
    const int eline = sc.line;
    const long i = sc.next_integer("row index");
    const long j = sc.next_integer("column index");
    const double v = cm.pattern ? 1.0 : sc.next_double("value");
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw ParseError(name, eline, 1, "index out of range");
    cm.entries.push_back({static_cast<int>(i - 1), static_cast<int>(j - 1), v});
  }
  return cm;
}

CoordinateMatrix read_matrix_market_file(const std::string& path) {
  auto in = open_or_throw(path);
  return read_matrix_market(in, path);
}

Eigen::MatrixXd dense_from_coordinate(const CoordinateMatrix& cm) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(cm.rows, cm.cols);
  for (const auto& e : cm.entries) {
    m(e.row, e.col) += e.value;
    if (cm.symmetric && e.row != e.col) m(e.col, e.row) += e.value;
  }
  return m;
}

Eigen::MatrixXd graph_laplacian(const CoordinateMatrix& cm, const std::string& name) {
  if (cm.rows != cm.cols) throw ParseError(name, 1, 1, "graph adjacency must be square");
  const int n = cm.rows;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd seen = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : cm.entries) {
    if (e.row == e.col) throw ParseError(name, 1, 1, "self-loop at node " + std::to_string(e.row + 1));
    if (seen(e.row, e.col) != 0.0 && A(e.row, e.col) != e.value)
      throw ParseError(name, 1, 1,
                       "conflicting weights for edge (" + std::to_string(e.row + 1) + "," +
                           std::to_string(e.col + 1) + ")");
    A(e.row, e.col) = e.value;
    A(e.col, e.row) = e.value;
    seen(e.row, e.col) = seen(e.col, e.row) = 1.0;
  }
  if (!cm.symmetric) {
    // General files must still describe an undirected graph.
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (seen(i, j) != 0.0 && seen(j, i) != 0.0 && A(i, j) != A(j, i))
          throw ParseError(name, 1, 1, "non-symmetric entries at (" + std::to_string(i + 1) + "," +
                                           std::to_string(j + 1) + ")");
  }
  Eigen::MatrixXd L = -A;
  L += A.rowwise().sum().asDiagonal();
  return L;
}

Eigen::MatrixXd graph_laplacian_file(const std::string& path) {
  return graph_laplacian(read_matrix_market_file(path), path);
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  auto s = sections.find(section);
  return s != sections.end() && s->second.count(key) > 0;
}

std::string ConfigFile::get(const std::string& section, const std::string& key) const {
  auto s = sections.find(section);
  if (s == sections.end() || !s->second.count(key))
    throw std::runtime_error(source + ": missing key '" + section + "." + key + "'");
  return s->second.at(key);
}

std::string ConfigFile::get_or(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  return has(section, key) ? sections.at(section).at(key) : fallback;
}

ConfigFile parse_config(std::istream& in, const std::string& name) {
  ConfigFile cf;
  cf.source = name;
  std::string section;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ParseError(name, line, 1, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ParseError(name, line, static_cast<int>(s.size()), "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ParseError(name, line, 1, "empty key");
    cf.sections[section][key] = value;
    cf.echo.push_back((section.empty() ? key : section + "." + key) + " = " + value);
  }
  return cf;
}

ConfigFile parse_config_file(const std::string& path) {
  auto in = open_or_throw(path);
  return parse_config(in, path);
}

std::string dir_name(const std::string& path) {
  const size_t pos = path.find_last_of('/');
  return pos == std::string::npos ? std::string() : path.substr(0, pos);
}

std::string join_path(const std::string& dir, const std::string& file) {
  if (dir.empty() || (!file.empty() && file.front() == '/')) return file;
  return dir + "/" + file;
}

}  // namespace rankcalm::io
