#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "rankcalm/matrix.hpp"

namespace rankcalm::io {

/// Parse failure with file position; what() reads "name:line:col: message".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& name, int line, int col, const std::string& message);
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_, col_;
};

// --- dense matrix text format -------------------------------------------------
// First line: "rows cols" or "rows cols sym"; then entries row by row.
// Written with 17 significant digits so values round-trip exactly.

Matrix read_matrix_text(std::istream& in, const std::string& name = "<stream>");
Matrix read_matrix_text_file(const std::string& path);
void write_matrix_text(std::ostream& out, const Matrix& m);
void write_matrix_text_file(const std::string& path, const Matrix& m);

// --- MatrixMarket coordinate format --------------------------------------------

struct CoordinateEntry {
  int row, col;
  double value;
};

struct CoordinateMatrix {
  int rows = 0, cols = 0;
  bool symmetric = false;
  bool pattern = false;
  std::vector<CoordinateEntry> entries;
};

CoordinateMatrix read_matrix_market(std::istream& in, const std::string& name = "<stream>");
CoordinateMatrix read_matrix_market_file(const std::string& path);
Eigen::MatrixXd dense_from_coordinate(const CoordinateMatrix& cm);

/// Graph Laplacian L = D - A from a symmetric coordinate file. Self-loops are
/// rejected, as are conflicting (i,j)/(j,i) weights in general files.
Eigen::MatrixXd graph_laplacian(const CoordinateMatrix& cm, const std::string& name = "<graph>");
Eigen::MatrixXd graph_laplacian_file(const std::string& path);

// --- flat key=value config files with [section] headers -----------------------

struct ConfigFile {
  // section -> key -> value; "" is the section before any header.
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::vector<std::string> echo;  // "section.key = value" in file order
  std::string source;

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
};

ConfigFile parse_config(std::istream& in, const std::string& name = "<stream>");
ConfigFile parse_config_file(const std::string& path);

/// Directory part of a path ("" when none); used to resolve matrix-file
/// references relative to the config that names them.
std::string dir_name(const std::string& path);
std::string join_path(const std::string& dir, const std::string& file);

}  // namespace rankcalm::io
