#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace rankcalm::report {

inline constexpr const char* kToolName = "rankcalm";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

/// Common header: schema, tool version, command, config echo, seed. Wall time
/// goes to the console, never into report files, so reruns stay byte-identical.
Json report_header(const std::string& command, const std::vector<std::string>& config_echo,
                   std::uint64_t seed);

Json matrix_to_json(const Eigen::MatrixXd& M);

void write_json_file(const std::string& path, const Json& j);

/// CSV rows with %.17g formatting; one header line, '\n' endings.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns);
  void add_row(const std::vector<double>& values);
  void add_row_mixed(const std::vector<std::string>& values);
  void write(const std::string& path) const;
  std::string str() const;

  static std::string format(double v);

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> rows_;
};

}  // namespace rankcalm::report
