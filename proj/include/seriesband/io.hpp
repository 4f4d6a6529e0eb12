#pragma once

#include <map>
#include <optional>
#include <string>

#include "seriesband/regression.hpp"

namespace seriesband {

/// Fixed CSV number format used by every writer; %.17g round-trips doubles
/// and keeps repeated runs byte-identical.
std::string format_double(double v);

/// Dataset CSV: header row x1..xd,y; decimal points, no thousands separators.
/// Parse failures report the 1-based data row and the column name.
Dataset read_dataset_csv(const std::string& path);

void write_vector_csv(const std::string& path, const std::string& header, const VectorXd& v);
void write_matrix_csv(const std::string& path, const MatrixXd& m);

/// Flat key-value config with TOML-like [section] headers and # comments.
/// Every lookup (including defaulted ones) is recorded so commands can echo
/// their effective settings.
class KvConfig {
 public:
  static KvConfig parse_file(const std::string& path);
  static KvConfig parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double_or(const std::string& section, const std::string& key, double fallback) const;
  long get_long(const std::string& section, const std::string& key) const;
  long get_long_or(const std::string& section, const std::string& key, long fallback) const;

  /// Every key consulted so far with its effective value.
  const std::map<std::string, std::map<std::string, std::string>>& effective() const { return effective_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> values_;
  mutable std::map<std::string, std::map<std::string, std::string>> effective_;
};

}  // namespace seriesband
