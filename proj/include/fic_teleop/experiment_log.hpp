#pragma once

// Column-oriented experiment log with a CSV form.
//
// File layout: '#'-prefixed metadata lines ("# key: value"), one header row,
// then one numeric row per logged step. Numbers are written in shortest
// round-trip form so a re-run can be compared byte for byte.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fic_teleop {

struct LogError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class ExperimentLog {
 public:
  ExperimentLog() = default;
  explicit ExperimentLog(std::vector<std::string> columns);

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return columns_.empty() ? 0 : data_.size() / columns_.size(); }

  /// Column index, or -1.
  int index(std::string_view name) const;
  bool has(std::string_view name) const { return index(name) >= 0; }
  /// Throws LogError when the column is missing.
  std::vector<double> series(std::string_view name) const;
  double at(std::size_t row, std::size_t col) const { return data_[row * columns_.size() + col]; }
  const double* row(std::size_t r) const { return data_.data() + r * columns_.size(); }

  void add_row(const std::vector<double>& values);
  void reserve_rows(std::size_t n) { data_.reserve(n * columns_.size()); }
  /// Keeps only the last `n` rows.
  void keep_tail(std::size_t n);

  void set_meta(const std::string& key, const std::string& value);
  std::optional<std::string> meta(std::string_view key) const;
  const std::vector<std::pair<std::string, std::string>>& meta_entries() const { return meta_; }

 private:
  std::vector<std::string> columns_;
  std::vector<double> data_;
  std::vector<std::pair<std::string, std::string>> meta_;
};

std::string format_number(double v);

std::string to_csv(const ExperimentLog& log);
ExperimentLog parse_csv(std::string_view text);

void write_csv(const ExperimentLog& log, const std::string& path);
ExperimentLog read_csv(const std::string& path);
/// Raw file contents, for byte comparisons.
std::string read_file(const std::string& path);

}  // namespace fic_teleop
