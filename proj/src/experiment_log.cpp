#include "fic_teleop/experiment_log.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fic_teleop {

ExperimentLog::ExperimentLog(std::vector<std::string> columns) : columns_(std::move(columns)) {}

int ExperimentLog::index(std::string_view name) const {
  auto it = std::find(columns_.begin(), columns_.end(), name);
  return it == columns_.end() ? -1 : static_cast<int>(it - columns_.begin());
}

std::vector<double> ExperimentLog::series(std::string_view name) const {
  const int c = index(name);
  if (c < 0) throw LogError("log has no column '" + std::string(name) + "'");
  std::vector<double> out(rows());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = at(r, static_cast<std::size_t>(c));
  return out;
}

void ExperimentLog::add_row(const std::vector<double>& values) {
  if (values.size() != columns_.size()) {
    throw LogError("row has " + std::to_string(values.size()) + " values, log has " +
                   std::to_string(columns_.size()) + " columns");
  }
  data_.insert(data_.end(), values.begin(), values.end());
}

void ExperimentLog::keep_tail(std::size_t n) {
  if (rows() <= n) return;
  data_.erase(data_.begin(), data_.end() - static_cast<std::ptrdiff_t>(n * columns_.size()));
}

void ExperimentLog::set_meta(const std::string& key, const std::string& value) {
  if (key.find(':') != std::string::npos || key.find('\n') != std::string::npos ||
      value.find('\n') != std::string::npos) {
    throw LogError("meta key/value may not contain ':' in the key or newlines");
  }
  for (auto& kv : meta_) {
    if (kv.first == key) {
      kv.second = value;
      return;
    }
  }
  meta_.emplace_back(key, value);
}

std::optional<std::string> ExperimentLog::meta(std::string_view key) const {
  for (const auto& kv : meta_) {
    if (kv.first == key) return kv.second;
  }
  return std::nullopt;
}

std::string format_number(double v) {
  if (v == 0.0) return "0";  // also folds -0
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

// RFC 4180 quoting for header cells; numeric cells never need it.
std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_header(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

double parse_double(std::string_view cell, std::size_t line_no) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    if (cell == "inf") return INFINITY;
    if (cell == "-inf") return -INFINITY;
    if (cell == "nan" || cell == "-nan") return NAN;
    throw LogError("line " + std::to_string(line_no) + ": bad number '" + std::string(cell) + "'");
  }
  return v;
}

}  // namespace

std::string to_csv(const ExperimentLog& log) {
  std::string out;
  const std::size_t ncol = log.columns().size();
  out.reserve(64 + log.rows() * ncol * 12);
  for (const auto& [k, v] : log.meta_entries()) {
    out += "# ";
    out += k;
    out += ": ";
    out += v;
    out += '\n';
  }
  for (std::size_t c = 0; c < ncol; ++c) {
    if (c) out += ',';
    out += quote(log.columns()[c]);
  }
  out += '\n';
  char buf[32];
  for (std::size_t r = 0; r < log.rows(); ++r) {
    const double* row = log.row(r);
    for (std::size_t c = 0; c < ncol; ++c) {
      if (c) out += ',';
      if (row[c] == 0.0) {
        out += '0';
      } else {
        auto res = std::to_chars(buf, buf + sizeof(buf), row[c]);
        out.append(buf, res.ptr);
      }
    }
    out += '\n';
  }
  return out;
}

ExperimentLog parse_csv(std::string_view text) {
  ExperimentLog log;
  bool have_header = false;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<double> row;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      line.remove_prefix(1);
      if (!line.empty() && line.front() == ' ') line.remove_prefix(1);
      const std::size_t colon = line.find(": ");
      if (colon == std::string_view::npos) {
        meta.emplace_back(std::string(line), "");
      } else {
        meta.emplace_back(std::string(line.substr(0, colon)), std::string(line.substr(colon + 2)));
      }
      continue;
    }
    if (!have_header) {
      log = ExperimentLog(split_header(line));
      have_header = true;
      continue;
    }
    row.clear();
    std::size_t cpos = 0;
    while (true) {
      const std::size_t comma = line.find(',', cpos);
      const std::string_view cell =
          line.substr(cpos, comma == std::string_view::npos ? std::string_view::npos : comma - cpos);
      row.push_back(parse_double(cell, line_no));
      if (comma == std::string_view::npos) break;
      cpos = comma + 1;
    }
    try {
      log.add_row(row);
    } catch (const LogError& e) {
      throw LogError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw LogError("log has no header row");
  for (const auto& [k, v] : meta) log.set_meta(k, v);
  return log;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LogError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_csv(const ExperimentLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LogError("cannot write '" + path + "'");
  const std::string text = to_csv(log);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw LogError("write to '" + path + "' failed");
}

ExperimentLog read_csv(const std::string& path) { return parse_csv(read_file(path)); }

}  // namespace fic_teleop
