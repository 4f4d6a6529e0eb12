#include "seriesband/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace seriesband {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_number(const std::string& field, long row, const std::string& column) {
  const std::string t = trim(field);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) {
    std::ostringstream msg;
    msg << "CSV parse error at data row " << row << ", column " << column << ": '" << t
        << "' is not a number";
    fail(errc::parse_error, msg.str());
  }
  return v;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::parse_error, "cannot open input file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail(errc::parse_error, "input file '" + path + "' is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "y")
    fail(errc::parse_error, "dataset header must be x1,...,xd,y; got '" + line + "'");
  const int d = static_cast<int>(header.size()) - 1;
  for (int c = 0; c < d; ++c)
    if (header[c] != "x" + std::to_string(c + 1))
      fail(errc::parse_error, "dataset header column " + std::to_string(c + 1) + " must be x" +
                                  std::to_string(c + 1) + ", got '" + header[c] + "'");

  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  long row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != d + 1) {
      std::ostringstream msg;
      msg << "CSV parse error at data row " << row << ": expected " << d + 1 << " columns, got "
          << fields.size();
      fail(errc::parse_error, msg.str());
    }
    std::vector<double> x(d);
    for (int c = 0; c < d; ++c) x[c] = parse_number(fields[c], row, header[c]);
    ys.push_back(parse_number(fields[d], row, "y"));
    xs.push_back(std::move(x));
  }
  if (xs.empty()) fail(errc::parse_error, "input file '" + path + "' has no data rows");

  Dataset data;
  data.x.resize(static_cast<long>(xs.size()), d);
  data.y.resize(static_cast<long>(ys.size()));
  for (size_t i = 0; i < xs.size(); ++i) {
    for (int c = 0; c < d; ++c) data.x(static_cast<long>(i), c) = xs[i][c];
    data.y[static_cast<long>(i)] = ys[i];
  }
  data.validate();
  return data;
}

void write_vector_csv(const std::string& path, const std::string& header, const VectorXd& v) {
  std::ofstream out(path);
  if (!out) fail(errc::parse_error, "cannot open output file '" + path + "'");
  out << header << "\n";
  for (long i = 0; i < v.size(); ++i) out << format_double(v[i]) << "\n";
}

void write_matrix_csv(const std::string& path, const MatrixXd& m) {
  std::ofstream out(path);
  if (!out) fail(errc::parse_error, "cannot open output file '" + path + "'");
  for (long i = 0; i < m.rows(); ++i) {
    for (long j = 0; j < m.cols(); ++j) {
      if (j) out << ",";
      out << format_double(m(i, j));
    }
    out << "\n";
  }
}

KvConfig KvConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::invalid_config, "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

KvConfig KvConfig::parse_string(const std::string& text, const std::string& origin) {
  KvConfig cfg;
  std::stringstream ss(text);
  std::string line, section;
  long lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail(errc::invalid_config, origin + ":" + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(errc::invalid_config, origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(errc::invalid_config, origin + ":" + std::to_string(lineno) + ": empty key");
    cfg.values_[section][key] = value;
  }
  return cfg;
}

bool KvConfig::has(const std::string& section, const std::string& key) const {
  const auto s = values_.find(section);
  return s != values_.end() && s->second.count(key) > 0;
}

std::string KvConfig::get(const std::string& section, const std::string& key) const {
  if (!has(section, key))
    fail(errc::invalid_config, "config is missing required key [" + section + "] " + key);
  const std::string v = values_.at(section).at(key);
  effective_[section][key] = v;
  return v;
}

std::string KvConfig::get_or(const std::string& section, const std::string& key,
                             const std::string& fallback) const {
  const std::string v = has(section, key) ? values_.at(section).at(key) : fallback;
  effective_[section][key] = v;
  return v;
}

double KvConfig::get_double(const std::string& section, const std::string& key) const {
  const std::string v = get(section, key);
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size())
    fail(errc::invalid_config, "config key [" + section + "] " + key + " = '" + v + "' is not a number");
  return out;
}

double KvConfig::get_double_or(const std::string& section, const std::string& key, double fallback) const {
  if (!has(section, key)) {
    effective_[section][key] = format_double(fallback);
    return fallback;
  }
  return get_double(section, key);
}

long KvConfig::get_long(const std::string& section, const std::string& key) const {
  const double v = get_double(section, key);
  const long out = static_cast<long>(v);
  if (static_cast<double>(out) != v)
    fail(errc::invalid_config, "config key [" + section + "] " + key + " must be an integer");
  return out;
}

long KvConfig::get_long_or(const std::string& section, const std::string& key, long fallback) const {
  if (!has(section, key)) {
    effective_[section][key] = std::to_string(fallback);
    return fallback;
  }
  return get_long(section, key);
}

}  // namespace seriesband
