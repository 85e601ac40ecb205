#include "cavqed/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "cavqed/error.hpp"

namespace cavqed {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view field, double& out) {
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const auto res = std::from_chars(field.data(), field.data() + field.size(), out);
  return res.ec == std::errc() && res.ptr == field.data() + field.size() && std::isfinite(out);
}

double round12(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(format_number(v).c_str(), nullptr);
}

nlohmann::ordered_json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round12(v);
}

}  // namespace

Spectrum parse_spectrum_csv(std::istream& in, std::vector<std::string>* warnings) {
  AxisKind axis = AxisKind::FrequencyOffset;
  bool have_header = false;
  std::size_t columns = 0;
  struct Row {
    double x, y;
    int line;
  };
  std::vector<Row> rows;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (line_no == 1 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string_view body = trim(line.substr(1));
      if (body.substr(0, 5) == "axis:") axis = parse_axis_kind(trim(body.substr(5)));
      continue;
    }
    const auto fields = split_commas(line);
    if (!have_header) {
      if (fields.size() < 2 || fields[0] != "x" || fields[1] != "y") {
        throw ParseError("expected header row 'x,y'", line_no);
      }
      have_header = true;
      columns = fields.size();
      continue;
    }
    if (fields.size() != columns) {
      throw ParseError("expected " + std::to_string(columns) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    Row r{0.0, 0.0, line_no};
    if (!parse_double(fields[0], r.x) || !parse_double(fields[1], r.y)) {
      throw ParseError("malformed number", line_no);
    }
    rows.push_back(r);
  }
  if (in.bad()) throw IoError("read failure");
  if (rows.empty()) throw ParseError("no data rows");

  const bool sorted = std::is_sorted(rows.begin(), rows.end(),
                                     [](const Row& a, const Row& b) { return a.x < b.x; });
  if (!sorted) {
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.x < b.x; });
    if (warnings) warnings->push_back("rows were not sorted by x; sorted ascending");
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].x == rows[i - 1].x) {
      const int line = std::max(rows[i].line, rows[i - 1].line);
      throw ParseError("duplicate x value " + format_number(rows[i].x), line);
    }
  }
  std::vector<double> x(rows.size()), y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x[i] = rows[i].x;
    y[i] = rows[i].y;
  }
  return Spectrum(std::move(x), std::move(y), axis);
}

Spectrum read_spectrum_csv(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_spectrum_csv(in, warnings);
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_csv(const std::string& path, const CsvHeader& header,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& data) {
  if (columns.size() != data.size()) throw InvalidArgument("column names and data disagree");
  const std::size_t n = data.empty() ? 0 : data.front().size();
  for (const auto& c : data) {
    if (c.size() != n) throw InvalidArgument("CSV columns differ in length");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "# mode: " << header.mode << '\n';
  out << "# axis: " << header.axis << '\n';
  out << "# units: " << header.units << '\n';
  for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << columns[j];
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < data.size(); ++j) out << (j ? "," : "") << format_number(data[j][i]);
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

void write_spectrum_csv(const std::string& path, const CsvHeader& header, const Spectrum& s) {
  write_csv(path, header, {"x", "y"}, {s.x(), s.y()});
}

std::string results_json(const FitResult& result, std::string_view config_digest) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json values = nlohmann::ordered_json::object();
  nlohmann::ordered_json sigmas = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < result.names.size(); ++i) {
    values[result.names[i]] = number(result.values[i]);
    sigmas[result.names[i]] = number(result.sigmas[i]);
  }
  nlohmann::ordered_json cov = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < result.covariance.rows(); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < result.covariance.cols(); ++c) row.push_back(number(result.covariance(r, c)));
    cov.push_back(std::move(row));
  }
  j["values"] = std::move(values);
  j["sigmas"] = std::move(sigmas);
  j["covariance"] = std::move(cov);
  j["residual_norm"] = number(result.residual_norm);
  j["reduced_chi2"] = number(result.reduced_chi2);
  j["converged"] = result.converged;
  j["iterations"] = result.iterations;
  j["tool_version"] = kToolVersion;
  j["config_digest"] = config_digest;
  return j.dump(2) + "\n";
}

void write_results(const FitResult& result, const std::string& path, std::string_view config_digest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << results_json(result, config_digest);
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

}  // namespace cavqed
