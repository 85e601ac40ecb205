#pragma once

// Spectrum CSV files and fit-result JSON.
//
// CSV layout: '#' comment lines (a "# axis: frequency-offset|wavelength"
// comment sets the axis kind), a header whose first two fields are x,y,
// then one numeric row per point. Extra columns are allowed and ignored.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "cavqed/fit.hpp"
#include "cavqed/spectrum_data.hpp"

namespace cavqed {

inline constexpr std::string_view kToolVersion = "cavqed 1.0.0";

// Unsorted rows are sorted and a warning appended to `warnings` (if given).
// Throws ParseError (with the 1-based line) on malformed rows, duplicate
// abscissae or files without data; IoError when the file cannot be read.
Spectrum parse_spectrum_csv(std::istream& in, std::vector<std::string>* warnings = nullptr);
Spectrum read_spectrum_csv(const std::string& path, std::vector<std::string>* warnings = nullptr);

struct CsvHeader {
  std::string mode;
  std::string axis;
  std::string units;
};

// %.12g formatting, the precision used in every output file.
std::string format_number(double v);

// Comment header, then columns named by `columns`, one row per entry of
// the equally sized column vectors.
void write_csv(const std::string& path, const CsvHeader& header,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& data);

void write_spectrum_csv(const std::string& path, const CsvHeader& header, const Spectrum& s);

// Keys in order: values, sigmas, covariance (row-major nested arrays),
// residual_norm, reduced_chi2, converged, iterations, tool_version,
// config_digest. Floats carry 12 significant digits; non-finite values are
// written as null.
std::string results_json(const FitResult& result, std::string_view config_digest);
void write_results(const FitResult& result, const std::string& path,
                   std::string_view config_digest = "");

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

}  // namespace cavqed
