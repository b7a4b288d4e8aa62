#pragma once

// Columnar text files for synthetic draws.
//
// Observation file: '#'-prefixed "key value" metadata lines, a
// "# columns: real imag theta" line, then one line per sensor.
// Ground-truth file: same header style, one line per grid atom with
// "index angle_rad real imag".

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "phasedoa/signal_model.hpp"

namespace phasedoa {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
/// Throws std::invalid_argument on anything but a complete number.
double parse_double(std::string_view text);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomically(const std::filesystem::path& path, const std::string& contents);

struct ObservationFile {
  std::map<std::string, std::string> metadata;
  ComplexVector y;
  RealVector theta;  // empty when the file has no theta column
};

struct TruthFile {
  std::map<std::string, std::string> metadata;
  ComplexVector z;
  std::vector<double> angles;
};

void write_observation(const std::filesystem::path& path, const ComplexVector& y,
                       const RealVector& theta,
                       const std::map<std::string, std::string>& metadata);
ObservationFile read_observation(const std::filesystem::path& path);

void write_truth(const std::filesystem::path& path, const ComplexVector& z,
                 const std::vector<double>& angles,
                 const std::map<std::string, std::string>& metadata);
TruthFile read_truth(const std::filesystem::path& path);

}  // namespace phasedoa
