#include "phasedoa/data_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace phasedoa {

std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, end);
}

double parse_double(std::string_view text) {
  // from_chars rejects a leading '+', which config files may contain
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return value;
}

void write_file_atomically(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename into " + path.string() + ": " + ec.message());
  }
}

namespace {

struct ParsedTable {
  std::map<std::string, std::string> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

ParsedTable parse_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  ParsedTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream fields(line.substr(1));
      std::string key;
      if (!(fields >> key)) continue;
      if (key == "columns:") {
        std::string col;
        while (fields >> col) table.columns.push_back(col);
      } else {
        std::string value;
        std::getline(fields >> std::ws, value);
        table.metadata[key] = value;
      }
      continue;
    }
    std::istringstream fields(line);
    std::vector<double> row;
    std::string tok;
    try {
      while (fields >> tok) row.push_back(parse_double(tok));
    } catch (const std::invalid_argument&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": bad number '" + tok + "'");
    }
    if (!table.rows.empty() && row.size() != table.rows.front().size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": ragged row");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string header(std::string_view kind, const std::map<std::string, std::string>& metadata,
                   std::string_view columns) {
  std::string text = "# phasedoa ";
  text += kind;
  text += '\n';
  for (const auto& [key, value] : metadata) {
    text += "# " + key + ' ' + value + '\n';
  }
  text += "# columns: ";
  text += columns;
  text += '\n';
  return text;
}

}  // namespace

void write_observation(const std::filesystem::path& path, const ComplexVector& y,
                       const RealVector& theta,
                       const std::map<std::string, std::string>& metadata) {
  const bool with_theta = theta.size() != 0;
  if (with_theta && theta.size() != y.size()) {
    throw std::invalid_argument("write_observation: theta length does not match y");
  }
  std::string text = header("observation", metadata, with_theta ? "real imag theta" : "real imag");
  for (int n = 0; n < y.size(); ++n) {
    text += format_double(y[n].real()) + ' ' + format_double(y[n].imag());
    if (with_theta) text += ' ' + format_double(theta[n]);
    text += '\n';
  }
  write_file_atomically(path, text);
}

ObservationFile read_observation(const std::filesystem::path& path) {
  ParsedTable table = parse_table(path);
  ObservationFile file;
  file.metadata = std::move(table.metadata);
  const int n = static_cast<int>(table.rows.size());
  if (n == 0) throw std::runtime_error(path.string() + ": no sensor rows");
  const std::size_t width = table.rows.front().size();
  if (width != 2 && width != 3) {
    throw std::runtime_error(path.string() + ": expected 2 or 3 columns, got " +
                             std::to_string(width));
  }
  file.y.resize(n);
  if (width == 3) file.theta.resize(n);
  for (int i = 0; i < n; ++i) {
    file.y[i] = {table.rows[i][0], table.rows[i][1]};
    if (width == 3) file.theta[i] = table.rows[i][2];
  }
  return file;
}

void write_truth(const std::filesystem::path& path, const ComplexVector& z,
                 const std::vector<double>& angles,
                 const std::map<std::string, std::string>& metadata) {
  if (static_cast<std::size_t>(z.size()) != angles.size()) {
    throw std::invalid_argument("write_truth: angle count does not match z");
  }
  std::string text = header("ground-truth", metadata, "index angle_rad real imag");
  for (int i = 0; i < z.size(); ++i) {
    text += std::to_string(i) + ' ' + format_double(angles[i]) + ' ' +
            format_double(z[i].real()) + ' ' + format_double(z[i].imag()) + '\n';
  }
  write_file_atomically(path, text);
}

TruthFile read_truth(const std::filesystem::path& path) {
  ParsedTable table = parse_table(path);
  TruthFile file;
  file.metadata = std::move(table.metadata);
  const int m = static_cast<int>(table.rows.size());
  if (m == 0) throw std::runtime_error(path.string() + ": no atom rows");
  if (table.rows.front().size() != 4) {
    throw std::runtime_error(path.string() + ": expected 4 columns");
  }
  file.z.resize(m);
  for (int i = 0; i < m; ++i) {
    file.angles.push_back(table.rows[i][1]);
    file.z[i] = {table.rows[i][2], table.rows[i][3]};
  }
  return file;
}

}  // namespace phasedoa
