#include "phasedoa/config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>

#include "phasedoa/data_io.hpp"

namespace phasedoa {
namespace {

constexpr std::array<ConfigKey, 27> kAllKeys{{
    {"n_sensors", "256", "number of array sensors N"},
    {"grid_size", "50", "number of candidate angles M"},
    {"spacing_ratio", "4", "sensor spacing over wavelength"},
    {"a", "0.8", "phase AR(1) coefficient"},
    {"sigma_theta_sq", "1", "phase innovation variance"},
    {"sigma_1_sq", "1e6", "variance of the first sensor's phase"},
    {"sigma_x_sq", "1", "source amplitude variance"},
    {"phase_noise", "true", "apply phase noise when synthesizing"},
    {"k", "5", "number of sources"},
    {"noise_var", "0.01", "additive noise variance"},
    {"occupancy", "auto", "prior p_i; auto = k / grid_size (0.1 if k = 0)"},
    {"seed", "1", "base random seed"},
    {"variant", "pavbem", "beamforming | prvbem | pavbem_relaxed | pavbem"},
    {"max_iterations", "200", "outer VBEM iterations"},
    {"convergence_tol", "1e-6", "max-norm change of <z> to stop"},
    {"estimate_noise", "true", "re-estimate sigma^2 each iteration"},
    {"initial_noise_var", "auto", "starting sigma^2; auto = noise_var"},
    {"order", "energy", "atom update order: energy | index"},
    {"warm_start", "relaxed", "pavbem start: relaxed | beamforming"},
    {"warm_start_iterations", "50", "cap on relaxed pre-pass iterations"},
    {"k_values", "2,5", "source counts swept"},
    {"noise_grid", "", "explicit comma-separated sigma^2 list (overrides noise_grid_spec)"},
    {"noise_grid_spec", "logspace:1e-3:1:8", "sigma^2 grid as logspace:lo:hi:count"},
    {"n_trials", "50", "trials per sweep cell"},
    {"algorithms", "beamforming,prvbem,pavbem_relaxed,pavbem", "algorithms swept, in column order"},
    {"workers", "0", "sweep worker threads; 0 = hardware concurrency"},
    {"output_dir", "results", "directory for sweep .dat files"},
}};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(sep, start);
    const auto end = pos == std::string_view::npos ? s.size() : pos;
    std::string item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool known_key(std::string_view key) {
  return std::any_of(kAllKeys.begin(), kAllKeys.end(),
                     [&](const ConfigKey& k) { return k.name == key; });
}

std::string_view default_of(std::string_view key) {
  for (const auto& k : kAllKeys) {
    if (k.name == key) return k.default_value;
  }
  return {};
}

class Reader {
 public:
  explicit Reader(const KeyValueConfig& values) : values_(values) {}

  std::string text(std::string_view key) const {
    if (auto v = values_.get(key)) return *v;
    return std::string(default_of(key));
  }

  double real(std::string_view key) const {
    const std::string v = text(key);
    try {
      return parse_double(v);
    } catch (const std::invalid_argument&) {
      throw error(key, "expected a number, got '" + v + "'");
    }
  }

  long long integer(std::string_view key) const {
    const std::string v = text(key);
    std::size_t used = 0;
    long long out = 0;
    try {
      out = std::stoll(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size()) throw error(key, "expected an integer, got '" + v + "'");
    return out;
  }

  int positive_int(std::string_view key, int min_value = 1) const {
    const long long v = integer(key);
    if (v < min_value || v > std::numeric_limits<int>::max()) {
      throw error(key, "must be >= " + std::to_string(min_value));
    }
    return static_cast<int>(v);
  }

  bool flag(std::string_view key) const {
    std::string v = text(key);
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw error(key, "expected true/false, got '" + v + "'");
  }

  static ConfigError error(std::string_view key, const std::string& what) {
    return ConfigError(std::string(key), "config key '" + std::string(key) + "': " + what);
  }

 private:
  const KeyValueConfig& values_;
};

}  // namespace

std::span<const ConfigKey> config_keys() { return kAllKeys; }

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& source) {
  KeyValueConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", source + ":" + std::to_string(line_no) +
                                ": expected 'key = value', got '" + body + "'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (!known_key(key)) {
      throw ConfigError(key, source + ":" + std::to_string(line_no) + ": unknown config key '" +
                                 key + "'");
    }
    cfg.values_[key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  return parse(in, path.string());
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  if (!known_key(key)) throw ConfigError(key, "unknown config key '" + key + "'");
  values_[key] = value;
}

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> parse_noise_grid(std::string_view text) {
  constexpr std::string_view prefix = "logspace:";
  if (text.starts_with(prefix)) {
    const auto parts = split(text.substr(prefix.size()), ':');
    if (parts.size() != 3) {
      throw std::invalid_argument("logspace grid needs lo:hi:count");
    }
    const double lo = parse_double(parts[0]);
    const double hi = parse_double(parts[1]);
    const double count = parse_double(parts[2]);
    if (count < 1 || count != std::floor(count)) {
      throw std::invalid_argument("logspace count must be a positive integer");
    }
    return log_spaced(lo, hi, static_cast<int>(count));
  }
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_double(item));
  return out;
}

SweepConfig resolve_config(const KeyValueConfig& values) {
  const Reader r(values);
  SweepConfig cfg;
  ModelConfig& m = cfg.model;

  m.n_sensors = r.positive_int("n_sensors");
  m.grid_size = r.positive_int("grid_size");
  m.spacing_ratio = r.real("spacing_ratio");
  if (!std::isfinite(m.spacing_ratio)) throw Reader::error("spacing_ratio", "must be finite");
  m.phase.a = r.real("a");
  if (!(m.phase.a >= 0)) throw Reader::error("a", "must be >= 0");
  m.phase.sigma_theta_sq = r.real("sigma_theta_sq");
  if (!(m.phase.sigma_theta_sq > 0)) throw Reader::error("sigma_theta_sq", "must be > 0");
  m.phase.sigma_1_sq = r.real("sigma_1_sq");
  if (!(m.phase.sigma_1_sq > 0)) throw Reader::error("sigma_1_sq", "must be > 0");
  m.sigma_x_sq = r.real("sigma_x_sq");
  if (!(m.sigma_x_sq > 0)) throw Reader::error("sigma_x_sq", "must be > 0");
  m.phase_noise = r.flag("phase_noise");
  m.k = r.positive_int("k", 0);
  if (m.k > m.grid_size) {
    throw Reader::error("k", "k=" + std::to_string(m.k) + " exceeds grid_size=" +
                                 std::to_string(m.grid_size));
  }
  m.noise_var = r.real("noise_var");
  if (!(m.noise_var >= 0) || !std::isfinite(m.noise_var)) {
    throw Reader::error("noise_var", "must be finite and >= 0");
  }
  if (r.text("occupancy") != "auto") {
    m.occupancy = r.real("occupancy");
    if (!(m.occupancy > 0 && m.occupancy <= 1)) throw Reader::error("occupancy", "must be in (0, 1]");
  }
  const long long seed = r.integer("seed");
  if (seed < 0) throw Reader::error("seed", "must be >= 0");
  m.seed = static_cast<std::uint64_t>(seed);

  EstimatorConfig& e = cfg.estimator;
  try {
    e.variant = parse_variant(r.text("variant"));
  } catch (const std::invalid_argument& ex) {
    throw Reader::error("variant", ex.what());
  }
  e.max_iterations = r.positive_int("max_iterations");
  e.convergence_tol = r.real("convergence_tol");
  if (!(e.convergence_tol > 0)) throw Reader::error("convergence_tol", "must be > 0");
  e.estimate_noise = r.flag("estimate_noise");
  if (r.text("initial_noise_var") == "auto") {
    e.initial_noise_var = m.noise_var > 0 ? m.noise_var : 1e-2;
  } else {
    e.initial_noise_var = r.real("initial_noise_var");
    if (!(e.initial_noise_var > 0)) throw Reader::error("initial_noise_var", "must be > 0");
  }
  const std::string order = r.text("order");
  if (order == "energy") {
    e.order = UpdateOrder::energy;
  } else if (order == "index") {
    e.order = UpdateOrder::index;
  } else {
    throw Reader::error("order", "expected energy or index, got '" + order + "'");
  }
  try {
    e.warm_start = parse_warm_start(r.text("warm_start"));
  } catch (const std::invalid_argument& ex) {
    throw Reader::error("warm_start", ex.what());
  }
  e.warm_start_iterations = r.positive_int("warm_start_iterations", 0);

  cfg.k_values.clear();
  for (const auto& item : split(r.text("k_values"), ',')) {
    try {
      const int k = std::stoi(item);
      if (k < 0 || k > m.grid_size) throw std::out_of_range("k");
      cfg.k_values.push_back(k);
    } catch (const std::exception&) {
      throw Reader::error("k_values", "bad source count '" + item + "'");
    }
  }
  if (cfg.k_values.empty()) throw Reader::error("k_values", "is empty");

  const std::string explicit_grid = r.text("noise_grid");
  const std::string_view grid_key = explicit_grid.empty() ? "noise_grid_spec" : "noise_grid";
  try {
    cfg.noise_grid = parse_noise_grid(explicit_grid.empty() ? r.text("noise_grid_spec")
                                                             : explicit_grid);
  } catch (const std::invalid_argument& ex) {
    throw Reader::error(grid_key, ex.what());
  }
  if (cfg.noise_grid.empty()) throw Reader::error(grid_key, "is empty");
  for (double v : cfg.noise_grid) {
    if (!(v > 0) || !std::isfinite(v)) throw Reader::error(grid_key, "values must be > 0");
  }

  cfg.n_trials = r.positive_int("n_trials");
  cfg.algorithms.clear();
  for (const auto& item : split(r.text("algorithms"), ',')) {
    try {
      cfg.algorithms.push_back(parse_variant(item));
    } catch (const std::invalid_argument& ex) {
      throw Reader::error("algorithms", ex.what());
    }
  }
  if (cfg.algorithms.empty()) throw Reader::error("algorithms", "is empty");
  cfg.workers = r.positive_int("workers", 0);
  cfg.output_dir = r.text("output_dir");
  return cfg;
}

}  // namespace phasedoa
