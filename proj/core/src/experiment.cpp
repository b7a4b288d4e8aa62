#include "phasedoa/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <span>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "phasedoa/data_io.hpp"

namespace phasedoa {

SteeringDictionary ModelConfig::dictionary() const {
  return build_dictionary(n_sensors, spacing_ratio, default_angle_grid(grid_size));
}

double ModelConfig::occupancy_for(int sources) const {
  if (occupancy > 0) return occupancy;
  if (sources > 0) return static_cast<double>(sources) / grid_size;
  return 0.1;
}

BernoulliGaussianPrior ModelConfig::prior_for(int sources) const {
  return BernoulliGaussianPrior::uniform(grid_size, occupancy_for(sources), sigma_x_sq);
}

void SweepConfig::validate() const {
  if (n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
  if (k_values.empty()) throw std::invalid_argument("k_values is empty");
  for (int k : k_values) {
    if (k < 0 || k > model.grid_size) {
      throw std::invalid_argument("k value " + std::to_string(k) + " outside [0, grid_size]");
    }
  }
  if (noise_grid.empty()) throw std::invalid_argument("noise_grid is empty");
  for (double v : noise_grid) {
    if (!(v > 0) || !std::isfinite(v)) {
      throw std::invalid_argument("noise_grid values must be finite and > 0");
    }
  }
  if (algorithms.empty()) throw std::invalid_argument("algorithms is empty");
  model.phase.validate();
  estimator.validate();
}

std::vector<double> log_spaced(double lo, double hi, int n) {
  if (n < 1 || !(lo > 0) || !(hi >= lo)) {
    throw std::invalid_argument("log_spaced: need n >= 1 and 0 < lo <= hi");
  }
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double l0 = std::log10(lo);
  const double l1 = std::log10(hi);
  for (int i = 0; i < n; ++i) {
    out[i] = std::pow(10.0, l0 + (l1 - l0) * i / (n - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base_seed, int k_index, int noise_index,
                          int trial_index) {
  std::uint64_t h = splitmix64(base_seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(k_index));
  h = splitmix64(h ^ static_cast<std::uint64_t>(noise_index));
  h = splitmix64(h ^ static_cast<std::uint64_t>(trial_index));
  return h;
}

double normalized_correlation(const ComplexVector& z, const ComplexVector& z_hat) {
  if (z.size() != z_hat.size()) {
    throw std::invalid_argument("normalized_correlation: length mismatch");
  }
  const double nz = z.norm();
  const double nh = z_hat.norm();
  if (nz == 0 || nh == 0) return 0.0;
  return std::min(1.0, std::abs(z.dot(z_hat)) / (nz * nh));
}

TrialRecord run_trial(const SweepConfig& config, SweepCell cell, int trial_index) {
  if (trial_index < 0 || trial_index >= config.n_trials) {
    throw std::invalid_argument("trial index out of range");
  }
  const int k = config.k_values.at(cell.k_index);
  const double noise_var = config.noise_grid.at(cell.noise_index);

  TrialRecord record;
  record.k = k;
  record.noise_var = noise_var;
  record.trial_index = trial_index;
  record.seed = derive_seed(config.model.seed, cell.k_index, cell.noise_index, trial_index);

  Rng rng(record.seed);
  const SteeringDictionary dict = config.model.dictionary();
  const BernoulliGaussianPrior prior = config.model.prior_for(k);
  record.truth = sample_ground_truth(prior, k, rng);
  if (config.model.phase_noise) {
    record.truth.theta = sample_phase_trajectory(config.model.phase, dict.n_sensors(), rng);
  }
  const Observation obs = synthesize_observation(dict, record.truth, noise_var, rng);

  EstimatorConfig est = config.estimator;
  est.initial_noise_var = noise_var;

  for (Variant variant : config.algorithms) {
    AlgorithmResult result;
    result.variant = variant;
    const auto start = std::chrono::steady_clock::now();
    try {
      const DoaEstimate e = estimate(variant, obs.y, dict, config.model.phase, prior, est);
      result.iterations = e.iterations_used;
      result.converged = e.converged;
      if (!e.z_hat.allFinite()) {
        result.failed = true;
        result.error = "non-finite estimate";
      } else {
        result.correlation = normalized_correlation(record.truth.z, e.z_hat);
      }
    } catch (const std::exception& ex) {
      result.failed = true;
      result.error = ex.what();
    }
    result.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    record.results.push_back(std::move(result));
  }
  return record;
}

void check_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory " + dir.string() + ": " +
                             ec.message());
  }
  const auto probe = dir / ".phasedoa_write_probe";
  {
    std::ofstream out(probe);
    if (!out || !(out << "probe\n")) {
      throw std::runtime_error("output directory " + dir.string() + " is not writable");
    }
  }
  std::filesystem::remove(probe, ec);
}

namespace {

struct CellSummary {
  std::vector<double> means;
  std::vector<int> failed;
};

CellSummary summarize_cell(std::span<const TrialRecord> records, int n_alg) {
  std::vector<double> sums(n_alg, 0.0);
  std::vector<int> ok(n_alg, 0);
  CellSummary out{std::vector<double>(n_alg), std::vector<int>(n_alg, 0)};
  for (const TrialRecord& rec : records) {
    for (int a = 0; a < n_alg; ++a) {
      if (rec.results[a].failed) {
        ++out.failed[a];
      } else {
        sums[a] += rec.results[a].correlation;
        ++ok[a];
      }
    }
  }
  for (int a = 0; a < n_alg; ++a) {
    out.means[a] = ok[a] > 0 ? sums[a] / ok[a] : std::nan("");
  }
  return out;
}

}  // namespace

SweepResult run_sweep(const SweepConfig& config, const CellProgress& progress,
                      bool require_output) {
  config.validate();
  if (require_output) check_output_dir(config.output_dir);

  const int n_k = static_cast<int>(config.k_values.size());
  const int n_noise = static_cast<int>(config.noise_grid.size());
  const int n_trials = config.n_trials;
  const int n_cells = n_k * n_noise;
  const int n_jobs = n_cells * n_trials;
  const int n_alg = static_cast<int>(config.algorithms.size());

  SweepResult result;
  result.records.resize(n_jobs);
  auto cell_records = [&](int cell) {
    return std::span<const TrialRecord>(result.records).subspan(
        static_cast<std::size_t>(cell) * n_trials, n_trials);
  };

  int workers = config.workers > 0 ? config.workers
                                   : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, n_jobs);

  // Jobs are handed out cell-major, so cells finish roughly in order. The
  // worker that completes a cell's last trial reports it.
  std::atomic<int> next{0};
  std::vector<std::atomic<int>> remaining(n_cells);
  for (auto& r : remaining) r = n_trials;
  std::mutex report_mutex;
  auto work = [&] {
    for (int job = next++; job < n_jobs; job = next++) {
      const int trial = job % n_trials;
      const int cell = job / n_trials;
      const SweepCell c{cell / n_noise, cell % n_noise};
      result.records[job] = run_trial(config, c, trial);
      if (--remaining[cell] == 0 && progress) {
        const CellSummary summary = summarize_cell(cell_records(cell), n_alg);
        const std::lock_guard lock(report_mutex);
        progress(config.k_values[c.k_index], config.noise_grid[c.noise_index], summary.means,
                 summary.failed);
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  for (int ki = 0; ki < n_k; ++ki) {
    SweepTable table;
    table.k = config.k_values[ki];
    table.algorithms = config.algorithms;
    table.noise_grid = config.noise_grid;
    for (int ni = 0; ni < n_noise; ++ni) {
      CellSummary summary = summarize_cell(cell_records(ki * n_noise + ni), n_alg);
      table.mean_correlation.push_back(std::move(summary.means));
      table.failed.push_back(std::move(summary.failed));
    }
    result.tables.push_back(std::move(table));
  }
  return result;
}

std::string dat_filename(const SweepConfig& config, int k) {
  std::ostringstream name;
  name << "corr_noise_variance_n" << config.model.n_sensors << "_m" << config.model.grid_size
       << "_k" << k << "_trials" << config.n_trials << ".dat";
  return name.str();
}

void write_dat(const SweepTable& table, const std::filesystem::path& path) {
  if (table.noise_grid.empty() || table.algorithms.empty()) {
    throw std::invalid_argument("write_dat: empty table");
  }
  std::string text = "# sigma2";
  for (Variant v : table.algorithms) {
    text += ' ';
    text += to_string(v);
  }
  text += '\n';
  for (std::size_t r = 0; r < table.noise_grid.size(); ++r) {
    text += format_double(table.noise_grid[r]);
    for (double v : table.mean_correlation.at(r)) {
      text += ' ';
      text += format_double(v);
    }
    text += '\n';
  }
  write_file_atomically(path, text);
}

DatFile read_dat(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  DatFile dat;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    if (line[0] == '#') {
      std::string tok;
      fields >> tok;  // '#'
      while (fields >> tok) dat.columns.push_back(tok);
      continue;
    }
    std::vector<double> row;
    std::string tok;
    while (fields >> tok) row.push_back(parse_double(tok));
    dat.rows.push_back(std::move(row));
  }
  return dat;
}

}  // namespace phasedoa
