#pragma once

// Seeded Monte Carlo sweeps over (source count, noise variance). Every trial
// derives its generator seed from its grid coordinates alone, so a sweep is a
// pure function of its configuration whatever the worker count.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "phasedoa/estimators.hpp"
#include "phasedoa/signal_model.hpp"

namespace phasedoa {

struct ModelConfig {
  int n_sensors = 256;
  int grid_size = 50;
  double spacing_ratio = 4.0;
  PhaseMarkovModel phase;
  bool phase_noise = true;  // false: theta = 0 in synthesis
  double sigma_x_sq = 1.0;
  int k = 5;
  double noise_var = 1e-2;
  double occupancy = 0.0;  // <= 0: k / grid_size, or 0.1 when k = 0
  std::uint64_t seed = 1;

  SteeringDictionary dictionary() const;
  double occupancy_for(int sources) const;
  BernoulliGaussianPrior prior_for(int sources) const;
};

struct SweepConfig {
  ModelConfig model;
  EstimatorConfig estimator;
  std::vector<int> k_values{2, 5};
  std::vector<double> noise_grid;  // filled from noise_grid_spec when empty
  int n_trials = 50;
  std::vector<Variant> algorithms{Variant::beamforming, Variant::prvbem,
                                  Variant::pavbem_relaxed, Variant::pavbem};
  int workers = 1;  // <= 0: hardware concurrency
  std::filesystem::path output_dir = "results";

  void validate() const;
};

/// n log-spaced values over [lo, hi] inclusive.
std::vector<double> log_spaced(double lo, double hi, int n);

/// Splitmix-style mix of the trial coordinates.
std::uint64_t derive_seed(std::uint64_t base_seed, int k_index, int noise_index,
                          int trial_index);

/// |z^H z_hat| / (||z|| ||z_hat||); 0 when either vector is zero.
double normalized_correlation(const ComplexVector& z, const ComplexVector& z_hat);

struct AlgorithmResult {
  Variant variant;
  double correlation = 0.0;
  int iterations = 0;
  bool converged = false;
  double runtime_seconds = 0.0;
  bool failed = false;
  std::string error;
};

struct TrialRecord {
  std::uint64_t seed = 0;
  int k = 0;
  double noise_var = 0.0;
  int trial_index = 0;
  GroundTruth truth;
  std::vector<AlgorithmResult> results;  // in config.algorithms order
};

struct SweepCell {
  int k_index = 0;
  int noise_index = 0;
};

/// Synthesizes one draw for the cell and runs every configured algorithm on
/// it. Estimator exceptions and non-finite outputs mark that algorithm failed.
TrialRecord run_trial(const SweepConfig& config, SweepCell cell, int trial_index);

struct SweepTable {
  int k = 0;
  std::vector<Variant> algorithms;
  std::vector<double> noise_grid;
  std::vector<std::vector<double>> mean_correlation;  // [noise][algorithm]
  std::vector<std::vector<int>> failed;               // [noise][algorithm]
};

struct SweepResult {
  std::vector<SweepTable> tables;    // one per k
  std::vector<TrialRecord> records;  // cell-major, trial-minor
};

/// Called once per finished cell, serialized, in completion order.
using CellProgress = std::function<void(int k, double noise_var, const std::vector<double>& means,
                                        const std::vector<int>& failed)>;

/// Runs the full grid. The output directory is probed for writability first
/// if `require_output` is set.
SweepResult run_sweep(const SweepConfig& config, const CellProgress& progress = {},
                      bool require_output = false);

/// Throws std::runtime_error when dir cannot be created or written to.
void check_output_dir(const std::filesystem::path& dir);

std::string dat_filename(const SweepConfig& config, int k);

/// Whitespace-delimited: a '#' header naming the columns, then one row per
/// noise level (sigma^2 followed by the mean correlation of each algorithm).
/// Written to a temporary file and renamed into place.
void write_dat(const SweepTable& table, const std::filesystem::path& path);

struct DatFile {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};
DatFile read_dat(const std::filesystem::path& path);

}  // namespace phasedoa
