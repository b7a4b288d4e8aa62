#include "phasedoa/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace phasedoa {

SteeringDictionary::SteeringDictionary(int n_sensors, double spacing_ratio,
                                       std::vector<double> angles)
    : spacing_ratio_(spacing_ratio), angles_(std::move(angles)) {
  if (n_sensors < 1) {
    throw std::invalid_argument("n_sensors must be >= 1, got " +
                                std::to_string(n_sensors));
  }
  if (angles_.empty()) {
    throw std::invalid_argument("angle grid is empty");
  }
  if (!std::isfinite(spacing_ratio_)) {
    throw std::invalid_argument("spacing_ratio must be finite");
  }
  const double half_pi = std::numbers::pi / 2;
  for (double phi : angles_) {
    // allow a few ulps of slack so grids built by accumulation still pass
    if (!std::isfinite(phi) || std::abs(phi) > half_pi * (1 + 1e-12)) {
      throw std::invalid_argument("angle outside [-pi/2, pi/2]: " +
                                  std::to_string(phi));
    }
  }

  const int m = static_cast<int>(angles_.size());
  columns_.resize(n_sensors, m);
  energies_.resize(m);
  for (int i = 0; i < m; ++i) {
    const double k = 2 * std::numbers::pi * spacing_ratio_ * std::sin(angles_[i]);
    for (int n = 0; n < n_sensors; ++n) {
      // Reduce the phase first: k * n grows to ~6e3 rad for the default array.
      const double phase = std::remainder(k * (n + 1), 2 * std::numbers::pi);
      columns_(n, i) = std::polar(1.0, phase);
    }
    energies_[i] = columns_.col(i).squaredNorm();
  }
}

SteeringDictionary build_dictionary(int n_sensors, double spacing_ratio,
                                    const std::vector<double>& angles) {
  return SteeringDictionary(n_sensors, spacing_ratio, angles);
}

std::vector<double> default_angle_grid(int m) {
  if (m < 1) {
    throw std::invalid_argument("angle grid size must be >= 1, got " +
                                std::to_string(m));
  }
  std::vector<double> grid(m);
  const double step = std::numbers::pi / m;
  for (int i = 1; i <= m; ++i) {
    grid[i - 1] = -std::numbers::pi / 2 + i * step;
  }
  grid.back() = std::numbers::pi / 2;
  return grid;
}

void PhaseMarkovModel::validate() const {
  if (!(a >= 0) || !std::isfinite(a)) {
    throw std::invalid_argument("phase model: a must be finite and >= 0");
  }
  if (!(sigma_theta_sq > 0) || !std::isfinite(sigma_theta_sq)) {
    throw std::invalid_argument("phase model: sigma_theta_sq must be > 0");
  }
  if (!(sigma_1_sq > 0) || !std::isfinite(sigma_1_sq)) {
    throw std::invalid_argument("phase model: sigma_1_sq must be > 0");
  }
}

BernoulliGaussianPrior BernoulliGaussianPrior::uniform(int m, double p,
                                                       double sigma_x_sq) {
  BernoulliGaussianPrior prior;
  prior.sigma_x_sq = sigma_x_sq;
  prior.occupancy.assign(static_cast<std::size_t>(m), p);
  prior.validate();
  return prior;
}

void BernoulliGaussianPrior::validate() const {
  if (!(sigma_x_sq > 0) || !std::isfinite(sigma_x_sq)) {
    throw std::invalid_argument("prior: sigma_x_sq must be > 0");
  }
  for (std::size_t i = 0; i < occupancy.size(); ++i) {
    if (!(occupancy[i] >= 0 && occupancy[i] <= 1)) {
      throw std::invalid_argument("prior: occupancy[" + std::to_string(i) +
                                  "] outside [0, 1]");
    }
  }
}

Complex sample_circular_gaussian(double variance, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2));
  const double re = normal(rng);
  const double im = normal(rng);
  return {re, im};
}

RealVector sample_phase_trajectory(const PhaseMarkovModel& model, int n, Rng& rng) {
  model.validate();
  if (n < 1) {
    throw std::invalid_argument("trajectory length must be >= 1");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  RealVector theta(n);
  theta[0] = std::sqrt(model.sigma_1_sq) * normal(rng);
  const double step_sd = std::sqrt(model.sigma_theta_sq);
  for (int i = 1; i < n; ++i) {
    theta[i] = model.a * theta[i - 1] + step_sd * normal(rng);
  }
  return theta;
}

GroundTruth sample_ground_truth(const BernoulliGaussianPrior& prior, int k, Rng& rng) {
  prior.validate();
  const int m = prior.size();
  if (k < 0 || k > m) {
    throw std::invalid_argument("source count k=" + std::to_string(k) +
                                " outside [0, " + std::to_string(m) + "]");
  }
  std::vector<int> atoms(m);
  std::iota(atoms.begin(), atoms.end(), 0);
  // partial Fisher-Yates
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, m - 1);
    std::swap(atoms[i], atoms[pick(rng)]);
  }
  GroundTruth truth;
  truth.support.assign(atoms.begin(), atoms.begin() + k);
  std::sort(truth.support.begin(), truth.support.end());
  truth.z = ComplexVector::Zero(m);
  for (int i : truth.support) {
    truth.z[i] = sample_circular_gaussian(prior.sigma_x_sq, rng);
  }
  return truth;
}

Observation synthesize_observation(const SteeringDictionary& dict,
                                   const GroundTruth& truth, double noise_var,
                                   Rng& rng) {
  if (truth.z.size() != dict.size()) {
    throw std::invalid_argument("coefficient length " + std::to_string(truth.z.size()) +
                                " does not match dictionary size " +
                                std::to_string(dict.size()));
  }
  if (truth.theta.size() != 0 && truth.theta.size() != dict.n_sensors()) {
    throw std::invalid_argument("phase length " + std::to_string(truth.theta.size()) +
                                " does not match n_sensors " +
                                std::to_string(dict.n_sensors()));
  }
  if (!(noise_var >= 0) || !std::isfinite(noise_var)) {
    throw std::invalid_argument("noise variance must be finite and >= 0");
  }
  Observation obs;
  obs.y = dict.matrix() * truth.z;
  if (truth.theta.size() != 0) {
    for (int n = 0; n < obs.y.size(); ++n) {
      obs.y[n] *= std::polar(1.0, truth.theta[n]);
    }
  }
  if (noise_var > 0) {
    for (int n = 0; n < obs.y.size(); ++n) {
      obs.y[n] += sample_circular_gaussian(noise_var, rng);
    }
  }
  return obs;
}

}  // namespace phasedoa
