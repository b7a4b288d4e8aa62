#pragma once

// Generative model for plane waves observed by a uniform linear array through
// multiplicative Gauss-Markov phase noise:
//
//   y = P D z + w,   P = diag(exp(j theta_n)),
//
// with D the steering dictionary over a fixed angle grid, z a sparse
// Bernoulli-Gaussian coefficient vector and w circular complex Gaussian noise.

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace phasedoa {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using Rng = std::mt19937_64;

/// Steering vectors of an N-sensor uniform linear array, one column per
/// candidate angle: D[n, i] = exp(j 2 pi (spacing/lambda) n sin(phi_i)),
/// n = 1..N.
class SteeringDictionary {
 public:
  SteeringDictionary(int n_sensors, double spacing_ratio,
                     std::vector<double> angles);

  int n_sensors() const { return static_cast<int>(columns_.rows()); }
  int size() const { return static_cast<int>(columns_.cols()); }
  double spacing_ratio() const { return spacing_ratio_; }
  const std::vector<double>& angles() const { return angles_; }
  const ComplexMatrix& matrix() const { return columns_; }

  auto column(int i) const { return columns_.col(i); }

  /// d_i^H d_i
  double column_energy(int i) const { return energies_[i]; }

 private:
  double spacing_ratio_;
  std::vector<double> angles_;
  ComplexMatrix columns_;
  RealVector energies_;
};

SteeringDictionary build_dictionary(int n_sensors, double spacing_ratio,
                                    const std::vector<double>& angles);

/// phi_i = -pi/2 + i * pi / m, i = 1..m.
std::vector<double> default_angle_grid(int m);

/// AR(1) phase chain: theta_1 ~ N(0, sigma_1_sq),
/// theta_n | theta_{n-1} ~ N(a theta_{n-1}, sigma_theta_sq).
struct PhaseMarkovModel {
  double a = 0.8;
  double sigma_theta_sq = 1.0;
  double sigma_1_sq = 1e6;

  void validate() const;
};

/// Spike-and-slab prior z_i = s_i x_i, x_i ~ CN(0, sigma_x_sq), s_i ~ Ber(p_i).
struct BernoulliGaussianPrior {
  double sigma_x_sq = 1.0;
  std::vector<double> occupancy;

  static BernoulliGaussianPrior uniform(int m, double p, double sigma_x_sq = 1.0);

  int size() const { return static_cast<int>(occupancy.size()); }
  void validate() const;
};

struct GroundTruth {
  ComplexVector z;
  RealVector theta;
  std::vector<int> support;  // sorted ascending
};

struct Observation {
  ComplexVector y;
};

/// Draws an unwrapped phase trajectory of length n from the Markov chain.
RealVector sample_phase_trajectory(const PhaseMarkovModel& model, int n, Rng& rng);

/// Draws a K-sparse coefficient vector: support uniform without replacement,
/// amplitudes CN(0, sigma_x_sq). The theta member is left empty.
GroundTruth sample_ground_truth(const BernoulliGaussianPrior& prior, int k, Rng& rng);

/// y_n = exp(j theta_n) (D z)_n + w_n, w_n ~ CN(0, noise_var).
/// An empty truth.theta means no phase noise.
Observation synthesize_observation(const SteeringDictionary& dict,
                                   const GroundTruth& truth, double noise_var,
                                   Rng& rng);

/// Circular complex Gaussian draw with total variance `variance`.
Complex sample_circular_gaussian(double variance, Rng& rng);

}  // namespace phasedoa
