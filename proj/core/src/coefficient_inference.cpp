#include "phasedoa/coefficient_inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace phasedoa {

ComplexVector phase_corrected_observation(const ComplexVector& y,
                                          const PhasePosterior& phase) {
  if (y.size() != phase.moments.size()) {
    throw std::invalid_argument("phase_corrected_observation: length mismatch");
  }
  return y.cwiseProduct(phase.moments.conjugate());
}

AtomPosterior update_atom(int i, const ComplexVector& partial_residual,
                          const SteeringDictionary& dict,
                          const BernoulliGaussianPrior& prior, double noise_var) {
  if (!(noise_var > 0) || !std::isfinite(noise_var)) {
    throw std::invalid_argument("update_atom: noise variance must be > 0, got " +
                                std::to_string(noise_var));
  }
  const double sx2 = prior.sigma_x_sq;
  const double energy = dict.column_energy(i);
  const double denom = noise_var + sx2 * energy;

  AtomPosterior out;
  out.cond_var = noise_var * sx2 / denom;
  out.cond_mean = (sx2 / denom) * dict.column(i).dot(partial_residual);

  const double p = prior.occupancy[i];
  if (p <= 0) {
    out.spike_prob = 0.0;
  } else if (p >= 1) {
    out.spike_prob = 1.0;
  } else {
    // log q(s=1) - log q(s=0); the s=0 branch has variance sigma_x^2, mean 0
    const double log_odds = 0.5 * std::log(out.cond_var / sx2) +
                            std::norm(out.cond_mean) / out.cond_var +
                            std::log(p / (1 - p));
    out.spike_prob = log_odds >= 0 ? 1.0 / (1.0 + std::exp(-log_odds))
                                   : std::exp(log_odds) / (1.0 + std::exp(log_odds));
  }
  return out;
}

AtomPosterior update_atom(int i, const ComplexVector& y_bar,
                          const CoefficientPosterior& posteriors,
                          const SteeringDictionary& dict,
                          const BernoulliGaussianPrior& prior, double noise_var) {
  ComplexVector residual = y_bar - dict.matrix() * posteriors.means();
  residual += posteriors.atom(i).mean() * dict.column(i);
  return update_atom(i, residual, dict, prior, noise_var);
}

CoefficientPosterior sweep_atoms(const ComplexVector& y_bar,
                                 CoefficientPosterior posteriors,
                                 const SteeringDictionary& dict,
                                 const BernoulliGaussianPrior& prior,
                                 double noise_var, std::span<const int> order) {
  const int m = dict.size();
  if (posteriors.size() != m || prior.size() != m || y_bar.size() != dict.n_sensors()) {
    throw std::invalid_argument("sweep_atoms: dimension mismatch");
  }
  ComplexVector residual = y_bar - dict.matrix() * posteriors.means();
  for (int i : order) {
    if (i < 0 || i >= m) {
      throw std::invalid_argument("sweep_atoms: atom index out of range");
    }
    const Complex old_mean = posteriors.atom(i).mean();
    if (old_mean != Complex{}) residual += old_mean * dict.column(i);
    const AtomPosterior updated = update_atom(i, residual, dict, prior, noise_var);
    posteriors.set(i, updated);
    const Complex new_mean = updated.mean();
    if (new_mean != Complex{}) residual -= new_mean * dict.column(i);
  }
  return posteriors;
}

std::vector<int> update_order(const CoefficientPosterior& posteriors, UpdateOrder rule) {
  std::vector<int> order(posteriors.size());
  std::iota(order.begin(), order.end(), 0);
  if (rule == UpdateOrder::energy) {
    const ComplexVector means = posteriors.means();
    std::stable_sort(order.begin(), order.end(), [&](int l, int r) {
      return std::abs(means[l]) > std::abs(means[r]);
    });
  }
  return order;
}

double estimate_noise_variance(const ComplexVector& y, const ComplexVector& y_bar,
                               const CoefficientPosterior& posteriors,
                               const SteeringDictionary& dict) {
  const int n = dict.n_sensors();
  const ComplexVector means = posteriors.means();
  const ComplexVector fitted = dict.matrix() * means;

  // sum_i sum_{k != i} <z_i>^* <z_k> d_i^H d_k = ||D<z>||^2 - sum_i |<z_i>|^2 d_i^H d_i
  double second_moment = fitted.squaredNorm();
  for (int i = 0; i < posteriors.size(); ++i) {
    const AtomPosterior a = posteriors.atom(i);
    const double own = a.spike_prob * (a.cond_var + std::norm(a.cond_mean));
    second_moment += (own - std::norm(a.mean())) * dict.column_energy(i);
  }
  const double cross = 2 * y_bar.dot(fitted).real();
  return (y.squaredNorm() - cross + second_moment) / n;
}

double floor_noise_variance(double estimate, const ComplexVector& y) {
  const double floor = 1e-8 * y.squaredNorm() / static_cast<double>(y.size());
  return std::max(estimate, floor);
}

}  // namespace phasedoa
