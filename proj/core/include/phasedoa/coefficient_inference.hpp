#pragma once

// Bernoulli-Gaussian factors q(z_i) = q(x_i | s_i) q(s_i) updated one atom at
// a time against the phase-corrected observation, and the closed-form
// M-step for the additive noise variance.

#include <span>
#include <vector>

#include "phasedoa/phase_inference.hpp"
#include "phasedoa/signal_model.hpp"

namespace phasedoa {

/// Factor of a single atom; the s_i = 0 branch is implicit (mean 0,
/// variance sigma_x^2).
struct AtomPosterior {
  double spike_prob = 0.0;   // q(s_i = 1)
  Complex cond_mean{};       // m_{x_i}(s_i = 1)
  double cond_var = 0.0;     // Sigma_{x_i}(s_i = 1)

  Complex mean() const { return spike_prob * cond_mean; }
};

struct CoefficientPosterior {
  RealVector spike_prob;
  ComplexVector cond_mean;
  RealVector cond_var;

  CoefficientPosterior() = default;
  explicit CoefficientPosterior(int m)
      : spike_prob(RealVector::Zero(m)),
        cond_mean(ComplexVector::Zero(m)),
        cond_var(RealVector::Zero(m)) {}

  int size() const { return static_cast<int>(spike_prob.size()); }

  AtomPosterior atom(int i) const { return {spike_prob[i], cond_mean[i], cond_var[i]}; }
  void set(int i, const AtomPosterior& a) {
    spike_prob[i] = a.spike_prob;
    cond_mean[i] = a.cond_mean;
    cond_var[i] = a.cond_var;
  }

  /// <z_i> = q(s_i = 1) m_{x_i}(1)
  ComplexVector means() const { return spike_prob.cast<Complex>().cwiseProduct(cond_mean); }
};

enum class UpdateOrder { energy, index };

/// ybar_n = y_n exp(-j m_n) I1(1/S_n)/I0(1/S_n) = y_n conj(<exp(j theta_n)>).
ComplexVector phase_corrected_observation(const ComplexVector& y,
                                          const PhasePosterior& phase);

/// New factor for atom i given its partial residual
/// <r_i> = ybar - sum_{k != i} <z_k> d_k.
AtomPosterior update_atom(int i, const ComplexVector& partial_residual,
                          const SteeringDictionary& dict,
                          const BernoulliGaussianPrior& prior, double noise_var);

/// Same, forming <r_i> from scratch out of ybar and the other atoms.
AtomPosterior update_atom(int i, const ComplexVector& y_bar,
                          const CoefficientPosterior& posteriors,
                          const SteeringDictionary& dict,
                          const BernoulliGaussianPrior& prior, double noise_var);

/// One pass of update_atom over `order`, keeping the full residual
/// ybar - D <z> up to date in O(N) per atom.
CoefficientPosterior sweep_atoms(const ComplexVector& y_bar,
                                 CoefficientPosterior posteriors,
                                 const SteeringDictionary& dict,
                                 const BernoulliGaussianPrior& prior,
                                 double noise_var, std::span<const int> order);

/// Descending |<z_i>| with ascending-index tie-break, or plain index order.
std::vector<int> update_order(const CoefficientPosterior& posteriors, UpdateOrder rule);

/// Unclamped M-step for sigma^2.
double estimate_noise_variance(const ComplexVector& y, const ComplexVector& y_bar,
                               const CoefficientPosterior& posteriors,
                               const SteeringDictionary& dict);

/// Clamps an M-step value below at 1e-8 * y^H y / N.
double floor_noise_variance(double estimate, const ComplexVector& y);

}  // namespace phasedoa
