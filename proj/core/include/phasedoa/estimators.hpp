#pragma once

// DOA front ends. All three variational estimators share one loop
// (run_vbem) and differ only in the priors they are handed:
//
//   pavbem          Markov phase prior, Bernoulli-Gaussian coefficients
//   pavbem_relaxed  Markov phase prior, Gaussian coefficients (p_i = 1)
//   prvbem          flat phase prior,   Gaussian coefficients (p_i = 1)
//
// Conventional beamforming is the matched filter D^H y / N.

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phasedoa/coefficient_inference.hpp"
#include "phasedoa/phase_inference.hpp"
#include "phasedoa/signal_model.hpp"

namespace phasedoa {

enum class Variant { beamforming, prvbem, pavbem_relaxed, pavbem };

std::string_view to_string(Variant v);
/// Throws std::invalid_argument naming the text on an unknown variant.
Variant parse_variant(std::string_view text);

// How paVBEM with a sparse prior is started. beamforming: matched-filter
// amplitudes scaled by p_i. relaxed: the same, then up to
// warm_start_iterations passes with every p_i = 1 before switching to the
// sparse prior. Ignored when every p_i is already 1.
enum class WarmStart { beamforming, relaxed };

std::string_view to_string(WarmStart w);
WarmStart parse_warm_start(std::string_view text);

struct EstimatorConfig {
  int max_iterations = 200;
  double convergence_tol = 1e-6;  // max-norm change of <z> per outer iteration
  bool estimate_noise = true;
  double initial_noise_var = 1e-2;
  Variant variant = Variant::pavbem;
  UpdateOrder order = UpdateOrder::energy;
  WarmStart warm_start = WarmStart::relaxed;
  int warm_start_iterations = 50;

  void validate() const;
};

struct DoaEstimate {
  ComplexVector z_hat;
  RealVector spike_probs;
  RealVector phase_means;
  int iterations_used = 0;        // main stage only
  int warm_start_iterations = 0;  // relaxed pre-pass, 0 when skipped
  bool converged = false;
  double final_noise_var = 0.0;  // NaN for beamforming
};

struct IterationReport {
  int iteration;
  const PhasePosterior& phase;
  const CoefficientPosterior& coefficients;
  double noise_var;
  double max_change;
};
using IterationObserver = std::function<void(const IterationReport&)>;

/// Shared variational loop. An empty phase_model means a flat phase prior.
DoaEstimate run_vbem(const ComplexVector& y, const SteeringDictionary& dict,
                     const std::optional<PhaseMarkovModel>& phase_model,
                     const BernoulliGaussianPrior& prior, const EstimatorConfig& config,
                     const IterationObserver& observer = {});

DoaEstimate pavbem(const ComplexVector& y, const SteeringDictionary& dict,
                   const PhaseMarkovModel& phase_model, const BernoulliGaussianPrior& prior,
                   const EstimatorConfig& config, const IterationObserver& observer = {});

DoaEstimate pavbem_relaxed(const ComplexVector& y, const SteeringDictionary& dict,
                           const PhaseMarkovModel& phase_model, double sigma_x_sq,
                           const EstimatorConfig& config,
                           const IterationObserver& observer = {});

DoaEstimate prvbem_baseline(const ComplexVector& y, const SteeringDictionary& dict,
                            double sigma_x_sq, const EstimatorConfig& config,
                            const IterationObserver& observer = {});

DoaEstimate beamforming(const ComplexVector& y, const SteeringDictionary& dict);

/// Dispatches on `variant`, taking from `prior` only what the variant uses.
DoaEstimate estimate(Variant variant, const ComplexVector& y, const SteeringDictionary& dict,
                     const PhaseMarkovModel& phase_model, const BernoulliGaussianPrior& prior,
                     const EstimatorConfig& config, const IterationObserver& observer = {});

struct SupportEstimate {
  std::vector<int> indices;     // by decreasing |z_hat|
  std::vector<double> angles;   // radians
};

/// The k largest |z_hat_i|, ties broken by lower index.
SupportEstimate extract_support(const DoaEstimate& estimate, const SteeringDictionary& dict,
                                int k);

}  // namespace phasedoa
