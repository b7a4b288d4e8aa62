#include "phasedoa/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace phasedoa {
namespace {

constexpr std::array<std::pair<Variant, std::string_view>, 4> kVariantNames{{
    {Variant::beamforming, "beamforming"},
    {Variant::prvbem, "prvbem"},
    {Variant::pavbem_relaxed, "pavbem_relaxed"},
    {Variant::pavbem, "pavbem"},
}};

void check_dimensions(const ComplexVector& y, const SteeringDictionary& dict) {
  if (y.size() != dict.n_sensors()) {
    throw std::invalid_argument("observation length " + std::to_string(y.size()) +
                                " does not match n_sensors " +
                                std::to_string(dict.n_sensors()));
  }
}

}  // namespace

std::string_view to_string(Variant v) {
  for (const auto& [variant, name] : kVariantNames) {
    if (variant == v) return name;
  }
  return "unknown";
}

std::string_view to_string(WarmStart w) {
  return w == WarmStart::relaxed ? "relaxed" : "beamforming";
}

WarmStart parse_warm_start(std::string_view text) {
  if (text == "relaxed") return WarmStart::relaxed;
  if (text == "beamforming") return WarmStart::beamforming;
  throw std::invalid_argument("unknown warm start '" + std::string(text) + "'");
}

Variant parse_variant(std::string_view text) {
  for (const auto& [variant, name] : kVariantNames) {
    if (name == text) return variant;
  }
  throw std::invalid_argument("unknown estimator variant '" + std::string(text) + "'");
}

void EstimatorConfig::validate() const {
  if (max_iterations < 1) {
    throw std::invalid_argument("max_iterations must be >= 1");
  }
  if (!(convergence_tol > 0)) {
    throw std::invalid_argument("convergence_tol must be > 0");
  }
  if (!(initial_noise_var > 0) || !std::isfinite(initial_noise_var)) {
    throw std::invalid_argument("initial_noise_var must be finite and > 0");
  }
  if (warm_start_iterations < 0) {
    throw std::invalid_argument("warm_start_iterations must be >= 0");
  }
}

namespace {

struct LoopState {
  CoefficientPosterior coeffs;
  PhasePosterior phase;
  double noise_var;
};

struct StageResult {
  int iterations = 0;
  bool converged = false;
};

StageResult run_stage(LoopState& state, const ComplexVector& y, const SteeringDictionary& dict,
                      const std::optional<PhaseMarkovModel>& phase_model,
                      const BernoulliGaussianPrior& prior, const EstimatorConfig& config,
                      int max_iterations, int first_iteration,
                      const IterationObserver& observer) {
  StageResult out;
  for (int iter = 1; iter <= max_iterations; ++iter) {
    const ComplexVector previous = state.coeffs.means();

    const ComplexVector eta = compute_eta(y, dict, previous);
    const PseudoObservations pseudo = make_pseudo_observations(eta, state.noise_var);
    state.phase = phase_model ? smooth(pseudo, *phase_model) : fuse_uninformative(pseudo);

    const ComplexVector y_bar = phase_corrected_observation(y, state.phase);
    const std::vector<int> order = update_order(state.coeffs, config.order);
    state.coeffs =
        sweep_atoms(y_bar, std::move(state.coeffs), dict, prior, state.noise_var, order);

    if (config.estimate_noise) {
      const double updated =
          floor_noise_variance(estimate_noise_variance(y, y_bar, state.coeffs, dict), y);
      // y = 0 drives both the estimate and its floor to zero
      if (updated > 0 && std::isfinite(updated)) state.noise_var = updated;
    }

    const double change = (state.coeffs.means() - previous).cwiseAbs().maxCoeff();
    out.iterations = iter;
    if (observer) {
      observer(IterationReport{first_iteration + iter - 1, state.phase, state.coeffs,
                               state.noise_var, change});
    }
    if (change < config.convergence_tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace

DoaEstimate run_vbem(const ComplexVector& y, const SteeringDictionary& dict,
                     const std::optional<PhaseMarkovModel>& phase_model,
                     const BernoulliGaussianPrior& prior, const EstimatorConfig& config,
                     const IterationObserver& observer) {
  check_dimensions(y, dict);
  config.validate();
  prior.validate();
  if (prior.size() != dict.size()) {
    throw std::invalid_argument("prior size " + std::to_string(prior.size()) +
                                " does not match dictionary size " +
                                std::to_string(dict.size()));
  }
  if (phase_model) phase_model->validate();

  const int n = dict.n_sensors();
  const int m = dict.size();
  LoopState state{CoefficientPosterior(m), {}, config.initial_noise_var};

  // Beamforming start, each atom's matched-filter amplitude scaled by p_i.
  for (int i = 0; i < m; ++i) {
    const double energy = dict.column_energy(i);
    state.coeffs.spike_prob[i] = prior.occupancy[i];
    state.coeffs.cond_mean[i] = dict.column(i).dot(y) / energy;
    state.coeffs.cond_var[i] = state.noise_var * prior.sigma_x_sq /
                               (state.noise_var + prior.sigma_x_sq * energy);
  }
  state.phase = phase_model ? prior_posterior(*phase_model, n)
                            : fuse_uninformative({RealVector::Zero(n), RealVector::Zero(n)});

  // With a sparse prior the first passes often switch on the wrong atoms of an
  // aliased pair and never recover. Settling amplitudes and phases under the
  // Gaussian (p = 1) prior first avoids most of that.
  DoaEstimate out;
  const bool sparse = std::any_of(prior.occupancy.begin(), prior.occupancy.end(),
                                  [](double p) { return p < 1.0; });
  if (sparse && config.warm_start == WarmStart::relaxed) {
    const auto relaxed = BernoulliGaussianPrior::uniform(m, 1.0, prior.sigma_x_sq);
    state.coeffs.spike_prob.setOnes();
    const StageResult pre = run_stage(state, y, dict, phase_model, relaxed, config,
                                      config.warm_start_iterations, 1, observer);
    out.warm_start_iterations = pre.iterations;
  }

  const StageResult main = run_stage(state, y, dict, phase_model, prior, config,
                                     config.max_iterations, out.warm_start_iterations + 1,
                                     observer);
  out.iterations_used = main.iterations;
  out.converged = main.converged;
  out.z_hat = state.coeffs.means();
  out.spike_probs = state.coeffs.spike_prob;
  out.phase_means = state.phase.means;
  out.final_noise_var = state.noise_var;
  return out;
}

DoaEstimate pavbem(const ComplexVector& y, const SteeringDictionary& dict,
                   const PhaseMarkovModel& phase_model, const BernoulliGaussianPrior& prior,
                   const EstimatorConfig& config, const IterationObserver& observer) {
  return run_vbem(y, dict, phase_model, prior, config, observer);
}

DoaEstimate pavbem_relaxed(const ComplexVector& y, const SteeringDictionary& dict,
                           const PhaseMarkovModel& phase_model, double sigma_x_sq,
                           const EstimatorConfig& config, const IterationObserver& observer) {
  const auto prior = BernoulliGaussianPrior::uniform(dict.size(), 1.0, sigma_x_sq);
  return run_vbem(y, dict, phase_model, prior, config, observer);
}

DoaEstimate prvbem_baseline(const ComplexVector& y, const SteeringDictionary& dict,
                            double sigma_x_sq, const EstimatorConfig& config,
                            const IterationObserver& observer) {
  const auto prior = BernoulliGaussianPrior::uniform(dict.size(), 1.0, sigma_x_sq);
  return run_vbem(y, dict, std::nullopt, prior, config, observer);
}

DoaEstimate beamforming(const ComplexVector& y, const SteeringDictionary& dict) {
  check_dimensions(y, dict);
  DoaEstimate out;
  out.z_hat = dict.matrix().adjoint() * y / static_cast<double>(dict.n_sensors());
  out.spike_probs = RealVector::Ones(dict.size());
  out.phase_means = RealVector::Zero(dict.n_sensors());
  out.iterations_used = 0;
  out.converged = true;
  out.final_noise_var = std::numeric_limits<double>::quiet_NaN();
  return out;
}

DoaEstimate estimate(Variant variant, const ComplexVector& y, const SteeringDictionary& dict,
                     const PhaseMarkovModel& phase_model, const BernoulliGaussianPrior& prior,
                     const EstimatorConfig& config, const IterationObserver& observer) {
  switch (variant) {
    case Variant::beamforming:
      return beamforming(y, dict);
    case Variant::prvbem:
      return prvbem_baseline(y, dict, prior.sigma_x_sq, config, observer);
    case Variant::pavbem_relaxed:
      return pavbem_relaxed(y, dict, phase_model, prior.sigma_x_sq, config, observer);
    case Variant::pavbem:
      return pavbem(y, dict, phase_model, prior, config, observer);
  }
  throw std::invalid_argument("unhandled estimator variant");
}

SupportEstimate extract_support(const DoaEstimate& estimate, const SteeringDictionary& dict,
                                int k) {
  const int m = static_cast<int>(estimate.z_hat.size());
  if (m != dict.size()) {
    throw std::invalid_argument("estimate length does not match dictionary size");
  }
  if (k < 1 || k > m) {
    throw std::invalid_argument("support size k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(m) + "]");
  }
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int l, int r) {
    return std::abs(estimate.z_hat[l]) > std::abs(estimate.z_hat[r]);
  });
  SupportEstimate out;
  out.indices.assign(order.begin(), order.begin() + k);
  for (int i : out.indices) out.angles.push_back(dict.angles()[i]);
  return out;
}

}  // namespace phasedoa
