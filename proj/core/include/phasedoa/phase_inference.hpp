#pragma once

// Gaussian variational factor over the sensor phases.
//
// Given the current coefficient means <z>, each sensor contributes a
// pseudo-observation of its phase with value arg(eta_n) and precision
// 2|eta_n| / sigma^2, where eta_n = y_n (sum_i <z_i>^* d_ni^*). Combined with
// the tridiagonal AR(1) prior precision, the posterior over theta is Gaussian;
// its marginals are obtained with a forward Kalman filter and an RTS backward
// pass. The coefficient updates only need the circular moments
// <exp(j theta_n)>, approximated by I1(1/S)/I0(1/S) exp(j m).

#include "phasedoa/signal_model.hpp"

namespace phasedoa {

/// Symmetric tridiagonal matrix.
struct PhasePrecision {
  RealVector diagonal;
  RealVector off_diagonal;

  int size() const { return static_cast<int>(diagonal.size()); }
  Eigen::MatrixXd dense() const;
};

struct PseudoObservations {
  RealVector values;      // arg(eta_n) in (-pi, pi]
  RealVector precisions;  // 2 |eta_n| / sigma^2; zero marks a missing sensor

  int size() const { return static_cast<int>(values.size()); }
};

struct PhasePosterior {
  RealVector means;
  RealVector variances;  // marginal variances only
  ComplexVector moments;  // <exp(j theta_n)>

  int size() const { return static_cast<int>(means.size()); }
};

/// Precision matrix of the Markov phase prior over n >= 2 sensors.
PhasePrecision prior_precision(const PhaseMarkovModel& model, int n);

/// Prior marginal variances: sigma_1^2, a^2 sigma_1^2 + sigma_theta^2, ...
RealVector prior_marginal_variances(const PhaseMarkovModel& model, int n);

ComplexVector compute_eta(const ComplexVector& y, const SteeringDictionary& dict,
                          const ComplexVector& z_means);

PseudoObservations make_pseudo_observations(const ComplexVector& eta, double noise_var);

/// Posterior marginals of the Markov chain given the pseudo-observations.
/// Fills means and variances; moments are filled from them.
PhasePosterior smooth(const PseudoObservations& pseudo, const PhaseMarkovModel& model);

/// Posterior marginals under a flat (zero-precision) phase prior: each sensor
/// is fused independently, m_n = arg(eta_n), S_n = 1 / precision_n. Sensors
/// with zero precision get mean 0 and infinite variance, i.e. a zero moment.
PhasePosterior fuse_uninformative(const PseudoObservations& pseudo);

/// Posterior equal to the prior (no data).
PhasePosterior prior_posterior(const PhaseMarkovModel& model, int n);

/// I1(x) / I0(x) for x >= 0, without forming I0 or I1 at large x.
double bessel_ratio(double x);

/// Von Mises approximation of E[exp(j theta)] for theta ~ N(mean, variance).
/// variance may be +inf, giving 0.
Complex circular_moment(double mean, double variance);

/// Recomputes posterior.moments from means and variances.
void fill_moments(PhasePosterior& posterior);

}  // namespace phasedoa
