#include "phasedoa/phase_inference.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace phasedoa {

Eigen::MatrixXd PhasePrecision::dense() const {
  const int n = size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = diagonal[i];
    if (i + 1 < n) {
      m(i, i + 1) = off_diagonal[i];
      m(i + 1, i) = off_diagonal[i];
    }
  }
  return m;
}

PhasePrecision prior_precision(const PhaseMarkovModel& model, int n) {
  model.validate();
  if (n < 2) {
    throw std::invalid_argument("prior_precision: chain needs n >= 2, got " +
                                std::to_string(n));
  }
  const double inv_step = 1.0 / model.sigma_theta_sq;
  const double a = model.a;
  PhasePrecision p;
  p.diagonal = RealVector::Constant(n, (1 + a * a) * inv_step);
  p.diagonal[0] = 1.0 / model.sigma_1_sq + a * a * inv_step;
  p.diagonal[n - 1] = inv_step;
  p.off_diagonal = RealVector::Constant(n - 1, -a * inv_step);
  return p;
}

RealVector prior_marginal_variances(const PhaseMarkovModel& model, int n) {
  model.validate();
  RealVector v(n);
  if (n == 0) return v;
  v[0] = model.sigma_1_sq;
  for (int i = 1; i < n; ++i) {
    v[i] = model.a * model.a * v[i - 1] + model.sigma_theta_sq;
  }
  return v;
}

ComplexVector compute_eta(const ComplexVector& y, const SteeringDictionary& dict,
                          const ComplexVector& z_means) {
  if (y.size() != dict.n_sensors() || z_means.size() != dict.size()) {
    throw std::invalid_argument("compute_eta: dimension mismatch");
  }
  // eta_n = y_n * conj((D <z>)_n)
  const ComplexVector model = dict.matrix() * z_means;
  return y.cwiseProduct(model.conjugate());
}

PseudoObservations make_pseudo_observations(const ComplexVector& eta, double noise_var) {
  if (!(noise_var > 0)) {
    throw std::invalid_argument("pseudo-observations need noise_var > 0");
  }
  const int n = static_cast<int>(eta.size());
  PseudoObservations pseudo;
  pseudo.values.resize(n);
  pseudo.precisions.resize(n);
  for (int i = 0; i < n; ++i) {
    const double mag = std::abs(eta[i]);
    pseudo.values[i] = mag > 0 ? std::arg(eta[i]) : 0.0;
    pseudo.precisions[i] = 2 * mag / noise_var;
  }
  return pseudo;
}

void fill_moments(PhasePosterior& posterior) {
  const int n = posterior.size();
  posterior.moments.resize(n);
  for (int i = 0; i < n; ++i) {
    // a clamped sensor can leave an exactly zero variance
    posterior.moments[i] = posterior.variances[i] > 0
                               ? circular_moment(posterior.means[i], posterior.variances[i])
                               : std::polar(1.0, posterior.means[i]);
  }
}

namespace {

void check_pseudo(const PseudoObservations& pseudo) {
  if (pseudo.size() < 1 || pseudo.precisions.size() != pseudo.values.size()) {
    throw std::invalid_argument("pseudo-observations: empty or ragged");
  }
  for (int i = 0; i < pseudo.size(); ++i) {
    if (!std::isfinite(pseudo.values[i])) {
      throw std::invalid_argument("pseudo-observation " + std::to_string(i) +
                                  " has a non-finite value");
    }
    if (!(pseudo.precisions[i] >= 0)) {
      throw std::invalid_argument("pseudo-observation " + std::to_string(i) +
                                  " has a negative or NaN precision");
    }
  }
}

}  // namespace

PhasePosterior smooth(const PseudoObservations& pseudo, const PhaseMarkovModel& model) {
  check_pseudo(pseudo);
  model.validate();
  const int n = pseudo.size();
  const double a = model.a;

  RealVector pred_mean(n), pred_var(n), filt_mean(n), filt_var(n);

  // Forward filter; the measurement update is done in information form.
  for (int i = 0; i < n; ++i) {
    if (i == 0) {
      pred_mean[0] = 0.0;
      pred_var[0] = model.sigma_1_sq;
    } else {
      pred_mean[i] = a * filt_mean[i - 1];
      pred_var[i] = a * a * filt_var[i - 1] + model.sigma_theta_sq;
    }
    const double prec = pseudo.precisions[i];
    if (prec == 0) {
      filt_mean[i] = pred_mean[i];
      filt_var[i] = pred_var[i];
    } else if (std::isinf(prec)) {
      filt_mean[i] = pseudo.values[i];
      filt_var[i] = 0.0;
    } else {
      const double info = 1.0 / pred_var[i] + prec;
      filt_var[i] = 1.0 / info;
      filt_mean[i] = filt_var[i] * (pred_mean[i] / pred_var[i] + prec * pseudo.values[i]);
    }
  }

  PhasePosterior post;
  post.means.resize(n);
  post.variances.resize(n);
  post.means[n - 1] = filt_mean[n - 1];
  post.variances[n - 1] = filt_var[n - 1];
  // RTS backward pass
  for (int i = n - 2; i >= 0; --i) {
    const double gain = filt_var[i] * a / pred_var[i + 1];
    post.means[i] = filt_mean[i] + gain * (post.means[i + 1] - pred_mean[i + 1]);
    post.variances[i] =
        filt_var[i] + gain * gain * (post.variances[i + 1] - pred_var[i + 1]);
  }
  fill_moments(post);
  return post;
}

PhasePosterior fuse_uninformative(const PseudoObservations& pseudo) {
  check_pseudo(pseudo);
  const int n = pseudo.size();
  PhasePosterior post;
  post.means.resize(n);
  post.variances.resize(n);
  for (int i = 0; i < n; ++i) {
    const double prec = pseudo.precisions[i];
    if (prec > 0) {
      post.means[i] = pseudo.values[i];
      post.variances[i] = 1.0 / prec;
    } else {
      post.means[i] = 0.0;
      post.variances[i] = std::numeric_limits<double>::infinity();
    }
  }
  fill_moments(post);
  return post;
}

PhasePosterior prior_posterior(const PhaseMarkovModel& model, int n) {
  PhasePosterior post;
  post.means = RealVector::Zero(n);
  post.variances = prior_marginal_variances(model, n);
  fill_moments(post);
  return post;
}

}  // namespace phasedoa
