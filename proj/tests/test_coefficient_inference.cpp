#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "oracles.hpp"
#include "phasedoa/coefficient_inference.hpp"

using namespace phasedoa;

namespace {

ComplexVector random_vector(int n, std::mt19937_64& rng, double variance = 1.0) {
  ComplexVector v(n);
  for (int i = 0; i < n; ++i) v[i] = sample_circular_gaussian(variance, rng);
  return v;
}

CoefficientPosterior random_posterior(int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CoefficientPosterior post(m);
  for (int i = 0; i < m; ++i) {
    post.spike_prob[i] = u(rng);
    post.cond_mean[i] = sample_circular_gaussian(1.0, rng);
    post.cond_var[i] = 0.01 + 0.1 * u(rng);
  }
  return post;
}

PhasePosterior random_phase(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-3.0, 3.0), logv(-2.0, 0.5);
  PhasePosterior p;
  p.means.resize(n);
  p.variances.resize(n);
  for (int i = 0; i < n; ++i) {
    p.means[i] = angle(rng);
    p.variances[i] = std::pow(10.0, logv(rng));
  }
  fill_moments(p);
  return p;
}

}  // namespace

TEST_SUITE("coefficient_inference") {

TEST_CASE("phase-corrected observation") {
  const ComplexVector y = (ComplexVector(4) << Complex(1, 0), Complex(0, 2), Complex(-1, 1), Complex(3, -4)).finished();
  PhasePosterior phase;
  phase.means = (RealVector(4) << 0.0, 0.5, -1.0, 2.0).finished();
  phase.variances = (RealVector(4) << 0.1, 1.0, 1e-2, std::numeric_limits<double>::infinity()).finished();
  fill_moments(phase);
  const ComplexVector yb = phase_corrected_observation(y, phase);
  for (int n = 0; n < 4; ++n) {
    const double r = std::isinf(phase.variances[n])
                         ? 0.0
                         : static_cast<double>(oracle::bessel_ratio_series(1.0L / phase.variances[n]));
    const Complex want = y[n] * std::polar(r, -phase.means[n]);
    CHECK(std::abs(yb[n] - want) < 1e-10);
  }
  CHECK(yb[3] == Complex(0, 0));

  PhasePosterior wrong = phase;
  wrong.moments.resize(3);
  CHECK_THROWS_AS(phase_corrected_observation(y, wrong), std::invalid_argument);
}

TEST_CASE("fixed occupancy pins the spike probability") {
  const SteeringDictionary dict = build_dictionary(16, 4.0, default_angle_grid(5));
  std::mt19937_64 rng(2);
  const ComplexVector r = random_vector(16, rng);
  auto prior = BernoulliGaussianPrior::uniform(5, 0.0);
  CHECK(update_atom(1, r, dict, prior, 0.1).spike_prob == 0.0);
  prior = BernoulliGaussianPrior::uniform(5, 1.0);
  const AtomPosterior on = update_atom(1, r, dict, prior, 0.1);
  CHECK(on.spike_prob == 1.0);
  CHECK(on.cond_var == doctest::Approx(0.1 / (0.1 + 16)));
  CHECK(std::abs(on.cond_mean - dict.column(1).dot(r) / (0.1 + 16)) < 1e-12);
}

TEST_CASE("single matched atom") {
  // residual equal to the atom itself: m = N/(N + sigma^2), Sigma = sigma^2/(N + sigma^2)
  const SteeringDictionary dict = build_dictionary(256, 4.0, default_angle_grid(50));
  const auto prior = BernoulliGaussianPrior::uniform(50, 0.1, 1.0);
  const ComplexVector r = dict.column(20);
  const AtomPosterior a = update_atom(20, r, dict, prior, 0.01);
  CHECK(a.cond_mean.real() == doctest::Approx(0.999961).epsilon(1e-6));
  CHECK(std::abs(a.cond_mean.imag()) < 1e-12);
  CHECK(a.cond_var == doctest::Approx(3.906097e-5).epsilon(1e-6));
  CHECK(a.spike_prob > 1 - 1e-6);

  // closed-form log-odds on a weaker, noisier residual
  const ComplexVector weak = 0.02 * dict.column(20);
  const AtomPosterior w = update_atom(20, weak, dict, prior, 4.0);
  const double var = 4.0 / (4.0 + 256);
  const double mean = 0.02 * 256 / (4.0 + 256);
  const double lo = 0.5 * std::log(var) + mean * mean / var + std::log(0.1 / 0.9);
  CHECK(w.spike_prob == doctest::Approx(1 / (1 + std::exp(-lo))).epsilon(1e-12));
  CHECK(w.spike_prob < 0.5);
}

TEST_CASE("update_atom guards") {
  const SteeringDictionary dict = build_dictionary(8, 4.0, default_angle_grid(3));
  const auto prior = BernoulliGaussianPrior::uniform(3, 0.5);
  const ComplexVector r = ComplexVector::Ones(8);
  CHECK_THROWS_AS(update_atom(0, r, dict, prior, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(update_atom(0, r, dict, prior, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(update_atom(0, r, dict, prior, std::nan("")), std::invalid_argument);

  // enormous log-odds either way must not overflow into NaN
  const AtomPosterior big = update_atom(0, 1e150 * dict.column(0), dict, prior, 1e-10);
  CHECK(big.spike_prob == 1.0);
  auto tiny_p = BernoulliGaussianPrior::uniform(3, 1e-300);
  const AtomPosterior small = update_atom(0, ComplexVector::Zero(8), dict, tiny_p, 1e10);
  CHECK(std::isfinite(small.spike_prob));
  CHECK(small.spike_prob >= 0.0);
  CHECK(small.spike_prob < 1e-200);
}

TEST_CASE("both update_atom forms agree") {
  const SteeringDictionary dict = build_dictionary(32, 4.0, default_angle_grid(12));
  const auto prior = BernoulliGaussianPrior::uniform(12, 0.2);
  std::mt19937_64 rng(9);
  const ComplexVector yb = random_vector(32, rng, 4.0);
  const CoefficientPosterior post = random_posterior(12, rng);
  for (int i = 0; i < 12; ++i) {
    ComplexVector r = yb;
    for (int k = 0; k < 12; ++k) {
      if (k != i) r -= post.atom(k).mean() * dict.column(k);
    }
    const AtomPosterior a = update_atom(i, r, dict, prior, 0.3);
    const AtomPosterior b = update_atom(i, yb, post, dict, prior, 0.3);
    CHECK(a.spike_prob == doctest::Approx(b.spike_prob).epsilon(1e-12));
    CHECK(std::abs(a.cond_mean - b.cond_mean) < 1e-10);
    CHECK(a.cond_var == b.cond_var);
  }
}

TEST_CASE("incremental sweep matches rebuilding every residual") {
  const SteeringDictionary dict = build_dictionary(64, 4.0, default_angle_grid(20));
  std::mt19937_64 rng(31);
  for (double p : {0.1, 0.5, 1.0}) {
    const auto prior = BernoulliGaussianPrior::uniform(20, p);
    const ComplexVector yb = random_vector(64, rng, 2.0);
    const CoefficientPosterior start = random_posterior(20, rng);

    std::vector<int> forward(20), shuffled(20);
    std::iota(forward.begin(), forward.end(), 0);
    shuffled = forward;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const std::vector<int> repeated = {3, 3, 7, 0, 19, 3};

    for (const auto& order : {forward, shuffled, repeated, update_order(start, UpdateOrder::energy)}) {
      const CoefficientPosterior fast = sweep_atoms(yb, start, dict, prior, 0.05, order);
      const CoefficientPosterior slow = oracle::naive_sweep(yb, start, dict, prior, 0.05, order);
      for (int i = 0; i < 20; ++i) {
        CHECK(std::abs(fast.spike_prob[i] - slow.spike_prob[i]) <= 1e-10);
        CHECK(std::abs(fast.cond_mean[i] - slow.cond_mean[i]) <= 1e-10 * std::max(1.0, std::abs(slow.cond_mean[i])));
        CHECK(fast.cond_var[i] == slow.cond_var[i]);
      }
    }
  }
}

TEST_CASE("sweep on zero data shrinks every atom") {
  // half-wavelength spacing: at 4 wavelengths this grid has an identical column pair
  const SteeringDictionary dict = build_dictionary(32, 0.5, default_angle_grid(10));
  const auto prior = BernoulliGaussianPrior::uniform(10, 0.3);
  std::mt19937_64 rng(4);
  CoefficientPosterior post = random_posterior(10, rng);
  std::vector<int> order(10);
  std::iota(order.begin(), order.end(), 0);
  for (int it = 0; it < 30; ++it) post = sweep_atoms(ComplexVector::Zero(32), post, dict, prior, 0.1, order);
  CHECK(post.means().cwiseAbs().maxCoeff() < 1e-8);
  for (int i = 0; i < 10; ++i) CHECK(post.spike_prob[i] < 0.3);
}

TEST_CASE("sweep guards") {
  const SteeringDictionary dict = build_dictionary(8, 4.0, default_angle_grid(4));
  const auto prior = BernoulliGaussianPrior::uniform(4, 0.5);
  const std::vector<int> bad = {0, 4};
  CHECK_THROWS_AS(sweep_atoms(ComplexVector::Zero(8), CoefficientPosterior(4), dict, prior, 0.1, bad),
                  std::invalid_argument);
  const std::vector<int> ok = {0};
  CHECK_THROWS_AS(sweep_atoms(ComplexVector::Zero(7), CoefficientPosterior(4), dict, prior, 0.1, ok),
                  std::invalid_argument);
  CHECK_THROWS_AS(sweep_atoms(ComplexVector::Zero(8), CoefficientPosterior(3), dict, prior, 0.1, ok),
                  std::invalid_argument);
}

TEST_CASE("update order") {
  CoefficientPosterior post(5);
  post.spike_prob.setOnes();
  post.cond_mean << Complex(1, 0), Complex(0, 3), Complex(-1, 0), Complex(0, 0), Complex(2, 0);
  CHECK(update_order(post, UpdateOrder::energy) == std::vector<int>{1, 4, 0, 2, 3});
  CHECK(update_order(post, UpdateOrder::index) == std::vector<int>{0, 1, 2, 3, 4});
  post.spike_prob[1] = 0.0;
  CHECK(update_order(post, UpdateOrder::energy) == std::vector<int>{4, 0, 2, 1, 3});
}

TEST_CASE("noise M-step simple cases") {
  const SteeringDictionary dict = build_dictionary(16, 4.0, default_angle_grid(4));
  std::mt19937_64 rng(12);
  const ComplexVector y = random_vector(16, rng);

  // nothing switched on: ||y||^2 / N
  CoefficientPosterior off(4);
  CHECK(estimate_noise_variance(y, y, off, dict) == doctest::Approx(y.squaredNorm() / 16));

  // point mass on an exact fit with perfect phase: zero
  CoefficientPosterior exact(4);
  exact.spike_prob.setOnes();
  exact.cond_mean << Complex(1, 0.5), Complex(0, 0), Complex(-0.3, 0), Complex(0, 0);
  const ComplexVector fitted = dict.matrix() * exact.cond_mean;
  CHECK(std::abs(estimate_noise_variance(fitted, fitted, exact, dict)) < 1e-12);

  // conditional variance adds sum_i p_i Sigma_i ||d_i||^2 / N
  exact.cond_var << 0.1, 0.2, 0.0, 0.4;
  CHECK(estimate_noise_variance(fitted, fitted, exact, dict) == doctest::Approx(0.7));
}

TEST_CASE("noise M-step agrees with Monte Carlo over the factorised posterior") {
  const int n = 16, m = 4;
  const SteeringDictionary dict = build_dictionary(n, 4.0, default_angle_grid(m));
  std::mt19937_64 rng(2718);
  const ComplexVector y = random_vector(n, rng, 2.0);
  const PhasePosterior phase = random_phase(n, rng);
  const CoefficientPosterior post = random_posterior(m, rng);
  const ComplexVector yb = phase_corrected_observation(y, phase);

  const double closed = estimate_noise_variance(y, yb, post, dict);
  const double mc = oracle::noise_variance_monte_carlo(y, phase, post, dict, 100000, 77);
  CHECK(closed == doctest::Approx(mc).epsilon(0.02));
}

TEST_CASE("noise floor") {
  const ComplexVector y = ComplexVector::Constant(4, Complex(2, 0));
  CHECK(floor_noise_variance(-1.0, y) == doctest::Approx(4e-8));
  CHECK(floor_noise_variance(0.0, y) == doctest::Approx(4e-8));
  CHECK(floor_noise_variance(0.5, y) == 0.5);
}

}  // TEST_SUITE
