#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "oracles.hpp"
#include "phasedoa/phase_inference.hpp"

using namespace phasedoa;
using std::numbers::pi;

namespace {

PseudoObservations random_pseudo(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-pi, pi);
  std::uniform_real_distribution<double> logp(-3, 3);
  PseudoObservations p;
  p.values.resize(n);
  p.precisions.resize(n);
  for (int i = 0; i < n; ++i) {
    p.values[i] = angle(rng);
    p.precisions[i] = std::pow(10.0, logp(rng));
  }
  return p;
}

double max_relative_error(const RealVector& got, const Eigen::VectorXd& want) {
  double worst = 0;
  for (int i = 0; i < got.size(); ++i) {
    worst = std::max(worst, std::abs(got[i] - want[i]) / std::max(1.0, std::abs(want[i])));
  }
  return worst;
}

}  // namespace

TEST_SUITE("phase_inference") {

TEST_CASE("prior precision of the default chain") {
  const PhaseMarkovModel model{};
  const PhasePrecision p3 = prior_precision(model, 3);
  CHECK(p3.diagonal[0] == doctest::Approx(0.640001).epsilon(1e-12));
  CHECK(p3.diagonal[1] == doctest::Approx(1.64).epsilon(1e-12));
  CHECK(p3.diagonal[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p3.off_diagonal[0] == doctest::Approx(-0.8));
  CHECK(p3.off_diagonal[1] == doctest::Approx(-0.8));

  const PhasePrecision p2 = prior_precision(model, 2);
  CHECK(p2.diagonal[0] == doctest::Approx(0.640001).epsilon(1e-12));
  CHECK(p2.diagonal[1] == doctest::Approx(1.0));

  CHECK_THROWS_AS(prior_precision(model, 1), std::invalid_argument);
}

TEST_CASE("dense prior precision inverts to the chain covariance") {
  const PhaseMarkovModel model{0.7, 0.5, 2.0};
  const Eigen::MatrixXd cov = prior_precision(model, 6).dense().inverse();
  const RealVector marg = prior_marginal_variances(model, 6);
  for (int i = 0; i < 6; ++i) CHECK(cov(i, i) == doctest::Approx(marg[i]).epsilon(1e-10));
  // Cov(theta_{i+1}, theta_i) = a Var(theta_i)
  for (int i = 0; i + 1 < 6; ++i) CHECK(cov(i + 1, i) == doctest::Approx(0.7 * marg[i]).epsilon(1e-10));
}

TEST_CASE("eta") {
  const SteeringDictionary dict = build_dictionary(8, 4.0, default_angle_grid(6));
  std::mt19937_64 rng(1);
  ComplexVector y(8);
  for (int n = 0; n < 8; ++n) y[n] = sample_circular_gaussian(1.0, rng);

  SUBCASE("zero coefficient means give zero") {
    CHECK(compute_eta(y, dict, ComplexVector::Zero(6)).isZero(0));
  }
  SUBCASE("a single atom") {
    ComplexVector z = ComplexVector::Zero(6);
    z[2] = Complex(0.5, -1.5);
    const ComplexVector eta = compute_eta(y, dict, z);
    for (int n = 0; n < 8; ++n) {
      const Complex want = y[n] * std::conj(z[2] * oracle::steering_entry(n + 1, 4.0, dict.angles()[2]));
      CHECK(std::abs(eta[n] - want) < 1e-12);
    }
  }
  SUBCASE("two atoms on a two-sensor array") {
    const SteeringDictionary d2 = build_dictionary(2, 0.5, {0.3, -0.9});
    const ComplexVector y2 = (ComplexVector(2) << Complex(1, 2), Complex(-0.5, 0.25)).finished();
    const ComplexVector z2 = (ComplexVector(2) << Complex(0.2, 0.1), Complex(-1, 0.4)).finished();
    const ComplexVector eta = compute_eta(y2, d2, z2);
    for (int n = 0; n < 2; ++n) {
      const Complex dz = z2[0] * oracle::steering_entry(n + 1, 0.5, 0.3) +
                         z2[1] * oracle::steering_entry(n + 1, 0.5, -0.9);
      CHECK(std::abs(eta[n] - y2[n] * std::conj(dz)) < 1e-12);
    }
  }
  CHECK_THROWS_AS(compute_eta(ComplexVector::Zero(7), dict, ComplexVector::Zero(6)), std::invalid_argument);
  CHECK_THROWS_AS(compute_eta(y, dict, ComplexVector::Zero(5)), std::invalid_argument);
}

TEST_CASE("pseudo-observations") {
  const ComplexVector eta =
      (ComplexVector(3) << std::polar(2.0, 1.0), Complex(0, 0), std::polar(0.5, -3.0)).finished();
  const PseudoObservations p = make_pseudo_observations(eta, 0.1);
  CHECK(p.values[0] == doctest::Approx(1.0));
  CHECK(p.precisions[0] == doctest::Approx(40.0));
  CHECK(p.values[1] == 0.0);
  CHECK(p.precisions[1] == 0.0);
  CHECK(p.values[2] == doctest::Approx(-3.0));
  CHECK(p.precisions[2] == doctest::Approx(10.0));
  CHECK_THROWS_AS(make_pseudo_observations(eta, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_pseudo_observations(eta, -1.0), std::invalid_argument);
}

TEST_CASE("smoother without data returns the prior marginals") {
  const PhaseMarkovModel model{};
  PseudoObservations p{RealVector::Zero(10), RealVector::Zero(10)};
  const PhasePosterior post = smooth(p, model);
  const RealVector prior = prior_marginal_variances(model, 10);
  for (int i = 0; i < 10; ++i) {
    CHECK(post.means[i] == 0.0);
    CHECK(post.variances[i] == doctest::Approx(prior[i]).epsilon(1e-12));
  }
  // diffuse start: the first moment vanishes, the later ones are exp(-v/2)-ish small
  CHECK(std::abs(post.moments[0]) < 1e-5);
}

TEST_CASE("an infinitely precise sensor pins its phase") {
  const PhaseMarkovModel model{};
  PseudoObservations p{RealVector::Zero(5), RealVector::Constant(5, 1.0)};
  p.values[2] = 0.7;
  p.precisions[2] = std::numeric_limits<double>::infinity();
  const PhasePosterior post = smooth(p, model);
  CHECK(post.means[2] == doctest::Approx(0.7));
  CHECK(post.variances[2] == doctest::Approx(0.0));
  CHECK(std::abs(post.moments[2] - std::polar(1.0, 0.7)) < 1e-12);
  for (int i = 0; i < 5; ++i) CHECK(std::isfinite(post.means[i]));
}

TEST_CASE("smoother matches a dense solve") {
  std::mt19937_64 rng(42);
  SUBCASE("N = 8") {
    const PseudoObservations p = random_pseudo(8, rng);
    const PhaseMarkovModel model{};
    const PhasePosterior post = smooth(p, model);
    const auto dense = oracle::dense_phase_posterior(p, model);
    CHECK(max_relative_error(post.means, dense.means) <= 1e-8);
    CHECK(max_relative_error(post.variances, dense.variances) <= 1e-8);
  }
  SUBCASE("random sizes and models") {
    std::uniform_int_distribution<int> size(2, 64);
    std::uniform_real_distribution<double> a(0.0, 0.99), s(0.05, 3.0), s1(0.5, 100.0);
    for (int rep = 0; rep < 60; ++rep) {
      const int n = size(rng);
      const PhaseMarkovModel model{a(rng), s(rng), s1(rng)};
      const PseudoObservations p = random_pseudo(n, rng);
      const PhasePosterior post = smooth(p, model);
      const auto dense = oracle::dense_phase_posterior(p, model);
      CHECK(max_relative_error(post.means, dense.means) <= 1e-8);
      CHECK(max_relative_error(post.variances, dense.variances) <= 1e-8);
    }
  }
}

TEST_CASE("data never increases marginal variance") {
  std::mt19937_64 rng(7);
  const PhaseMarkovModel model{};
  const PseudoObservations p = random_pseudo(40, rng);
  const PhasePosterior post = smooth(p, model);
  const RealVector prior = prior_marginal_variances(model, 40);
  for (int i = 0; i < 40; ++i) {
    CHECK(post.variances[i] <= prior[i]);
    CHECK(post.variances[i] <= 1.0 / p.precisions[i] * (1 + 1e-12));
    CHECK(std::abs(post.moments[i]) <= 1.0);
  }
}

TEST_CASE("single sensor chain") {
  const PhaseMarkovModel model{0.8, 1.0, 4.0};
  PseudoObservations p{RealVector::Constant(1, 1.0), RealVector::Constant(1, 4.0)};
  const PhasePosterior post = smooth(p, model);
  // (1/4 + 4)^-1 = 1/4.25
  CHECK(post.variances[0] == doctest::Approx(1 / 4.25));
  CHECK(post.means[0] == doctest::Approx(4.0 / 4.25));
}

TEST_CASE("smoother input validation") {
  const PhaseMarkovModel model{};
  PseudoObservations p{RealVector::Zero(3), RealVector::Ones(3)};
  p.values[1] = std::nan("");
  CHECK_THROWS_AS(smooth(p, model), std::invalid_argument);
  p.values[1] = 0;
  p.precisions[1] = -1;
  CHECK_THROWS_AS(smooth(p, model), std::invalid_argument);
  p.precisions[1] = std::nan("");
  CHECK_THROWS_AS(smooth(p, model), std::invalid_argument);
  CHECK_THROWS_AS(smooth(PseudoObservations{}, model), std::invalid_argument);
  CHECK_THROWS_AS(smooth(PseudoObservations{RealVector::Zero(3), RealVector::Zero(2)}, model),
                  std::invalid_argument);
}

TEST_CASE("uninformative fusion treats sensors independently") {
  PseudoObservations p{RealVector(3), RealVector(3)};
  p.values << 0.5, 2.0, -1.0;
  p.precisions << 10.0, 0.0, 1e4;
  const PhasePosterior post = fuse_uninformative(p);
  CHECK(post.means[0] == 0.5);
  CHECK(post.variances[0] == doctest::Approx(0.1));
  CHECK(post.means[1] == 0.0);
  CHECK(std::isinf(post.variances[1]));
  CHECK(post.moments[1] == Complex(0, 0));
  CHECK(post.variances[2] == doctest::Approx(1e-4));
  CHECK(std::abs(post.moments[2]) > 0.9999);
}

TEST_CASE("smoother approaches independent fusion as the prior flattens") {
  std::mt19937_64 rng(3);
  const PseudoObservations p = random_pseudo(16, rng);
  const PhasePosterior flat = fuse_uninformative(p);
  const PhasePosterior loose = smooth(p, PhaseMarkovModel{0.0, 1e12, 1e12});
  for (int i = 0; i < 16; ++i) {
    CHECK(loose.means[i] == doctest::Approx(flat.means[i]).epsilon(1e-6));
    CHECK(loose.variances[i] == doctest::Approx(flat.variances[i]).epsilon(1e-6));
  }
}

TEST_CASE("bessel ratio values") {
  CHECK(bessel_ratio(0.0) == 0.0);
  CHECK(bessel_ratio(1.0) == doctest::Approx(0.4463900).epsilon(1e-7));
  CHECK(bessel_ratio(4.0) == doctest::Approx(0.8635226).epsilon(1e-7));
  for (double x : {0.01, 0.5, 2.0, 10.0, 25.0, 40.0}) {
    CHECK(bessel_ratio(x) == doctest::Approx(std::cyl_bessel_i(1.0, x) / std::cyl_bessel_i(0.0, x)).epsilon(1e-12));
  }
}

TEST_CASE("bessel ratio against the long double series on [0, 50]") {
  double worst = 0;
  for (int k = 0; k <= 5000; ++k) {
    const double x = 50.0 * k / 5000;
    worst = std::max(worst, std::abs(bessel_ratio(x) - static_cast<double>(oracle::bessel_ratio_series(x))));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("bessel ratio shape") {
  double prev = 0;
  for (int k = 0; k <= 1000; ++k) {
    const double x = std::pow(10.0, -4 + 12.0 * k / 1000);
    const double r = bessel_ratio(x);
    REQUIRE(std::isfinite(r));
    CHECK(r >= prev);
    // Amos-type bounds: x / (1/2 + sqrt(x^2 + 9/4)) <= r <= x / (1/2 + sqrt(x^2 + 1/4))
    const double lo = x / (0.5 + std::sqrt(x * x + 2.25));
    const double hi = x / (0.5 + std::sqrt(x * x + 0.25));
    CHECK(r >= lo * (1 - 1e-12));
    CHECK(r <= hi * (1 + 1e-12));
    prev = r;
  }
  CHECK(bessel_ratio(1e8) >= 1 - 1e-7);
  CHECK(bessel_ratio(1e8) <= 1.0);
  CHECK(bessel_ratio(1e300) <= 1.0);
  CHECK_THROWS_AS(bessel_ratio(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(bessel_ratio(std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(bessel_ratio(std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST_CASE("circular moment") {
  CHECK(circular_moment(1.3, std::numeric_limits<double>::infinity()) == Complex(0, 0));
  CHECK(std::abs(circular_moment(1.3, 1e-12) - std::polar(1.0, 1.3)) < 1e-9);
  CHECK_THROWS_AS(circular_moment(0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(circular_moment(0.0, -1.0), std::invalid_argument);

  const Complex m = circular_moment(0.3, 0.25);
  CHECK(std::abs(m) == doctest::Approx(0.8635226).epsilon(1e-7));
  CHECK(std::arg(m) == doctest::Approx(0.3));
  CHECK(std::abs(m - oracle::gaussian_phase_moment(0.3, 0.25)) <= 2e-2);

  double prev = 1.0;
  for (double v = 0.01; v < 20; v *= 1.3) {
    const double mod = std::abs(circular_moment(-2.0, v));
    CHECK(mod <= 1.0);
    CHECK(mod < prev);
    prev = mod;
  }
}

TEST_CASE("small-variance circular moment tracks the Gaussian moment") {
  for (double v : {1e-4, 1e-3, 0.01, 0.05}) {
    const Complex exact = oracle::gaussian_phase_moment(0.9, v);
    CHECK(std::abs(exact) == doctest::Approx(std::exp(-v / 2)).epsilon(1e-9));
    CHECK(std::abs(circular_moment(0.9, v) - exact) <= 1e-3);
  }
}

TEST_CASE("prior posterior") {
  const PhasePosterior post = prior_posterior(PhaseMarkovModel{0.5, 1.0, 1.0}, 3);
  CHECK(post.means.isZero(0));
  CHECK(post.variances[0] == 1.0);
  CHECK(post.variances[1] == doctest::Approx(1.25));
  CHECK(post.variances[2] == doctest::Approx(1.3125));
  CHECK(std::abs(post.moments[0]) == doctest::Approx(bessel_ratio(1.0)));
}

}  // TEST_SUITE
