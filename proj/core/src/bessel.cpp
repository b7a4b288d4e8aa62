#include <cmath>
#include <limits>
#include <stdexcept>

#include "phasedoa/phase_inference.hpp"

namespace phasedoa {
namespace {

// Below this the power series is used; terms peak near exp(x) so there is no
// overflow risk. Above it the asymptotic expansion is accurate to rounding.
constexpr double kSeriesLimit = 30.0;

double ratio_series(double x) {
  // I0 = sum t_k, I1 = (x/2) sum t_k / (k+1), t_k = (x^2/4)^k / (k!)^2
  const double q = x * x / 4;
  double term = 1.0;
  double i0 = 1.0;
  double i1 = 1.0;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * k);
    i0 += term;
    const double t1 = term / (k + 1);
    i1 += t1;
    if (term < i0 * 1e-18) break;
  }
  return (x / 2) * i1 / i0;
}

// sum_k (-1)^k c_k(nu) / x^k with c_k = prod_{l=1..k} (4 nu^2 - (2l-1)^2) / (k! 8^k),
// the scaled expansion of I_nu(x) exp(-x) sqrt(2 pi x). Summed until the
// terms stop shrinking or drop below rounding.
double asymptotic_scaled(double nu, double x) {
  const double mu = 4 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1;
    const double next = -term * (mu - odd * odd) / (8.0 * k * x);
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace

double bessel_ratio(double x) {
  if (!(x >= 0)) {
    throw std::invalid_argument("bessel_ratio: argument must be >= 0");
  }
  if (std::isinf(x)) {
    throw std::invalid_argument("bessel_ratio: argument must be finite");
  }
  if (x == 0) return 0.0;
  if (x <= kSeriesLimit) return ratio_series(x);
  return asymptotic_scaled(1.0, x) / asymptotic_scaled(0.0, x);
}

Complex circular_moment(double mean, double variance) {
  if (!(variance > 0)) {
    throw std::invalid_argument("circular_moment: variance must be > 0");
  }
  if (std::isinf(variance)) return {0.0, 0.0};
  const double concentration = 1.0 / variance;
  if (std::isinf(concentration)) return std::polar(1.0, mean);
  return bessel_ratio(concentration) * std::polar(1.0, mean);
}

}  // namespace phasedoa
