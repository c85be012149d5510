#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace rosplab::quadrature {

struct Result {
  double value = 0.0;
  double error = 0.0;      // accumulated Kronrod error estimate
  unsigned evaluations = 0;
};

namespace detail {

template <typename F>
void adaptive(F& f, double a, double b, double abs_tol, unsigned depth, Result& out) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  double err = 0.0;
  const double est = GK::integrate(f, a, b, 0, 0.0, &err);
  // Boost reports the error of the rule mapped onto [-1, 1].
  err *= 0.5 * (b - a);
  out.evaluations += 15;
  if (err <= abs_tol || depth == 0 || !(b - a > 4.0 * std::abs(a + b) * 1e-16)) {
    out.value += est;
    out.error += err;
    return;
  }
  const double mid = 0.5 * (a + b);
  adaptive(f, a, mid, 0.5 * abs_tol, depth - 1, out);
  adaptive(f, mid, b, 0.5 * abs_tol, depth - 1, out);
}

}  // namespace detail

/// Adaptive 15-point Gauss-Kronrod on [a, b] with an absolute error target.
template <typename F>
Result integrate(F&& f, double a, double b, double abs_tol = 1e-8, unsigned max_depth = 30) {
  Result out;
  if (b == a) return out;
  if (b < a) {
    out = integrate(f, b, a, abs_tol, max_depth);
    out.value = -out.value;
    return out;
  }
  detail::adaptive(f, a, b, abs_tol, max_depth, out);
  return out;
}

/// Integrates over [a, b] with every breakpoint inside (a, b) forced to be a
/// panel boundary. The tolerance is split across panels by width.
template <typename F>
Result integrate_panels(F&& f, double a, double b, std::vector<double> breaks, double abs_tol = 1e-8,
                        unsigned max_depth = 30) {
  Result out;
  if (!(b > a)) return integrate(f, a, b, abs_tol, max_depth);
  std::erase_if(breaks, [&](double t) { return !(t > a && t < b); });
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  double lo = a;
  breaks.push_back(b);
  for (double hi : breaks) {
    const Result piece = integrate(f, lo, hi, abs_tol * (hi - lo) / (b - a), max_depth);
    out.value += piece.value;
    out.error += piece.error;
    out.evaluations += piece.evaluations;
    lo = hi;
  }
  return out;
}

}  // namespace rosplab::quadrature
