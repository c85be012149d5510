#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "rosplab/dist.hpp"

namespace rosplab::rosp {

/// Storage cost C with marginal c and inverse marginal c^-1.
///
/// The built-in family is C(x) = c0*x + kappa*x^2/2 (c0 >= 0, kappa > 0);
/// kappa = 1, c0 = 0 is the quadratic cost of the reference experiments.
/// Custom models are accepted after a finite-difference audit.
class CostModel {
 public:
  using Fn = std::function<double(double)>;

  static CostModel quadratic(double kappa = 1.0) { return affine_quadratic(0.0, kappa); }

  static CostModel affine_quadratic(double c0, double kappa) {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("cost: kappa must be > 0");
    if (!(c0 >= 0.0) || !std::isfinite(c0)) throw std::invalid_argument("cost: c0 must be >= 0");
    CostModel m;
    m.c0_ = c0;
    m.kappa_ = kappa;
    return m;
  }

  /// Custom model. Audited on [0, audit_max]: C increasing and strictly convex,
  /// c consistent with finite differences of C, and c^-1(c(x)) = x.
  static CostModel custom(Fn cost, Fn marginal, Fn inverse_marginal, double audit_max = 10.0) {
    CostModel m;
    m.cost_ = std::move(cost);
    m.marginal_ = std::move(marginal);
    m.inverse_ = std::move(inverse_marginal);
    m.audit(audit_max);
    return m;
  }

  double cost(double x) const { return cost_ ? cost_(x) : x * (c0_ + 0.5 * kappa_ * x); }
  double marginal(double x) const { return marginal_ ? marginal_(x) : c0_ + kappa_ * x; }
  double inverse_marginal(double v) const { return inverse_ ? inverse_(v) : (v - c0_) / kappa_; }

  bool is_builtin() const noexcept { return !cost_; }
  double c0() const noexcept { return c0_; }
  double kappa() const noexcept { return kappa_; }

  std::string label() const {
    if (!is_builtin()) return "custom";
    char buf[64];
    std::snprintf(buf, sizeof buf, "affine_quadratic(c0=%.10g kappa=%.10g)", c0_, kappa_);
    return buf;
  }

 private:
  CostModel() = default;

  void audit(double xmax) const {
    constexpr int n = 200;
    const double h = xmax / n;
    for (int i = 0; i <= n; ++i) {
      const double x = i * h;
      const double cx = marginal(x);
      if (!std::isfinite(cx) || !std::isfinite(cost(x))) throw std::invalid_argument("cost audit: non-finite value");
      if (i > 0) {
        if (!(cost(x) > cost(x - h))) throw std::invalid_argument("cost audit: C not increasing");
        if (!(cx > marginal(x - h))) throw std::invalid_argument("cost audit: c not strictly increasing");
      }
      if (i > 0 && i < n) {
        const double second = cost(x + h) - 2.0 * cost(x) + cost(x - h);
        if (!(second > 0.0)) throw std::invalid_argument("cost audit: C not strictly convex");
        const double d = 1e-5 * std::max(1.0, x);
        const double fd = (cost(x + d) - cost(x - d)) / (2.0 * d);
        if (std::abs(fd - cx) > 1e-6 * (1.0 + std::abs(cx))) {
          throw std::invalid_argument("cost audit: marginal disagrees with finite differences of C");
        }
      }
      if (std::abs(inverse_marginal(cx) - x) > 1e-10 * (1.0 + x)) {
        throw std::invalid_argument("cost audit: inverse marginal round trip failed");
      }
    }
  }

  double c0_ = 0.0;
  double kappa_ = 1.0;
  Fn cost_;
  Fn marginal_;
  Fn inverse_;
};

/// N price samples, sorted, with their average.
class SampleSet {
 public:
  explicit SampleSet(std::vector<double> prices) : prices_(std::move(prices)) {
    if (prices_.empty()) throw std::invalid_argument("sample set: N >= 1 required");
    for (double p : prices_) {
      if (!std::isfinite(p) || p < 0.0) throw std::invalid_argument("sample set: prices must be finite and >= 0");
    }
    std::sort(prices_.begin(), prices_.end());
    mu_ = std::accumulate(prices_.begin(), prices_.end(), 0.0) / static_cast<double>(prices_.size());
    // Guard the ordering invariant against rounding in the mean.
    mu_ = std::clamp(mu_, prices_.front(), prices_.back());
  }

  const std::vector<double>& prices() const noexcept { return prices_; }
  std::size_t size() const noexcept { return prices_.size(); }
  double mu() const noexcept { return mu_; }
  double max() const noexcept { return prices_.back(); }
  double min() const noexcept { return prices_.front(); }

 private:
  std::vector<double> prices_;
  double mu_ = 0.0;
};

enum class Method { Oracle, SDP, MPC };

inline const char* method_name(Method m) noexcept {
  switch (m) {
    case Method::Oracle: return "oracle";
    case Method::SDP: return "sdp";
    case Method::MPC: return "mpc";
  }
  return "?";
}

/// A closed-form selling policy. Every method is the optimal policy for some
/// belief about the price law: the true law (oracle), the empirical law of
/// the samples (SDP), or the point mass at the sample mean (MPC).
class PolicySpec {
 public:
  static PolicySpec oracle(dist::Distribution truth, double beta, CostModel cost) {
    return PolicySpec(Method::Oracle, std::move(truth), beta, std::move(cost), std::nullopt);
  }

  static PolicySpec sdp(const SampleSet& samples, double beta, CostModel cost) {
    return PolicySpec(Method::SDP, dist::Distribution::empirical(samples.prices()), beta, std::move(cost), samples);
  }

  static PolicySpec mpc(const SampleSet& samples, double beta, CostModel cost) {
    return PolicySpec(Method::MPC, dist::Distribution::point_mass(samples.mu()), beta, std::move(cost), samples);
  }

  /// MPC with an explicit forecast instead of a sample mean.
  static PolicySpec mpc_forecast(double forecast, double beta, CostModel cost) {
    return PolicySpec(Method::MPC, dist::Distribution::point_mass(forecast), beta, std::move(cost), std::nullopt);
  }

  Method method() const noexcept { return method_; }
  const dist::Distribution& belief() const noexcept { return belief_; }
  double beta() const noexcept { return beta_; }
  const CostModel& cost() const noexcept { return cost_; }
  const std::optional<SampleSet>& samples() const noexcept { return samples_; }

 private:
  PolicySpec(Method m, dist::Distribution belief, double beta, CostModel cost, std::optional<SampleSet> samples)
      : method_(m), belief_(std::move(belief)), beta_(beta), cost_(std::move(cost)), samples_(std::move(samples)) {
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("policy: beta must lie in (0, 1)");
  }

  Method method_;
  dist::Distribution belief_;
  double beta_;
  CostModel cost_;
  std::optional<SampleSet> samples_;
};

/// beta*E[(P - p)+] - (1 - beta)*p under the policy's belief. Strictly
/// decreasing in p.
inline double excess_functional(const PolicySpec& spec, double p) {
  const double beta = spec.beta();
  return beta * spec.belief().expected_excess(p) - (1.0 - beta) * p;
}

/// Next inventory level when holding x and offered price p.
inline double sell_down(const PolicySpec& spec, double x, double p) {
  if (x <= 0.0) return 0.0;
  const CostModel& cost = spec.cost();
  const double g = excess_functional(spec, p);
  if (g >= cost.marginal(x)) return x;
  if (g <= cost.marginal(0.0)) return 0.0;
  return std::clamp(cost.inverse_marginal(g), 0.0, x);
}

/// Level an unconstrained seller would sell down to at price p.
inline double target_inventory(const PolicySpec& spec, double p) {
  const CostModel& cost = spec.cost();
  const double g = excess_functional(spec, p);
  if (g <= cost.marginal(0.0)) return 0.0;
  const double y = cost.inverse_marginal(g);
  if (!std::isfinite(y)) throw std::domain_error("target inventory is unbounded at this price");
  return std::max(y, 0.0);
}

namespace detail {

/// Root of the piecewise-linear excess functional of a discrete belief.
inline double solve_discrete(const dist::Empirical& emp, double beta, double target) {
  const auto& a = emp.atoms();
  const std::size_t n = a.size();
  const double nd = static_cast<double>(n);
  // With k atoms <= p the functional is beta*(S_k - (n-k)p)/n - (1-beta)p.
  auto g_linear = [&](std::size_t k, double p) {
    return beta * (emp.suffix_sum(k) - static_cast<double>(n - k) * p) / nd - (1.0 - beta) * p;
  };
  auto root_linear = [&](std::size_t k) {
    return (beta * emp.suffix_sum(k) / nd - target) / (beta * static_cast<double>(n - k) / nd + (1.0 - beta));
  };
  // g at atom i (counting every atom <= a[i]); decreasing in i.
  auto g_at = [&](std::size_t i) { return g_linear(emp.count_at_most(a[i]), a[i]); };

  // First sorted index whose functional value falls below the target.
  std::size_t lo = 0, hi = n;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (g_at(mid) < target) hi = mid;
    else lo = mid + 1;
  }
  // Root lies in (a[lo-1], a[lo]) where exactly `lo` atoms are <= p.
  return root_linear(lo);
}

}  // namespace detail

/// Minimum acceptable price at inventory x: the root of
/// excess_functional(p) = c(x). Unique because the functional is strictly
/// decreasing and continuous.
inline double min_acceptable_price(const PolicySpec& spec, double x) {
  const double beta = spec.beta();
  const double target = spec.cost().marginal(x);
  const auto& belief = spec.belief();

  if (const auto* emp = belief.as<dist::Empirical>()) return detail::solve_discrete(*emp, beta, target);
  if (const auto* pm = belief.as<dist::PointMass>()) {
    const double branch = beta * pm->value - target;
    return branch <= pm->value ? branch : -target / (1.0 - beta);
  }

  // Below the support the functional is beta*mean - p.
  const double lower = belief.lower();
  const double linear_root = beta * belief.mean() - target;
  if (linear_root <= lower) return linear_root;

  auto g = [&](double p) { return excess_functional(spec, p) - target; };
  double hi = std::max(lower, belief.mean()) + 1.0;
  while (g(hi) > 0.0) hi = lower + 2.0 * (hi - lower);
  std::uintmax_t iters = 200;
  auto stop = [](double a, double b) { return std::abs(b - a) <= 1e-12; };
  const auto [a, b] = boost::math::tools::toms748_solve(g, lower, hi, stop, iters);
  return 0.5 * (a + b);
}

/// Inventory levels x in (0, x1) where the price threshold crosses one of
/// `prices`; these are the kinks of any integrand built on p*(x).
inline std::vector<double> threshold_breakpoints(const PolicySpec& spec, const std::vector<double>& prices,
                                                 double x1) {
  const CostModel& cost = spec.cost();
  const double c_lo = cost.marginal(0.0);
  const double c_hi = cost.marginal(x1);
  std::vector<double> xs;
  for (double q : prices) {
    const double g = excess_functional(spec, q);
    if (g > c_lo && g < c_hi) xs.push_back(cost.inverse_marginal(g));
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

}  // namespace rosplab::rosp
