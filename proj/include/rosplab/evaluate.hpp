#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rosplab/dist.hpp"
#include "rosplab/parallel.hpp"
#include "rosplab/quadrature.hpp"
#include "rosplab/random.hpp"
#include "rosplab/rosp.hpp"
#include "rosplab/stats.hpp"

namespace rosplab::evaluate {

using dist::Distribution;
using rosp::CostModel;
using rosp::PolicySpec;
using rosp::SampleSet;

enum class EvalMethod { SemiAnalytic, MonteCarlo };

inline const char* eval_method_name(EvalMethod m) noexcept {
  return m == EvalMethod::SemiAnalytic ? "semi-analytic" : "monte-carlo";
}

/// Out-of-sample value estimate for one policy.
struct EvalReport {
  double value = 0.0;             // discounted expected reward
  double std_error = 0.0;         // 0 for semi-analytic
  std::size_t realizations = 0;   // MC paths (0 for semi-analytic)
  double truncation_bound = 0.0;  // B * beta^T / (1 - beta), 0 for semi-analytic
  std::uint64_t seed = 0;
  EvalMethod method = EvalMethod::SemiAnalytic;
  std::size_t horizon = 0;        // T for MC
  double quadrature_error = 0.0;  // Kronrod estimate for semi-analytic
  rosp::Method policy = rosp::Method::Oracle;
};

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

/// One truncated discounted reward path starting from x1.
inline double simulate_value(const PolicySpec& spec, const Distribution& truth, double x1, std::size_t horizon,
                             RandomStream& stream) {
  if (horizon < 1) throw std::invalid_argument("simulate: horizon must be >= 1");
  if (x1 < 0.0) throw std::invalid_argument("simulate: x1 must be >= 0");
  const CostModel& cost = spec.cost();
  const double beta = spec.beta();
  double x = x1;
  double discount = 1.0;
  double total = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    if (x == 0.0) break;  // nothing left; every later stage earns -C(0) = 0
    const double p = truth.sample(stream);
    const double y = rosp::sell_down(spec, x, p);
    total += discount * (p * (x - y) - cost.cost(y));
    x = y;
    discount *= beta;
  }
  return total;
}

/// Truncation bound for a horizon T: B * beta^T / (1 - beta) with per-stage
/// reward bound B = E[P] * x1 + C(x1).
inline double truncation_bound(const PolicySpec& spec, const Distribution& truth, double x1,
                               std::size_t horizon) {
  const double beta = spec.beta();
  const double per_stage = std::abs(truth.mean()) * x1 + spec.cost().cost(x1);
  return per_stage * std::pow(beta, static_cast<double>(horizon)) / (1.0 - beta);
}

/// Values of `paths` independent paths; path i draws from
/// RandomStream(seed, {i}).
inline std::vector<double> mc_path_values(const PolicySpec& spec, const Distribution& truth, double x1,
                                          std::size_t horizon, std::size_t paths, std::uint64_t seed,
                                          unsigned workers = 1) {
  return parallel_map<double>(paths, workers, [&](std::size_t i) {
    RandomStream stream(seed, {static_cast<std::uint64_t>(i)});
    return simulate_value(spec, truth, x1, horizon, stream);
  });
}

inline EvalReport mc_value(const PolicySpec& spec, const Distribution& truth, double x1, std::size_t horizon,
                           std::size_t paths, std::uint64_t seed, unsigned workers = 1) {
  if (paths < 2) throw std::invalid_argument("mc_value: at least 2 realizations required");
  const auto values = mc_path_values(spec, truth, x1, horizon, paths, seed, workers);
  const MeanSe stats = mean_and_se(values);
  EvalReport r;
  r.value = stats.mean;
  r.std_error = stats.std_error;
  r.realizations = paths;
  r.truncation_bound = truncation_bound(spec, truth, x1, horizon);
  r.seed = seed;
  r.method = EvalMethod::MonteCarlo;
  r.horizon = horizon;
  r.policy = spec.method();
  return r;
}

// ---------------------------------------------------------------------------
// Semi-analytic evaluation
// ---------------------------------------------------------------------------

struct SemiAnalyticOptions {
  double abs_tol = 1e-8;
  unsigned max_depth = 30;
};

inline void require_atomless(const Distribution& truth) {
  if (!truth.is_atomless()) {
    throw std::invalid_argument("semi-analytic evaluation requires an atomless price law");
  }
  if (truth.lower() < 0.0) {
    throw std::invalid_argument("semi-analytic evaluation requires a nonnegative price support");
  }
}

/// Closed-form derivative of the out-of-sample value at inventory x:
///   (E[P 1{P > p*}] - F(p*) c(x)) / (1 - beta F(p*)),  p* = p*(x).
inline double value_derivative(const PolicySpec& spec, const Distribution& truth, double x) {
  const double threshold = rosp::min_acceptable_price(spec, x);
  const double f = truth.cdf(threshold);
  const double above = truth.partial_expectation_above(threshold);
  return (above - f * spec.cost().marginal(x)) / (1.0 - spec.beta() * f);
}

/// Inventory levels in (0, x1) where the derivative is not smooth: the
/// threshold crosses a belief atom or a kink of the true law.
inline std::vector<double> derivative_breakpoints(const PolicySpec& spec, const Distribution& truth, double x1) {
  std::vector<double> prices = truth.kinks();
  if (spec.belief().is_discrete()) {
    const auto k = spec.belief().kinks();
    prices.insert(prices.end(), k.begin(), k.end());
  }
  return rosp::threshold_breakpoints(spec, prices, x1);
}

/// V(x1) = integral over [0, x1] of the derivative, V(0) = 0.
inline EvalReport semianalytic_value(const PolicySpec& spec, const Distribution& truth, double x1,
                                     const SemiAnalyticOptions& opt = {}) {
  require_atomless(truth);
  if (x1 < 0.0) throw std::invalid_argument("semi-analytic: x1 must be >= 0");
  EvalReport r;
  r.method = EvalMethod::SemiAnalytic;
  r.policy = spec.method();
  if (x1 == 0.0) return r;
  auto integrand = [&](double x) { return value_derivative(spec, truth, x); };
  const auto q = quadrature::integrate_panels(integrand, 0.0, x1, derivative_breakpoints(spec, truth, x1),
                                              opt.abs_tol, opt.max_depth);
  r.value = q.value;
  r.quadrature_error = q.error;
  return r;
}

/// Semi-analytic V at each of the sorted levels `xs` (all within [0, x_max]).
inline std::vector<double> semianalytic_profile(const PolicySpec& spec, const Distribution& truth,
                                                const std::vector<double>& xs, const SemiAnalyticOptions& opt = {}) {
  require_atomless(truth);
  if (!std::is_sorted(xs.begin(), xs.end())) throw std::invalid_argument("profile: levels must be sorted");
  std::vector<double> out(xs.size(), 0.0);
  if (xs.empty()) return out;
  const double x_max = xs.back();
  const auto breaks = derivative_breakpoints(spec, truth, x_max);
  auto integrand = [&](double x) { return value_derivative(spec, truth, x); };
  double acc = 0.0, prev = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < 0.0) throw std::invalid_argument("profile: levels must be >= 0");
    const double width = x_max > 0.0 ? (xs[i] - prev) / x_max : 0.0;
    acc += quadrature::integrate_panels(integrand, prev, xs[i], breaks, opt.abs_tol * std::max(width, 1e-3),
                                        opt.max_depth)
               .value;
    out[i] = acc;
    prev = xs[i];
  }
  return out;
}

/// Lookup of V on [0, x_max]: exact cumulative values at cached nodes plus a
/// short adaptive integral from the nearest node below. Built once, then
/// read-only.
class ValueCache {
 public:
  ValueCache(const PolicySpec& spec, const Distribution& truth, double x_max, const SemiAnalyticOptions& opt = {},
             std::size_t uniform_nodes = 128)
      : spec_(spec), truth_(truth), opt_(opt) {
    require_atomless(truth);
    nodes_ = derivative_breakpoints(spec, truth, x_max);
    for (std::size_t i = 0; i <= uniform_nodes; ++i) {
      nodes_.push_back(x_max * static_cast<double>(i) / static_cast<double>(uniform_nodes));
    }
    std::sort(nodes_.begin(), nodes_.end());
    nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
    breaks_ = derivative_breakpoints(spec, truth, x_max);
    values_ = semianalytic_profile(spec, truth, nodes_, opt);
  }

  double operator()(double y) const {
    if (y <= 0.0) return 0.0;
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), y);
    const std::size_t k = static_cast<std::size_t>(it - nodes_.begin()) - 1;
    if (nodes_[k] == y) return values_[k];
    auto integrand = [&](double x) { return value_derivative(spec_, truth_, x); };
    return values_[k] +
           quadrature::integrate_panels(integrand, nodes_[k], y, breaks_, opt_.abs_tol * 1e-2, opt_.max_depth).value;
  }

  double x_max() const noexcept { return nodes_.back(); }
  const std::vector<double>& kinks() const noexcept { return breaks_; }

 private:
  const PolicySpec& spec_;
  const Distribution& truth_;
  SemiAnalyticOptions opt_;
  std::vector<double> nodes_;
  std::vector<double> breaks_;
  std::vector<double> values_;
};

/// Value of following `first` for one stage and `thereafter` forever after,
/// starting from x1:  E[ P(x1 - y) - C(y) + beta V_thereafter(y) ],
/// y = y_first(x1, P).
inline double switch_value(const PolicySpec& first, const PolicySpec& thereafter, const Distribution& truth,
                           double x1, const SemiAnalyticOptions& opt = {}) {
  require_atomless(truth);
  if (x1 < 0.0) throw std::invalid_argument("switch value: x1 must be >= 0");
  if (x1 == 0.0) return 0.0;
  const ValueCache v_next(thereafter, truth, x1, opt);
  const CostModel& cost = first.cost();
  const double beta = thereafter.beta();

  // No sale below the first-stage threshold; full sale above the zero-target
  // price; interior sales in between.
  const double p_hold = rosp::min_acceptable_price(first, x1);
  const double p_clear = rosp::min_acceptable_price(first, 0.0);

  const double f_hold = truth.cdf(p_hold);
  double total = f_hold * (-cost.cost(x1) + beta * v_next(x1));
  total += x1 * truth.partial_expectation_above(p_clear) +
           (1.0 - truth.cdf(p_clear)) * (-cost.cost(0.0) + beta * v_next(0.0));

  const double lo = std::max(p_hold, truth.lower());
  if (p_clear > lo) {
    std::vector<double> breaks = truth.kinks();
    if (first.belief().is_discrete()) {
      const auto k = first.belief().kinks();
      breaks.insert(breaks.end(), k.begin(), k.end());
    }
    for (double xb : v_next.kinks()) breaks.push_back(rosp::min_acceptable_price(first, xb));
    auto integrand = [&](double p) {
      const double y = rosp::sell_down(first, x1, p);
      return (p * (x1 - y) - cost.cost(y) + beta * v_next(y)) * truth.pdf(p);
    };
    total += quadrature::integrate_panels(integrand, lo, p_clear, breaks, opt.abs_tol, opt.max_depth).value;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Sufficient condition for MPC to match or beat SDP out of sample
// ---------------------------------------------------------------------------

struct SampleConditionCheck {
  bool holds = false;
  double worst_margin = 0.0;  // min over the scan of c(x) - beta E[P 1{P > p*_S(x)}]
  double argmin_x = 0.0;
  double margin_at_zero = 0.0;
  std::size_t points = 0;
};

inline double sample_condition_margin(const PolicySpec& sdp, const Distribution& truth, double x) {
  const double threshold = rosp::min_acceptable_price(sdp, x);
  return sdp.cost().marginal(x) - sdp.beta() * truth.partial_expectation_above(threshold);
}

inline SampleConditionCheck check_prop5(const SampleSet& samples, const Distribution& truth, double beta,
                              const CostModel& cost, double x1, std::size_t grid_points = 1001) {
  require_atomless(truth);
  const auto sdp = PolicySpec::sdp(samples, beta, cost);
  std::vector<double> xs;
  xs.reserve(grid_points + samples.size() + 4);
  for (std::size_t i = 0; i < grid_points; ++i) {
    xs.push_back(grid_points == 1 ? 0.0 : x1 * static_cast<double>(i) / static_cast<double>(grid_points - 1));
  }
  for (double b : derivative_breakpoints(sdp, truth, x1)) xs.push_back(b);

  SampleConditionCheck out;
  out.worst_margin = std::numeric_limits<double>::infinity();
  for (double x : xs) {
    const double m = sample_condition_margin(sdp, truth, x);
    if (m < out.worst_margin) {
      out.worst_margin = m;
      out.argmin_x = x;
    }
  }
  out.margin_at_zero = sample_condition_margin(sdp, truth, 0.0);
  out.points = xs.size();
  out.holds = out.worst_margin >= -1e-12;
  return out;
}

// ---------------------------------------------------------------------------
// Expected out-of-sample performance over the sampling distribution
// ---------------------------------------------------------------------------

struct InnerMode {
  EvalMethod method = EvalMethod::SemiAnalytic;
  std::size_t horizon = 1000;  // MC only
  std::size_t paths = 100;     // MC only
};

struct OuterStudy {
  Distribution truth = Distribution::exponential(1.0);
  std::vector<std::size_t> sample_sizes;
  std::size_t outer = 1000;
  InnerMode inner;
  double beta = 0.99;
  double x1 = 1.0;
  CostModel cost = CostModel::quadratic(1.0);
  std::uint64_t seed = 1;
  unsigned workers = 0;
  SemiAnalyticOptions quadrature;
};

struct StudyRow {
  std::size_t n = 0;
  MeanSe sdp;
  MeanSe mpc;
  MeanSe difference;    // SDP - MPC per outer draw
  MeanSe one_plus_max;  // 1 + max sample, per outer draw
};

/// Per-outer-draw values for one sample size, already reduced.
namespace detail {

struct OuterDraw {
  std::vector<double> sdp, mpc, max_price;
};

inline double evaluate_inner(const PolicySpec& spec, const OuterStudy& study, std::uint64_t inner_seed) {
  if (study.inner.method == EvalMethod::SemiAnalytic) {
    return semianalytic_value(spec, study.truth, study.x1, study.quadrature).value;
  }
  return mc_value(spec, study.truth, study.x1, study.inner.horizon, study.inner.paths, inner_seed, 1).value;
}

}  // namespace detail

/// For every outer draw r the sample set of size N is the first N prices of
/// RandomStream(seed, {0, r}), so SDP and MPC see identical samples (common
/// random numbers), as do different N. Inner MC paths for draw r and size N
/// use seed mix(seed, {1, r, N}) for both methods.
inline std::vector<StudyRow> expected_performance(const OuterStudy& study) {
  if (study.outer < 1) throw std::invalid_argument("study: outer realizations must be >= 1");
  if (study.sample_sizes.empty()) throw std::invalid_argument("study: no sample sizes");
  for (std::size_t n : study.sample_sizes) {
    if (n < 1) throw std::invalid_argument("study: sample sizes must be >= 1");
  }
  const std::size_t n_max = *std::max_element(study.sample_sizes.begin(), study.sample_sizes.end());
  const std::size_t k = study.sample_sizes.size();

  auto draws = parallel_map<detail::OuterDraw>(study.outer, study.workers, [&](std::size_t r) {
    RandomStream stream(study.seed, {0, static_cast<std::uint64_t>(r)});
    std::vector<double> prices(n_max);
    for (double& p : prices) p = study.truth.sample(stream);
    detail::OuterDraw d;
    d.sdp.resize(k);
    d.mpc.resize(k);
    d.max_price.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t n = study.sample_sizes[j];
      const SampleSet samples(std::vector<double>(prices.begin(), prices.begin() + static_cast<std::ptrdiff_t>(n)));
      const std::uint64_t inner_seed =
          RandomStream(study.seed, {1, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(n)}).next_u64();
      d.sdp[j] = detail::evaluate_inner(PolicySpec::sdp(samples, study.beta, study.cost), study, inner_seed);
      d.mpc[j] = detail::evaluate_inner(PolicySpec::mpc(samples, study.beta, study.cost), study, inner_seed);
      d.max_price[j] = samples.max();
    }
    return d;
  });

  std::vector<StudyRow> rows(k);
  std::vector<double> s(study.outer), m(study.outer), diff(study.outer), mx(study.outer);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t r = 0; r < study.outer; ++r) {
      s[r] = draws[r].sdp[j];
      m[r] = draws[r].mpc[j];
      diff[r] = s[r] - m[r];
      mx[r] = 1.0 + draws[r].max_price[j];
    }
    rows[j].n = study.sample_sizes[j];
    rows[j].sdp = mean_and_se(s);
    rows[j].mpc = mean_and_se(m);
    rows[j].difference = mean_and_se(diff);
    rows[j].one_plus_max = mean_and_se(mx);
  }
  return rows;
}

/// V_S - V_M (semi-analytic) for two-sample policies over a (p1, p2) grid;
/// result[i][j] corresponds to (p1s[i], p2s[j]).
inline std::vector<std::vector<double>> difference_map(const Distribution& truth, double beta, const CostModel& cost,
                                                       double x1, const std::vector<double>& p1s,
                                                       const std::vector<double>& p2s, unsigned workers = 0,
                                                       const SemiAnalyticOptions& opt = {}) {
  require_atomless(truth);
  const std::size_t cols = p2s.size();
  auto flat = parallel_map<double>(p1s.size() * cols, workers, [&](std::size_t idx) {
    const SampleSet samples({p1s[idx / cols], p2s[idx % cols]});
    const double vs = semianalytic_value(PolicySpec::sdp(samples, beta, cost), truth, x1, opt).value;
    const double vm = semianalytic_value(PolicySpec::mpc(samples, beta, cost), truth, x1, opt).value;
    return vs - vm;
  });
  std::vector<std::vector<double>> out(p1s.size(), std::vector<double>(cols));
  for (std::size_t i = 0; i < flat.size(); ++i) out[i / cols][i % cols] = flat[i];
  return out;
}

struct DiscountSweepRow {
  double beta = 0.0;
  StudyRow row;
};

/// Expected SDP and MPC performance across discount factors under
/// Exponential(1) prices, x1 = 1, C(x) = x^2/2.
inline std::vector<DiscountSweepRow> prop6_sweep(const std::vector<double>& betas, std::size_t n, std::size_t outer,
                                         std::uint64_t seed, unsigned workers = 0,
                                         const SemiAnalyticOptions& opt = {}) {
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0.0 && betas[i] < 1.0)) throw std::invalid_argument("prop6: betas must lie in (0, 1)");
    if (i > 0 && !(betas[i] > betas[i - 1])) throw std::invalid_argument("prop6: betas must be strictly increasing");
  }
  std::vector<DiscountSweepRow> out;
  for (double beta : betas) {
    OuterStudy study;
    study.truth = Distribution::exponential(1.0);
    study.sample_sizes = {n};
    study.outer = outer;
    study.beta = beta;
    study.x1 = 1.0;
    study.cost = CostModel::quadratic(1.0);
    study.seed = seed;
    study.workers = workers;
    study.quadrature = opt;
    out.push_back({beta, expected_performance(study).front()});
  }
  return out;
}

}  // namespace rosplab::evaluate
