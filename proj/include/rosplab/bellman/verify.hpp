#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rosplab/bellman/examples.hpp"
#include "rosplab/bellman/instance.hpp"
#include "rosplab/bellman/operators.hpp"
#include "rosplab/bellman/shape.hpp"

namespace rosplab::bellman {

struct EquivalenceReport {
  double gap = 0.0;  // sup-norm distance between the MPC and robust fixed points
  double epsilon = 0.0;
  OperatorKind robust = OperatorKind::DRO;
  std::size_t mpc_iterations = 0;
  std::size_t robust_iterations = 0;
  bool holds() const noexcept { return gap <= 2.0 * epsilon; }
};

/// Solves the MPC equation and the robust (DRO) or optimistic (DOO) equation
/// over `ambiguity` and reports the sup-norm gap between the fixed points.
inline EquivalenceReport verify_equivalence(const FiniteInstance& inst, const AmbiguitySet& ambiguity,
                                      OperatorKind robust = OperatorKind::DRO, double epsilon = 1e-9,
                                      unsigned workers = 1) {
  if (robust != OperatorKind::DRO && robust != OperatorKind::DOO) {
    throw std::invalid_argument("equivalence check: robust operator must be DRO or DOO");
  }
  ambiguity.validate(inst);
  const auto m = value_iteration(inst, Operator::mpc(), epsilon, workers);
  const auto r = value_iteration(inst, Operator{robust, ambiguity}, epsilon, workers);
  EquivalenceReport rep;
  rep.gap = sup_distance(m.table, r.table);
  rep.epsilon = epsilon;
  rep.robust = robust;
  rep.mpc_iterations = m.iterations;
  rep.robust_iterations = r.iterations;
  return rep;
}

/// Default ambiguity set for an instance: the instance weights, the point
/// mass at the forecast, and one mean-preserving spread of the weights.
inline AmbiguitySet default_ambiguity(const FiniteInstance& inst) {
  AmbiguitySet a;
  a.members.push_back(inst.probs);
  a.members.push_back(point_mass_member(inst));
  const std::size_t f = inst.forecast_index();
  if (f >= 1 && f + 1 < inst.num_atoms() && inst.probs[f] > 0.0) {
    a.members.push_back(mean_preserving_spread(inst, inst.probs, 1, inst.probs[f]));
  }
  return a;
}

struct BoundReport {
  std::vector<double> predicted;  // v_M(x, forecast) per state
  std::vector<double> realized;   // value of the MPC greedy policy under the true weights
  std::vector<double> margin;     // signed so that >= 0 means the bound holds
  double worst_margin = std::numeric_limits<double>::infinity();
  std::size_t worst_state = 0;
  std::size_t violations = 0;
  double epsilon = 0.0;
  bool holds() const noexcept { return violations == 0; }
};

/// MPC with the true mean as forecast: on a concavity-preserving instance the
/// realized cost is at most the predicted value; on a convexity-preserving
/// one it is at least the predicted value. Checked at every state.
inline BoundReport verify_bound(const FiniteInstance& inst, Shape direction, double epsilon = 1e-9,
                                            unsigned workers = 1) {
  inst.validate();
  if (std::abs(inst.atom_mean() - inst.forecast) > 1e-12 * (1.0 + std::abs(inst.forecast))) {
    throw std::invalid_argument("bound check: forecast must equal the mean of the atom weights");
  }
  const std::size_t f = inst.forecast_index();
  const auto m = value_iteration(inst, Operator::mpc(), epsilon, workers);
  BoundReport rep;
  rep.epsilon = epsilon;
  rep.realized = evaluate_policy(inst, Policy::from_greedy(m.table));
  for (std::size_t s = 0; s < inst.num_states(); ++s) {
    const double pred = m.table.at(s, f);
    rep.predicted.push_back(pred);
    const double margin = direction == Shape::Concave ? pred - rep.realized[s] : rep.realized[s] - pred;
    rep.margin.push_back(margin);
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_state = s;
    }
    if (margin < -2.0 * epsilon) ++rep.violations;
  }
  return rep;
}

struct SwitchComparison {
  bool premise = false;     // V_{y'} <= V_{y,y'} everywhere
  bool conclusion = false;  // V_{y'} <= V_y everywhere
  double premise_slack = 0.0;     // min of V_{y,y'} - V_{y'}
  double conclusion_slack = 0.0;  // min of V_y - V_{y'}
};

/// Policy-switch comparison. A premise within `tol` yields a conclusion
/// within tol / (1 - beta), which is the tolerance used for it.
inline SwitchComparison compare_switch(const FiniteInstance& inst, const Policy& y, const Policy& y_prime,
                                     double tol = 1e-10) {
  const auto v_prime = evaluate_policy(inst, y_prime);
  const auto v_y = evaluate_policy(inst, y);
  const auto v_switch = switch_step(inst, y, v_prime);
  SwitchComparison r;
  r.premise_slack = std::numeric_limits<double>::infinity();
  r.conclusion_slack = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < inst.num_states(); ++s) {
    r.premise_slack = std::min(r.premise_slack, v_switch[s] - v_prime[s]);
    r.conclusion_slack = std::min(r.conclusion_slack, v_y[s] - v_prime[s]);
  }
  r.premise = r.premise_slack >= -tol;
  r.conclusion = r.conclusion_slack >= -(tol / (1.0 - inst.beta) + tol);
  return r;
}

/// Largest ratio ||V^T_{y,y'} - V_y|| / (beta^T ||V_{y'} - V_y||) over the
/// horizons in `Ts`; at most 1 up to rounding. Horizons where the
/// denominator vanishes are skipped.
inline double switch_convergence_ratio(const FiniteInstance& inst, const Policy& y, const Policy& y_prime,
                                       const std::vector<std::size_t>& Ts) {
  const auto v_y = evaluate_policy(inst, y);
  const auto v_prime = evaluate_policy(inst, y_prime);
  const double base = sup_distance(v_prime, v_y);
  double worst = 0.0;
  for (std::size_t T : Ts) {
    const double bound = std::pow(inst.beta, static_cast<double>(T)) * base;
    if (!(bound > 1e-13)) continue;
    worst = std::max(worst, sup_distance(iterated_switch(inst, y, y_prime, T), v_y) / bound);
  }
  return worst;
}

struct SwitchStudy {
  std::size_t instances = 0;
  std::size_t pairs = 0;
  std::size_t premise_held = 0;
  std::size_t violations = 0;        // premise held but the conclusion failed
  double worst_conclusion_slack = std::numeric_limits<double>::infinity();
  double worst_rate_ratio = 0.0;
  bool rate_holds() const noexcept { return worst_rate_ratio <= 1.0 + 1e-6; }
  bool holds() const noexcept { return violations == 0 && rate_holds(); }
};

/// Random instances, each with three policy pairs: a random policy against
/// the SDP-optimal one, and two random policies in both orders.
inline SwitchStudy switch_study(std::uint64_t seed, std::size_t instances, std::size_t states, std::size_t atoms,
                                std::size_t max_actions, double beta,
                                const std::vector<std::size_t>& horizons = {1, 5, 20, 50, 100, 200}) {
  SwitchStudy out;
  out.instances = instances;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::uint64_t s = RandomStream(seed, {7, static_cast<std::uint64_t>(i)}).next_u64();
    const auto inst = random_instance(s, states, atoms, max_actions, beta);
    const auto best = Policy::from_greedy(value_iteration(inst, Operator::sdp()).table);
    const auto y = random_policy(inst, s + 1);
    const auto z = random_policy(inst, s + 2);
    for (const auto& [a, b] : {std::pair{&y, &best}, std::pair{&y, &z}, std::pair{&z, &y}}) {
      ++out.pairs;
      const auto r = compare_switch(inst, *a, *b);
      if (r.premise) {
        ++out.premise_held;
        out.worst_conclusion_slack = std::min(out.worst_conclusion_slack, r.conclusion_slack);
        if (!r.conclusion) ++out.violations;
      }
      out.worst_rate_ratio = std::max(out.worst_rate_ratio, switch_convergence_ratio(inst, *a, *b, horizons));
    }
  }
  return out;
}

}  // namespace rosplab::bellman
