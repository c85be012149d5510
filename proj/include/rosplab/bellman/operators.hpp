#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rosplab/bellman/instance.hpp"
#include "rosplab/parallel.hpp"

namespace rosplab::bellman {

/// Finite set of distributions over the instance's atoms.
struct AmbiguitySet {
  std::vector<std::vector<double>> members;

  /// Every member must be a probability vector on the atoms with mean equal
  /// to the forecast.
  void validate(const FiniteInstance& inst, double tol = 1e-12) const {
    if (members.empty()) throw std::invalid_argument("ambiguity set is empty");
    for (const auto& q : members) {
      if (q.size() != inst.num_atoms()) throw std::invalid_argument("ambiguity member has wrong length");
      double total = 0.0, mean = 0.0;
      for (std::size_t k = 0; k < q.size(); ++k) {
        if (!(q[k] >= 0.0)) throw std::invalid_argument("ambiguity member has a negative weight");
        total += q[k];
        mean += q[k] * inst.atoms[k];
      }
      if (std::abs(total - 1.0) > tol) throw std::invalid_argument("ambiguity member does not sum to 1");
      if (std::abs(mean - inst.forecast) > tol * (1.0 + std::abs(inst.forecast))) {
        throw std::invalid_argument("ambiguity member mean differs from the forecast");
      }
    }
  }

  bool contains_point_mass(const FiniteInstance& inst) const {
    const std::size_t f = inst.forecast_index();
    return std::any_of(members.begin(), members.end(), [&](const auto& q) { return q[f] == 1.0; });
  }
};

inline std::vector<double> point_mass_member(const FiniteInstance& inst) {
  std::vector<double> q(inst.num_atoms(), 0.0);
  q[inst.forecast_index()] = 1.0;
  return q;
}

/// Moves `amount` of probability out of the atom at the forecast and splits
/// it evenly between the two atoms `offset` grid steps either side. Needs a
/// uniform atom grid around the forecast so the mean is unchanged.
inline std::vector<double> mean_preserving_spread(const FiniteInstance& inst, std::vector<double> base,
                                                  std::size_t offset, double amount) {
  const std::size_t f = inst.forecast_index();
  if (offset == 0 || f < offset || f + offset >= inst.num_atoms()) {
    throw std::invalid_argument("spread: atoms at the requested offset do not exist");
  }
  const double left = inst.forecast - inst.atoms[f - offset];
  const double right = inst.atoms[f + offset] - inst.forecast;
  if (std::abs(left - right) > 1e-12 * (1.0 + std::abs(left))) {
    throw std::invalid_argument("spread: atoms are not equidistant from the forecast");
  }
  if (!(amount >= 0.0) || amount > base[f]) throw std::invalid_argument("spread: amount exceeds the available mass");
  base[f] -= amount;
  base[f - offset] += 0.5 * amount;
  base[f + offset] += 0.5 * amount;
  return base;
}

enum class OperatorKind { SDP, MPC, DRO, DOO };

inline const char* operator_name(OperatorKind k) noexcept {
  switch (k) {
    case OperatorKind::SDP: return "sdp";
    case OperatorKind::MPC: return "mpc";
    case OperatorKind::DRO: return "dro";
    case OperatorKind::DOO: return "doo";
  }
  return "?";
}

/// Operator kind together with its ambiguity set (DRO/DOO only).
struct Operator {
  OperatorKind kind = OperatorKind::SDP;
  AmbiguitySet ambiguity;

  static Operator sdp() { return {OperatorKind::SDP, {}}; }
  static Operator mpc() { return {OperatorKind::MPC, {}}; }
  static Operator dro(AmbiguitySet a) { return {OperatorKind::DRO, std::move(a)}; }
  static Operator doo(AmbiguitySet a) { return {OperatorKind::DOO, std::move(a)}; }
};

namespace detail {

/// Continuation value of one action under the operator.
inline double continuation(const FiniteInstance& inst, const Operator& op, const ValueTable& f, const Action& a,
                           std::size_t forecast, std::vector<double>& scratch) {
  const std::size_t K = inst.num_atoms();
  if (op.kind == OperatorKind::MPC) {
    double v = 0.0;
    for (const auto& t : a.next) v += t.weight * f.at(t.state, forecast);
    return v;
  }
  // Interpolated successor value for each atom.
  scratch.assign(K, 0.0);
  for (const auto& t : a.next) {
    for (std::size_t k = 0; k < K; ++k) scratch[k] += t.weight * f.at(t.state, k);
  }
  auto expect = [&](const std::vector<double>& q) {
    double v = 0.0;
    for (std::size_t k = 0; k < K; ++k) v += q[k] * scratch[k];
    return v;
  };
  if (op.kind == OperatorKind::SDP) return expect(inst.probs);
  double best = op.kind == OperatorKind::DRO ? -std::numeric_limits<double>::infinity()
                                             : std::numeric_limits<double>::infinity();
  for (const auto& q : op.ambiguity.members) {
    const double v = expect(q);
    best = op.kind == OperatorKind::DRO ? std::max(best, v) : std::min(best, v);
  }
  return best;
}

inline void check_operator(const FiniteInstance& inst, const Operator& op) {
  if (op.kind == OperatorKind::DRO || op.kind == OperatorKind::DOO) op.ambiguity.validate(inst);
}

}  // namespace detail

/// One Bellman application: (B f)(x, xi) = min over feasible actions of
/// cost + beta * continuation. Ties go to the lowest action index.
inline ValueTable apply_operator(const FiniteInstance& inst, const Operator& op, const ValueTable& f,
                                 unsigned workers = 1) {
  detail::check_operator(inst, op);
  if (f.states != inst.num_states() || f.atoms != inst.num_atoms()) {
    throw std::invalid_argument("value table does not match the instance");
  }
  const std::size_t forecast = inst.forecast_index();
  const std::size_t K = inst.num_atoms();
  struct Row {
    std::vector<double> v;
    std::vector<std::size_t> g;
  };
  auto rows = parallel_map<Row>(inst.num_states(), workers, [&](std::size_t s) {
    Row r{std::vector<double>(K), std::vector<std::size_t>(K)};
    std::vector<double> scratch;
    for (std::size_t k = 0; k < K; ++k) {
      const auto& cell = inst.actions[s][k];
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t i = 0; i < cell.size(); ++i) {
        const double v = cell[i].cost + inst.beta * detail::continuation(inst, op, f, cell[i], forecast, scratch);
        if (v < best) {
          best = v;
          arg = i;
        }
      }
      r.v[k] = best;
      r.g[k] = arg;
    }
    return r;
  });
  ValueTable out(inst.num_states(), K);
  for (std::size_t s = 0; s < rows.size(); ++s) {
    for (std::size_t k = 0; k < K; ++k) {
      out.at(s, k) = rows[s].v[k];
      out.choice(s, k) = rows[s].g[k];
    }
  }
  return out;
}

struct IterationResult {
  ValueTable table;
  std::size_t iterations = 0;
  double last_step = 0.0;
};

/// Value iteration from the zero table until the sup-norm step is at most
/// epsilon (1 - beta) / (2 beta), which puts the result within epsilon / 2
/// of the fixed point.
inline IterationResult value_iteration(const FiniteInstance& inst, const Operator& op, double epsilon = 1e-9,
                                       unsigned workers = 1, std::size_t max_iterations = 1000000) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("value iteration: epsilon must be > 0");
  inst.validate();
  const double stop = epsilon * (1.0 - inst.beta) / (2.0 * inst.beta);
  IterationResult r;
  r.table = ValueTable::zeros(inst);
  for (;;) {
    ValueTable next = apply_operator(inst, op, r.table, workers);
    r.last_step = sup_distance(next, r.table);
    r.table = std::move(next);
    ++r.iterations;
    if (r.last_step <= stop) break;
    if (r.iterations >= max_iterations) throw std::runtime_error("value iteration did not converge");
  }
  return r;
}

/// Per-state value of following `y` forever under the true atom weights:
///   V(x) = sum_k p_k [cost(x, y(x, xi_k), xi_k) + beta V(y(x, xi_k))],
/// solved directly as (I - beta P) V = r.
inline std::vector<double> evaluate_policy(const FiniteInstance& inst, const Policy& y) {
  inst.validate();
  check_policy(inst, y);
  const auto n = static_cast<Eigen::Index>(inst.num_states());
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  for (std::size_t s = 0; s < inst.num_states(); ++s) {
    for (std::size_t k = 0; k < inst.num_atoms(); ++k) {
      const Action& a = inst.actions[s][k][y.at(s, k)];
      const double p = inst.probs[k];
      r(static_cast<Eigen::Index>(s)) += p * a.cost;
      for (const auto& t : a.next) {
        A(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t.state)) -= inst.beta * p * t.weight;
      }
    }
  }
  const Eigen::VectorXd v = A.partialPivLu().solve(r);
  return std::vector<double>(v.data(), v.data() + v.size());
}

/// Follow `y` for one stage, then collect `after` (a per-state value):
///   V(x) = sum_k p_k [cost(x, y(x, xi_k), xi_k) + beta after(y(x, xi_k))].
inline std::vector<double> switch_step(const FiniteInstance& inst, const Policy& y, const std::vector<double>& after) {
  check_policy(inst, y);
  if (after.size() != inst.num_states()) throw std::invalid_argument("switch: value vector has wrong length");
  std::vector<double> out(inst.num_states(), 0.0);
  for (std::size_t s = 0; s < inst.num_states(); ++s) {
    for (std::size_t k = 0; k < inst.num_atoms(); ++k) {
      const Action& a = inst.actions[s][k][y.at(s, k)];
      double cont = 0.0;
      for (const auto& t : a.next) cont += t.weight * after[t.state];
      out[s] += inst.probs[k] * (a.cost + inst.beta * cont);
    }
  }
  return out;
}

/// V_{y, y'}: one stage of y, then y' forever.
inline std::vector<double> switch_operator(const FiniteInstance& inst, const Policy& y, const Policy& y_prime) {
  return switch_step(inst, y, evaluate_policy(inst, y_prime));
}

/// V^T_{y, y'}: T stages of y, then y' forever. Tends to V_y as T grows.
inline std::vector<double> iterated_switch(const FiniteInstance& inst, const Policy& y, const Policy& y_prime,
                                           std::size_t T) {
  std::vector<double> v = evaluate_policy(inst, y_prime);
  for (std::size_t t = 0; t < T; ++t) v = switch_step(inst, y, v);
  return v;
}

}  // namespace rosplab::bellman
