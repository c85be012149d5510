#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rosplab::bellman {

/// One successor state with its interpolation weight.
struct Transition {
  std::size_t state;
  double weight;
};

/// A feasible decision at some (state, atom) cell: its stage cost and the
/// successor state, possibly spread over neighbouring grid states by linear
/// interpolation (weights sum to one).
struct Action {
  double cost = 0.0;
  std::vector<Transition> next;
  std::vector<double> target;  // successor state vector, for reporting
};

/// Optional grouping used by the shape checker. States sharing a group are
/// ordered along a uniform one-dimensional coordinate z, e.g. the price
/// coordinate for a fixed inventory.
struct ShapeLayout {
  std::vector<std::size_t> group;
  std::vector<double> z;
};

/// A finite discounted cost-minimisation problem. Values are indexed by
/// (state, atom): the cost-to-go at a state after the noise is observed.
struct FiniteInstance {
  std::string name;
  std::vector<std::vector<double>> states;
  std::vector<double> atoms;  // sorted ascending
  std::vector<double> probs;  // true (or empirical) atom weights
  double beta = 0.9;
  double forecast = 0.0;
  std::vector<std::vector<std::vector<Action>>> actions;  // [state][atom][choice]
  std::optional<ShapeLayout> shape;

  std::size_t num_states() const noexcept { return states.size(); }
  std::size_t num_atoms() const noexcept { return atoms.size(); }

  /// Index of the forecast among the atoms; throws if it is not a grid atom.
  std::size_t forecast_index() const {
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      if (std::abs(atoms[k] - forecast) <= 1e-12 * (1.0 + std::abs(forecast))) return k;
    }
    throw std::invalid_argument("instance '" + name + "': forecast is not on the atom grid");
  }

  double atom_mean() const {
    double m = 0.0;
    for (std::size_t k = 0; k < atoms.size(); ++k) m += probs[k] * atoms[k];
    return m;
  }

  void validate() const {
    const std::string who = "instance '" + name + "': ";
    if (states.empty()) throw std::invalid_argument(who + "no states");
    if (atoms.empty() || probs.size() != atoms.size()) throw std::invalid_argument(who + "atoms/probs mismatch");
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument(who + "beta must lie in (0, 1)");
    double total = 0.0;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      if (!std::isfinite(atoms[k])) throw std::invalid_argument(who + "non-finite atom");
      if (k > 0 && !(atoms[k] > atoms[k - 1])) throw std::invalid_argument(who + "atoms must be strictly increasing");
      if (!(probs[k] >= 0.0)) throw std::invalid_argument(who + "negative probability");
      total += probs[k];
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument(who + "probabilities must sum to 1");
    (void)forecast_index();
    if (actions.size() != states.size()) throw std::invalid_argument(who + "action table has wrong state count");
    for (std::size_t s = 0; s < states.size(); ++s) {
      if (actions[s].size() != atoms.size()) throw std::invalid_argument(who + "action table has wrong atom count");
      for (const auto& cell : actions[s]) {
        if (cell.empty()) throw std::invalid_argument(who + "empty feasible set");
        for (const auto& a : cell) {
          if (!std::isfinite(a.cost)) throw std::invalid_argument(who + "non-finite cost");
          if (a.next.empty()) throw std::invalid_argument(who + "action without successor");
          double w = 0.0;
          for (const auto& t : a.next) {
            if (t.state >= states.size()) throw std::invalid_argument(who + "successor out of range");
            if (!(t.weight >= 0.0)) throw std::invalid_argument(who + "negative interpolation weight");
            w += t.weight;
          }
          if (std::abs(w - 1.0) > 1e-12) throw std::invalid_argument(who + "interpolation weights must sum to 1");
        }
      }
    }
    if (shape) {
      if (shape->group.size() != states.size() || shape->z.size() != states.size()) {
        throw std::invalid_argument(who + "shape layout size mismatch");
      }
    }
  }
};

/// Values v(state, atom), stored row-major, with the chosen action per cell.
struct ValueTable {
  std::size_t states = 0;
  std::size_t atoms = 0;
  std::vector<double> values;
  std::vector<std::size_t> greedy;

  ValueTable() = default;
  ValueTable(std::size_t s, std::size_t k, double fill = 0.0)
      : states(s), atoms(k), values(s * k, fill), greedy(s * k, 0) {}

  static ValueTable zeros(const FiniteInstance& inst) { return ValueTable(inst.num_states(), inst.num_atoms()); }

  double& at(std::size_t s, std::size_t k) { return values[s * atoms + k]; }
  double at(std::size_t s, std::size_t k) const { return values[s * atoms + k]; }
  std::size_t& choice(std::size_t s, std::size_t k) { return greedy[s * atoms + k]; }
  std::size_t choice(std::size_t s, std::size_t k) const { return greedy[s * atoms + k]; }
};

inline double sup_distance(const ValueTable& a, const ValueTable& b) {
  if (a.values.size() != b.values.size()) throw std::invalid_argument("value tables differ in shape");
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) d = std::max(d, std::abs(a.values[i] - b.values[i]));
  return d;
}

inline double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("value vectors differ in length");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

/// A decision rule: action index per (state, atom), row-major.
struct Policy {
  std::size_t atoms = 0;
  std::vector<std::size_t> choice;

  std::size_t at(std::size_t s, std::size_t k) const { return choice[s * atoms + k]; }

  static Policy from_greedy(const ValueTable& t) { return Policy{t.atoms, t.greedy}; }
};

inline void check_policy(const FiniteInstance& inst, const Policy& y) {
  if (y.atoms != inst.num_atoms() || y.choice.size() != inst.num_states() * inst.num_atoms()) {
    throw std::invalid_argument("policy does not match the instance dimensions");
  }
  for (std::size_t s = 0; s < inst.num_states(); ++s) {
    for (std::size_t k = 0; k < inst.num_atoms(); ++k) {
      if (y.at(s, k) >= inst.actions[s][k].size()) throw std::invalid_argument("policy selects an infeasible action");
    }
  }
}

}  // namespace rosplab::bellman
