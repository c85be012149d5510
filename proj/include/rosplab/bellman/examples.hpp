#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rosplab/bellman/instance.hpp"
#include "rosplab/random.hpp"

namespace rosplab::bellman {

/// Uniform grid lo, lo + step, ..., hi.
inline std::vector<double> uniform_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw std::invalid_argument("grid: need step > 0 and hi >= lo");
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
  if (std::abs(lo + static_cast<double>(n) * step - hi) > 1e-9 * (1.0 + std::abs(hi))) {
    throw std::invalid_argument("grid: (hi - lo) must be a multiple of step");
  }
  std::vector<double> g(n + 1);
  for (std::size_t i = 0; i <= n; ++i) g[i] = lo + static_cast<double>(i) * step;
  return g;
}

namespace detail {

/// Puts the forecast among the atoms (with weight 0 if it is new).
inline void add_forecast_atom(std::vector<double>& atoms, std::vector<double>& probs, double forecast) {
  for (double a : atoms) {
    if (std::abs(a - forecast) <= 1e-12 * (1.0 + std::abs(forecast))) return;
  }
  auto it = std::lower_bound(atoms.begin(), atoms.end(), forecast);
  const auto pos = it - atoms.begin();
  atoms.insert(it, forecast);
  probs.insert(probs.begin() + pos, 0.0);
}

inline void check_atoms(const std::vector<double>& atoms, const std::vector<double>& probs) {
  if (atoms.empty() || atoms.size() != probs.size()) throw std::invalid_argument("builder: atoms/probs mismatch");
  if (!std::is_sorted(atoms.begin(), atoms.end())) throw std::invalid_argument("builder: atoms must be sorted");
}

/// Linear interpolation weights of v on a uniform grid.
inline std::vector<std::pair<std::size_t, double>> interpolate(const std::vector<double>& grid, double v) {
  const double lo = grid.front(), hi = grid.back();
  const double tol = 1e-12 * (1.0 + std::abs(hi));
  if (v < lo - tol || v > hi + tol) throw std::invalid_argument("value lies outside the grid");
  if (grid.size() == 1) return {{0, 1.0}};
  const double step = grid[1] - grid[0];
  const double u = (std::clamp(v, lo, hi) - lo) / step;
  auto i = static_cast<std::size_t>(std::floor(u));
  if (i >= grid.size() - 1) i = grid.size() - 2;
  double frac = u - static_cast<double>(i);
  if (frac <= 1e-12) return {{i, 1.0}};
  if (frac >= 1.0 - 1e-12) return {{i + 1, 1.0}};
  return {{i, 1.0 - frac}, {i + 1, frac}};
}

}  // namespace detail

/// Commodity production with an autoregressive spot price p = alpha q + xi.
/// State (inventory x, previous price q); decision y <= x + w on the
/// inventory grid; cost -p (x + w - y) + c y. The successor (y, p) is
/// linearly interpolated between neighbouring price grid points.
struct Example1Params {
  double alpha = 0.5;
  std::vector<double> inventory = {0, 1, 2, 3, 4};
  std::vector<double> prices = {0, 1, 2, 3, 4, 5, 6};
  std::vector<double> atoms = {1, 2, 3};
  std::vector<double> probs = {0.3, 0.4, 0.3};
  double forecast = 2.0;
  double production = 1.0;
  double storage_cost = 0.5;
  double beta = 0.9;
};

inline FiniteInstance build_example1(const Example1Params& prm) {
  if (!(prm.alpha >= 0.0 && prm.alpha < 1.0)) throw std::invalid_argument("example 1: alpha must lie in [0, 1)");
  if (!(prm.production >= 0.0)) throw std::invalid_argument("example 1: production must be >= 0");
  if (!(prm.storage_cost >= 0.0)) throw std::invalid_argument("example 1: storage cost must be >= 0");
  if (prm.inventory.empty() || prm.prices.empty()) throw std::invalid_argument("example 1: empty grid");
  detail::check_atoms(prm.atoms, prm.probs);

  FiniteInstance inst;
  inst.name = "example1";
  inst.beta = prm.beta;
  inst.forecast = prm.forecast;
  inst.atoms = prm.atoms;
  inst.probs = prm.probs;
  detail::add_forecast_atom(inst.atoms, inst.probs, prm.forecast);

  const std::size_t nx = prm.inventory.size(), nq = prm.prices.size();
  auto index = [nq](std::size_t ix, std::size_t iq) { return ix * nq + iq; };
  ShapeLayout layout;
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t iq = 0; iq < nq; ++iq) {
      inst.states.push_back({prm.inventory[ix], prm.prices[iq]});
      layout.group.push_back(ix);
      layout.z.push_back(prm.prices[iq]);
    }
  }
  inst.shape = layout;

  inst.actions.resize(inst.states.size());
  for (std::size_t ix = 0; ix < nx; ++ix) {
    const double x = prm.inventory[ix];
    for (std::size_t iq = 0; iq < nq; ++iq) {
      auto& row = inst.actions[index(ix, iq)];
      row.resize(inst.atoms.size());
      for (std::size_t k = 0; k < inst.atoms.size(); ++k) {
        const double p = prm.alpha * prm.prices[iq] + inst.atoms[k];
        std::vector<std::pair<std::size_t, double>> w;
        try {
          w = detail::interpolate(prm.prices, p);
        } catch (const std::invalid_argument&) {
          throw std::invalid_argument("example 1: price grid does not cover alpha*q + xi");
        }
        for (std::size_t iy = 0; iy < nx; ++iy) {
          const double y = prm.inventory[iy];
          if (y > x + prm.production + 1e-12) continue;
          Action a;
          a.cost = -p * (x + prm.production - y) + prm.storage_cost * y;
          for (const auto& [iq2, wt] : w) a.next.push_back({index(iy, iq2), wt});
          a.target = {y, p};
          row[k].push_back(std::move(a));
        }
      }
    }
  }
  inst.validate();
  return inst;
}

/// Hydrothermal scheduling: storage x on an integer grid, inflow xi, hydro
/// release h = x + xi - y, thermal top-up t = max(d - h, 0) at unit cost.
/// Release and thermal output are minimised out at build time.
struct Example2Params {
  std::vector<double> storage = {0, 1, 2, 3, 4};
  std::vector<double> atoms = {0, 1, 2};
  std::vector<double> probs = {0.25, 0.5, 0.25};
  double forecast = 1.0;
  double demand = 2.0;
  double beta = 0.9;
};

inline FiniteInstance build_example2(const Example2Params& prm) {
  if (!(prm.demand >= 0.0)) throw std::invalid_argument("example 2: demand must be >= 0");
  if (prm.storage.empty()) throw std::invalid_argument("example 2: empty storage grid");
  detail::check_atoms(prm.atoms, prm.probs);
  for (double a : prm.atoms) {
    if (a < 0.0) throw std::invalid_argument("example 2: inflows must be >= 0");
  }

  FiniteInstance inst;
  inst.name = "example2";
  inst.beta = prm.beta;
  inst.forecast = prm.forecast;
  inst.atoms = prm.atoms;
  inst.probs = prm.probs;
  detail::add_forecast_atom(inst.atoms, inst.probs, prm.forecast);

  ShapeLayout layout;
  for (double x : prm.storage) {
    inst.states.push_back({x});
    layout.group.push_back(0);
    layout.z.push_back(x);
  }
  inst.shape = layout;

  inst.actions.resize(inst.states.size());
  for (std::size_t ix = 0; ix < prm.storage.size(); ++ix) {
    const double x = prm.storage[ix];
    auto& row = inst.actions[ix];
    row.resize(inst.atoms.size());
    for (std::size_t k = 0; k < inst.atoms.size(); ++k) {
      const double xi = inst.atoms[k];
      for (std::size_t iy = 0; iy < prm.storage.size(); ++iy) {
        const double y = prm.storage[iy];
        const double h = x + xi - y;
        if (y < xi - 1e-12 || h < -1e-12) continue;  // need 0 <= h <= x
        Action a;
        a.cost = std::max(prm.demand - h, 0.0);
        a.next = {{iy, 1.0}};
        a.target = {y};
        row[k].push_back(std::move(a));
      }
      if (row[k].empty()) throw std::invalid_argument("example 2: storage grid cannot absorb the inflow");
    }
  }
  inst.validate();
  return inst;
}

/// Discretised revenue problem: inventory grid, price atoms, sell down to any
/// y <= x with cost -xi (x - y) + kappa y^2 / 2. The cost is affine in xi and
/// the feasible set does not depend on xi.
struct RospGridParams {
  std::vector<double> inventory = {0, 0.5, 1, 1.5, 2};
  std::vector<double> atoms = {0, 0.5, 1, 1.5, 2};
  std::vector<double> probs = {0.1, 0.2, 0.4, 0.2, 0.1};
  double forecast = 1.0;
  double kappa = 1.0;
  double beta = 0.9;
};

inline FiniteInstance build_rosp_grid(const RospGridParams& prm) {
  if (!(prm.kappa > 0.0)) throw std::invalid_argument("rosp grid: kappa must be > 0");
  detail::check_atoms(prm.atoms, prm.probs);
  FiniteInstance inst;
  inst.name = "rosp-grid";
  inst.beta = prm.beta;
  inst.forecast = prm.forecast;
  inst.atoms = prm.atoms;
  inst.probs = prm.probs;
  detail::add_forecast_atom(inst.atoms, inst.probs, prm.forecast);
  for (double x : prm.inventory) inst.states.push_back({x});
  inst.actions.resize(inst.states.size());
  for (std::size_t ix = 0; ix < prm.inventory.size(); ++ix) {
    const double x = prm.inventory[ix];
    inst.actions[ix].resize(inst.atoms.size());
    for (std::size_t k = 0; k < inst.atoms.size(); ++k) {
      for (std::size_t iy = 0; iy <= ix; ++iy) {
        const double y = prm.inventory[iy];
        Action a;
        a.cost = -inst.atoms[k] * (x - y) + 0.5 * prm.kappa * y * y;
        a.next = {{iy, 1.0}};
        a.target = {y};
        inst.actions[ix][k].push_back(std::move(a));
      }
    }
  }
  inst.validate();
  return inst;
}

/// Random instance with `states` states, `atoms` equally spaced atoms and
/// random weights, 1..max_actions actions per cell, costs in [-1, 1] and
/// successors that are either a single state or a two-state mixture.
inline FiniteInstance random_instance(std::uint64_t seed, std::size_t states, std::size_t atoms,
                                      std::size_t max_actions, double beta) {
  if (states < 1 || atoms < 1 || max_actions < 1) throw std::invalid_argument("random instance: empty dimension");
  RandomStream rng(seed, {0});
  auto pick = [&](std::size_t n) { return std::min(static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)), n - 1); };
  FiniteInstance inst;
  inst.name = "random-" + std::to_string(seed);
  inst.beta = beta;
  double total = 0.0;
  for (std::size_t k = 0; k < atoms; ++k) {
    inst.atoms.push_back(static_cast<double>(k));
    inst.probs.push_back(0.1 + rng.uniform());
    total += inst.probs.back();
  }
  for (double& p : inst.probs) p /= total;
  inst.forecast = inst.atoms[atoms / 2];
  for (std::size_t s = 0; s < states; ++s) inst.states.push_back({static_cast<double>(s)});
  inst.actions.resize(states);
  for (std::size_t s = 0; s < states; ++s) {
    inst.actions[s].resize(atoms);
    for (std::size_t k = 0; k < atoms; ++k) {
      const std::size_t n = 1 + pick(max_actions);
      for (std::size_t i = 0; i < n; ++i) {
        Action a;
        a.cost = 2.0 * rng.uniform() - 1.0;
        const std::size_t s1 = pick(states);
        if (rng.uniform() < 0.5) {
          a.next = {{s1, 1.0}};
        } else {
          const double w = rng.uniform();
          a.next = {{s1, w}, {pick(states), 1.0 - w}};
        }
        a.target = {static_cast<double>(s1)};
        inst.actions[s][k].push_back(std::move(a));
      }
    }
  }
  inst.validate();
  return inst;
}

inline Policy random_policy(const FiniteInstance& inst, std::uint64_t seed) {
  RandomStream rng(seed, {1});
  Policy y{inst.num_atoms(), std::vector<std::size_t>(inst.num_states() * inst.num_atoms())};
  for (std::size_t s = 0; s < inst.num_states(); ++s) {
    for (std::size_t k = 0; k < inst.num_atoms(); ++k) {
      const std::size_t n = inst.actions[s][k].size();
      y.choice[s * inst.num_atoms() + k] =
          std::min(static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)), n - 1);
    }
  }
  return y;
}

}  // namespace rosplab::bellman
