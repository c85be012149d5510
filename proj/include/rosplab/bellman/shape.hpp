#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "rosplab/bellman/instance.hpp"
#include "rosplab/bellman/operators.hpp"
#include "rosplab/random.hpp"

namespace rosplab::bellman {

enum class Shape { Concave, Convex };

inline const char* shape_name(Shape s) noexcept { return s == Shape::Concave ? "concave" : "convex"; }

struct ShapeReport {
  bool passed = true;
  std::size_t trials = 0;
  double worst_violation = 0.0;  // largest second difference of the wrong sign
  std::size_t failing_trials = 0;
};

namespace detail {

inline bool uniform_grid(const std::vector<double>& g) {
  if (g.size() < 3) return true;
  const double h = g[1] - g[0];
  for (std::size_t i = 2; i < g.size(); ++i) {
    if (std::abs((g[i] - g[i - 1]) - h) > 1e-9 * (std::abs(h) + 1.0)) return false;
  }
  return true;
}

/// States of each shape group, sorted by z. Without a layout every state is
/// its own group.
inline std::vector<std::vector<std::size_t>> shape_groups(const FiniteInstance& inst) {
  std::vector<std::vector<std::size_t>> out;
  if (!inst.shape) {
    for (std::size_t s = 0; s < inst.num_states(); ++s) out.push_back({s});
    return out;
  }
  std::map<std::size_t, std::vector<std::size_t>> by_group;
  for (std::size_t s = 0; s < inst.num_states(); ++s) by_group[inst.shape->group[s]].push_back(s);
  for (auto& [g, members] : by_group) {
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) { return inst.shape->z[a] < inst.shape->z[b]; });
    out.push_back(std::move(members));
  }
  return out;
}

inline double z_of(const FiniteInstance& inst, std::size_t s) { return inst.shape ? inst.shape->z[s] : 0.0; }

/// Amount by which a second difference has the wrong sign (0 when fine).
inline double wrong_sign(double second, Shape dir) {
  return dir == Shape::Concave ? std::max(second, 0.0) : std::max(-second, 0.0);
}

}  // namespace detail

/// Random table that is concave (min of affine maps) or convex (max of
/// affine maps) jointly in (z, xi) within each shape group.
inline ValueTable random_shaped_table(const FiniteInstance& inst, Shape dir, RandomStream& rng,
                                      std::size_t pieces = 4) {
  ValueTable t = ValueTable::zeros(inst);
  for (const auto& members : detail::shape_groups(inst)) {
    const double offset = 10.0 * (rng.uniform() - 0.5);
    std::vector<double> a(pieces), b(pieces), c(pieces);
    for (std::size_t i = 0; i < pieces; ++i) {
      a[i] = 4.0 * (rng.uniform() - 0.5);
      b[i] = 4.0 * (rng.uniform() - 0.5);
      c[i] = 4.0 * (rng.uniform() - 0.5);
    }
    for (std::size_t s : members) {
      const double z = detail::z_of(inst, s);
      for (std::size_t k = 0; k < inst.num_atoms(); ++k) {
        double v = a[0] * z + b[0] * inst.atoms[k] + c[0];
        for (std::size_t i = 1; i < pieces; ++i) {
          const double w = a[i] * z + b[i] * inst.atoms[k] + c[i];
          v = dir == Shape::Concave ? std::min(v, w) : std::max(v, w);
        }
        t.at(s, k) = offset + v;
      }
    }
  }
  return t;
}

/// Largest wrong-sign second difference of `t`, in xi at every state and in
/// z along every shape group (for each atom).
inline double shape_violation(const FiniteInstance& inst, const ValueTable& t, Shape dir) {
  double worst = 0.0;
  const std::size_t K = inst.num_atoms();
  for (std::size_t s = 0; s < inst.num_states(); ++s) {
    for (std::size_t k = 1; k + 1 < K; ++k) {
      worst = std::max(worst, detail::wrong_sign(t.at(s, k - 1) - 2.0 * t.at(s, k) + t.at(s, k + 1), dir));
    }
  }
  if (inst.shape) {
    for (const auto& members : detail::shape_groups(inst)) {
      for (std::size_t i = 1; i + 1 < members.size(); ++i) {
        for (std::size_t k = 0; k < K; ++k) {
          const double second = t.at(members[i - 1], k) - 2.0 * t.at(members[i], k) + t.at(members[i + 1], k);
          worst = std::max(worst, detail::wrong_sign(second, dir));
        }
      }
    }
  }
  return worst;
}

/// Seeds `trials` random shaped tables, applies the operator once to each,
/// and checks the output keeps the shape to within `tol`.
inline ShapeReport check_shape_preservation(const FiniteInstance& inst, const Operator& op, Shape dir,
                                            std::size_t trials, std::uint64_t seed = 1, double tol = 1e-10) {
  inst.validate();
  if (!detail::uniform_grid(inst.atoms)) throw std::invalid_argument("shape check: atoms must form a uniform grid");
  if (inst.shape) {
    for (const auto& members : detail::shape_groups(inst)) {
      std::vector<double> zs;
      for (std::size_t s : members) zs.push_back(inst.shape->z[s]);
      if (!detail::uniform_grid(zs)) throw std::invalid_argument("shape check: group coordinates must be uniform");
    }
  }
  ShapeReport r;
  r.trials = trials;
  for (std::size_t i = 0; i < trials; ++i) {
    RandomStream rng(seed, {static_cast<std::uint64_t>(i)});
    const ValueTable seed_table = random_shaped_table(inst, dir, rng);
    const ValueTable out = apply_operator(inst, op, seed_table);
    const double v = shape_violation(inst, out, dir);
    r.worst_violation = std::max(r.worst_violation, v);
    if (v > tol) ++r.failing_trials;
  }
  r.passed = r.failing_trials == 0;
  return r;
}

}  // namespace rosplab::bellman
