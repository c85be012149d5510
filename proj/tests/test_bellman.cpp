#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rosplab/bellman.hpp"

using namespace rosplab::bellman;

namespace {

FiniteInstance single_state(double cost, double beta) {
  FiniteInstance inst;
  inst.name = "single";
  inst.states = {{0.0}};
  inst.atoms = {0.0};
  inst.probs = {1.0};
  inst.beta = beta;
  inst.forecast = 0.0;
  inst.actions = {{{Action{cost, {{0, 1.0}}, {0.0}}}}};
  return inst;
}

// Exact expectation of the policy cost over T stages, atom by atom.
std::vector<double> truncated_policy_value(const FiniteInstance& inst, const Policy& y, std::size_t T) {
  const std::size_t S = inst.num_states(), K = inst.num_atoms();
  std::vector<double> v(S, 0.0), next(S);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      double acc = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const Action& a = inst.actions[s][k][y.at(s, k)];
        double cont = 0.0;
        for (const auto& tr : a.next) cont += tr.weight * v[tr.state];
        acc += inst.probs[k] * (a.cost + inst.beta * cont);
      }
      next[s] = acc;
    }
    v.swap(next);
  }
  return v;
}

std::vector<double> state_expectation(const FiniteInstance& inst, const ValueTable& t) {
  std::vector<double> out(inst.num_states(), 0.0);
  for (std::size_t s = 0; s < inst.num_states(); ++s) {
    for (std::size_t k = 0; k < inst.num_atoms(); ++k) out[s] += inst.probs[k] * t.at(s, k);
  }
  return out;
}

}  // namespace

TEST(ValueIteration, SingleStateGeometricSeries) {
  const auto inst = single_state(2.0, 0.9);
  const auto r = value_iteration(inst, Operator::sdp(), 1e-10);
  EXPECT_NEAR(r.table.at(0, 0), 2.0 / 0.1, 1e-10);
}

TEST(ValueIteration, SdpFixedPointMatchesLinearSolveOfGreedyPolicy) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto inst = random_instance(seed, 2, 2, 3, 0.85);
    const auto r = value_iteration(inst, Operator::sdp(), 1e-11);
    const auto v = evaluate_policy(inst, Policy::from_greedy(r.table));
    const auto e = state_expectation(inst, r.table);
    for (std::size_t s = 0; s < 2; ++s) EXPECT_NEAR(v[s], e[s], 1e-9);
  }
}

TEST(ValueIteration, OptimalAgainstEveryStationaryPolicy) {
  const auto inst = random_instance(77, 3, 2, 2, 0.8);
  const auto r = value_iteration(inst, Operator::sdp(), 1e-11);
  const auto best = state_expectation(inst, r.table);
  // Enumerate all stationary deterministic policies.
  const std::size_t cells = 3 * 2;
  std::vector<std::size_t> sizes;
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t k = 0; k < 2; ++k) sizes.push_back(inst.actions[s][k].size());
  std::vector<double> brute(3, std::numeric_limits<double>::infinity());
  Policy y{2, std::vector<std::size_t>(cells, 0)};
  for (;;) {
    const auto v = evaluate_policy(inst, y);
    for (std::size_t s = 0; s < 3; ++s) brute[s] = std::min(brute[s], v[s]);
    std::size_t i = 0;
    while (i < cells && ++y.choice[i] == sizes[i]) y.choice[i++] = 0;
    if (i == cells) break;
  }
  for (std::size_t s = 0; s < 3; ++s) EXPECT_NEAR(best[s], brute[s], 1e-9);
}

TEST(EvaluatePolicy, MatchesTruncatedExpectation) {
  const auto inst = random_instance(5, 3, 3, 3, 0.9);
  const auto y = random_policy(inst, 8);
  const auto v = evaluate_policy(inst, y);
  const auto t = truncated_policy_value(inst, y, 2000);
  for (std::size_t s = 0; s < 3; ++s) EXPECT_NEAR(v[s], t[s], 1e-6);
}

TEST(EvaluatePolicy, AbsorbingZeroCostState) {
  FiniteInstance inst;
  inst.states = {{0.0}, {1.0}};
  inst.atoms = {0.0, 1.0};
  inst.probs = {0.5, 0.5};
  inst.forecast = 0.0;
  inst.beta = 0.9;
  inst.actions = {{{Action{0.0, {{0, 1.0}}, {}}}, {Action{0.0, {{0, 1.0}}, {}}}},
                  {{Action{3.0, {{0, 1.0}}, {}}}, {Action{5.0, {{0, 1.0}}, {}}}}};
  const auto v = evaluate_policy(inst, Policy{2, {0, 0, 0, 0}});
  EXPECT_NEAR(v[0], 0.0, 1e-14);
  EXPECT_NEAR(v[1], 4.0, 1e-14);
}

TEST(SwitchOperator, SamePolicyIsItsValue) {
  const auto inst = random_instance(3, 5, 3, 3, 0.9);
  const auto y = random_policy(inst, 4);
  const auto v = evaluate_policy(inst, y);
  const auto w = switch_operator(inst, y, y);
  for (std::size_t s = 0; s < v.size(); ++s) EXPECT_NEAR(v[s], w[s], 1e-10);
}

TEST(SwitchOperator, IteratedSwitchConvergesGeometrically) {
  const auto inst = random_instance(12, 6, 3, 3, 0.9);
  const auto y = random_policy(inst, 1);
  const auto z = random_policy(inst, 2);
  const auto v_y = evaluate_policy(inst, y);
  const auto v_z = evaluate_policy(inst, z);
  const auto it = iterated_switch(inst, y, z, 200);
  EXPECT_LE(sup_distance(it, v_y), std::pow(0.9, 200) * sup_distance(v_z, v_y) + 1e-12);
}

TEST(Operators, RobustAndOptimisticBracketTheExpectation) {
  const auto inst = build_rosp_grid({});
  const auto amb = default_ambiguity(inst);
  const auto f = value_iteration(inst, Operator::sdp()).table;
  const auto s = apply_operator(inst, Operator::sdp(), f);
  const auto d = apply_operator(inst, Operator::dro(amb), f);
  const auto o = apply_operator(inst, Operator::doo(amb), f);
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    EXPECT_LE(o.values[i], s.values[i] + 1e-12);
    EXPECT_GE(d.values[i], s.values[i] - 1e-12);
  }
  // A singleton set holding the true weights is plain expectation.
  const auto single = apply_operator(inst, Operator::dro(AmbiguitySet{{inst.probs}}), f);
  EXPECT_LE(sup_distance(single, s), 1e-12);
}

TEST(Operators, AmbiguityMembersMustMatchTheForecastMean) {
  const auto inst = build_example2({});
  EXPECT_THROW(AmbiguitySet({{{1.0, 0.0, 0.0}}}).validate(inst), std::invalid_argument);
  EXPECT_NO_THROW(default_ambiguity(inst).validate(inst));
}

TEST(Instance, ForecastOffTheAtomGridIsRejected) {
  auto inst = build_example2({});
  inst.forecast = 0.5;
  EXPECT_THROW(inst.forecast_index(), std::invalid_argument);
  EXPECT_THROW(value_iteration(inst, Operator::mpc()), std::invalid_argument);
}

TEST(Examples, ConstantPriceWithoutAutoregression) {
  Example1Params p;
  p.alpha = 0.0;
  p.atoms = {2.0};
  p.probs = {1.0};
  p.forecast = 2.0;
  const auto inst = build_example1(p);
  // Every successor sits at price 2 regardless of the current price.
  for (std::size_t s = 0; s < inst.num_states(); ++s) {
    for (const auto& a : inst.actions[s][0]) {
      for (const auto& t : a.next) EXPECT_EQ(inst.states[t.state][1], 2.0);
    }
  }
  EXPECT_TRUE(check_shape_preservation(inst, Operator::mpc(), Shape::Concave, 20).passed);
}

TEST(Examples, AbundantInflowWithFullReservoirCostsNothing) {
  Example2Params p;
  p.atoms = {2.0, 3.0};
  p.probs = {0.5, 0.5};
  p.forecast = 2.0;
  p.demand = 2.0;
  const auto inst = build_example2(p);
  const auto r = value_iteration(inst, Operator::sdp());
  // Release is capped by the stored volume, so only states holding at least
  // the demand avoid thermal generation.
  for (std::size_t s = 2; s < inst.num_states(); ++s) {
    for (std::size_t k = 0; k < inst.num_atoms(); ++k) EXPECT_NEAR(r.table.at(s, k), 0.0, 1e-12);
  }
  EXPECT_GT(r.table.at(0, 0), 0.0);
}

TEST(Examples, SingleInflowMatchesEnumeratedSchedule) {
  Example2Params p;
  p.storage = {0, 1, 2, 3};
  p.atoms = {1.0};
  p.probs = {1.0};
  p.forecast = 1.0;
  p.demand = 2.0;
  const auto inst = build_example2(p);
  const auto r = value_iteration(inst, Operator::sdp(), 1e-11);
  // Hand enumeration: from 1 the only steady schedule releases the inflow
  // (cost 1 per stage); 0 must first store it; 2 and 3 draw storage down.
  const std::vector<double> expect = {2.0 + 0.9 * 10.0, 10.0, 9.0, 8.1};
  for (std::size_t s = 0; s < 4; ++s) EXPECT_NEAR(r.table.at(s, 0), expect[s], 1e-9) << "state " << s;
}

TEST(Examples, ReferenceFixturesSatisfyTheirShapeChecks) {
  EXPECT_TRUE(check_shape_preservation(build_example1({}), Operator::mpc(), Shape::Concave, 100).passed);
  EXPECT_TRUE(check_shape_preservation(build_example2({}), Operator::mpc(), Shape::Convex, 100).passed);
  EXPECT_TRUE(check_shape_preservation(build_rosp_grid({}), Operator::mpc(), Shape::Concave, 100).passed);
}

TEST(Examples, WrongDirectionGivesNoEquivalence) {
  // The convex instance is not matched by the robust (sup) operator.
  const auto inst = build_example2({});
  const auto rep = verify_equivalence(inst, default_ambiguity(inst), OperatorKind::DRO);
  EXPECT_GT(rep.gap, 1e-3);
}

TEST(ShapeCheck, DetectsANonPreservingOperator) {
  // Stage cost with a strong convex kink: concave tables cannot stay concave.
  FiniteInstance inst;
  inst.states = {{0.0}, {1.0}, {2.0}};
  inst.atoms = {0.0};
  inst.probs = {1.0};
  inst.forecast = 0.0;
  inst.beta = 0.9;
  inst.shape = ShapeLayout{{0, 0, 0}, {0.0, 1.0, 2.0}};
  const std::vector<double> cost = {0.0, -100.0, 0.0};
  inst.actions.resize(3);
  for (std::size_t s = 0; s < 3; ++s) inst.actions[s] = {{Action{cost[s], {{s, 1.0}}, {}}}};
  const auto r = check_shape_preservation(inst, Operator::mpc(), Shape::Concave, 20);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.failing_trials, 20u);
  EXPECT_GT(r.worst_violation, 0.0);
}

TEST(InstanceJson, RoundTrip) {
  const auto inst = build_example1({});
  const auto back = instance_from_json(to_json(inst));
  EXPECT_EQ(back.num_states(), inst.num_states());
  EXPECT_EQ(back.atoms, inst.atoms);
  EXPECT_EQ(back.probs, inst.probs);
  ASSERT_TRUE(back.shape.has_value());
  EXPECT_EQ(back.shape->z, inst.shape->z);
  const auto a = value_iteration(inst, Operator::mpc()).table;
  const auto b = value_iteration(back, Operator::mpc()).table;
  EXPECT_EQ(a.values, b.values);
}

TEST(InstanceJson, MalformedInputIsRejected) {
  EXPECT_THROW(instance_from_json(nlohmann::json::parse(R"({"beta": 0.9})")), std::invalid_argument);
  auto j = to_json(build_example2({}));
  j["probs"] = {0.5, 0.6, 0.1};
  EXPECT_THROW(instance_from_json(j), std::invalid_argument);
}
