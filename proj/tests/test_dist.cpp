#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "rosplab/dist.hpp"
#include "rosplab/stats.hpp"

using rosplab::RandomStream;
using rosplab::dist::Distribution;

namespace {

// Independent numeric oracle for E[(P - q)+] and E[P 1{P > q}] over the density.
struct Tail {
  double excess;
  double above;
};

Tail integrate_tail(const Distribution& d, double q) {
  const double lo = std::max(q, d.lower());
  if (const auto* t = d.as<rosplab::dist::Triangular>()) {
    if (lo >= t->b) return {0.0, 0.0};
    boost::math::quadrature::tanh_sinh<double> ts;
    auto ex = [&](double p) { return (p - q) * d.pdf(p); };
    auto ab = [&](double p) { return p * d.pdf(p); };
    double e = 0.0, a = 0.0;
    // Split at the mode so each piece is polynomial.
    for (auto [u, v] : {std::pair{lo, std::max(lo, t->m)}, std::pair{std::max(lo, t->m), t->b}}) {
      if (v > u) {
        e += ts.integrate(ex, u, v);
        a += ts.integrate(ab, u, v);
      }
    }
    return {e, a};
  }
  boost::math::quadrature::exp_sinh<double> es;
  auto ex = [&](double p) { return (p - q) * d.pdf(p); };
  auto ab = [&](double p) { return p * d.pdf(p); };
  return {es.integrate(ex, lo, std::numeric_limits<double>::infinity()),
          es.integrate(ab, lo, std::numeric_limits<double>::infinity())};
}

}  // namespace

TEST(Distribution, MeansOfReferenceLaws) {
  EXPECT_DOUBLE_EQ(Distribution::triangular(0, 1.5, 1.5).mean(), 1.0);
  EXPECT_DOUBLE_EQ(Distribution::triangular(0, 0, 3).mean(), 1.0);
  EXPECT_DOUBLE_EQ(Distribution::triangular(0.5, 0.5, 2).mean(), 1.0);
  EXPECT_NEAR(Distribution::lognormal(-0.5, 1.0).mean(), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(Distribution::exponential(2.0).mean(), 0.5);
  EXPECT_DOUBLE_EQ(Distribution::empirical({0.5, 1.5, 4.0}).mean(), 2.0);
  EXPECT_DOUBLE_EQ(Distribution::point_mass(3.0).mean(), 3.0);
}

TEST(Distribution, CdfValues) {
  EXPECT_DOUBLE_EQ(Distribution::exponential(1).cdf(0.0), 0.0);
  EXPECT_NEAR(Distribution::exponential(1).cdf(1.0), 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_DOUBLE_EQ(Distribution::triangular(0, 1.5, 1.5).cdf(1.5), 1.0);
  EXPECT_DOUBLE_EQ(Distribution::triangular(0, 1.5, 1.5).cdf(-1.0), 0.0);
  EXPECT_DOUBLE_EQ(Distribution::empirical({0.5, 1.5}).cdf(0.5), 0.5);
  EXPECT_DOUBLE_EQ(Distribution::point_mass(2.0).cdf(2.0), 1.0);
  EXPECT_DOUBLE_EQ(Distribution::point_mass(2.0).cdf(1.999), 0.0);
}

TEST(Distribution, ExpectedExcessClosedForms) {
  EXPECT_NEAR(Distribution::exponential(1).expected_excess(0.0), 1.0, 1e-15);
  EXPECT_NEAR(Distribution::exponential(1).expected_excess(1.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(Distribution::exponential(1).expected_excess(-2.0), 3.0, 1e-15);
  EXPECT_NEAR(Distribution::empirical({0.5, 1.5}).expected_excess(1.0), 0.25, 1e-15);
  EXPECT_DOUBLE_EQ(Distribution::point_mass(2.0).expected_excess(0.5), 1.5);
  EXPECT_DOUBLE_EQ(Distribution::point_mass(2.0).expected_excess(3.0), 0.0);
}

TEST(Distribution, PartialExpectationClosedForms) {
  EXPECT_NEAR(Distribution::exponential(1).partial_expectation_above(0.0), 1.0, 1e-15);
  EXPECT_NEAR(Distribution::exponential(1).partial_expectation_above(1.0), 2.0 * std::exp(-1.0), 1e-15);
  EXPECT_DOUBLE_EQ(Distribution::point_mass(2.0).partial_expectation_above(3.0), 0.0);
  EXPECT_DOUBLE_EQ(Distribution::empirical({0.5, 1.5}).partial_expectation_above(0.5), 0.75);
}

TEST(Distribution, TailFunctionalsMatchNumericIntegration) {
  const std::vector<Distribution> laws = {
      Distribution::triangular(0, 1.5, 1.5), Distribution::triangular(0.5, 0.5, 2), Distribution::triangular(0, 0, 3),
      Distribution::triangular(0.2, 1.0, 1.8), Distribution::exponential(1.0),   Distribution::exponential(2.5),
      Distribution::lognormal(-0.5, 1.0),      Distribution::lognormal(0.3, 0.2)};
  for (const auto& d : laws) {
    for (double q : {-0.5, 0.0, 0.1, 0.5, 0.9, 1.0, 1.3, 2.0, 3.5}) {
      const Tail t = integrate_tail(d, q);
      EXPECT_NEAR(d.expected_excess(q), t.excess, 1e-10) << d.label() << " q=" << q;
      EXPECT_NEAR(d.partial_expectation_above(q), t.above, 1e-10) << d.label() << " q=" << q;
    }
  }
}

TEST(Distribution, ExpectedExcessIsConvexDecreasingAndAboveJensen) {
  const std::vector<Distribution> laws = {Distribution::triangular(0, 1.5, 1.5), Distribution::exponential(1.0),
                                          Distribution::lognormal(-0.5, 1.0),
                                          Distribution::empirical({0.2, 0.9, 3.0})};
  for (const auto& d : laws) {
    double prev = std::numeric_limits<double>::infinity();
    for (int i = -20; i <= 80; ++i) {
      const double q = 0.05 * i;
      const double e = d.expected_excess(q);
      EXPECT_GE(e + 1e-14, std::max(d.mean() - q, 0.0)) << d.label();
      EXPECT_LE(e, prev + 1e-14) << d.label();
      const double second = d.expected_excess(q + 0.05) - 2.0 * e + d.expected_excess(q - 0.05);
      EXPECT_GE(second, -1e-12) << d.label();
      prev = e;
    }
  }
}

TEST(Distribution, SampleMeansAgreeWithExactMeans) {
  const std::vector<Distribution> laws = {Distribution::triangular(0.5, 0.5, 2), Distribution::exponential(1.0),
                                          Distribution::lognormal(-0.5, 1.0), Distribution::empirical({1.0, 2.0})};
  for (const auto& d : laws) {
    RandomStream s(11, {3});
    std::vector<double> xs(200000);
    for (double& x : xs) {
      x = d.sample(s);
      ASSERT_GE(x, d.lower());
    }
    const auto st = rosplab::mean_and_se(xs);
    EXPECT_NEAR(st.mean, d.mean(), 5.0 * st.std_error) << d.label();
  }
}

TEST(Distribution, DegenerateLawsAreConstant) {
  RandomStream s(1);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(Distribution::point_mass(1.0).sample(s), 1.0);
    EXPECT_EQ(Distribution::empirical({2.0}).sample(s), 2.0);
  }
}

TEST(Distribution, RejectsInvalidParameters) {
  EXPECT_THROW(Distribution::triangular(1, 0, 2), std::invalid_argument);
  EXPECT_THROW(Distribution::triangular(1, 1, 1), std::invalid_argument);
  EXPECT_THROW(Distribution::exponential(0.0), std::invalid_argument);
  EXPECT_THROW(Distribution::lognormal(0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(Distribution::empirical({}), std::invalid_argument);
  EXPECT_THROW(Distribution::empirical({-1.0}), std::invalid_argument);
  EXPECT_THROW(Distribution::point_mass(NAN), std::invalid_argument);
}

TEST(RandomStream, KeyedStreamsAreReproducibleAndDistinct) {
  RandomStream a(42, {1, 2}), b(42, {1, 2}), c(42, {2, 1}), d(43, {1, 2});
  for (int i = 0; i < 50; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
    EXPECT_NE(x, d.next_u64());
  }
  RandomStream u(5);
  for (int i = 0; i < 10000; ++i) {
    const double v = u.uniform();
    ASSERT_GT(v, 0.0);
    ASSERT_LT(v, 1.0);
  }
}

TEST(Stats, MeanAndStandardError) {
  const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
  const auto st = rosplab::mean_and_se(xs);
  EXPECT_DOUBLE_EQ(st.mean, 2.5);
  EXPECT_NEAR(st.std_error, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
  EXPECT_EQ(st.count, 4u);
}
