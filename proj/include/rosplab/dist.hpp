#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "rosplab/random.hpp"

namespace rosplab::dist {

namespace detail {

inline double std_normal_cdf(double z) noexcept {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double positive_part(double v) noexcept { return v > 0.0 ? v : 0.0; }

}  // namespace detail

/// Triangular law on [a, b] with mode m.
struct Triangular {
  double a;
  double m;
  double b;

  double mean() const noexcept { return (a + m + b) / 3.0; }

  double variance() const noexcept {
    return (a * a + m * m + b * b - a * m - a * b - m * b) / 18.0;
  }

  double cdf(double q) const noexcept {
    if (q <= a) return 0.0;
    if (q >= b) return 1.0;
    if (q <= m) return (q - a) * (q - a) / ((b - a) * (m - a));
    return 1.0 - (b - q) * (b - q) / ((b - a) * (b - m));
  }

  double pdf(double q) const noexcept {
    if (q < a || q > b) return 0.0;
    if (q < m) return 2.0 * (q - a) / ((b - a) * (m - a));
    if (q > m) return 2.0 * (b - q) / ((b - a) * (b - m));
    return 2.0 / (b - a);
  }

  // E[(X - q)+], piecewise cubic in q.
  double expected_excess(double q) const noexcept {
    if (q >= b) return 0.0;
    if (q <= a) return mean() - q;
    if (q >= m) return (b - q) * (b - q) * (b - q) / (3.0 * (b - a) * (b - m));
    // E[(X-q)+] = E[X] - q + E[(q-X)+]
    return mean() - q + (q - a) * (q - a) * (q - a) / (3.0 * (b - a) * (m - a));
  }

  double sample(RandomStream& s) const noexcept {
    const double u = s.uniform();
    const double fm = (m - a) / (b - a);
    if (u < fm) return a + std::sqrt(u * (b - a) * (m - a));
    return b - std::sqrt((1.0 - u) * (b - a) * (b - m));
  }

  double lower() const noexcept { return a; }
  std::vector<double> kinks() const { return {a, m, b}; }
};

/// Exponential law with the given rate.
struct Exponential {
  double rate;

  double mean() const noexcept { return 1.0 / rate; }

  double cdf(double q) const noexcept { return q <= 0.0 ? 0.0 : -std::expm1(-rate * q); }

  double pdf(double q) const noexcept { return q < 0.0 ? 0.0 : rate * std::exp(-rate * q); }

  double expected_excess(double q) const noexcept {
    if (q <= 0.0) return mean() - q;
    return std::exp(-rate * q) / rate;
  }

  double partial_expectation_above(double q) const noexcept {
    if (q <= 0.0) return mean();
    return std::exp(-rate * q) * (q + 1.0 / rate);
  }

  double sample(RandomStream& s) const noexcept { return -std::log1p(-s.uniform()) / rate; }

  double lower() const noexcept { return 0.0; }
  std::vector<double> kinks() const { return {0.0}; }
};

/// Lognormal law; `log_mean` and `log_var` parameterise the underlying
/// normal, so LogNormal(-1/2, 1) has mean 1.
struct LogNormal {
  double log_mean;
  double log_var;

  double sigma() const noexcept { return std::sqrt(log_var); }
  double mean() const noexcept { return std::exp(log_mean + 0.5 * log_var); }

  double cdf(double q) const noexcept {
    if (q <= 0.0) return 0.0;
    return detail::std_normal_cdf((std::log(q) - log_mean) / sigma());
  }

  double pdf(double q) const noexcept {
    if (q <= 0.0) return 0.0;
    const double z = (std::log(q) - log_mean) / sigma();
    return std::exp(-0.5 * z * z) / (q * sigma() * std::sqrt(2.0 * std::numbers::pi));
  }

  double partial_expectation_above(double q) const noexcept {
    if (q <= 0.0) return mean();
    const double s = sigma();
    return mean() * detail::std_normal_cdf((log_mean + log_var - std::log(q)) / s);
  }

  double expected_excess(double q) const noexcept {
    if (q <= 0.0) return mean() - q;
    return partial_expectation_above(q) - q * (1.0 - cdf(q));
  }

  double sample(RandomStream& s) const noexcept {
    return std::exp(log_mean + sigma() * s.normal());
  }

  double lower() const noexcept { return 0.0; }
  std::vector<double> kinks() const { return {0.0}; }
};

/// Equally weighted atoms. Atoms are kept sorted together with suffix sums
/// so that every functional costs one binary search.
class Empirical {
 public:
  explicit Empirical(std::vector<double> atoms) : atoms_(std::move(atoms)) {
    std::sort(atoms_.begin(), atoms_.end());
    suffix_.assign(atoms_.size() + 1, 0.0);
    for (std::size_t i = atoms_.size(); i-- > 0;) suffix_[i] = suffix_[i + 1] + atoms_[i];
  }

  const std::vector<double>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  /// Sum of the atoms with sorted index >= k.
  double suffix_sum(std::size_t k) const noexcept { return suffix_[k]; }

  /// Number of atoms <= q.
  std::size_t count_at_most(double q) const noexcept {
    return static_cast<std::size_t>(std::upper_bound(atoms_.begin(), atoms_.end(), q) - atoms_.begin());
  }

  double mean() const noexcept { return suffix_[0] / static_cast<double>(atoms_.size()); }

  double cdf(double q) const noexcept {
    return static_cast<double>(count_at_most(q)) / static_cast<double>(atoms_.size());
  }

  double expected_excess(double q) const noexcept {
    const std::size_t k = count_at_most(q);
    const double n = static_cast<double>(atoms_.size());
    return (suffix_[k] - static_cast<double>(atoms_.size() - k) * q) / n;
  }

  double partial_expectation_above(double q) const noexcept {
    return suffix_[count_at_most(q)] / static_cast<double>(atoms_.size());
  }

  double sample(RandomStream& s) const noexcept {
    auto i = static_cast<std::size_t>(s.uniform() * static_cast<double>(atoms_.size()));
    return atoms_[std::min(i, atoms_.size() - 1)];
  }

  double lower() const noexcept { return atoms_.front(); }
  std::vector<double> kinks() const { return atoms_; }

 private:
  std::vector<double> atoms_;
  std::vector<double> suffix_;
};

struct PointMass {
  double value;

  double mean() const noexcept { return value; }
  double cdf(double q) const noexcept { return q >= value ? 1.0 : 0.0; }
  double expected_excess(double q) const noexcept { return detail::positive_part(value - q); }
  double partial_expectation_above(double q) const noexcept { return value > q ? value : 0.0; }
  double sample(RandomStream&) const noexcept { return value; }
  double lower() const noexcept { return value; }
  std::vector<double> kinks() const { return {value}; }
};

/// A price law. Values are immutable after construction and are validated by
/// the named constructors.
class Distribution {
 public:
  using Kind = std::variant<Triangular, Exponential, LogNormal, Empirical, PointMass>;

  static Distribution triangular(double a, double m, double b) {
    if (!(std::isfinite(a) && std::isfinite(m) && std::isfinite(b)) || !(a <= m && m <= b) || !(a < b)) {
      throw std::invalid_argument("triangular: requires a <= m <= b and a < b");
    }
    return Distribution(Triangular{a, m, b});
  }

  static Distribution exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw std::invalid_argument("exponential: rate must be > 0");
    return Distribution(Exponential{rate});
  }

  static Distribution lognormal(double log_mean, double log_var) {
    if (!std::isfinite(log_mean) || !(log_var > 0.0) || !std::isfinite(log_var)) {
      throw std::invalid_argument("lognormal: requires finite log-mean and log-variance > 0");
    }
    return Distribution(LogNormal{log_mean, log_var});
  }

  static Distribution empirical(std::vector<double> atoms) {
    if (atoms.empty()) throw std::invalid_argument("empirical: at least one atom required");
    for (double a : atoms) {
      if (!std::isfinite(a) || a < 0.0) throw std::invalid_argument("empirical: atoms must be finite and >= 0");
    }
    return Distribution(Empirical(std::move(atoms)));
  }

  static Distribution point_mass(double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("point mass: value must be finite");
    return Distribution(PointMass{value});
  }

  const Kind& kind() const noexcept { return kind_; }

  template <typename T>
  const T* as() const noexcept {
    return std::get_if<T>(&kind_);
  }

  double mean() const {
    return std::visit([](const auto& d) { return d.mean(); }, kind_);
  }

  /// Right-continuous CDF.
  double cdf(double q) const {
    return std::visit([q](const auto& d) { return d.cdf(q); }, kind_);
  }

  /// Density; only meaningful for atomless kinds.
  double pdf(double q) const {
    return std::visit(
        [q](const auto& d) -> double {
          if constexpr (requires { d.pdf(q); }) {
            return d.pdf(q);
          } else {
            throw std::logic_error("pdf requested for an atomic distribution");
          }
        },
        kind_);
  }

  /// E[(P - q)+].
  double expected_excess(double q) const {
    return std::visit([q](const auto& d) { return d.expected_excess(q); }, kind_);
  }

  /// E[P 1{P > q}].
  double partial_expectation_above(double q) const {
    return std::visit(
        [q](const auto& d) -> double {
          if constexpr (requires { d.partial_expectation_above(q); }) {
            return d.partial_expectation_above(q);
          } else {
            return d.expected_excess(q) + q * (1.0 - d.cdf(q));
          }
        },
        kind_);
  }

  double sample(RandomStream& stream) const {
    return std::visit([&stream](const auto& d) { return d.sample(stream); }, kind_);
  }

  /// Infimum of the support.
  double lower() const {
    return std::visit([](const auto& d) { return d.lower(); }, kind_);
  }

  /// Prices at which the CDF or the partial expectations are not smooth.
  std::vector<double> kinks() const {
    return std::visit([](const auto& d) { return d.kinks(); }, kind_);
  }

  bool is_atomless() const noexcept {
    return std::holds_alternative<Triangular>(kind_) || std::holds_alternative<Exponential>(kind_) ||
           std::holds_alternative<LogNormal>(kind_);
  }

  /// Piecewise-linear excess functional (finite atoms).
  bool is_discrete() const noexcept { return !is_atomless(); }

  /// Short human-readable label, free of commas so it can sit in a CSV cell.
  std::string label() const;

 private:
  explicit Distribution(Kind k) : kind_(std::move(k)) {}

  Kind kind_;
};

namespace detail {

inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace detail

inline std::string Distribution::label() const {
  return std::visit(
      [](const auto& d) -> std::string {
        using T = std::decay_t<decltype(d)>;
        using detail::fmt_num;
        if constexpr (std::is_same_v<T, Triangular>) {
          return "triangular(" + fmt_num(d.a) + " " + fmt_num(d.m) + " " + fmt_num(d.b) + ")";
        } else if constexpr (std::is_same_v<T, Exponential>) {
          return "exponential(" + fmt_num(d.rate) + ")";
        } else if constexpr (std::is_same_v<T, LogNormal>) {
          return "lognormal(" + fmt_num(d.log_mean) + " " + fmt_num(d.log_var) + ")";
        } else if constexpr (std::is_same_v<T, Empirical>) {
          return "empirical(n=" + std::to_string(d.size()) + ")";
        } else {
          return "pointmass(" + fmt_num(d.value) + ")";
        }
      },
      kind_);
}

}  // namespace rosplab::dist
