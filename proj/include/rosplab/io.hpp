#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rosplab/dist.hpp"

namespace rosplab::io {

/// Shortest round-trip decimal form used in every CSV cell.
inline std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline nlohmann::json to_json(const dist::Distribution& d) {
  using namespace dist;
  if (const auto* t = d.as<Triangular>()) return {{"kind", "triangular"}, {"a", t->a}, {"m", t->m}, {"b", t->b}};
  if (const auto* e = d.as<Exponential>()) return {{"kind", "exponential"}, {"rate", e->rate}};
  if (const auto* l = d.as<LogNormal>()) return {{"kind", "lognormal"}, {"log_mean", l->log_mean}, {"log_var", l->log_var}};
  if (const auto* e = d.as<Empirical>()) return {{"kind", "empirical"}, {"atoms", e->atoms()}};
  const auto* p = d.as<PointMass>();
  return {{"kind", "point_mass"}, {"value", p->value}};
}

/// Tagged record, e.g. {"kind":"triangular","a":0,"m":1.5,"b":1.5}.
inline dist::Distribution distribution_from_json(const nlohmann::json& j) {
  using dist::Distribution;
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "triangular") {
      return Distribution::triangular(j.at("a").get<double>(), j.at("m").get<double>(), j.at("b").get<double>());
    }
    if (kind == "exponential") return Distribution::exponential(j.at("rate").get<double>());
    if (kind == "lognormal") return Distribution::lognormal(j.at("log_mean").get<double>(), j.at("log_var").get<double>());
    if (kind == "empirical") return Distribution::empirical(j.at("atoms").get<std::vector<double>>());
    if (kind == "point_mass" || kind == "pointmass") return Distribution::point_mass(j.at("value").get<double>());
    throw std::invalid_argument("unknown distribution kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("distribution record: ") + e.what());
  }
}

/// Accepts either a JSON record or the compact label form such as
/// "triangular(0 1.5 1.5)", "exponential(1)", "lognormal(-0.5 1)",
/// "empirical(0.5 1.5)" or "pointmass(2)".
inline dist::Distribution parse_distribution(const std::string& text) {
  using dist::Distribution;
  const auto first = text.find_first_not_of(" \t");
  if (first == std::string::npos) throw std::invalid_argument("empty distribution description");
  if (text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(std::string("distribution JSON: ") + e.what());
    }
    return distribution_from_json(j);
  }
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw std::invalid_argument("distribution must look like kind(p1 p2 ...): " + text);
  }
  const std::string kind = text.substr(first, open - first);
  std::string args = text.substr(open + 1, close - open - 1);
  for (char& c : args) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(args);
  std::vector<double> v;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw std::invalid_argument("bad number '" + tok + "' in " + text);
    v.push_back(x);
  }
  auto need = [&](std::size_t n) {
    if (v.size() != n) throw std::invalid_argument(kind + " expects " + std::to_string(n) + " parameter(s)");
  };
  if (kind == "triangular") { need(3); return Distribution::triangular(v[0], v[1], v[2]); }
  if (kind == "exponential") { need(1); return Distribution::exponential(v[0]); }
  if (kind == "lognormal") { need(2); return Distribution::lognormal(v[0], v[1]); }
  if (kind == "pointmass" || kind == "point_mass") { need(1); return Distribution::point_mass(v[0]); }
  if (kind == "empirical") return Distribution::empirical(v);
  throw std::invalid_argument("unknown distribution kind '" + kind + "'");
}

inline const std::vector<std::string>& study_columns() {
  static const std::vector<std::string> cols = {"study_id", "method", "N", "beta", "distribution",
                                                "value_mean", "value_stderr", "realizations", "seed", "inner_mode"};
  return cols;
}

/// One row of the study CSV.
struct StudyCsvRow {
  std::string study_id;
  std::string method;
  std::size_t n = 0;
  double beta = 0.0;
  std::string distribution;
  double value_mean = 0.0;
  double value_stderr = 0.0;
  std::size_t realizations = 0;
  std::uint64_t seed = 0;
  std::string inner_mode;
};

inline void write_study_header(std::ostream& out) {
  const auto& cols = study_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
}

inline void write_study_row(std::ostream& out, const StudyCsvRow& r) {
  out << r.study_id << ',' << r.method << ',' << r.n << ',' << number(r.beta) << ',' << r.distribution << ','
      << number(r.value_mean) << ',' << number(r.value_stderr) << ',' << r.realizations << ',' << r.seed << ','
      << r.inner_mode << '\n';
}

}  // namespace rosplab::io
