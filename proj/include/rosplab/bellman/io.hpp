#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "rosplab/bellman/instance.hpp"

namespace rosplab::bellman {

/// JSON layout:
///   {"name", "beta", "forecast", "atoms": [...], "probs": [...],
///    "states": [[...], ...],
///    "shape": {"group": [...], "z": [...]}            (optional)
///    "actions": [ per state [ per atom [ {"cost", "next": [[state, weight], ...],
///                                         "target": [...]} ] ] ]}
inline nlohmann::json to_json(const FiniteInstance& inst) {
  nlohmann::json j;
  j["name"] = inst.name;
  j["beta"] = inst.beta;
  j["forecast"] = inst.forecast;
  j["atoms"] = inst.atoms;
  j["probs"] = inst.probs;
  j["states"] = inst.states;
  if (inst.shape) j["shape"] = {{"group", inst.shape->group}, {"z", inst.shape->z}};
  nlohmann::json acts = nlohmann::json::array();
  for (const auto& row : inst.actions) {
    nlohmann::json jr = nlohmann::json::array();
    for (const auto& cell : row) {
      nlohmann::json jc = nlohmann::json::array();
      for (const auto& a : cell) {
        nlohmann::json next = nlohmann::json::array();
        for (const auto& t : a.next) next.push_back({t.state, t.weight});
        jc.push_back({{"cost", a.cost}, {"next", next}, {"target", a.target}});
      }
      jr.push_back(jc);
    }
    acts.push_back(jr);
  }
  j["actions"] = acts;
  return j;
}

inline FiniteInstance instance_from_json(const nlohmann::json& j) {
  FiniteInstance inst;
  try {
    inst.name = j.value("name", std::string("instance"));
    inst.beta = j.at("beta").get<double>();
    inst.forecast = j.at("forecast").get<double>();
    inst.atoms = j.at("atoms").get<std::vector<double>>();
    inst.probs = j.at("probs").get<std::vector<double>>();
    inst.states = j.at("states").get<std::vector<std::vector<double>>>();
    if (j.contains("shape")) {
      ShapeLayout layout;
      layout.group = j["shape"].at("group").get<std::vector<std::size_t>>();
      layout.z = j["shape"].at("z").get<std::vector<double>>();
      inst.shape = layout;
    }
    for (const auto& jr : j.at("actions")) {
      auto& row = inst.actions.emplace_back();
      for (const auto& jc : jr) {
        auto& cell = row.emplace_back();
        for (const auto& ja : jc) {
          Action a;
          a.cost = ja.at("cost").get<double>();
          for (const auto& t : ja.at("next")) a.next.push_back({t.at(0).get<std::size_t>(), t.at(1).get<double>()});
          if (ja.contains("target")) a.target = ja["target"].get<std::vector<double>>();
          cell.push_back(std::move(a));
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("instance JSON: ") + e.what());
  }
  inst.validate();
  return inst;
}

inline FiniteInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open instance file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("instance file " + path + ": " + e.what());
  }
  return instance_from_json(j);
}

inline void save_instance(const FiniteInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write instance file: " + path);
  out << to_json(inst).dump(1) << '\n';
  if (!out) throw std::runtime_error("failed writing instance file: " + path);
}

}  // namespace rosplab::bellman
