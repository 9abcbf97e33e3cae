// Copyright 2026 The OPS Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ops/scenario.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ops {

using json = nlohmann::ordered_json;

double Scenario::total_risk() const {
  double total = 0.0;
  for (const auto& [id, r] : risk) total += r;
  return total;
}

AlphaMode AlphaMode::parse(std::string_view text) {
  if (text == "uniform") return uniform();
  constexpr std::string_view prefix = "fixed:";
  if (text.substr(0, prefix.size()) == prefix) {
    const std::string num(text.substr(prefix.size()));
    char* end = nullptr;
    const double v = std::strtod(num.c_str(), &end);
    if (end == num.c_str() || *end != '\0' || !(v >= 0.0 && v <= 1.0)) {
      throw ScenarioError("alpha must be in [0,1], got '" + num + "'");
    }
    return fixed(v);
  }
  throw ScenarioError("alpha mode must be 'uniform' or 'fixed:<value>', got '" +
                      std::string(text) + "'");
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t child_seed(std::uint64_t seed, int stream_id) {
  std::uint64_t state = seed;
  std::uint64_t out = 0;
  for (int i = 0; i <= stream_id; ++i) out = splitmix64(state);
  return out;
}

double rayleigh_inverse_cdf(double u, double sigma) {
  if (!(u >= 0.0 && u < 1.0)) throw ScenarioError("probability must be in [0,1)");
  if (!(sigma > 0.0)) throw ScenarioError("Rayleigh scale must be positive");
  return sigma * std::sqrt(-2.0 * std::log1p(-u));
}

namespace {

double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace

std::vector<Scenario> generate_scenarios(const Network& net, int count, double sigma,
                                         AlphaMode alpha_mode, std::uint64_t seed) {
  if (count < 1) throw ScenarioError("scenario count must be positive");
  if (net.lines().empty()) throw ScenarioError("network has no lines to assign risk to");
  if (!(sigma > 0.0)) throw ScenarioError("Rayleigh scale must be positive");
  if (alpha_mode.kind == AlphaMode::Kind::kFixed &&
      !(alpha_mode.value >= 0.0 && alpha_mode.value <= 1.0)) {
    throw ScenarioError("fixed alpha must be in [0,1]");
  }

  std::vector<Scenario> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int id = 0; id < count; ++id) {
    Scenario scn;
    scn.id = id;
    scn.seed = child_seed(seed, id);
    std::mt19937_64 gen(scn.seed);
    for (const auto& line : net.lines()) {
      scn.risk[line.id] = rayleigh_inverse_cdf(uniform01(gen), sigma);
    }
    scn.alpha = alpha_mode.kind == AlphaMode::Kind::kFixed ? alpha_mode.value : uniform01(gen);
    out.push_back(std::move(scn));
  }
  return out;
}

std::string emit_scenarios(const ScenarioSet& set) {
  json doc;
  doc["case_name"] = set.case_name;
  doc["sigma"] = set.sigma;
  doc["seed"] = set.seed;
  doc["scenarios"] = json::array();
  for (const auto& s : set.scenarios) {
    json risk = json::object();
    for (const auto& [line_id, r] : s.risk) risk[std::to_string(line_id)] = r;
    doc["scenarios"].push_back({{"id", s.id}, {"alpha", s.alpha}, {"risk", std::move(risk)}});
  }
  return doc.dump(2) + "\n";
}

ScenarioSet parse_scenarios(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("invalid scenario JSON: ") + e.what());
  }
  ScenarioSet set;
  try {
    set.case_name = doc.at("case_name").get<std::string>();
    set.sigma = doc.at("sigma").get<double>();
    set.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& s : doc.at("scenarios")) {
      Scenario scn;
      scn.id = s.at("id").get<int>();
      scn.alpha = s.at("alpha").get<double>();
      scn.seed = child_seed(set.seed, scn.id);
      for (const auto& [key, value] : s.at("risk").items()) {
        scn.risk[std::stoi(key)] = value.get<double>();
      }
      set.scenarios.push_back(std::move(scn));
    }
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("malformed scenario file: ") + e.what());
  }
  return set;
}

ScenarioSet load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenarios(buf.str());
}

void check_scenario(const Network& net, const Scenario& scn) {
  const std::string who = "scenario " + std::to_string(scn.id);
  if (!(scn.alpha >= 0.0 && scn.alpha <= 1.0)) throw ScenarioError(who + ": alpha outside [0,1]");
  if (scn.risk.size() != net.num_lines()) {
    throw ScenarioError(who + ": risk entries do not match the network's lines");
  }
  for (const auto& line : net.lines()) {
    auto it = scn.risk.find(line.id);
    if (it == scn.risk.end()) {
      throw ScenarioError(who + ": no risk for line " + std::to_string(line.id));
    }
    if (!(it->second >= 0.0) || !std::isfinite(it->second)) {
      throw ScenarioError(who + ": invalid risk on line " + std::to_string(line.id));
    }
  }
  if (!(scn.total_risk() > 0.0)) throw ScenarioError(who + ": total risk must be positive");
}

}  // namespace ops
