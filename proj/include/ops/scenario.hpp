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

#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ops/network.hpp"

namespace ops {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Wildfire risk per line (keyed by line id) and the load/risk trade-off.
struct Scenario {
  int id = 0;
  double alpha = 0.0;
  std::map<int, double> risk;
  std::uint64_t seed = 0;

  double total_risk() const;
  bool operator==(const Scenario&) const = default;
};

struct ScenarioSet {
  std::string case_name;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::vector<Scenario> scenarios;

  bool operator==(const ScenarioSet&) const = default;
};

struct AlphaMode {
  enum class Kind { kFixed, kUniform };
  Kind kind = Kind::kUniform;
  double value = 0.0;

  static AlphaMode fixed(double alpha) { return {Kind::kFixed, alpha}; }
  static AlphaMode uniform() { return {Kind::kUniform, 0.0}; }
  // Accepts "uniform" or "fixed:<value>".
  static AlphaMode parse(std::string_view text);
};

// Seeded streams. Every scenario id owns a child stream: its seed is the
// (id + 1)-th output of SplitMix64 started at the experiment seed, and the
// stream itself is std::mt19937_64 seeded with that value. Uniform variates
// take the top 53 bits of each 64-bit draw, so results are identical on any
// conforming platform.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t child_seed(std::uint64_t seed, int stream_id);

// Inverse Rayleigh CDF: sigma * sqrt(-2 ln(1 - u)).
double rayleigh_inverse_cdf(double u, double sigma);

// Draws, per scenario, one Rayleigh risk per line (in line order) followed by
// alpha when the mode is uniform.
std::vector<Scenario> generate_scenarios(const Network& net, int count, double sigma,
                                         AlphaMode alpha_mode, std::uint64_t seed);

// JSON scenario file: {case_name, sigma, seed, scenarios:[{id, alpha, risk:{line_id:value}}]}
std::string emit_scenarios(const ScenarioSet& set);
ScenarioSet parse_scenarios(std::string_view text);
ScenarioSet load_scenario_file(const std::string& path);

// Throws ScenarioError unless the scenario covers exactly the network's lines
// with nonnegative risks, a positive total, and alpha in [0, 1].
void check_scenario(const Network& net, const Scenario& scn);

}  // namespace ops
