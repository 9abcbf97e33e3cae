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

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ops/model.hpp"
#include "ops/network.hpp"
#include "ops/scenario.hpp"

namespace ops {

class FormulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Formulation { kNF, kDC, kSOC };

std::string_view to_string(Formulation f);
// Accepts "nf", "dc", "soc"; throws FormulationError otherwise.
Formulation parse_formulation(std::string_view name);

// Sum over lines of max(|ang_min|, |ang_max|); the big-M for angle rows.
double theta_delta_max(const Network& net);

struct WBounds {
  double wr_lo = 0.0;
  double wr_hi = 0.0;
  double wi_lo = 0.0;
  double wi_hi = 0.0;
};

// Box containing V_i V_j cos(theta) and V_i V_j sin(theta) for V_i, V_j in
// their bounds and theta in [line.ang_min, line.ang_max].
WBounds w_bounds(const Line& line, double vi_lo, double vi_hi, double vj_lo, double vj_hi);

// Shutoff objective split into its two parts: coefficient on x_d per load
// and on z_ij per line (dense positions).
struct ObjectiveCoefficients {
  std::vector<double> load;
  std::vector<double> line;
};

ObjectiveCoefficients build_objective(const Network& net, const Scenario& scn);

MixedIntegerModel build_nf(const Network& net, const Scenario& scn);
MixedIntegerModel build_dc(const Network& net, const Scenario& scn);
MixedIntegerModel build_soc(const Network& net, const Scenario& scn);
MixedIntegerModel build_model(Formulation f, const Network& net, const Scenario& scn);

// Number of linear rows build_nf emits:
//   energization  2|L| + |G| + |D| + |S|
//   generator     |G| + #{g : pmin_g != 0}
//   thermal       2|L|
//   balance       |B|
std::size_t nf_row_count(const Network& net);

// Decision part of a solved shutoff model, by dense component position.
struct ShutoffSolution {
  std::vector<int> z_bus;
  std::vector<int> z_line;
  std::vector<int> z_gen;
  std::vector<double> x_load;
  std::vector<double> x_shunt;
  double objective = 0.0;
  double load_served_frac = 0.0;  // sum w_d P_d x_d / P_tot
  double risk_served_frac = 0.0;  // sum R_ij z_ij / R_tot
};

// Objective value of given decisions: (1 - a) * load - a * risk.
void score_solution(const Network& net, const Scenario& scn, ShutoffSolution& sol);

// Rounds binaries of a model built by this module and reads the served
// fractions; objective fields are recomputed from the rounded values.
ShutoffSolution extract_solution(const Network& net, const Scenario& scn,
                                 const MixedIntegerModel& model, std::span<const double> x);

}  // namespace ops
