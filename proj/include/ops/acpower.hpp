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

#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ops/formulate.hpp"
#include "ops/network.hpp"
#include "ops/scenario.hpp"

namespace ops {

class AcError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Energization states by dense component position (1 = energized).
struct Topology {
  std::vector<int> z_bus;
  std::vector<int> z_line;
  std::vector<int> z_gen;

  bool operator==(const Topology&) const = default;
};

Topology full_topology(const Network& net);
Topology topology_of(const ShutoffSolution& sol);

// Throws AcError unless sizes match, entries are 0/1, every energized line
// has both end buses energized and every energized generator its bus.
void check_topology(const Network& net, const Topology& topo);

// Bus and generator states implied by line states alone: a bus stays on iff
// it has an energized line or hosts a generator; generators follow their bus.
Topology derive_topology(const Network& net, const std::vector<int>& z_line);

struct AcState {
  std::vector<double> vm;  // per bus, p.u.
  std::vector<double> va;  // per bus, radians
  std::vector<double> pg, qg;
  std::vector<double> xd;  // served fraction per load
  std::vector<double> xs;  // served fraction per shunt

  bool operator==(const AcState&) const = default;
};

// V = 1, theta = 0, no generation, nothing served.
AcState flat_state(const Network& net);

// Connected components of energized buses joined by energized lines, as
// sorted bus positions; ordered by their first bus.
std::vector<std::vector<std::size_t>> islands(const Network& net, const Topology& topo);

struct BranchFlow {
  double p_fr = 0.0, q_fr = 0.0, p_to = 0.0, q_to = 0.0;
};

// Pi-model flows of an energized line; the transformer sits on the from side.
BranchFlow branch_flow(const Line& line, double vi, double vj, double ti, double tj);

// Per bus, active then reactive mismatch (generation - demand - shunt - flows
// out); 2|B| entries, zero for de-energized buses.
std::vector<double> ac_residual(const Network& net, const Topology& topo, const AcState& state);

// Largest-pmax energized generator in the island (lowest position on ties),
// or -1 when the island has none.
int slack_generator(const Network& net, const Topology& topo, const std::vector<std::size_t>& island);

struct NewtonOptions {
  double tol = 1e-8;
  int max_iterations = 50;
  bool q_limits = true;  // PV buses fall back to PQ at their reactive limits
};

struct NewtonResult {
  bool converged = false;
  bool no_generator = false;  // island must shed everything
  int iterations = 0;
  AcState state;
  std::string message;
};

// Power flow on one island with dispatch and shed fixed, iterating from
// `start` (pass flat_state for a flat start). The slack generator balances
// active power and generator buses hold their vm from `start`.
NewtonResult newton_pf(const Network& net, const Topology& topo,
                       const std::vector<std::size_t>& island, const AcState& start,
                       const NewtonOptions& opts = {});

// Largest violation of the AC power flow equations and of every bound
// (voltage, generation, thermal, angle difference, served fractions) under
// the given topology.
struct AcViolation {
  double residual = 0.0;
  double bounds = 0.0;
  std::string worst;  // description of the largest bound violation

  double max() const { return residual > bounds ? residual : bounds; }
};

AcViolation ac_violation(const Network& net, const Topology& topo, const AcState& state);

enum class RedispatchStatus { kFeasible, kTrivial, kFailed };

std::string_view to_string(RedispatchStatus s);

struct IslandReport {
  std::vector<std::size_t> buses;
  int slack_bus = -1;  // bus position, -1 without generators
  bool converged = false;
  bool shed = false;  // island left without power flow
  int slp_iterations = 0;
  std::vector<double> accepted_loads;  // weighted load of each feasible accepted iterate
};

struct RedispatchResult {
  RedispatchStatus status = RedispatchStatus::kFailed;
  double load_served = 0.0;  // sum w_d P_d x_d, p.u.
  double load_served_frac = 0.0;
  AcState state;
  // Input topology with shed islands switched off; the state is certified
  // against this one.
  Topology effective;
  std::vector<IslandReport> islands;
  double recovered_objective = 0.0;  // shutoff objective at the fixed lines
  std::string message;
};

struct RedispatchOptions {
  double initial_radius = 0.1;
  double min_radius = 1e-6;
  double max_radius = 1.0;
  double step_tol = 1e-6;
  int max_iterations = 100;
  double feas_tol = 1e-6;  // certificate tolerance
  std::ostream* trace = nullptr;
};

// Maximises served load with the topology fixed, island by island, by
// sequential linear programming from a power flow point.
RedispatchResult redispatch(const Network& net, const Scenario& scn, const Topology& topo,
                            const RedispatchOptions& opts = {});

// Independent re-check of a redispatch result against its effective
// topology: residuals and bounds within `tol`.
bool certify(const Network& net, const RedispatchResult& res, double tol = 1e-6);

// Served load of every line-state vector on a small network; the
// scenario-independent part of the enumeration.
struct EnumeratedTopology {
  std::vector<int> z_line;
  Topology topology;
  RedispatchResult result;
};

std::vector<EnumeratedTopology> enumerate_topologies(const Network& net,
                                                     std::size_t max_switchable = 12,
                                                     const RedispatchOptions& opts = {},
                                                     int workers = 1);

// Best enumerated topology for a scenario, with the full blackout (every bus
// off) as an extra candidate; ties go to the lexicographically smallest
// line-state vector, then to the blackout.
ShutoffSolution best_enumerated(const Network& net, const Scenario& scn,
                                const std::vector<EnumeratedTopology>& table);

ShutoffSolution ac_ops_enumerate(const Network& net, const Scenario& scn,
                                 std::size_t max_switchable = 12);

}  // namespace ops
