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
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ops/model.hpp"

namespace ops {

// Solver failure at a specific branch-and-bound node.
class MipError : public std::runtime_error {
 public:
  MipError(const std::string& what, std::int64_t node)
      : std::runtime_error(what + " (node " + std::to_string(node) + ")"), node_(node) {}
  std::int64_t node() const { return node_; }

 private:
  std::int64_t node_;
};

enum class NodeSelection {
  kBestBound,
  // Best bound, but after branching the child on the relaxation's side is
  // processed next until that dive is pruned.
  kBestBoundPlunge,
};

enum class BranchRule {
  kMostFractional,
  // Product of estimated per-direction objective losses.
  kPseudocost,
};

struct SolveOptions {
  double time_limit = 1800.0;  // seconds
  double rel_gap_tol = 1e-4;
  double int_tol = 1e-6;
  double cone_viol_tol = 1e-6;
  int max_cuts_per_node = 20;   // separation rounds on a fractional node
  int max_integral_rounds = 500;
  NodeSelection node_selection = NodeSelection::kBestBound;
  BranchRule branch_rule = BranchRule::kMostFractional;
  // Round-up heuristic at the root and every this many nodes; 0 disables.
  int rounding_frequency = 100;
  std::ostream* node_log = nullptr;
};

// Parsers for the option names used in configs: "best_bound",
// "best_bound_plunge"; "most_fractional", "pseudocost".
NodeSelection parse_node_selection(std::string_view name);
BranchRule parse_branch_rule(std::string_view name);
std::string_view to_string(NodeSelection s);
std::string_view to_string(BranchRule r);

enum class MipStatus { kOptimal, kTimeLimit, kInfeasible };

std::string_view to_string(MipStatus s);

struct MipResult {
  MipStatus status = MipStatus::kInfeasible;
  bool has_incumbent = false;
  std::vector<double> incumbent;
  double objective = -kInf;
  double best_bound = kInf;
  double gap = kInf;
  std::int64_t nodes = 0;
  std::int64_t cuts_added = 0;
  std::int64_t lp_iterations = 0;
  std::int64_t heuristic_calls = 0;
  std::int64_t heuristic_successes = 0;
  double wall_time = 0.0;
};

// Supporting hyperplane of a cone row at `point`, or nothing when the point
// violates the cone by at most `tol` (or the cone's lhs vanishes there).
std::optional<LinearRow> separate_cone(const ConeRow& cone, std::span<const double> point,
                                       double tol);

// Branch and bound over the binaries; cone rows enter lazily as cuts.
MipResult solve_mip(const MixedIntegerModel& model, const SolveOptions& opts = {});

}  // namespace ops
