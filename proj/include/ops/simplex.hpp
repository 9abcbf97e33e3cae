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
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ops/model.hpp"

namespace ops {

// Numerical breakdown inside the LP core (singular basis, iteration limit).
class LpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

std::string_view to_string(LpStatus s);

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  std::vector<double> primal;  // structural variables only
  double objective = 0.0;      // maximization sense
  std::vector<double> duals;   // one per row; d(objective)/d(row activity)
  double dual_objective = 0.0;
  int iterations = 0;
};

// Process-wide tally of strong-duality checks on optimal LPs.
struct LpHealth {
  std::uint64_t optimal_solves = 0;
  std::uint64_t gap_violations = 0;
  double max_relative_gap = 0.0;
};

LpHealth lp_health();
void reset_lp_health();

// Relative duality gap tolerated on optimal solves: 1e-6 * (1 + |obj|).
inline constexpr double kDualityGapTol = 1e-6;

// Bounded-variable simplex over the linear part of a model (cones ignored).
// Each row i carries a logical s_i with a.x - s_i = 0 and s_i in [lo_i, hi_i].
// The basis is kept through an explicit kernel inverse; a solve resumes from the previous
// basis, so bound changes and appended rows are re-optimised warm with the
// dual simplex, falling back to the primal simplex when the basis is not
// dual feasible.
class SimplexSolver {
 public:
  explicit SimplexSolver(const MixedIntegerModel& model);

  int num_structural() const { return n_; }
  int num_rows() const { return m_; }

  double lower(int var) const { return lo_[var]; }
  double upper(int var) const { return hi_[var]; }
  void set_bounds(int var, double lo, double hi);

  // Appends rows; returns the index of the first appended row.
  int add_rows(std::span<const LinearRow> rows);
  // Removes rows from the end range [first, num_rows()) whose logical is
  // basic. Returns the number removed; `kept` receives the surviving old
  // indices in order.
  int remove_slack_rows(int first, double slack_tol, std::vector<int>* kept);

  LpSolution solve();

  // Diagnostics.
  int iterations() const { return total_iterations_; }
  int refactorizations() const { return refactor_count_; }

 private:
  enum class State : std::uint8_t { kBasic, kLower, kUpper, kZero };

  int num_cols() const { return n_ + m_; }
  template <typename F>
  void for_col(int j, F&& f) const;
  double col_dot(int j, const double* v) const;

  void reset_basis();
  void refactor();
  Eigen::VectorXd ftran_vec(const Eigen::VectorXd& a) const;  // B^-1 a, by basis position
  Eigen::VectorXd btran_vec(const Eigen::VectorXd& c) const;  // y with y^T B = c^T
  Eigen::VectorXd basic_cost_duals() const;
  void place_nonbasic(bool choose_by_cost);
  void compute_primal();
  void compute_duals();
  double infeasibility(int j) const;
  double row_residual() const;
  double max_primal_infeasibility() const;
  bool dual_feasible() const;
  Eigen::VectorXd ftran(int j) const;
  void pivot_row(int r, std::vector<double>& alpha_r) const;
  bool update_kernel(int r, int q);
  void basis_change(int r, int q, const Eigen::VectorXd& alpha_q, State leaving_state);

  enum class Outcome { kOptimal, kInfeasible, kUnbounded, kDualLost };
  Outcome run_dual();
  Outcome run_primal();
  LpSolution finish(Outcome outcome);

  int n_ = 0;
  int m_ = 0;
  std::vector<std::vector<std::pair<int, double>>> cols_;  // structural columns
  std::vector<double> lo_, hi_, cost_;                     // size n + m; cost minimised
  std::vector<double> x_, d_;
  std::vector<State> state_;
  std::vector<int> head_;  // basic column per basis position
  std::vector<int> pos_;   // basis position per column, -1 when nonbasic
  std::vector<std::vector<std::pair<int, double>>> rows_;  // structural entries per row
  // The basis is held through its kernel: basic structurals kcol_ against
  // the rows krow_ whose logical is nonbasic; kinv() inverts A[krow_, kcol_]
  // and lives in the top-left corner of kbuf_.
  Eigen::MatrixXd kbuf_;
  Eigen::Block<Eigen::MatrixXd> kinv() {
    const auto k = static_cast<Eigen::Index>(kcol_.size());
    return kbuf_.topLeftCorner(k, k);
  }
  Eigen::Block<const Eigen::MatrixXd> kinv() const {
    const auto k = static_cast<Eigen::Index>(kcol_.size());
    return kbuf_.topLeftCorner(k, k);
  }
  std::vector<int> kcol_, krow_;
  std::vector<int> kcol_pos_, krow_pos_;
  std::vector<double> row_w_;  // dual pricing reference weights
  bool have_basis_ = false;
  int since_refactor_ = 0;
  int total_iterations_ = 0;
  int refactor_count_ = 0;
  int solve_iterations_ = 0;
};

// One-shot solve of a model's linear part plus optional extra rows.
LpSolution solve_lp(const MixedIntegerModel& model, std::span<const LinearRow> extra_rows = {});

}  // namespace ops
