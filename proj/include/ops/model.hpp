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

#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace ops {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Variable {
  int index = 0;
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  bool is_binary = false;
};

struct Term {
  int var = 0;
  double coef = 0.0;

  bool operator==(const Term&) const = default;
};

struct AffineExpr {
  std::vector<Term> terms;
  double constant = 0.0;

  double eval(std::span<const double> x) const;
  bool operator==(const AffineExpr&) const = default;
};

// lo <= sum(terms) <= hi; either side may be infinite.
struct LinearRow {
  std::vector<Term> terms;
  double lo = -kInf;
  double hi = kInf;
  std::string name;

  double activity(std::span<const double> x) const;
  // Amount by which x violates the row (0 when satisfied).
  double violation(std::span<const double> x) const;
  bool operator==(const LinearRow&) const = default;
};

// sqrt(sum_m lhs_m(x)^2) <= rhs(x).
struct ConeRow {
  std::vector<AffineExpr> lhs;
  AffineExpr rhs;
  std::string name;

  double violation(std::span<const double> x) const;
  bool operator==(const ConeRow&) const = default;
};

enum class Component { kBus, kLine, kGenerator, kLoad, kShunt };

enum class Role {
  kStatus,    // z
  kServed,    // x (load or shunt fraction)
  kPg,
  kQg,
  kAngle,     // theta
  kPFrom,     // P_ij
  kPTo,       // P_ji
  kQFrom,
  kQTo,
  kW,         // W_ii
  kWFrom,     // W^Fr_ij
  kWTo,       // W^To_ij
  kWReal,     // W^R_ij
  kWImag,     // W^I_ij
  kWShunt,    // W^S_s
};

struct VarKey {
  Component component;
  int index;  // dense component position in the Network
  Role role;

  auto operator<=>(const VarKey&) const = default;
};

// Maximization model. Every modelling layer above builds one of these and
// every solver below consumes it.
class MixedIntegerModel {
 public:
  int add_variable(std::string name, double lo, double hi, bool is_binary = false);
  int add_variable(VarKey key, std::string name, double lo, double hi, bool is_binary = false);
  void add_row(LinearRow row);
  void add_cone(ConeRow cone);
  void add_objective(int var, double coef);

  std::optional<int> find(VarKey key) const;
  // Like find() but throws std::out_of_range when absent.
  int at(VarKey key) const;

  const std::vector<Variable>& variables() const { return variables_; }
  std::vector<Variable>& mutable_variables() { return variables_; }
  const std::vector<LinearRow>& rows() const { return rows_; }
  const std::vector<ConeRow>& cones() const { return cones_; }
  const std::vector<Term>& objective() const { return objective_; }
  const std::map<VarKey, int>& var_map() const { return var_map_; }

  std::size_t num_variables() const { return variables_.size(); }
  double objective_value(std::span<const double> x) const;

  // Fixes variable `var` to `value` by collapsing its bounds.
  void fix(int var, double value);

 private:
  std::vector<Variable> variables_;
  std::vector<LinearRow> rows_;
  std::vector<ConeRow> cones_;
  std::vector<Term> objective_;
  std::map<VarKey, int> var_map_;
};

// CPLEX LP-format text for the linear part (objective, rows, bounds,
// binaries) and a JSON sidecar listing the cone rows.
void write_lp_format(const MixedIntegerModel& model, std::ostream& out);
void write_cone_sidecar(const MixedIntegerModel& model, std::ostream& out);

}  // namespace ops
