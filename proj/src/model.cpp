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

#include "ops/model.hpp"

#include <cmath>
#include <iomanip>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ops {

double AffineExpr::eval(std::span<const double> x) const {
  double v = constant;
  for (const auto& t : terms) v += t.coef * x[t.var];
  return v;
}

double LinearRow::activity(std::span<const double> x) const {
  double v = 0.0;
  for (const auto& t : terms) v += t.coef * x[t.var];
  return v;
}

double LinearRow::violation(std::span<const double> x) const {
  const double a = activity(x);
  if (a < lo) return lo - a;
  if (a > hi) return a - hi;
  return 0.0;
}

double ConeRow::violation(std::span<const double> x) const {
  double sq = 0.0;
  for (const auto& e : lhs) {
    const double v = e.eval(x);
    sq += v * v;
  }
  return std::max(0.0, std::sqrt(sq) - rhs.eval(x));
}

int MixedIntegerModel::add_variable(std::string name, double lo, double hi, bool is_binary) {
  if (!(lo <= hi)) throw std::invalid_argument("variable " + name + ": lo exceeds hi");
  if (is_binary && (lo < 0.0 || hi > 1.0)) {
    throw std::invalid_argument("binary variable " + name + " has bounds outside [0,1]");
  }
  const int index = static_cast<int>(variables_.size());
  variables_.push_back({index, std::move(name), lo, hi, is_binary});
  return index;
}

int MixedIntegerModel::add_variable(VarKey key, std::string name, double lo, double hi,
                                    bool is_binary) {
  const int index = add_variable(std::move(name), lo, hi, is_binary);
  if (!var_map_.emplace(key, index).second) {
    throw std::invalid_argument("duplicate variable key for " + variables_[index].name);
  }
  return index;
}

void MixedIntegerModel::add_row(LinearRow row) {
  for (const auto& t : row.terms) {
    if (t.var < 0 || t.var >= static_cast<int>(variables_.size()) || !std::isfinite(t.coef)) {
      throw std::invalid_argument("row " + row.name + " has an invalid term");
    }
  }
  if (!(row.lo <= row.hi)) throw std::invalid_argument("row " + row.name + ": lo exceeds hi");
  rows_.push_back(std::move(row));
}

void MixedIntegerModel::add_cone(ConeRow cone) {
  if (cone.lhs.empty()) throw std::invalid_argument("cone " + cone.name + " has no terms");
  cones_.push_back(std::move(cone));
}

void MixedIntegerModel::add_objective(int var, double coef) {
  if (!std::isfinite(coef)) throw std::invalid_argument("non-finite objective coefficient");
  objective_.push_back({var, coef});
}

std::optional<int> MixedIntegerModel::find(VarKey key) const {
  auto it = var_map_.find(key);
  if (it == var_map_.end()) return std::nullopt;
  return it->second;
}

int MixedIntegerModel::at(VarKey key) const {
  auto it = var_map_.find(key);
  if (it == var_map_.end()) throw std::out_of_range("no variable for requested key");
  return it->second;
}

double MixedIntegerModel::objective_value(std::span<const double> x) const {
  double v = 0.0;
  for (const auto& t : objective_) v += t.coef * x[t.var];
  return v;
}

void MixedIntegerModel::fix(int var, double value) {
  variables_.at(var).lo = value;
  variables_.at(var).hi = value;
}

// ---------------------------------------------------------------------------
// LP-format export

namespace {

// LP format names may not contain brackets in every reader; map them.
std::string lp_name(const std::string& name) {
  std::string out = name;
  for (auto& c : out) {
    if (c == '[') c = '(';
    if (c == ']') c = ')';
  }
  return out;
}

void write_terms(std::ostream& out, const std::vector<Term>& terms,
                 const std::vector<Variable>& vars) {
  bool first = true;
  for (const auto& t : terms) {
    if (t.coef == 0.0) continue;
    out << (t.coef < 0 ? (first ? "-" : " - ") : (first ? "" : " + "));
    out << std::abs(t.coef) << " " << lp_name(vars[t.var].name);
    first = false;
  }
  if (first) out << "0 " << lp_name(vars.empty() ? "x" : vars[0].name);
}

}  // namespace

void write_lp_format(const MixedIntegerModel& model, std::ostream& out) {
  const auto& vars = model.variables();
  out << std::setprecision(17);
  out << "\\ linear part; cone rows are listed in the sidecar file\n";
  out << "Maximize\n obj: ";
  write_terms(out, model.objective(), vars);
  out << "\nSubject To\n";
  int k = 0;
  for (const auto& row : model.rows()) {
    const std::string name = row.name.empty() ? "r" + std::to_string(k) : lp_name(row.name);
    ++k;
    if (row.lo == row.hi) {
      out << " " << name << ": ";
      write_terms(out, row.terms, vars);
      out << " = " << row.lo << "\n";
      continue;
    }
    if (std::isfinite(row.lo)) {
      out << " " << name << "_lo: ";
      write_terms(out, row.terms, vars);
      out << " >= " << row.lo << "\n";
    }
    if (std::isfinite(row.hi)) {
      out << " " << name << "_hi: ";
      write_terms(out, row.terms, vars);
      out << " <= " << row.hi << "\n";
    }
  }
  out << "Bounds\n";
  for (const auto& v : vars) {
    if (v.is_binary) continue;
    out << " ";
    if (std::isfinite(v.lo)) out << v.lo; else out << "-inf";
    out << " <= " << lp_name(v.name) << " <= ";
    if (std::isfinite(v.hi)) out << v.hi; else out << "+inf";
    out << "\n";
  }
  out << "Binaries\n";
  for (const auto& v : vars) {
    if (v.is_binary) out << " " << lp_name(v.name) << "\n";
  }
  out << "End\n";
}

void write_cone_sidecar(const MixedIntegerModel& model, std::ostream& out) {
  using json = nlohmann::ordered_json;
  const auto& vars = model.variables();
  auto expr_json = [&](const AffineExpr& e) {
    json terms = json::array();
    for (const auto& t : e.terms) terms.push_back({{"var", vars[t.var].name}, {"coef", t.coef}});
    return json{{"terms", std::move(terms)}, {"constant", e.constant}};
  };
  json doc;
  doc["meaning"] = "sqrt(sum(lhs_m^2)) <= rhs";
  doc["cones"] = json::array();
  for (const auto& c : model.cones()) {
    json lhs = json::array();
    for (const auto& e : c.lhs) lhs.push_back(expr_json(e));
    doc["cones"].push_back({{"name", c.name}, {"lhs", std::move(lhs)}, {"rhs", expr_json(c.rhs)}});
  }
  out << doc.dump(2) << "\n";
}

}  // namespace ops
