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

#include "ops/mip.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <queue>

#include "ops/simplex.hpp"

namespace ops {

std::string_view to_string(MipStatus s) {
  switch (s) {
    case MipStatus::kOptimal: return "optimal";
    case MipStatus::kTimeLimit: return "time_limit";
    case MipStatus::kInfeasible: return "infeasible";
  }
  return "?";
}

NodeSelection parse_node_selection(std::string_view name) {
  if (name == "best_bound") return NodeSelection::kBestBound;
  if (name == "best_bound_plunge") return NodeSelection::kBestBoundPlunge;
  throw std::invalid_argument("unknown node selection '" + std::string(name) + "'");
}

BranchRule parse_branch_rule(std::string_view name) {
  if (name == "most_fractional") return BranchRule::kMostFractional;
  if (name == "pseudocost") return BranchRule::kPseudocost;
  throw std::invalid_argument("unknown branch rule '" + std::string(name) + "'");
}

std::string_view to_string(NodeSelection s) {
  return s == NodeSelection::kBestBound ? "best_bound" : "best_bound_plunge";
}

std::string_view to_string(BranchRule r) {
  return r == BranchRule::kMostFractional ? "most_fractional" : "pseudocost";
}

std::optional<LinearRow> separate_cone(const ConeRow& cone, std::span<const double> point,
                                       double tol) {
  std::vector<double> e(cone.lhs.size());
  double sq = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    e[k] = cone.lhs[k].eval(point);
    sq += e[k] * e[k];
  }
  const double norm = std::sqrt(sq);
  if (norm == 0.0) return std::nullopt;
  if (norm <= cone.rhs.eval(point) + tol) return std::nullopt;

  // sum_k (e_k / |e|) e_k(x) <= rhs(x), with constants moved right.
  std::map<int, double> coef;
  double constant = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    const double g = e[k] / norm;
    if (g == 0.0) continue;
    for (const auto& t : cone.lhs[k].terms) coef[t.var] += g * t.coef;
    constant += g * cone.lhs[k].constant;
  }
  for (const auto& t : cone.rhs.terms) coef[t.var] -= t.coef;
  LinearRow row;
  for (const auto& [var, c] : coef) {
    if (std::abs(c) > 1e-14) row.terms.push_back({var, c});
  }
  row.lo = -kInf;
  row.hi = cone.rhs.constant - constant;
  row.name = "oa_" + cone.name;
  return row;
}

namespace {

struct Node {
  std::int64_t id = 0;
  int depth = 0;
  double bound = kInf;
  std::vector<std::int8_t> fix;  // per binary: -1 free, 0 or 1 fixed
  // Branching that created the node, for pseudocost updates.
  int branched = -1;
  int side = 0;
  double parent_obj = 0.0;
  double delta = 0.0;
};

// Average objective loss per unit change of each binary, by direction.
class Pseudocosts {
 public:
  explicit Pseudocosts(std::size_t n) : sum_{std::vector<double>(n), std::vector<double>(n)},
                                        cnt_{std::vector<int>(n), std::vector<int>(n)} {}

  void record(int b, int side, double loss_per_unit) {
    sum_[side][b] += loss_per_unit;
    ++cnt_[side][b];
  }

  double get(int b, int side) const {
    if (cnt_[side][b] > 0) return sum_[side][b] / cnt_[side][b];
    // Unseen: the mean over observed binaries, or 1.
    double total = 0.0;
    int seen = 0;
    for (std::size_t k = 0; k < sum_[side].size(); ++k) {
      if (cnt_[side][k] == 0) continue;
      total += sum_[side][k] / cnt_[side][k];
      ++seen;
    }
    return seen > 0 ? total / seen : 1.0;
  }

 private:
  std::vector<double> sum_[2];
  std::vector<int> cnt_[2];
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    // Equal bounds: deeper first, then newest, so plateaus are dived.
    if (a.bound != b.bound) return a.bound < b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.id < b.id;
  }
};

class CutManager {
 public:
  CutManager(SimplexSolver& lp, int base_rows) : lp_(lp), base_rows_(base_rows) {}

  // Adds pool cuts violated at x. Returns how many were activated.
  int reactivate(std::span<const double> x, double tol) {
    std::vector<LinearRow> rows;
    for (std::size_t c = 0; c < pool_.size(); ++c) {
      if (active_[c]) continue;
      if (pool_[c].violation(x) > tol) {
        rows.push_back(pool_[c]);
        activate(static_cast<int>(c));
      }
    }
    lp_.add_rows(rows);
    return static_cast<int>(rows.size());
  }

  void add_new(std::vector<LinearRow> rows) {
    for (auto& r : rows) {
      pool_.push_back(r);
      active_.push_back(false);
      activate(static_cast<int>(pool_.size()) - 1);
    }
    lp_.add_rows(rows);
  }

  // Drops slack cut rows from the LP once the active set grows large.
  void maybe_purge(std::size_t limit) {
    if (lp_rows_.size() <= limit) return;
    std::vector<int> kept;
    lp_.remove_slack_rows(base_rows_, 1e-7, &kept);
    std::vector<int> still;
    for (int old_row : kept) {
      if (old_row >= base_rows_) still.push_back(lp_rows_[old_row - base_rows_]);
    }
    std::fill(active_.begin(), active_.end(), false);
    for (int c : still) active_[c] = true;
    lp_rows_ = std::move(still);
  }

  std::size_t pool_size() const { return pool_.size(); }

 private:
  void activate(int c) {
    active_[c] = true;
    lp_rows_.push_back(c);
  }

  SimplexSolver& lp_;
  int base_rows_;
  std::vector<LinearRow> pool_;
  std::vector<bool> active_;
  std::vector<int> lp_rows_;  // pool index per LP row beyond the base rows
};

}  // namespace

MipResult solve_mip(const MixedIntegerModel& model, const SolveOptions& opts) {
  if (!(opts.rel_gap_tol > 0.0 && opts.int_tol > 0.0 && opts.cone_viol_tol > 0.0)) {
    throw std::invalid_argument("solver tolerances must be positive");
  }
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  std::vector<int> binaries;
  for (const auto& v : model.variables()) {
    if (!v.is_binary) continue;
    if (v.lo < 0.0 || v.hi > 1.0) throw std::invalid_argument("binary with bounds outside [0,1]");
    binaries.push_back(v.index);
  }
  std::vector<double> base_lo(binaries.size()), base_hi(binaries.size());
  for (std::size_t b = 0; b < binaries.size(); ++b) {
    base_lo[b] = std::ceil(model.variables()[binaries[b]].lo - opts.int_tol);
    base_hi[b] = std::floor(model.variables()[binaries[b]].hi + opts.int_tol);
  }

  std::vector<double> obj_coef(binaries.size(), 0.0);
  for (const Term& t : model.objective()) {
    auto it = std::find(binaries.begin(), binaries.end(), t.var);
    if (it != binaries.end()) obj_coef[it - binaries.begin()] += t.coef;
  }
  // Without any reward term, switching free binaries on gains nothing.
  const bool rewards = std::any_of(model.objective().begin(), model.objective().end(),
                                   [](const Term& t) { return t.coef > 0.0; });

  SimplexSolver lp(model);
  CutManager cuts(lp, lp.num_rows());
  const std::size_t purge_limit = 4 * model.cones().size() + 200;

  MipResult res;
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  open.push(Node{0, 0, kInf, std::vector<std::int8_t>(binaries.size(), -1)});
  std::int64_t next_id = 1;
  double best_bound = kInf;

  auto prune_level = [&] {
    return res.has_incumbent ? res.objective + opts.rel_gap_tol * std::max(1.0, std::abs(res.objective))
                             : -kInf;
  };

  Pseudocosts pseudo(binaries.size());
  // Child of the last branched node, processed next (plunging).
  std::optional<Node> dive;

  bool timed_out = false;
  while (!open.empty() || dive) {
    // Global bound: best open node (or the incumbent once the queue drains).
    double top = open.empty() ? -kInf : open.top().bound;
    if (dive) top = std::max(top, dive->bound);
    best_bound = std::min(best_bound, std::max(top, res.has_incumbent ? res.objective : -kInf));
    if (res.has_incumbent) {
      const double gap = (best_bound - res.objective) / std::max(1.0, std::abs(res.objective));
      if (gap <= opts.rel_gap_tol) break;
    }
    if (elapsed() > opts.time_limit) {
      timed_out = true;
      break;
    }
    Node node;
    if (dive) {
      node = std::move(*dive);
      dive.reset();
    } else {
      node = open.top();
      open.pop();
    }
    if (node.bound <= prune_level()) continue;
    ++res.nodes;

    for (std::size_t b = 0; b < binaries.size(); ++b) {
      const double lo = node.fix[b] < 0 ? base_lo[b] : node.fix[b];
      const double hi = node.fix[b] < 0 ? base_hi[b] : node.fix[b];
      lp.set_bounds(binaries[b], lo, hi);
    }
    cuts.maybe_purge(purge_limit);

    std::int64_t node_cuts = 0;
    // LP solves alternating with cone separation until the point is
    // cone-feasible or the round limit for its integrality is reached.
    struct Relaxation {
      LpSolution sol;
      bool integral = false;
      bool cone_ok = false;
      bool stopped = false;  // time limit hit between rounds
    };
    auto relax = [&]() {
      Relaxation r;
      int rounds = 0;
      while (true) {
        if (rounds > 0 && elapsed() > opts.time_limit) {
          r.stopped = true;
          break;
        }
        try {
          r.sol = lp.solve();
        } catch (const LpError& e) {
          throw MipError(std::string("LP breakdown: ") + e.what(), node.id);
        }
        res.lp_iterations += r.sol.iterations;
        if (r.sol.status == LpStatus::kUnbounded) throw MipError("LP relaxation is unbounded", node.id);
        if (r.sol.status == LpStatus::kInfeasible) break;
        if (r.sol.objective <= prune_level()) break;

        r.integral = true;
        for (int v : binaries) {
          const double x = r.sol.primal[v];
          if (std::abs(x - std::round(x)) > opts.int_tol) {
            r.integral = false;
            break;
          }
        }
        const int limit = r.integral ? opts.max_integral_rounds : opts.max_cuts_per_node;
        if (rounds >= limit) {
          r.cone_ok = std::all_of(model.cones().begin(), model.cones().end(), [&](const ConeRow& c) {
            return c.violation(r.sol.primal) <= opts.cone_viol_tol;
          });
          break;
        }
        int added = cuts.reactivate(r.sol.primal, opts.cone_viol_tol);
        std::vector<LinearRow> fresh;
        for (const auto& c : model.cones()) {
          if (auto cut = separate_cone(c, r.sol.primal, opts.cone_viol_tol)) {
            if (cut->violation(r.sol.primal) > 0.5 * opts.cone_viol_tol) fresh.push_back(std::move(*cut));
          }
        }
        added += static_cast<int>(fresh.size());
        res.cuts_added += static_cast<std::int64_t>(fresh.size());
        node_cuts += static_cast<std::int64_t>(fresh.size());
        if (!fresh.empty()) cuts.add_new(std::move(fresh));
        if (added == 0) {
          r.cone_ok = true;
          break;
        }
        ++rounds;
      }
      return r;
    };

    Relaxation rel = relax();
    if (rel.stopped) {
      // unfinished node: its bound stays in best_bound
      timed_out = true;
      break;
    }
    const LpSolution& sol = rel.sol;
    const bool integral = rel.integral;
    const bool cone_ok = rel.cone_ok;
    if (node.branched >= 0 && sol.status == LpStatus::kOptimal && node.delta > 0.0) {
      pseudo.record(node.branched, node.side,
                    std::max(0.0, node.parent_obj - sol.objective) / node.delta);
    }
    const bool feasible_lp = sol.status == LpStatus::kOptimal && sol.objective > prune_level();
    if (opts.node_log) {
      *opts.node_log << node.id << ", " << node.depth << ", "
                     << (sol.status == LpStatus::kOptimal ? sol.objective : -kInf) << ", "
                     << best_bound << ", " << (res.has_incumbent ? res.objective : -kInf) << ", "
                     << node_cuts << "\n";
    }
    if (!feasible_lp) continue;

    if (integral && cone_ok) {
      res.has_incumbent = true;
      res.objective = sol.objective;
      res.incumbent = sol.primal;
      continue;
    }
    if (integral) {
      throw MipError("cone separation did not converge on an integral relaxation", node.id);
    }

    // Rounding heuristic, continuous part re-solved with the binaries fixed:
    // first binaries that cost nothing switched on and the rest rounded up
    // (all off when the objective rewards nothing), then plain rounding up. Bounds are reset at the next node.
    if (opts.rounding_frequency > 0 &&
        (res.nodes == 1 || res.nodes % opts.rounding_frequency == 0)) {
      const std::vector<double> point = sol.primal;
      std::vector<std::vector<double>> candidates(2, std::vector<double>(binaries.size()));
      for (std::size_t b = 0; b < binaries.size(); ++b) {
        const double x = point[binaries[b]];
        const double up = x > opts.int_tol ? 1.0 : 0.0;
        candidates[0][b] = std::min(base_hi[b], std::max(base_lo[b], !rewards ? 0.0 : obj_coef[b] >= 0.0 ? 1.0 : up));
        candidates[1][b] = std::min(base_hi[b], std::max(base_lo[b], up));
        if (node.fix[b] >= 0) candidates[0][b] = candidates[1][b] = node.fix[b];
      }
      if (candidates[1] == candidates[0]) candidates.pop_back();
      for (const auto& cand : candidates) {
        for (std::size_t b = 0; b < binaries.size(); ++b) lp.set_bounds(binaries[b], cand[b], cand[b]);
        Relaxation h = relax();
        ++res.heuristic_calls;
        if (h.stopped) break;
        if (h.sol.status == LpStatus::kOptimal && h.integral && h.cone_ok &&
            h.sol.objective > prune_level()) {
          res.has_incumbent = true;
          res.objective = h.sol.objective;
          res.incumbent = h.sol.primal;
          ++res.heuristic_successes;
        }
      }
      if (sol.objective <= prune_level()) continue;
    }

    // Highest score wins; lowest index on ties.
    int pick = -1;
    double best_score = -1.0;
    for (std::size_t b = 0; b < binaries.size(); ++b) {
      const double x = sol.primal[binaries[b]];
      const double f = x - std::floor(x);
      if (std::min(f, 1.0 - f) <= opts.int_tol) continue;
      const int bi = static_cast<int>(b);
      double score = std::min(f, 1.0 - f);
      if (opts.branch_rule == BranchRule::kPseudocost) {
        const double down = std::max(f * pseudo.get(bi, 0), 1e-6);
        const double up = std::max((1.0 - f) * pseudo.get(bi, 1), 1e-6);
        score = down * up;
      }
      if (score > best_score * (1.0 + 1e-12)) {
        best_score = score;
        pick = bi;
      }
    }
    // Dive into the side the relaxation leans to; the other side waits.
    const int lean = sol.primal[binaries[pick]] >= 0.5 ? 1 : 0;
    for (int side : {1, 0}) {
      Node child;
      child.id = next_id++;
      child.depth = node.depth + 1;
      child.bound = std::min(node.bound, sol.objective);
      child.fix = node.fix;
      child.fix[pick] = static_cast<std::int8_t>(side);
      child.branched = pick;
      child.side = side;
      child.parent_obj = sol.objective;
      const double x = sol.primal[binaries[pick]];
      child.delta = side == 1 ? 1.0 - x : x;
      if (side == lean && opts.node_selection == NodeSelection::kBestBoundPlunge) {
        dive = std::move(child);
      } else {
        open.push(std::move(child));
      }
    }
  }

  res.wall_time = elapsed();
  if (open.empty() && !dive) best_bound = res.has_incumbent ? res.objective : -kInf;
  res.best_bound = res.has_incumbent ? std::max(best_bound, res.objective) : best_bound;
  if (res.has_incumbent) {
    res.gap = std::max(0.0, (res.best_bound - res.objective) / std::max(1.0, std::abs(res.objective)));
    res.status = timed_out ? MipStatus::kTimeLimit : MipStatus::kOptimal;
  } else {
    res.status = timed_out ? MipStatus::kTimeLimit : MipStatus::kInfeasible;
  }
  return res;
}

}  // namespace ops
