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

#include "ops/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <Eigen/LU>

namespace ops {

namespace {

constexpr double kPrimalTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kDualStartTol = 1e-7;
constexpr double kPivotTol = 1e-9;
constexpr int kRefactorEvery = 100;
constexpr double kResidualTol = 1e-10;
constexpr double kMaxWeight = 1e8;

std::mutex g_health_mutex;
LpHealth g_health;

void record_health(double rel_gap) {
  std::lock_guard<std::mutex> lock(g_health_mutex);
  ++g_health.optimal_solves;
  g_health.max_relative_gap = std::max(g_health.max_relative_gap, rel_gap);
  if (rel_gap > kDualityGapTol) ++g_health.gap_violations;
}

}  // namespace

std::string_view to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
  }
  return "?";
}

LpHealth lp_health() {
  std::lock_guard<std::mutex> lock(g_health_mutex);
  return g_health;
}

void reset_lp_health() {
  std::lock_guard<std::mutex> lock(g_health_mutex);
  g_health = {};
}

SimplexSolver::SimplexSolver(const MixedIntegerModel& model)
    : n_(static_cast<int>(model.num_variables())) {
  if (n_ == 0) throw LpError("model has no variables");
  cols_.resize(n_);
  lo_.resize(n_);
  hi_.resize(n_);
  cost_.assign(n_, 0.0);
  for (const auto& v : model.variables()) {
    lo_[v.index] = v.lo;
    hi_[v.index] = v.hi;
  }
  for (const auto& t : model.objective()) cost_[t.var] -= t.coef;
  x_.assign(n_, 0.0);
  d_.assign(n_, 0.0);
  state_.assign(n_, State::kLower);
  pos_.assign(n_, -1);
  kcol_pos_.assign(n_, -1);
  // The kernel never has more columns than there are structurals.
  kbuf_.resize(n_, n_);
  add_rows(model.rows());
}

void SimplexSolver::set_bounds(int var, double lo, double hi) {
  if (!(lo <= hi)) throw LpError("set_bounds: lo exceeds hi");
  lo_.at(var) = lo;
  hi_.at(var) = hi;
}

template <typename F>
void SimplexSolver::for_col(int j, F&& f) const {
  if (j < n_) {
    for (const auto& [row, v] : cols_[j]) f(row, v);
  } else {
    f(j - n_, -1.0);
  }
}

double SimplexSolver::col_dot(int j, const double* v) const {
  if (j >= n_) return -v[j - n_];
  double s = 0.0;
  for (const auto& [row, a] : cols_[j]) s += a * v[row];
  return s;
}

int SimplexSolver::add_rows(std::span<const LinearRow> rows) {
  const int first = m_;
  if (rows.empty()) return first;
  const int added = static_cast<int>(rows.size());
  for (int k = 0; k < added; ++k) {
    const auto& row = rows[k];
    std::vector<std::pair<int, double>> entries;
    for (const auto& t : row.terms) {
      if (t.var < 0 || t.var >= n_) throw LpError("row references unknown variable");
      if (t.coef == 0.0) continue;
      cols_[t.var].push_back({m_ + k, t.coef});
      entries.push_back({t.var, t.coef});
    }
    rows_.push_back(std::move(entries));
    lo_.push_back(row.lo);
    hi_.push_back(row.hi);
    cost_.push_back(0.0);
    x_.push_back(0.0);
    d_.push_back(0.0);
    state_.push_back(State::kLower);
    pos_.push_back(-1);
    krow_pos_.push_back(-1);
  }
  const int old_m = m_;
  m_ += added;
  if (!have_basis_) return first;
  // New logicals enter the basis; the kernel is unchanged.
  for (int r = old_m; r < m_; ++r) {
    head_.push_back(n_ + r);
    pos_[n_ + r] = r;
    state_[n_ + r] = State::kBasic;
    row_w_.push_back(1.0);
    double act = 0.0;
    for (const auto& [var, v] : rows_[r]) act += v * x_[var];
    x_[n_ + r] = act;
  }
  return first;
}

int SimplexSolver::remove_slack_rows(int first, double slack_tol, std::vector<int>* kept) {
  std::vector<int> new_row(m_, -1);
  int count = 0;
  int removed = 0;
  for (int i = 0; i < m_; ++i) {
    const int j = n_ + i;
    bool drop = false;
    if (i >= first && have_basis_ && state_[j] == State::kBasic) {
      drop = x_[j] < hi_[j] - slack_tol && x_[j] > lo_[j] + slack_tol;
    }
    if (drop) {
      ++removed;
    } else {
      new_row[i] = count++;
    }
  }
  if (kept) {
    kept->clear();
    for (int i = 0; i < m_; ++i) {
      if (new_row[i] >= 0) kept->push_back(i);
    }
  }
  if (removed == 0) return 0;

  for (auto& col : cols_) {
    std::erase_if(col, [&](const auto& e) { return new_row[e.first] < 0; });
    for (auto& e : col) e.first = new_row[e.first];
  }
  for (int i = 0; i < m_; ++i) {
    if (new_row[i] >= 0 && new_row[i] != i) rows_[new_row[i]] = std::move(rows_[i]);
  }
  rows_.resize(count);
  auto compact = [&](auto& v) {
    for (int i = 0; i < m_; ++i) {
      if (new_row[i] >= 0) v[n_ + new_row[i]] = v[n_ + i];
    }
    v.resize(n_ + count);
  };
  std::vector<int> new_head;
  std::vector<double> new_w;
  for (int r = 0; r < m_; ++r) {
    const int j = head_[r];
    if (j >= n_ && new_row[j - n_] < 0) continue;
    new_head.push_back(j < n_ ? j : n_ + new_row[j - n_]);
    new_w.push_back(row_w_[r]);
  }
  compact(lo_);
  compact(hi_);
  compact(cost_);
  compact(x_);
  compact(d_);
  compact(state_);
  m_ = count;
  head_ = std::move(new_head);
  row_w_ = std::move(new_w);
  pos_.assign(n_ + m_, -1);
  for (int r = 0; r < m_; ++r) pos_[head_[r]] = r;
  for (auto& i : krow_) i = new_row[i];
  krow_pos_.assign(m_, -1);
  for (std::size_t c = 0; c < krow_.size(); ++c) krow_pos_[krow_[c]] = static_cast<int>(c);
  return removed;
}

void SimplexSolver::reset_basis() {
  head_.resize(m_);
  pos_.assign(n_ + m_, -1);
  for (int j = 0; j < n_; ++j) state_[j] = State::kLower;
  for (int i = 0; i < m_; ++i) {
    head_[i] = n_ + i;
    pos_[n_ + i] = i;
    state_[n_ + i] = State::kBasic;
  }
  kcol_.clear();
  krow_.clear();
  kcol_pos_.assign(n_, -1);
  krow_pos_.assign(m_, -1);
  row_w_.assign(m_, 1.0);
  have_basis_ = true;
  since_refactor_ = 0;
}

void SimplexSolver::refactor() {
  ++refactor_count_;
  since_refactor_ = 0;
  row_w_.assign(m_, 1.0);
  // With basic structurals S and the rows N whose logical is nonbasic,
  // B x = b splits into A[N,S] x_S = b_N and s_L = A[L,S] x_S - b_L, so only
  // the kernel K = A[N,S] is inverted.
  kcol_.clear();
  krow_.clear();
  kcol_pos_.assign(n_, -1);
  krow_pos_.assign(m_, -1);
  for (int r = 0; r < m_; ++r) {
    if (head_[r] < n_) {
      kcol_pos_[head_[r]] = static_cast<int>(kcol_.size());
      kcol_.push_back(head_[r]);
    }
  }
  for (int i = 0; i < m_; ++i) {
    if (state_[n_ + i] != State::kBasic) {
      krow_pos_[i] = static_cast<int>(krow_.size());
      krow_.push_back(i);
    }
  }
  auto recover = [&] {
    reset_basis();
    compute_duals();
    place_nonbasic(true);
  };
  const int k = static_cast<int>(kcol_.size());
  if (static_cast<int>(krow_.size()) != k) {
    recover();
    return;
  }
  if (k == 0) return;
  Eigen::MatrixXd kmat = Eigen::MatrixXd::Zero(k, k);
  for (int t = 0; t < k; ++t) {
    for (const auto& [row, v] : cols_[kcol_[t]]) {
      if (krow_pos_[row] >= 0) kmat(krow_pos_[row], t) += v;
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(kmat);
  if (!(lu.rcond() > 1e-14)) {
    recover();
    return;
  }
  kinv() = lu.inverse();
  const double big = kinv().cwiseAbs().maxCoeff();
  if (!std::isfinite(big) || big > 1e13) recover();
}

Eigen::VectorXd SimplexSolver::ftran_vec(const Eigen::VectorXd& a) const {
  const int k = static_cast<int>(kcol_.size());
  Eigen::VectorXd res(m_);
  Eigen::VectorXd acc = -a;
  if (k > 0) {
    Eigen::VectorXd an(k);
    for (int c = 0; c < k; ++c) an[c] = a[krow_[c]];
    const Eigen::VectorXd xs = kinv() * an;
    for (int t = 0; t < k; ++t) {
      res[pos_[kcol_[t]]] = xs[t];
      if (xs[t] == 0.0) continue;
      for (const auto& [row, v] : cols_[kcol_[t]]) acc[row] += v * xs[t];
    }
  }
  for (int r = 0; r < m_; ++r) {
    if (head_[r] >= n_) res[r] = acc[head_[r] - n_];
  }
  return res;
}

Eigen::VectorXd SimplexSolver::btran_vec(const Eigen::VectorXd& c) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m_);
  for (int r = 0; r < m_; ++r) {
    if (head_[r] >= n_) y[head_[r] - n_] = -c[r];
  }
  const int k = static_cast<int>(kcol_.size());
  if (k == 0) return y;
  Eigen::VectorXd rhs(k);
  for (int t = 0; t < k; ++t) {
    double s = c[pos_[kcol_[t]]];
    for (const auto& [row, v] : cols_[kcol_[t]]) s -= y[row] * v;
    rhs[t] = s;
  }
  const Eigen::VectorXd yn = kinv().transpose() * rhs;
  for (int q = 0; q < k; ++q) y[krow_[q]] = yn[q];
  return y;
}

void SimplexSolver::place_nonbasic(bool choose_by_cost) {
  for (int j = 0; j < n_ + m_; ++j) {
    if (state_[j] == State::kBasic) continue;
    const bool has_lo = std::isfinite(lo_[j]);
    const bool has_hi = std::isfinite(hi_[j]);
    if (has_lo && has_hi) {
      if (lo_[j] == hi_[j]) {
        state_[j] = State::kLower;
      } else if (choose_by_cost) {
        state_[j] = d_[j] >= 0.0 ? State::kLower : State::kUpper;
      } else if (state_[j] == State::kZero) {
        state_[j] = State::kLower;
      }
    } else if (has_lo) {
      state_[j] = State::kLower;
    } else if (has_hi) {
      state_[j] = State::kUpper;
    } else {
      state_[j] = State::kZero;
    }
    switch (state_[j]) {
      case State::kLower: x_[j] = lo_[j]; break;
      case State::kUpper: x_[j] = hi_[j]; break;
      default: x_[j] = 0.0; break;
    }
  }
}

void SimplexSolver::compute_primal() {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
  for (int j = 0; j < n_ + m_; ++j) {
    if (state_[j] == State::kBasic || x_[j] == 0.0) continue;
    const double xj = x_[j];
    for_col(j, [&](int row, double v) { rhs[row] += v * xj; });
  }
  const Eigen::VectorXd xb = ftran_vec(rhs);
  for (int r = 0; r < m_; ++r) x_[head_[r]] = -xb[r];
}

Eigen::VectorXd SimplexSolver::basic_cost_duals() const {
  Eigen::VectorXd cb(m_);
  for (int r = 0; r < m_; ++r) cb[r] = cost_[head_[r]];
  return btran_vec(cb);
}

void SimplexSolver::compute_duals() {
  const Eigen::VectorXd y = basic_cost_duals();
  for (int j = 0; j < n_ + m_; ++j) {
    d_[j] = state_[j] == State::kBasic ? 0.0 : cost_[j] - col_dot(j, y.data());
  }
}

double SimplexSolver::infeasibility(int j) const {
  if (x_[j] < lo_[j]) return lo_[j] - x_[j];
  if (x_[j] > hi_[j]) return x_[j] - hi_[j];
  return 0.0;
}

double SimplexSolver::row_residual() const {
  std::vector<double> act(m_, 0.0);
  for (int j = 0; j < n_; ++j) {
    if (x_[j] == 0.0) continue;
    for (const auto& [row, v] : cols_[j]) act[row] += v * x_[j];
  }
  double worst = 0.0;
  for (int i = 0; i < m_; ++i) {
    worst = std::max(worst, std::abs(act[i] - x_[n_ + i]) / (1.0 + std::abs(act[i])));
  }
  return worst;
}

double SimplexSolver::max_primal_infeasibility() const {
  double worst = 0.0;
  for (int r = 0; r < m_; ++r) worst = std::max(worst, infeasibility(head_[r]));
  return worst;
}

bool SimplexSolver::dual_feasible() const {
  for (int j = 0; j < n_ + m_; ++j) {
    if (state_[j] == State::kBasic || lo_[j] == hi_[j]) continue;
    if (state_[j] == State::kLower && d_[j] < -kDualStartTol) return false;
    if (state_[j] == State::kUpper && d_[j] > kDualStartTol) return false;
    if (state_[j] == State::kZero && std::abs(d_[j]) > kDualStartTol) return false;
  }
  return true;
}

Eigen::VectorXd SimplexSolver::ftran(int j) const {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(m_);
  for_col(j, [&](int row, double v) { a[row] += v; });
  return ftran_vec(a);
}

void SimplexSolver::pivot_row(int r, std::vector<double>& alpha_r) const {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m_);
  e[r] = 1.0;
  const Eigen::VectorXd rho = btran_vec(e);
  alpha_r.assign(n_ + m_, 0.0);
  for (int j = 0; j < n_ + m_; ++j) {
    if (state_[j] != State::kBasic) alpha_r[j] = col_dot(j, rho.data());
  }
}

// Kernel update for entering column q at basis position r. Four cases,
// by whether q and the leaving column are structural or logical.
bool SimplexSolver::update_kernel(int r, int q) {
  const int leaving = head_[r];
  const int k = static_cast<int>(kcol_.size());
  auto kernel_col = [&](int j) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(k);
    for (const auto& [row, v] : cols_[j]) {
      if (krow_pos_[row] >= 0) u[krow_pos_[row]] += v;
    }
    return u;
  };
  auto kernel_row = [&](int i) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
    for (const auto& [var, v] : rows_[i]) {
      if (kcol_pos_[var] >= 0) w[kcol_pos_[var]] += v;
    }
    return w;
  };
  if (q < n_ && leaving >= n_) {
    // Border: row i joins N, column q joins S.
    const int i = leaving - n_;
    double delta = 0.0;
    for (const auto& [row, v] : cols_[q]) {
      if (row == i) delta += v;
    }
    const Eigen::VectorXd u = kernel_col(q);
    const Eigen::VectorXd w = kernel_row(i);
    auto kinv_k = kinv();
    const Eigen::VectorXd ku = kinv_k * u;
    const Eigen::RowVectorXd wk = w.transpose() * kinv_k;
    const double s = delta - w.dot(ku);
    if (std::abs(s) < 1e-12) return false;
    kinv_k.noalias() += ku * (wk / s);
    kbuf_.block(0, k, k, 1) = -ku / s;
    kbuf_.block(k, 0, 1, k) = -wk / s;
    kbuf_(k, k) = 1.0 / s;
    kcol_pos_[q] = k;
    kcol_.push_back(q);
    krow_pos_[i] = k;
    krow_.push_back(i);
  } else if (q < n_) {
    // Column replacement.
    const int t = kcol_pos_[leaving];
    auto kinv_k = kinv();
    const Eigen::VectorXd ku = kinv_k * kernel_col(q);
    const double piv = ku[t];
    if (std::abs(piv) < 1e-12) return false;
    const Eigen::RowVectorXd pr = kinv_k.row(t) / piv;
    kinv_k.noalias() -= ku * pr;
    kinv_k.row(t) = pr;
    kcol_[t] = q;
    kcol_pos_[leaving] = -1;
    kcol_pos_[q] = t;
  } else if (leaving >= n_) {
    // Row replacement: row i leaves N, row i2 takes its slot.
    const int i = q - n_;
    const int i2 = leaving - n_;
    const int c = krow_pos_[i];
    const Eigen::VectorXd v = kernel_row(i2) - kernel_row(i);
    auto kinv_k = kinv();
    const Eigen::VectorXd kc = kinv_k.col(c);
    const Eigen::RowVectorXd vk = v.transpose() * kinv_k;
    const double den = 1.0 + vk[c];
    if (std::abs(den) < 1e-12) return false;
    kinv_k.noalias() -= kc * (vk / den);
    krow_[c] = i2;
    krow_pos_[i] = -1;
    krow_pos_[i2] = c;
  } else {
    // Shrink: row i leaves N and column `leaving` leaves S.
    const int i = q - n_;
    const int c = krow_pos_[i];
    const int t = kcol_pos_[leaving];
    auto kinv_k = kinv();
    const double piv = kinv_k(t, c);
    if (std::abs(piv) < 1e-12) return false;
    const Eigen::VectorXd kc = kinv_k.col(c);
    const Eigen::RowVectorXd kr = kinv_k.row(t);
    kinv_k.noalias() -= kc * (kr / piv);
    const int last = k - 1;
    if (t != last) {
      kinv_k.row(t) = kinv_k.row(last);
      kcol_[t] = kcol_[last];
      kcol_pos_[kcol_[t]] = t;
    }
    if (c != last) {
      kinv_k.col(c) = kinv_k.col(last);
      krow_[c] = krow_[last];
      krow_pos_[krow_[c]] = c;
    }
    kcol_.pop_back();
    krow_.pop_back();
    kcol_pos_[leaving] = -1;
    krow_pos_[i] = -1;
  }
  return true;
}

void SimplexSolver::basis_change(int r, int q, const Eigen::VectorXd& alpha_q,
                                 State leaving_state) {
  const int leaving = head_[r];
  const bool ok = update_kernel(r, q);
  // Devex-style reference weights for the dual ratio choice.
  const double ar = alpha_q[r];
  const double wr = row_w_[r];
  for (int i = 0; i < m_; ++i) {
    if (i == r || alpha_q[i] == 0.0) continue;
    const double ratio = alpha_q[i] / ar;
    row_w_[i] = std::min(std::max(row_w_[i], ratio * ratio * wr), kMaxWeight);
  }
  row_w_[r] = std::clamp(wr / (ar * ar), 1.0, kMaxWeight);
  head_[r] = q;
  pos_[q] = r;
  pos_[leaving] = -1;
  state_[leaving] = leaving_state;
  state_[q] = State::kBasic;
  d_[q] = 0.0;
  ++since_refactor_;
  if (!ok) since_refactor_ = kRefactorEvery;
}

SimplexSolver::Outcome SimplexSolver::run_dual() {
  std::vector<double> alpha_r;
  const int limit = 50 * (n_ + m_) + 10000;
  // Degenerate dual pivots can cycle; past this budget the primal takes over.
  const int dual_budget = 10 * (n_ + m_) + 1000;
  int dual_iterations = 0;
  int mismatches = 0;
  auto restart_primal = [&] {
    reset_basis();
    compute_duals();
    place_nonbasic(true);
    compute_primal();
    return Outcome::kDualLost;
  };
  while (true) {
    if (++solve_iterations_ > limit) {
      throw LpError("dual simplex iteration limit reached (" + std::to_string(limit) + ")");
    }
    if (++dual_iterations > dual_budget) return restart_primal();
    ++total_iterations_;
    if (since_refactor_ >= kRefactorEvery) {
      refactor();
      compute_primal();
      compute_duals();
      if (!dual_feasible()) return Outcome::kDualLost;
    }
    int r = -1;
    double best = 0.0;
    for (int i = 0; i < m_; ++i) {
      const double inf = infeasibility(head_[i]);
      if (inf <= kPrimalTol) continue;
      const double w = std::max(row_w_[i], 1e-12);
      const double score = inf * inf / w;
      if (score > best) {
        best = score;
        r = i;
      }
    }
    if (r < 0) return Outcome::kOptimal;

    const int jr = head_[r];
    const bool up = x_[jr] < lo_[jr];
    const double target = up ? lo_[jr] : hi_[jr];
    const double t = up ? 1.0 : -1.0;
    pivot_row(r, alpha_r);

    auto eligible = [&](int j) {
      if (state_[j] == State::kBasic || lo_[j] == hi_[j]) return false;
      const double a = alpha_r[j];
      if (std::abs(a) < kPivotTol) return false;
      if (state_[j] == State::kLower) return a * t < 0.0;
      if (state_[j] == State::kUpper) return a * t > 0.0;
      return true;
    };
    auto slack_d = [&](int j) {
      if (state_[j] == State::kLower) return std::max(d_[j], 0.0);
      if (state_[j] == State::kUpper) return std::max(-d_[j], 0.0);
      return std::abs(d_[j]);
    };
    double theta_max = kInf;
    for (int j = 0; j < n_ + m_; ++j) {
      if (!eligible(j)) continue;
      theta_max = std::min(theta_max, (slack_d(j) + kDualTol) / std::abs(alpha_r[j]));
    }
    if (!std::isfinite(theta_max)) return Outcome::kInfeasible;
    int q = -1;
    double best_a = 0.0;
    for (int j = 0; j < n_ + m_; ++j) {
      if (!eligible(j)) continue;
      const double a = std::abs(alpha_r[j]);
      if (slack_d(j) / a <= theta_max && a > best_a) {
        best_a = a;
        q = j;
      }
    }
    const Eigen::VectorXd alpha_q = ftran(q);
    const double arq = alpha_q[r];
    if (std::abs(arq - alpha_r[q]) > 1e-7 * (1.0 + std::abs(arq)) || std::abs(arq) < kPivotTol) {
      if (++mismatches > 5) {
        // The basis is too ill-conditioned to trust.
        return restart_primal();
      }
      refactor();
      compute_primal();
      compute_duals();
      if (!dual_feasible()) return Outcome::kDualLost;
      continue;
    }
    const double dq = (x_[jr] - target) / arq;
    x_[q] += dq;
    for (int i = 0; i < m_; ++i) {
      if (alpha_q[i] != 0.0) x_[head_[i]] -= alpha_q[i] * dq;
    }
    x_[jr] = target;
    const double theta_d = d_[q] / arq;
    if (theta_d != 0.0) {
      for (int j = 0; j < n_ + m_; ++j) {
        if (state_[j] != State::kBasic) d_[j] -= theta_d * alpha_r[j];
      }
    }
    d_[jr] = -theta_d;
    basis_change(r, q, alpha_q, up ? State::kLower : State::kUpper);
  }
}

SimplexSolver::Outcome SimplexSolver::run_primal() {
  std::vector<double> alpha_r;
  std::vector<double> dp(n_ + m_, 0.0);
  const int limit = 50 * (n_ + m_) + 10000;
  bool bland = false;
  int degenerate = 0;
  bool was_phase1 = true;
  compute_duals();
  while (true) {
    if (++solve_iterations_ > limit) {
      throw LpError("primal simplex iteration limit reached (" + std::to_string(limit) + ")");
    }
    ++total_iterations_;
    if (since_refactor_ >= kRefactorEvery) {
      refactor();
      compute_primal();
      compute_duals();
    }
    const bool phase1 = max_primal_infeasibility() > kPrimalTol;
    if (phase1) {
      Eigen::VectorXd cb = Eigen::VectorXd::Zero(m_);
      for (int r = 0; r < m_; ++r) {
        const int j = head_[r];
        if (x_[j] < lo_[j] - kPrimalTol) cb[r] = -1.0;
        if (x_[j] > hi_[j] + kPrimalTol) cb[r] = 1.0;
      }
      const Eigen::VectorXd y = btran_vec(cb);
      for (int j = 0; j < n_ + m_; ++j) {
        dp[j] = state_[j] == State::kBasic ? 0.0 : -col_dot(j, y.data());
      }
    } else if (was_phase1) {
      compute_duals();
    }
    was_phase1 = phase1;
    const std::vector<double>& dd = phase1 ? dp : d_;

    int q = -1;
    double best = 0.0;
    for (int j = 0; j < n_ + m_; ++j) {
      if (state_[j] == State::kBasic || lo_[j] == hi_[j]) continue;
      const double dj = dd[j];
      bool ok = false;
      if (state_[j] == State::kLower) ok = dj < -kDualTol;
      else if (state_[j] == State::kUpper) ok = dj > kDualTol;
      else ok = std::abs(dj) > kDualTol;
      if (!ok) continue;
      if (bland) {
        q = j;
        break;
      }
      if (std::abs(dj) > best) {
        best = std::abs(dj);
        q = j;
      }
    }
    if (q < 0) return phase1 ? Outcome::kInfeasible : Outcome::kOptimal;

    const double dir = dd[q] < 0.0 ? 1.0 : -1.0;
    const Eigen::VectorXd alpha_q = ftran(q);
    const double span = hi_[q] - lo_[q];

    // Harris two-pass ratio test; infeasible basics leave at their near bound.
    auto limit_of = [&](int r, double tol, double* target) -> double {
      const double a = alpha_q[r];
      if (std::abs(a) < kPivotTol) return kInf;
      const double rate = -dir * a;
      const int j = head_[r];
      if (rate < 0.0) {
        if (phase1 && x_[j] < lo_[j] - kPrimalTol) return kInf;
        *target = x_[j] > hi_[j] + kPrimalTol ? hi_[j] : lo_[j];
        if (!std::isfinite(*target)) return kInf;
        return (x_[j] - *target + tol) / -rate;
      }
      if (phase1 && x_[j] > hi_[j] + kPrimalTol) return kInf;
      *target = x_[j] < lo_[j] - kPrimalTol ? lo_[j] : hi_[j];
      if (!std::isfinite(*target)) return kInf;
      return (*target - x_[j] + tol) / rate;
    };
    double theta_max = std::isfinite(span) ? span : kInf;
    double tgt = 0.0;
    for (int r = 0; r < m_; ++r) theta_max = std::min(theta_max, limit_of(r, kPrimalTol, &tgt));
    if (!std::isfinite(theta_max)) {
      if (phase1) throw LpError("primal phase 1 found an unbounded direction");
      return Outcome::kUnbounded;
    }
    int r_best = -1;
    double best_a = 0.0;
    double theta = 0.0;
    double target = 0.0;
    for (int r = 0; r < m_; ++r) {
      double tg = 0.0;
      const double lim = limit_of(r, 0.0, &tg);
      if (lim <= theta_max && std::abs(alpha_q[r]) > best_a) {
        best_a = std::abs(alpha_q[r]);
        r_best = r;
        theta = std::max(lim, 0.0);
        target = tg;
      }
    }
    if (r_best < 0 || (std::isfinite(span) && span <= theta)) {
      // Entering variable moves to its opposite bound; basis unchanged.
      const double step = dir * span;
      x_[q] += step;
      for (int i = 0; i < m_; ++i) {
        if (alpha_q[i] != 0.0) x_[head_[i]] -= alpha_q[i] * step;
      }
      state_[q] = state_[q] == State::kLower ? State::kUpper : State::kLower;
      x_[q] = state_[q] == State::kLower ? lo_[q] : hi_[q];
      degenerate = 0;
      bland = false;
      continue;
    }
    const int leaving = head_[r_best];
    if (!phase1) pivot_row(r_best, alpha_r);
    const double step = dir * theta;
    x_[q] += step;
    for (int i = 0; i < m_; ++i) {
      if (alpha_q[i] != 0.0) x_[head_[i]] -= alpha_q[i] * step;
    }
    x_[leaving] = target;
    const State leaving_state = target == lo_[leaving] ? State::kLower : State::kUpper;
    if (!phase1) {
      const double theta_d = d_[q] / alpha_q[r_best];
      for (int j = 0; j < n_ + m_; ++j) {
        if (state_[j] != State::kBasic) d_[j] -= theta_d * alpha_r[j];
      }
      d_[leaving] = -theta_d;
    }
    basis_change(r_best, q, alpha_q, leaving_state);
    if (theta <= 1e-12) {
      if (++degenerate > 10 * (n_ + m_)) bland = true;
    } else {
      degenerate = 0;
      bland = false;
    }
  }
}

LpSolution SimplexSolver::finish(Outcome outcome) {
  LpSolution sol;
  sol.iterations = solve_iterations_;
  sol.primal.assign(x_.begin(), x_.begin() + n_);
  double obj = 0.0;
  for (int j = 0; j < n_; ++j) obj -= cost_[j] * x_[j];
  sol.objective = obj;
  switch (outcome) {
    case Outcome::kOptimal: sol.status = LpStatus::kOptimal; break;
    case Outcome::kUnbounded: sol.status = LpStatus::kUnbounded; break;
    default: sol.status = LpStatus::kInfeasible; break;
  }
  if (sol.status != LpStatus::kOptimal) return sol;

  const Eigen::VectorXd y = basic_cost_duals();
  sol.duals.resize(m_);
  for (int i = 0; i < m_; ++i) sol.duals[i] = -y[i];
  // Lagrangian bound from the current multipliers: each nonbasic reduced
  // cost is charged at the bound its sign selects.
  double dual_min = 0.0;
  for (int j = 0; j < n_ + m_; ++j) {
    if (state_[j] == State::kBasic) continue;
    const double dj = cost_[j] - col_dot(j, y.data());
    if (dj == 0.0) continue;
    const double bound = dj > 0.0 ? lo_[j] : hi_[j];
    if (std::isfinite(bound)) {
      dual_min += dj * bound;
    } else {
      dual_min += dj * x_[j];
    }
  }
  sol.dual_objective = -dual_min;
  record_health(std::abs(sol.objective - sol.dual_objective) / (1.0 + std::abs(sol.objective)));
  return sol;
}

LpSolution SimplexSolver::solve() {
  solve_iterations_ = 0;
  if (!have_basis_) reset_basis();
  compute_duals();
  place_nonbasic(true);
  compute_primal();
  bool force_primal = false;
  for (int attempt = 0;; ++attempt) {
    Outcome o = !force_primal && dual_feasible() ? run_dual() : Outcome::kDualLost;
    if (o == Outcome::kDualLost) o = run_primal();
    if (since_refactor_ > 0) {
      // Drift in the incrementally updated values is cleared by recomputing
      // them; only a residual that survives that calls for a refactor.
      if (o == Outcome::kOptimal && row_residual() > kResidualTol) compute_primal();
      if (o != Outcome::kOptimal || row_residual() > kResidualTol) {
        refactor();
        compute_primal();
      }
      compute_duals();
    }
    if (o != Outcome::kOptimal) {
      // Re-run once on the fresh factorization to confirm the verdict.
      if (attempt == 0) continue;
      return finish(o);
    }
    bool clean = max_primal_infeasibility() <= 10.0 * kPrimalTol;
    for (int j = 0; j < n_ + m_ && clean; ++j) {
      if (state_[j] == State::kBasic || lo_[j] == hi_[j]) continue;
      if (state_[j] == State::kLower && d_[j] < -1e-8) clean = false;
      if (state_[j] == State::kUpper && d_[j] > 1e-8) clean = false;
      if (state_[j] == State::kZero && std::abs(d_[j]) > 1e-8) clean = false;
    }
    if (clean) return finish(o);
    // Small dual infeasibilities pass the dual start test; let the primal settle them.
    force_primal = true;
    if (attempt >= 3) {
      throw LpError("no clean optimum after refactorization (primal infeasibility " +
                    std::to_string(max_primal_infeasibility()) + ")");
    }
  }
}

LpSolution solve_lp(const MixedIntegerModel& model, std::span<const LinearRow> extra_rows) {
  SimplexSolver solver(model);
  solver.add_rows(extra_rows);
  return solver.solve();
}

}  // namespace ops
