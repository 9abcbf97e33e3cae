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

#include "ops/acpower.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <thread>

#include "ops/model.hpp"
#include "ops/simplex.hpp"

namespace ops {
namespace {

// Iterates are accepted as feasible well inside the certificate tolerance.
constexpr double kAcceptTol = 1e-7;
constexpr double kPenalty = 1e3;
constexpr int kThermalDirections = 8;

// f = a Vi^2 + b Vj^2 + c Vi Vj cos(d) + e Vi Vj sin(d), d = theta_i - theta_j.
struct FlowCoef {
  double a = 0.0, b = 0.0, c = 0.0, e = 0.0;
};

struct LineCoef {
  FlowCoef p_fr, q_fr, p_to, q_to;
};

LineCoef line_coef(const Line& l) {
  const double g = l.g_series;
  const double b = l.b_series;
  const double tr = l.tap_re;
  const double ti = l.tap_im;
  const double t2 = l.tap_sq();
  LineCoef k;
  k.p_fr = {(g + l.g_fr) / t2, 0.0, (-g * tr + b * ti) / t2, (-b * tr - g * ti) / t2};
  k.q_fr = {-(b + l.b_fr) / t2, 0.0, (b * tr + g * ti) / t2, (-g * tr + b * ti) / t2};
  // Written in theta_i - theta_j, so the sine terms flip sign.
  k.p_to = {0.0, g + l.g_to, (-g * tr - b * ti) / t2, (-b * tr + g * ti) / -t2};
  k.q_to = {0.0, -(b + l.b_to), (b * tr - g * ti) / t2, (-g * tr - b * ti) / -t2};
  return k;
}

struct FlowEval {
  double val = 0.0, dvi = 0.0, dvj = 0.0, dti = 0.0;  // d/dtheta_j = -dti
};

FlowEval eval_flow(const FlowCoef& k, double vi, double vj, double cs, double sn) {
  const double vv = vi * vj;
  const double m = k.c * cs + k.e * sn;
  FlowEval f;
  f.val = k.a * vi * vi + k.b * vj * vj + vv * m;
  f.dvi = 2.0 * k.a * vi + vj * m;
  f.dvj = 2.0 * k.b * vj + vi * m;
  f.dti = vv * (-k.c * sn + k.e * cs);
  return f;
}

void check_state(const Network& net, const AcState& s) {
  const std::size_t nb = net.num_buses();
  if (s.vm.size() != nb || s.va.size() != nb || s.pg.size() != net.generators().size() ||
      s.qg.size() != net.generators().size() || s.xd.size() != net.loads().size() ||
      s.xs.size() != net.shunts().size()) {
    throw AcError("state dimensions do not match the network");
  }
}

struct IslandData {
  std::vector<std::size_t> buses;
  std::vector<int> local;  // bus position -> island position, -1 outside
  std::vector<std::size_t> lines, gens, loads, shunts;
};

IslandData island_data(const Network& net, const Topology& topo,
                       const std::vector<std::size_t>& buses) {
  IslandData d;
  d.buses = buses;
  d.local.assign(net.num_buses(), -1);
  for (std::size_t k = 0; k < buses.size(); ++k) d.local[buses[k]] = static_cast<int>(k);
  for (std::size_t b : buses) {
    for (std::size_t l : net.lines_at(b)) {
      if (topo.z_line[l] && net.from_index(l) == b) d.lines.push_back(l);
    }
    for (std::size_t g : net.gens_at(b)) {
      if (topo.z_gen[g]) d.gens.push_back(g);
    }
    for (std::size_t ld : net.loads_at(b)) d.loads.push_back(ld);
    for (std::size_t s : net.shunts_at(b)) d.shunts.push_back(s);
  }
  std::sort(d.lines.begin(), d.lines.end());
  std::sort(d.gens.begin(), d.gens.end());
  std::sort(d.loads.begin(), d.loads.end());
  std::sort(d.shunts.begin(), d.shunts.end());
  return d;
}

// Mismatch [P_0..P_{n-1}, Q_0..Q_{n-1}] of an island and, optionally, its
// derivatives with respect to [theta_0..theta_{n-1}, V_0..V_{n-1}].
void island_mismatch(const Network& net, const IslandData& d, const AcState& s,
                     Eigen::VectorXd& f, Eigen::MatrixXd* jac) {
  const auto n = static_cast<Eigen::Index>(d.buses.size());
  f.setZero(2 * n);
  if (jac) jac->setZero(2 * n, 2 * n);
  for (std::size_t g : d.gens) {
    const int i = d.local[net.gen_bus_index(g)];
    f(i) += s.pg[g];
    f(n + i) += s.qg[g];
  }
  for (std::size_t ld : d.loads) {
    const int i = d.local[net.load_bus_index(ld)];
    f(i) -= net.loads()[ld].pd * s.xd[ld];
    f(n + i) -= net.loads()[ld].qd * s.xd[ld];
  }
  for (std::size_t sh : d.shunts) {
    const int i = d.local[net.shunt_bus_index(sh)];
    const Shunt& shunt = net.shunts()[sh];
    const double v = s.vm[d.buses[i]];
    f(i) -= shunt.gs * v * v * s.xs[sh];
    f(n + i) += shunt.bs * v * v * s.xs[sh];
    if (jac) {
      (*jac)(i, n + i) -= 2.0 * shunt.gs * v * s.xs[sh];
      (*jac)(n + i, n + i) += 2.0 * shunt.bs * v * s.xs[sh];
    }
  }
  for (std::size_t l : d.lines) {
    const int i = d.local[net.from_index(l)];
    const int j = d.local[net.to_index(l)];
    const double vi = s.vm[d.buses[i]];
    const double vj = s.vm[d.buses[j]];
    const double delta = s.va[d.buses[i]] - s.va[d.buses[j]];
    const double cs = std::cos(delta);
    const double sn = std::sin(delta);
    const LineCoef k = line_coef(net.lines()[l]);
    const std::pair<const FlowCoef*, Eigen::Index> parts[4] = {
        {&k.p_fr, i}, {&k.q_fr, n + i}, {&k.p_to, j}, {&k.q_to, n + j}};
    for (const auto& [coef, row] : parts) {
      const FlowEval e = eval_flow(*coef, vi, vj, cs, sn);
      f(row) -= e.val;
      if (jac) {
        (*jac)(row, i) -= e.dti;
        (*jac)(row, j) += e.dti;
        (*jac)(row, n + i) -= e.dvi;
        (*jac)(row, n + j) -= e.dvj;
      }
    }
  }
}

// Splits a bus total over its generators at a common fraction of their range.
void split_reactive(const Network& net, const std::vector<std::size_t>& gens, double total,
                    AcState& s) {
  if (gens.empty()) return;
  double lo = 0.0, hi = 0.0;
  for (std::size_t g : gens) {
    lo += net.generators()[g].qmin;
    hi += net.generators()[g].qmax;
  }
  const double range = hi - lo;
  for (std::size_t g : gens) {
    const Generator& gen = net.generators()[g];
    if (range > 1e-12) {
      s.qg[g] = gen.qmin + (total - lo) / range * (gen.qmax - gen.qmin);
    } else {
      s.qg[g] = gen.qmin + (total - lo) / static_cast<double>(gens.size());
    }
  }
}

struct Violation {
  double max = 0.0;
  double sum = 0.0;
  std::string worst;

  void add(double amount, const std::string& what) {
    if (!(amount > 0.0)) {
      if (std::isnan(amount)) add(kInf, what);
      return;
    }
    sum += amount;
    if (amount > max) {
      max = amount;
      worst = what;
    }
  }
};

double below(double v, double lo) { return lo - v; }
double above(double v, double hi) { return v - hi; }

// Bound violations of energized components listed in `d` plus, when
// `all_off` is set, of de-energized components over the whole network.
Violation bound_violation(const Network& net, const Topology& topo, const IslandData& d,
                          const AcState& s, bool all_off) {
  Violation v;
  for (std::size_t b : d.buses) {
    const Bus& bus = net.buses()[b];
    v.add(std::max(below(s.vm[b], bus.vmin), above(s.vm[b], bus.vmax)),
          "vm at bus " + std::to_string(bus.id));
  }
  for (std::size_t g : d.gens) {
    const Generator& gen = net.generators()[g];
    v.add(std::max(below(s.pg[g], gen.pmin), above(s.pg[g], gen.pmax)),
          "pg of generator " + std::to_string(gen.id));
    v.add(std::max(below(s.qg[g], gen.qmin), above(s.qg[g], gen.qmax)),
          "qg of generator " + std::to_string(gen.id));
  }
  for (std::size_t l : d.lines) {
    const Line& line = net.lines()[l];
    const std::size_t i = net.from_index(l);
    const std::size_t j = net.to_index(l);
    const BranchFlow fl = branch_flow(line, s.vm[i], s.vm[j], s.va[i], s.va[j]);
    v.add(std::hypot(fl.p_fr, fl.q_fr) - line.thermal, "thermal from of line " + std::to_string(line.id));
    v.add(std::hypot(fl.p_to, fl.q_to) - line.thermal, "thermal to of line " + std::to_string(line.id));
    const double delta = s.va[i] - s.va[j];
    v.add(std::max(below(delta, line.ang_min), above(delta, line.ang_max)),
          "angle of line " + std::to_string(line.id));
  }
  for (std::size_t ld : d.loads) {
    v.add(std::max(-s.xd[ld], s.xd[ld] - 1.0), "xd of load " + std::to_string(net.loads()[ld].id));
  }
  for (std::size_t sh : d.shunts) {
    v.add(std::max(-s.xs[sh], s.xs[sh] - 1.0), "xs of shunt " + std::to_string(net.shunts()[sh].id));
  }
  if (all_off) {
    for (std::size_t b = 0; b < net.num_buses(); ++b) {
      v.add(-s.vm[b], "negative vm at bus " + std::to_string(net.buses()[b].id));
    }
    for (std::size_t g = 0; g < net.generators().size(); ++g) {
      if (topo.z_gen[g]) continue;
      v.add(std::max(std::abs(s.pg[g]), std::abs(s.qg[g])),
            "dispatch of off generator " + std::to_string(net.generators()[g].id));
    }
    for (std::size_t ld = 0; ld < net.loads().size(); ++ld) {
      if (topo.z_bus[net.load_bus_index(ld)]) continue;
      v.add(std::abs(s.xd[ld]), "served load " + std::to_string(net.loads()[ld].id) + " at off bus");
    }
    for (std::size_t sh = 0; sh < net.shunts().size(); ++sh) {
      if (topo.z_bus[net.shunt_bus_index(sh)]) continue;
      v.add(std::abs(s.xs[sh]), "shunt " + std::to_string(net.shunts()[sh].id) + " at off bus");
    }
  }
  return v;
}

double weighted_load(const Network& net, const std::vector<std::size_t>& loads, const AcState& s) {
  double total = 0.0;
  for (std::size_t ld : loads) total += net.loads()[ld].weight * net.loads()[ld].pd * s.xd[ld];
  return total;
}

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

Topology full_topology(const Network& net) {
  return {std::vector<int>(net.num_buses(), 1), std::vector<int>(net.num_lines(), 1),
          std::vector<int>(net.generators().size(), 1)};
}

Topology topology_of(const ShutoffSolution& sol) { return {sol.z_bus, sol.z_line, sol.z_gen}; }

void check_topology(const Network& net, const Topology& topo) {
  if (topo.z_bus.size() != net.num_buses() || topo.z_line.size() != net.num_lines() ||
      topo.z_gen.size() != net.generators().size()) {
    throw AcError("topology dimensions do not match the network");
  }
  auto binary = [](const std::vector<int>& z) {
    return std::all_of(z.begin(), z.end(), [](int v) { return v == 0 || v == 1; });
  };
  if (!binary(topo.z_bus) || !binary(topo.z_line) || !binary(topo.z_gen)) {
    throw AcError("topology entries must be 0 or 1");
  }
  for (std::size_t l = 0; l < net.num_lines(); ++l) {
    if (topo.z_line[l] && !(topo.z_bus[net.from_index(l)] && topo.z_bus[net.to_index(l)])) {
      throw AcError("line " + std::to_string(net.lines()[l].id) + " is on but an end bus is off");
    }
  }
  for (std::size_t g = 0; g < net.generators().size(); ++g) {
    if (topo.z_gen[g] && !topo.z_bus[net.gen_bus_index(g)]) {
      throw AcError("generator " + std::to_string(net.generators()[g].id) + " is on at an off bus");
    }
  }
}

Topology derive_topology(const Network& net, const std::vector<int>& z_line) {
  if (z_line.size() != net.num_lines()) throw AcError("line state size does not match the network");
  Topology t;
  t.z_line = z_line;
  t.z_bus.assign(net.num_buses(), 0);
  for (std::size_t b = 0; b < net.num_buses(); ++b) {
    if (!net.gens_at(b).empty()) t.z_bus[b] = 1;
    for (std::size_t l : net.lines_at(b)) {
      if (z_line[l]) t.z_bus[b] = 1;
    }
  }
  t.z_gen.resize(net.generators().size());
  for (std::size_t g = 0; g < net.generators().size(); ++g) t.z_gen[g] = t.z_bus[net.gen_bus_index(g)];
  return t;
}

AcState flat_state(const Network& net) {
  AcState s;
  s.vm.assign(net.num_buses(), 1.0);
  s.va.assign(net.num_buses(), 0.0);
  s.pg.assign(net.generators().size(), 0.0);
  s.qg.assign(net.generators().size(), 0.0);
  s.xd.assign(net.loads().size(), 0.0);
  s.xs.assign(net.shunts().size(), 0.0);
  return s;
}

std::vector<std::vector<std::size_t>> islands(const Network& net, const Topology& topo) {
  check_topology(net, topo);
  const std::size_t nb = net.num_buses();
  std::vector<int> comp(nb, -1);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < nb; ++start) {
    if (!topo.z_bus[start] || comp[start] >= 0) continue;
    const int id = static_cast<int>(out.size());
    std::vector<std::size_t> members{start};
    comp[start] = id;
    for (std::size_t k = 0; k < members.size(); ++k) {
      const std::size_t b = members[k];
      for (std::size_t l : net.lines_at(b)) {
        if (!topo.z_line[l]) continue;
        const std::size_t other = net.from_index(l) == b ? net.to_index(l) : net.from_index(l);
        if (comp[other] < 0) {
          comp[other] = id;
          members.push_back(other);
        }
      }
    }
    std::sort(members.begin(), members.end());
    out.push_back(std::move(members));
  }
  return out;
}

BranchFlow branch_flow(const Line& line, double vi, double vj, double ti, double tj) {
  const LineCoef k = line_coef(line);
  const double cs = std::cos(ti - tj);
  const double sn = std::sin(ti - tj);
  return {eval_flow(k.p_fr, vi, vj, cs, sn).val, eval_flow(k.q_fr, vi, vj, cs, sn).val,
          eval_flow(k.p_to, vi, vj, cs, sn).val, eval_flow(k.q_to, vi, vj, cs, sn).val};
}

std::vector<double> ac_residual(const Network& net, const Topology& topo, const AcState& state) {
  check_topology(net, topo);
  check_state(net, state);
  const std::size_t nb = net.num_buses();
  std::vector<double> r(2 * nb, 0.0);
  for (std::size_t g = 0; g < net.generators().size(); ++g) {
    if (!topo.z_gen[g]) continue;
    r[2 * net.gen_bus_index(g)] += state.pg[g];
    r[2 * net.gen_bus_index(g) + 1] += state.qg[g];
  }
  for (std::size_t d = 0; d < net.loads().size(); ++d) {
    r[2 * net.load_bus_index(d)] -= net.loads()[d].pd * state.xd[d];
    r[2 * net.load_bus_index(d) + 1] -= net.loads()[d].qd * state.xd[d];
  }
  for (std::size_t s = 0; s < net.shunts().size(); ++s) {
    const std::size_t b = net.shunt_bus_index(s);
    const double v2 = state.vm[b] * state.vm[b];
    r[2 * b] -= net.shunts()[s].gs * v2 * state.xs[s];
    r[2 * b + 1] += net.shunts()[s].bs * v2 * state.xs[s];
  }
  for (std::size_t l = 0; l < net.num_lines(); ++l) {
    if (!topo.z_line[l]) continue;
    const std::size_t i = net.from_index(l);
    const std::size_t j = net.to_index(l);
    const BranchFlow f = branch_flow(net.lines()[l], state.vm[i], state.vm[j], state.va[i], state.va[j]);
    r[2 * i] -= f.p_fr;
    r[2 * i + 1] -= f.q_fr;
    r[2 * j] -= f.p_to;
    r[2 * j + 1] -= f.q_to;
  }
  for (std::size_t b = 0; b < nb; ++b) {
    if (!topo.z_bus[b]) r[2 * b] = r[2 * b + 1] = 0.0;
  }
  return r;
}

int slack_generator(const Network& net, const Topology& topo,
                    const std::vector<std::size_t>& island) {
  int best = -1;
  for (std::size_t b : island) {
    for (std::size_t g : net.gens_at(b)) {
      if (!topo.z_gen[g]) continue;
      if (best < 0 || net.generators()[g].pmax > net.generators()[best].pmax ||
          (net.generators()[g].pmax == net.generators()[best].pmax && static_cast<int>(g) < best)) {
        best = static_cast<int>(g);
      }
    }
  }
  return best;
}

NewtonResult newton_pf(const Network& net, const Topology& topo,
                       const std::vector<std::size_t>& island, const AcState& start,
                       const NewtonOptions& opts) {
  check_topology(net, topo);
  check_state(net, start);
  NewtonResult res;
  res.state = start;
  AcState& s = res.state;
  const int slack = slack_generator(net, topo, island);
  if (slack < 0) {
    res.no_generator = true;
    res.message = "island has no energized generator";
    return res;
  }
  const IslandData d = island_data(net, topo, island);
  const auto n = static_cast<Eigen::Index>(d.buses.size());
  const int ref = d.local[net.gen_bus_index(slack)];

  enum class Kind { kPQ, kPV, kRef };
  std::vector<Kind> kind(n, Kind::kPQ);
  std::vector<std::vector<std::size_t>> bus_gens(n);
  for (std::size_t g : d.gens) bus_gens[d.local[net.gen_bus_index(g)]].push_back(g);
  std::vector<double> qlo(n, 0.0), qhi(n, 0.0), vset(n, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!bus_gens[i].empty()) kind[i] = Kind::kPV;
    for (std::size_t g : bus_gens[i]) {
      qlo[i] += net.generators()[g].qmin;
      qhi[i] += net.generators()[g].qmax;
    }
    vset[i] = s.vm[d.buses[i]];
  }
  kind[ref] = Kind::kRef;
  // +1 held at qmax, -1 at qmin, 0 regulating.
  std::vector<int> held(n, 0);

  const double ref_angle = s.va[d.buses[ref]];
  for (std::size_t b : d.buses) s.va[b] -= ref_angle;

  auto solve_inner = [&]() -> bool {
    std::vector<Eigen::Index> eq, unk;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (kind[i] != Kind::kRef) eq.push_back(i);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (kind[i] == Kind::kPQ || (kind[i] == Kind::kPV && held[i] != 0)) eq.push_back(n + i);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (kind[i] != Kind::kRef) unk.push_back(i);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (kind[i] == Kind::kPQ || (kind[i] == Kind::kPV && held[i] != 0)) unk.push_back(n + i);
    }
    const auto m = static_cast<Eigen::Index>(eq.size());
    Eigen::VectorXd f;
    Eigen::MatrixXd jac;
    Eigen::VectorXd fr(m);
    Eigen::MatrixXd jr(m, m);
    for (int it = 0;; ++it) {
      island_mismatch(net, d, s, f, &jac);
      double norm = 0.0;
      for (Eigen::Index r = 0; r < m; ++r) {
        fr(r) = f(eq[r]);
        norm = std::max(norm, std::abs(fr(r)));
      }
      if (!std::isfinite(norm) || norm > 1e10) {
        res.message = "power flow diverged";
        return false;
      }
      if (norm <= opts.tol) return true;
      if (it >= opts.max_iterations) {
        res.message = "power flow did not converge in " + std::to_string(opts.max_iterations) +
                      " iterations";
        return false;
      }
      for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index c = 0; c < m; ++c) jr(r, c) = jac(eq[r], unk[c]);
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(jr);
      if (!lu.isInvertible()) {
        res.message = "singular power flow Jacobian";
        return false;
      }
      const Eigen::VectorXd dx = lu.solve(-fr);
      for (Eigen::Index c = 0; c < m; ++c) {
        if (unk[c] < n) {
          s.va[d.buses[unk[c]]] += dx(c);
        } else {
          s.vm[d.buses[unk[c] - n]] += dx(c);
        }
      }
      ++res.iterations;
    }
  };

  // Reactive output each regulating bus needs, given the current point.
  auto needed_q = [&](Eigen::Index i, const Eigen::VectorXd& f) {
    double q = 0.0;
    for (std::size_t g : bus_gens[i]) q += s.qg[g];
    return q - f(n + i);
  };

  for (int outer = 0; outer < 10; ++outer) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (kind[i] == Kind::kPV && held[i] != 0) {
        split_reactive(net, bus_gens[i], held[i] > 0 ? qhi[i] : qlo[i], s);
      } else if (kind[i] != Kind::kPQ) {
        s.vm[d.buses[i]] = vset[i];
      }
    }
    if (!solve_inner()) return res;
    if (!opts.q_limits) break;
    Eigen::VectorXd f;
    island_mismatch(net, d, s, f, nullptr);
    bool changed = false;
    constexpr double kSwitchTol = 1e-9;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (kind[i] != Kind::kPV) continue;
      const double v = s.vm[d.buses[i]];
      if (held[i] == 0) {
        const double q = needed_q(i, f);
        if (q > qhi[i] + kSwitchTol) {
          held[i] = 1;
          changed = true;
        } else if (q < qlo[i] - kSwitchTol) {
          held[i] = -1;
          changed = true;
        }
      } else if ((held[i] > 0 && v > vset[i] + kSwitchTol) ||
                 (held[i] < 0 && v < vset[i] - kSwitchTol)) {
        held[i] = 0;
        changed = true;
      }
    }
    if (!changed) break;
  }

  Eigen::VectorXd f;
  island_mismatch(net, d, s, f, nullptr);
  s.pg[slack] -= f(ref);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (kind[i] == Kind::kRef || (kind[i] == Kind::kPV && held[i] == 0)) {
      split_reactive(net, bus_gens[i], needed_q(i, f), s);
    }
  }
  island_mismatch(net, d, s, f, nullptr);
  res.converged = f.size() == 0 || f.cwiseAbs().maxCoeff() <= opts.tol;
  if (!res.converged) res.message = "power flow residual above tolerance after dispatch";
  return res;
}

AcViolation ac_violation(const Network& net, const Topology& topo, const AcState& state) {
  const std::vector<double> r = ac_residual(net, topo, state);
  AcViolation out;
  for (double v : r) out.residual = std::max(out.residual, std::isnan(v) ? kInf : std::abs(v));
  IslandData all;
  for (std::size_t b = 0; b < net.num_buses(); ++b) {
    if (!topo.z_bus[b]) continue;
    all.buses.push_back(b);
    for (std::size_t ld : net.loads_at(b)) all.loads.push_back(ld);
    for (std::size_t s : net.shunts_at(b)) all.shunts.push_back(s);
  }
  for (std::size_t l = 0; l < net.num_lines(); ++l) {
    if (topo.z_line[l]) all.lines.push_back(l);
  }
  for (std::size_t g = 0; g < net.generators().size(); ++g) {
    if (topo.z_gen[g]) all.gens.push_back(g);
  }
  const Violation v = bound_violation(net, topo, all, state, true);
  out.bounds = v.max;
  out.worst = v.worst;
  return out;
}

std::string_view to_string(RedispatchStatus s) {
  switch (s) {
    case RedispatchStatus::kFeasible:
      return "feasible";
    case RedispatchStatus::kTrivial:
      return "trivial";
    case RedispatchStatus::kFailed:
      return "failed";
  }
  return "?";
}

namespace {
struct IslandSolve {
  bool solved = false;
  int iterations = 0;
  std::vector<double> accepted_loads;
};

struct LpStep {
  bool ok = false;
  double step = 0.0;  // infinity norm of the move
  double gain = 0.0;  // predicted objective change
  AcState point;      // linear prediction, not yet power-flow consistent
};

// Trust-region LP around `s`. Served load may not fall below `load_floor`;
// with `hold_load` the served fractions stay put and the LP only removes
// bound violations.
LpStep lp_step(const Network& net, const IslandData& d, int slack, const AcState& s, double radius,
               double load_floor, bool hold_load) {
  const auto n = static_cast<Eigen::Index>(d.buses.size());
  const int ref = d.local[net.gen_bus_index(slack)];
  MixedIntegerModel lp;
  std::vector<double> u0;
  auto var = [&](const char* tag, std::size_t k, double value, double lo, double hi) {
    u0.push_back(value);
    return lp.add_variable(tag + std::to_string(k), lo, hi);
  };
  auto elastic = [&]() {
    const int e = var("e", lp.num_variables(), 0.0, 0.0, kInf);
    lp.add_objective(e, -kPenalty);
    return e;
  };
  std::vector<int> th(n), vv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t b = d.buses[i];
    th[i] = i == ref ? var("t", i, 0.0, 0.0, 0.0) : var("t", i, s.va[b], s.va[b] - radius, s.va[b] + radius);
    vv[i] = var("v", i, s.vm[b], std::max(0.0, s.vm[b] - radius), s.vm[b] + radius);
  }
  std::vector<int> pgv, qgv;
  for (std::size_t g : d.gens) {
    const Generator& gen = net.generators()[g];
    const double p = s.pg[g];
    const double q = s.qg[g];
    if (static_cast<int>(g) == slack) {
      pgv.push_back(var("p", g, p, p - radius, p + radius));
    } else {
      pgv.push_back(var("p", g, p, std::max(gen.pmin, p - radius), std::min(gen.pmax, p + radius)));
    }
    qgv.push_back(var("q", g, q, q - radius, q + radius));
  }
  std::vector<int> xdv, xsv;
  for (std::size_t ld : d.loads) {
    const double x = s.xd[ld];
    xdv.push_back(hold_load ? var("x", ld, x, x, x)
                            : var("x", ld, x, std::max(0.0, x - radius), std::min(1.0, x + radius)));
    lp.add_objective(xdv.back(), net.loads()[ld].weight * net.loads()[ld].pd);
  }
  for (std::size_t sh : d.shunts) {
    const double x = s.xs[sh];
    xsv.push_back(var("s", sh, x, std::max(0.0, x - radius), std::min(1.0, x + radius)));
  }

  // Linearized balance rows.
  Eigen::VectorXd f;
  Eigen::MatrixXd jac;
  island_mismatch(net, d, s, f, &jac);
  std::vector<std::vector<Term>> bal(2 * n);
  for (Eigen::Index r = 0; r < 2 * n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      if (jac(r, c) != 0.0 && c != ref) bal[r].push_back({th[c], jac(r, c)});
      if (jac(r, n + c) != 0.0) bal[r].push_back({vv[c], jac(r, n + c)});
    }
  }
  for (std::size_t k = 0; k < d.gens.size(); ++k) {
    const int i = d.local[net.gen_bus_index(d.gens[k])];
    bal[i].push_back({pgv[k], 1.0});
    bal[n + i].push_back({qgv[k], 1.0});
  }
  for (std::size_t k = 0; k < d.loads.size(); ++k) {
    const Load& ld = net.loads()[d.loads[k]];
    const int i = d.local[net.load_bus_index(d.loads[k])];
    if (ld.pd != 0.0) bal[i].push_back({xdv[k], -ld.pd});
    if (ld.qd != 0.0) bal[n + i].push_back({xdv[k], -ld.qd});
  }
  for (std::size_t k = 0; k < d.shunts.size(); ++k) {
    const Shunt& sh = net.shunts()[d.shunts[k]];
    const int i = d.local[net.shunt_bus_index(d.shunts[k])];
    const double v2 = s.vm[d.buses[i]] * s.vm[d.buses[i]];
    if (sh.gs != 0.0) bal[i].push_back({xsv[k], -sh.gs * v2});
    if (sh.bs != 0.0) bal[n + i].push_back({xsv[k], sh.bs * v2});
  }
  for (Eigen::Index r = 0; r < 2 * n; ++r) {
    double rhs = -f(r);
    for (const Term& t : bal[r]) rhs += t.coef * u0[t.var];
    lp.add_row({bal[r], rhs, rhs, "bal" + std::to_string(r)});
  }

  auto box = [&](std::vector<Term> terms, double lo, double hi, const std::string& name) {
    const int e = elastic();
    std::vector<Term> up = terms;
    terms.push_back({e, 1.0});
    up.push_back({e, -1.0});
    lp.add_row({std::move(terms), lo, kInf, name + "_lo"});
    lp.add_row({std::move(up), -kInf, hi, name + "_hi"});
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    const Bus& bus = net.buses()[d.buses[i]];
    box({{vv[i], 1.0}}, bus.vmin, bus.vmax, "vm" + std::to_string(i));
  }
  for (std::size_t k = 0; k < d.gens.size(); ++k) {
    const Generator& gen = net.generators()[d.gens[k]];
    if (static_cast<int>(d.gens[k]) == slack) box({{pgv[k], 1.0}}, gen.pmin, gen.pmax, "pg" + std::to_string(k));
    box({{qgv[k], 1.0}}, gen.qmin, gen.qmax, "qg" + std::to_string(k));
  }
  for (std::size_t l : d.lines) {
    const Line& line = net.lines()[l];
    const int i = d.local[net.from_index(l)];
    const int j = d.local[net.to_index(l)];
    {
      std::vector<Term> terms;
      if (i != ref) terms.push_back({th[i], 1.0});
      if (j != ref) terms.push_back({th[j], -1.0});
      box(std::move(terms), line.ang_min, line.ang_max, "ang" + std::to_string(l));
    }

    const double vi = s.vm[d.buses[i]];
    const double vj = s.vm[d.buses[j]];
    const double delta = s.va[d.buses[i]] - s.va[d.buses[j]];
    const LineCoef k = line_coef(line);
    const double cs = std::cos(delta);
    const double sn = std::sin(delta);
    const std::pair<const FlowCoef*, const FlowCoef*> sides[2] = {{&k.p_fr, &k.q_fr}, {&k.p_to, &k.q_to}};
    for (int side = 0; side < 2; ++side) {
      const FlowEval p = eval_flow(*sides[side].first, vi, vj, cs, sn);
      const FlowEval q = eval_flow(*sides[side].second, vi, vj, cs, sn);
      const double smag = std::hypot(p.val, q.val);
      const double reach = (std::abs(p.dvi) + std::abs(p.dvj) + 2.0 * std::abs(p.dti) + std::abs(q.dvi) +
                            std::abs(q.dvj) + 2.0 * std::abs(q.dti)) *
                           radius;
      if (smag + reach < line.thermal) continue;
      const int e = elastic();
      auto add_dir = [&](double c, double sg) {
        std::vector<Term> terms;
        const double dt = c * p.dti + sg * q.dti;
        if (i != ref) terms.push_back({th[i], dt});
        if (j != ref) terms.push_back({th[j], -dt});
        terms.push_back({vv[i], c * p.dvi + sg * q.dvi});
        terms.push_back({vv[j], c * p.dvj + sg * q.dvj});
        double rhs = line.thermal - c * p.val - sg * q.val;
        for (const Term& t : terms) rhs += t.coef * u0[t.var];
        terms.push_back({e, -1.0});
        lp.add_row({std::move(terms), -kInf, rhs, "th" + std::to_string(l) + "_" + std::to_string(side)});
      };
      for (int dir = 0; dir < kThermalDirections; ++dir) {
        const double a = 2.0 * std::numbers::pi * dir / kThermalDirections;
        add_dir(std::cos(a), std::sin(a));
      }
      if (smag > 1e-9) add_dir(p.val / smag, q.val / smag);
    }
  }
  if (!hold_load && !d.loads.empty() && std::isfinite(load_floor)) {
    std::vector<Term> terms;
    for (std::size_t k = 0; k < d.loads.size(); ++k) {
      terms.push_back({xdv[k], net.loads()[d.loads[k]].weight * net.loads()[d.loads[k]].pd});
    }
    lp.add_row({std::move(terms), load_floor, kInf, "load"});
  }

  LpStep out;
  LpSolution sol;
  try {
    sol = solve_lp(lp);
  } catch (const LpError&) {
    return out;
  }
  if (sol.status != LpStatus::kOptimal) return out;
  out.ok = true;
  for (std::size_t c = 0; c < u0.size(); ++c) out.step = std::max(out.step, std::abs(sol.primal[c] - u0[c]));
  double load = 0.0;
  for (std::size_t ld : d.loads) load += net.loads()[ld].weight * net.loads()[ld].pd * s.xd[ld];
  out.gain = sol.objective - load;
  AcState& cand = out.point;
  cand = s;
  for (Eigen::Index i = 0; i < n; ++i) {
    cand.va[d.buses[i]] = sol.primal[th[i]];
    cand.vm[d.buses[i]] = sol.primal[vv[i]];
  }
  for (std::size_t k = 0; k < d.gens.size(); ++k) {
    cand.pg[d.gens[k]] = sol.primal[pgv[k]];
    cand.qg[d.gens[k]] = sol.primal[qgv[k]];
  }
  for (std::size_t k = 0; k < d.loads.size(); ++k) cand.xd[d.loads[k]] = clamp(sol.primal[xdv[k]], 0.0, 1.0);
  for (std::size_t k = 0; k < d.shunts.size(); ++k) cand.xs[d.shunts[k]] = clamp(sol.primal[xsv[k]], 0.0, 1.0);
  return out;
}

// Trust-region SLP on one island; `s` holds the island point on return.
IslandSolve solve_island(const Network& net, const Topology& topo, const IslandData& d, int slack,
                         AcState& s, const RedispatchOptions& opts, std::size_t island_no) {
  IslandSolve out;
  for (std::size_t b : d.buses) {
    s.vm[b] = clamp(1.0, net.buses()[b].vmin, net.buses()[b].vmax);
    s.va[b] = 0.0;
  }
  for (std::size_t g : d.gens) {
    s.pg[g] = clamp(0.0, net.generators()[g].pmin, net.generators()[g].pmax);
    s.qg[g] = 0.0;
  }
  // Nothing served, unless must-run output needs somewhere to go: then the
  // smallest uniform fraction that absorbs it.
  double must_run = 0.0, demand = 0.0;
  for (std::size_t g : d.gens) must_run += std::max(net.generators()[g].pmin, 0.0);
  for (std::size_t ld : d.loads) demand += std::max(net.loads()[ld].pd, 0.0);
  const double start_frac = demand > 0.0 ? std::min(1.0, must_run / demand) : 0.0;
  for (std::size_t ld : d.loads) s.xd[ld] = net.loads()[ld].pd > 0.0 ? start_frac : 0.0;
  for (std::size_t sh : d.shunts) s.xs[sh] = 0.0;

  // Reactive limits are enforced by switching when that converges and by the
  // LP bound rows otherwise.
  auto power_flow = [&](const AcState& start) {
    NewtonResult r = newton_pf(net, topo, d.buses, start, {});
    if (!r.converged) r = newton_pf(net, topo, d.buses, start, {.q_limits = false});
    return r;
  };
  NewtonResult pf = power_flow(s);
  if (!pf.converged) return out;
  s = pf.state;

  Violation viol = bound_violation(net, topo, d, s, false);
  bool feasible = viol.max <= kAcceptTol;
  double load = weighted_load(net, d.loads, s);
  if (feasible) out.accepted_loads.push_back(load);
  double radius = opts.initial_radius;
  int streak = 0;

  auto log = [&](int it, const std::string& what) {
    if (opts.trace) {
      *opts.trace << "island " << island_no << " it " << it << " radius " << radius << " " << what << "\n";
    }
  };

  for (int it = 0; it < opts.max_iterations; ++it) {
    out.iterations = it + 1;
    auto reject = [&](const char* why) {
      log(it, std::string("reject ") + why);
      radius *= 0.5;
      streak = 0;
    };
    // Until the island is feasible, load may be given back to restore it.
    const LpStep lps = lp_step(net, d, slack, s, radius, feasible ? load : -kInf, false);
    if (!lps.ok) {
      reject("lp");
      if (radius < opts.min_radius) break;
      continue;
    }
    if (lps.step < opts.step_tol) break;
    if (feasible && lps.gain <= 1e-9 * (1.0 + std::abs(load))) break;

    NewtonResult cpf = power_flow(lps.point);
    if (!cpf.converged) {
      reject("power flow");
      if (radius < opts.min_radius) break;
      continue;
    }
    Violation cv = bound_violation(net, topo, d, cpf.state, false);
    // Second-order drift after the power flow; pull it back with the served
    // load held before judging the step.
    for (int corr = 0; corr < 3 && cv.max > kAcceptTol && cv.max < 1e-2; ++corr) {
      const double fix_radius = std::min(radius, std::max(100.0 * cv.max, 1e-6));
      const LpStep fix = lp_step(net, d, slack, cpf.state, fix_radius, -kInf, true);
      if (!fix.ok) break;
      NewtonResult fpf = power_flow(fix.point);
      if (!fpf.converged) break;
      const Violation fv = bound_violation(net, topo, d, fpf.state, false);
      if (!(fv.sum < cv.sum)) break;
      cpf = std::move(fpf);
      cv = fv;
    }
    const double cload = weighted_load(net, d.loads, cpf.state);
    const bool cfeas = cv.max <= kAcceptTol;
    const bool monotone = !feasible || cload >= load - 1e-9;
    const bool accept = monotone && (feasible ? cfeas : (cfeas || cv.sum < viol.sum));
    if (!accept) {
      reject(!monotone ? "load" : ("violation " + std::to_string(cv.max) + " " + cv.worst).c_str());
      if (radius < opts.min_radius) break;
      continue;
    }
    log(it, "accept load " + std::to_string(cload) + " violation " + std::to_string(cv.max));
    s = std::move(cpf.state);
    viol = cv;
    feasible = cfeas;
    load = cload;
    if (feasible) out.accepted_loads.push_back(load);
    if (++streak >= 2) {
      radius = std::min(2.0 * radius, opts.max_radius);
      streak = 0;
    }
  }
  out.solved = feasible;
  return out;
}

void shed_island(const Network& net, const IslandData& d, Topology& eff, AcState& s) {
  for (std::size_t b : d.buses) {
    eff.z_bus[b] = 0;
    s.vm[b] = 0.0;
    s.va[b] = 0.0;
  }
  for (std::size_t l : d.lines) eff.z_line[l] = 0;
  for (std::size_t b : d.buses) {
    for (std::size_t g : net.gens_at(b)) {
      eff.z_gen[g] = 0;
      s.pg[g] = s.qg[g] = 0.0;
    }
  }
  for (std::size_t ld : d.loads) s.xd[ld] = 0.0;
  for (std::size_t sh : d.shunts) s.xs[sh] = 0.0;
}

}  // namespace

RedispatchResult redispatch(const Network& net, const Scenario& scn, const Topology& topo,
                            const RedispatchOptions& opts) {
  check_topology(net, topo);
  RedispatchResult res;
  res.effective = topo;
  res.state = flat_state(net);
  for (std::size_t b = 0; b < net.num_buses(); ++b) {
    if (!topo.z_bus[b]) res.state.vm[b] = 0.0;
  }
  const auto parts = islands(net, topo);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const IslandData d = island_data(net, topo, parts[k]);
    IslandReport rep;
    rep.buses = parts[k];
    const int slack = slack_generator(net, topo, parts[k]);
    if (slack >= 0) {
      rep.slack_bus = static_cast<int>(net.gen_bus_index(slack));
      const IslandSolve r = solve_island(net, topo, d, slack, res.state, opts, k);
      rep.converged = r.solved;
      rep.slp_iterations = r.iterations;
      rep.accepted_loads = r.accepted_loads;
    }
    if (!rep.converged) {
      rep.shed = true;
      shed_island(net, d, res.effective, res.state);
    }
    res.islands.push_back(std::move(rep));
  }
  for (std::size_t d = 0; d < net.loads().size(); ++d) {
    res.load_served += net.loads()[d].weight * net.loads()[d].pd * res.state.xd[d];
  }
  res.load_served_frac = res.load_served / net.total_demand();

  ShutoffSolution sol;
  sol.z_bus = topo.z_bus;
  sol.z_line = topo.z_line;
  sol.z_gen = topo.z_gen;
  sol.x_load = res.state.xd;
  sol.x_shunt = res.state.xs;
  score_solution(net, scn, sol);
  res.recovered_objective = sol.objective;

  const bool any_served = std::any_of(res.state.xd.begin(), res.state.xd.end(),
                                      [](double x) { return x > 0.0; });
  res.status = any_served ? RedispatchStatus::kFeasible : RedispatchStatus::kTrivial;
  if (!certify(net, res, opts.feas_tol)) {
    const AcViolation v = ac_violation(net, res.effective, res.state);
    res.status = RedispatchStatus::kFailed;
    res.message = "certificate failed: residual " + std::to_string(v.residual) + ", " + v.worst;
  }
  return res;
}

bool certify(const Network& net, const RedispatchResult& res, double tol) {
  const AcViolation v = ac_violation(net, res.effective, res.state);
  return v.residual <= tol && v.bounds <= tol;
}

std::vector<EnumeratedTopology> enumerate_topologies(const Network& net, std::size_t max_switchable,
                                                     const RedispatchOptions& opts, int workers) {
  const std::size_t nl = net.num_lines();
  if (nl > max_switchable) {
    throw AcError("enumeration over " + std::to_string(nl) + " lines exceeds the limit of " +
                  std::to_string(max_switchable));
  }
  // Risk and alpha do not change served load; any valid scenario will do.
  Scenario neutral;
  for (const Line& line : net.lines()) neutral.risk[line.id] = 1.0;

  const std::size_t count = std::size_t{1} << nl;
  std::vector<EnumeratedTopology> table(count);
  auto work = [&](std::size_t mask) {
    EnumeratedTopology& e = table[mask];
    // Mask bit l set means line l is energized; index order is lexicographic
    // in the line-state vector read from the first line.
    e.z_line.resize(nl);
    for (std::size_t l = 0; l < nl; ++l) e.z_line[l] = static_cast<int>((mask >> (nl - 1 - l)) & 1u);
    e.topology = derive_topology(net, e.z_line);
    e.result = redispatch(net, neutral, e.topology, opts);
  };
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t m = next++; m < count; m = next++) work(m);
  };
  const int threads = std::max(1, std::min<int>(workers, static_cast<int>(count)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return table;
}

ShutoffSolution best_enumerated(const Network& net, const Scenario& scn,
                                const std::vector<EnumeratedTopology>& table) {
  if (table.empty()) throw AcError("empty enumeration table");
  // Full blackout first: it has the smallest line vector, so it wins ties.
  ShutoffSolution best;
  best.z_bus.assign(net.num_buses(), 0);
  best.z_line.assign(net.num_lines(), 0);
  best.z_gen.assign(net.generators().size(), 0);
  best.x_load.assign(net.loads().size(), 0.0);
  best.x_shunt.assign(net.shunts().size(), 0.0);
  score_solution(net, scn, best);
  for (const EnumeratedTopology& e : table) {
    ShutoffSolution sol;
    sol.z_bus = e.topology.z_bus;
    sol.z_line = e.z_line;
    sol.z_gen = e.topology.z_gen;
    sol.x_load = e.result.state.xd;
    sol.x_shunt = e.result.state.xs;
    score_solution(net, scn, sol);
    if (sol.objective > best.objective + 1e-9 ||
        (std::abs(sol.objective - best.objective) <= 1e-9 && sol.z_line < best.z_line)) {
      best = std::move(sol);
    }
  }
  return best;
}

ShutoffSolution ac_ops_enumerate(const Network& net, const Scenario& scn, std::size_t max_switchable) {
  check_scenario(net, scn);
  return best_enumerated(net, scn, enumerate_topologies(net, max_switchable));
}

}  // namespace ops
