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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <sstream>

#include "ops/mip.hpp"

namespace ops {
namespace {

const std::string kCaseDir = OPS_CASE_DIR;

Network ieee14() { return load_case_file(kCaseDir + "/pglib_opf_case14_ieee.m"); }
Network lmbd() { return load_case_file(kCaseDir + "/pglib_opf_case3_lmbd.m"); }

Line lossless(int id, int from, int to, double b = -10.0, double thermal = 5.0) {
  Line l;
  l.id = id;
  l.from_bus = from;
  l.to_bus = to;
  l.b_series = b;
  l.thermal = thermal;
  l.ang_min = -0.8;
  l.ang_max = 0.8;
  return l;
}

Generator gen(int id, int bus, double pmax, double qlim = 5.0) {
  return {id, bus, 0.0, pmax, -qlim, qlim};
}

Load load(int id, int bus, double pd, double qd = 0.0) { return {id, bus, pd, qd, 1.0}; }

// Generator at bus 1 feeding a load at bus 2 over one lossless line.
Network two_bus(double pd) {
  return Network(100.0, {{1, 0.9, 1.1}, {2, 0.9, 1.1}}, {lossless(1, 1, 2)},
                 {gen(1, 1, 5.0)}, {load(1, 2, pd)}, {});
}

Scenario uniform_risk(const Network& net, double alpha) {
  Scenario s;
  s.alpha = alpha;
  for (const Line& l : net.lines()) s.risk[l.id] = 1.0;
  return s;
}

// Complex-current branch model, written independently of the library.
BranchFlow oracle_flow(const Line& l, double vi, double vj, double ti, double tj) {
  using C = std::complex<double>;
  const C y(l.g_series, l.b_series);
  const C yfr(l.g_fr, l.b_fr);
  const C yto(l.g_to, l.b_to);
  const C t(l.tap_re, l.tap_im);
  const C ui = std::polar(vi, ti);
  const C uj = std::polar(vj, tj);
  const C ifr = (y + yfr) / std::norm(t) * ui - y / std::conj(t) * uj;
  const C ito = -y / t * ui + (y + yto) * uj;
  const C sfr = ui * std::conj(ifr);
  const C sto = uj * std::conj(ito);
  return {sfr.real(), sfr.imag(), sto.real(), sto.imag()};
}

// Residual and bound check written against the oracle model.
double oracle_violation(const Network& net, const Topology& topo, const AcState& s) {
  std::vector<std::complex<double>> inj(net.num_buses());
  double worst = 0.0;
  for (std::size_t g = 0; g < net.generators().size(); ++g) {
    const Generator& gn = net.generators()[g];
    if (!topo.z_gen[g]) {
      worst = std::max({worst, std::abs(s.pg[g]), std::abs(s.qg[g])});
      continue;
    }
    inj[net.gen_bus_index(g)] += std::complex<double>(s.pg[g], s.qg[g]);
    worst = std::max({worst, gn.pmin - s.pg[g], s.pg[g] - gn.pmax, gn.qmin - s.qg[g], s.qg[g] - gn.qmax});
  }
  for (std::size_t d = 0; d < net.loads().size(); ++d) {
    const Load& ld = net.loads()[d];
    inj[net.load_bus_index(d)] -= std::complex<double>(ld.pd, ld.qd) * s.xd[d];
    worst = std::max({worst, -s.xd[d], s.xd[d] - 1.0});
    if (!topo.z_bus[net.load_bus_index(d)]) worst = std::max(worst, std::abs(s.xd[d]));
  }
  for (std::size_t k = 0; k < net.shunts().size(); ++k) {
    const Shunt& sh = net.shunts()[k];
    const double v = s.vm[net.shunt_bus_index(k)];
    inj[net.shunt_bus_index(k)] -= std::complex<double>(sh.gs, -sh.bs) * v * v * s.xs[k];
    worst = std::max({worst, -s.xs[k], s.xs[k] - 1.0});
  }
  for (std::size_t l = 0; l < net.num_lines(); ++l) {
    if (!topo.z_line[l]) continue;
    const Line& ln = net.lines()[l];
    const std::size_t i = net.from_index(l);
    const std::size_t j = net.to_index(l);
    const BranchFlow f = oracle_flow(ln, s.vm[i], s.vm[j], s.va[i], s.va[j]);
    inj[i] -= std::complex<double>(f.p_fr, f.q_fr);
    inj[j] -= std::complex<double>(f.p_to, f.q_to);
    worst = std::max({worst, std::hypot(f.p_fr, f.q_fr) - ln.thermal,
                      std::hypot(f.p_to, f.q_to) - ln.thermal, ln.ang_min - (s.va[i] - s.va[j]),
                      (s.va[i] - s.va[j]) - ln.ang_max});
  }
  for (std::size_t b = 0; b < net.num_buses(); ++b) {
    if (!topo.z_bus[b]) continue;
    const Bus& bus = net.buses()[b];
    worst = std::max({worst, std::abs(inj[b].real()), std::abs(inj[b].imag()), bus.vmin - s.vm[b],
                      s.vm[b] - bus.vmax});
  }
  return worst;
}

TEST(Islands, PathSplitsAtOpenLine) {
  const Network net(100.0, {{1, 0.9, 1.1}, {2, 0.9, 1.1}, {3, 0.9, 1.1}, {4, 0.9, 1.1}},
                    {lossless(1, 1, 2), lossless(2, 2, 3), lossless(3, 3, 4)}, {gen(1, 1, 1.0)},
                    {load(1, 4, 0.1)}, {});
  Topology t = full_topology(net);
  EXPECT_EQ(islands(net, t).size(), 1u);
  t.z_line[1] = 0;
  const auto parts = islands(net, t);
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0], (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(parts[1], (std::vector<std::size_t>{2, 3}));
  const Topology off{std::vector<int>(4, 0), std::vector<int>(3, 0), std::vector<int>(1, 0)};
  EXPECT_TRUE(islands(net, off).empty());
}

TEST(TopologyCheck, RejectsInconsistentStates) {
  const Network net = two_bus(0.5);
  Topology t = full_topology(net);
  t.z_bus[1] = 0;
  EXPECT_THROW(check_topology(net, t), AcError);
  t = full_topology(net);
  t.z_bus[0] = 0;
  t.z_line[0] = 0;
  EXPECT_THROW(check_topology(net, t), AcError);  // generator on at an off bus
  t = full_topology(net);
  t.z_line[0] = 2;
  EXPECT_THROW(check_topology(net, t), AcError);
  t = full_topology(net);
  t.z_line.push_back(1);
  EXPECT_THROW(check_topology(net, t), AcError);
}

TEST(TopologyCheck, DeriveKeepsGeneratorBuses) {
  const Network net = lmbd();
  const Topology all_off = derive_topology(net, {0, 0, 0});
  EXPECT_EQ(all_off.z_bus, (std::vector<int>{1, 1, 1}));  // every bus hosts a generator
  const Network path(100.0, {{1, 0.9, 1.1}, {2, 0.9, 1.1}, {3, 0.9, 1.1}},
                     {lossless(1, 1, 2), lossless(2, 2, 3)}, {gen(1, 1, 1.0)},
                     {load(1, 2, 0.1), load(2, 3, 0.1)}, {});
  const Topology t = derive_topology(path, {1, 0});
  EXPECT_EQ(t.z_bus, (std::vector<int>{1, 1, 0}));
  EXPECT_EQ(t.z_gen, (std::vector<int>{1}));
  EXPECT_NO_THROW(check_topology(path, t));
}

TEST(BranchFlowModel, MatchesComplexCurrents) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    Line l;
    l.g_series = 1.0 + u(rng);
    l.b_series = -10.0 + 3.0 * u(rng);
    l.g_fr = 0.01 * u(rng);
    l.b_fr = 0.1 * u(rng);
    l.g_to = 0.01 * u(rng);
    l.b_to = 0.1 * u(rng);
    const double ratio = 1.0 + 0.1 * u(rng);
    const double shift = 0.2 * u(rng);
    l.tap_re = ratio * std::cos(shift);
    l.tap_im = ratio * std::sin(shift);
    const double vi = 1.0 + 0.1 * u(rng), vj = 1.0 + 0.1 * u(rng);
    const double ti = 0.3 * u(rng), tj = 0.3 * u(rng);
    const BranchFlow a = branch_flow(l, vi, vj, ti, tj);
    const BranchFlow b = oracle_flow(l, vi, vj, ti, tj);
    EXPECT_NEAR(a.p_fr, b.p_fr, 1e-12);
    EXPECT_NEAR(a.q_fr, b.q_fr, 1e-12);
    EXPECT_NEAR(a.p_to, b.p_to, 1e-12);
    EXPECT_NEAR(a.q_to, b.q_to, 1e-12);
  }
}

TEST(Residual, FlatStartNoLoadIsZero) {
  const Network net = two_bus(0.5);
  const auto r = ac_residual(net, full_topology(net), flat_state(net));
  for (double v : r) EXPECT_EQ(v, 0.0);
}

TEST(Residual, TwoBusFlow) {
  const Network net = two_bus(0.5);
  AcState s = flat_state(net);
  s.va[0] = 0.1;
  const auto r = ac_residual(net, full_topology(net), s);
  EXPECT_NEAR(-r[0], 10.0 * std::sin(0.1), 1e-14);
  EXPECT_NEAR(-r[0], 0.9983341664682815, 1e-12);
  EXPECT_NEAR(r[2], 10.0 * std::sin(0.1), 1e-14);
  // Served load enters as injection mismatch.
  s.xd[0] = 1.0;
  s.pg[0] = 0.2;
  const auto r2 = ac_residual(net, full_topology(net), s);
  EXPECT_NEAR(r2[0], 0.2 - 10.0 * std::sin(0.1), 1e-14);
  EXPECT_NEAR(r2[2], 10.0 * std::sin(0.1) - 0.5, 1e-14);
}

TEST(Residual, OpenLineCarriesNothing) {
  const Network net = two_bus(0.5);
  Topology t = full_topology(net);
  t.z_line[0] = 0;
  AcState s = flat_state(net);
  s.va[0] = 0.7;
  s.vm[1] = 0.95;
  for (double v : ac_residual(net, t, s)) EXPECT_EQ(v, 0.0);
}

TEST(Residual, OffBusRowsAreZeroAndSizesChecked) {
  const Network net = two_bus(0.5);
  const Topology t{{1, 0}, {0}, {1}};
  AcState s = flat_state(net);
  s.xd[0] = 1.0;
  const auto r = ac_residual(net, t, s);
  EXPECT_EQ(r[2], 0.0);
  EXPECT_EQ(r[3], 0.0);
  s.vm.pop_back();
  EXPECT_THROW(ac_residual(net, t, s), AcError);
}

TEST(Newton, TwoBusAngle) {
  // A condenser at bus 2 holds V = 1 at both ends.
  const Network net(100.0, {{1, 0.9, 1.1}, {2, 0.9, 1.1}}, {lossless(1, 1, 2)},
                    {gen(1, 1, 5.0), gen(2, 2, 0.0)}, {load(1, 2, 0.5)}, {});
  const Topology t = full_topology(net);
  AcState start = flat_state(net);
  start.xd[0] = 1.0;
  const NewtonResult r = newton_pf(net, t, {0, 1}, start);
  ASSERT_TRUE(r.converged) << r.message;
  EXPECT_NEAR(r.state.va[0] - r.state.va[1], 0.05002085680577, 1e-8);
  EXPECT_NEAR(r.state.va[0] - r.state.va[1], std::asin(0.05), 1e-8);
  EXPECT_EQ(r.state.va[0], 0.0);
  EXPECT_NEAR(r.state.pg[0], 0.5, 1e-8);
  for (double v : ac_residual(net, t, r.state)) EXPECT_LE(std::abs(v), 1e-8);
}

TEST(Newton, SingleBusConvergesImmediately) {
  const Network net(100.0, {{1, 0.9, 1.1}}, {}, {gen(1, 1, 2.0)}, {load(1, 1, 0.7, 0.2)}, {});
  AcState start = flat_state(net);
  start.xd[0] = 1.0;
  start.pg[0] = 0.7;
  const NewtonResult r = newton_pf(net, full_topology(net), {0}, start);
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 2);
  EXPECT_NEAR(r.state.qg[0], 0.2, 1e-12);
}

TEST(Newton, NoGeneratorSignalsShed) {
  const Network net = two_bus(0.5);
  const Topology t{{1, 1}, {1}, {0}};
  const NewtonResult r = newton_pf(net, t, {0, 1}, flat_state(net));
  EXPECT_FALSE(r.converged);
  EXPECT_TRUE(r.no_generator);
}

TEST(Newton, SlackIsLargestGenerator) {
  const Network net(100.0, {{1, 0.9, 1.1}, {2, 0.9, 1.1}}, {lossless(1, 1, 2)},
                    {gen(1, 1, 1.0), gen(2, 2, 3.0), gen(3, 1, 3.0)}, {load(1, 2, 0.5)}, {});
  EXPECT_EQ(slack_generator(net, full_topology(net), {0, 1}), 1);  // tie goes to the lower position
  Topology t = full_topology(net);
  t.z_gen[1] = 0;
  EXPECT_EQ(slack_generator(net, t, {0, 1}), 2);
}

TEST(Newton, ReactiveLimitReleasesVoltage) {
  // Load far from a weak generator: holding 1.05 needs more reactive output
  // than the generator at bus 2 may give.
  const Network net(100.0, {{1, 0.8, 1.2}, {2, 0.8, 1.2}, {3, 0.8, 1.2}},
                    {lossless(1, 1, 2, -5.0), lossless(2, 2, 3, -5.0)},
                    {gen(1, 1, 5.0, 5.0), {2, 2, 0.0, 0.0, -0.05, 0.05}}, {load(1, 3, 0.5, 0.4)}, {});
  AcState start = flat_state(net);
  start.xd[0] = 1.0;
  start.vm[1] = 1.05;
  const Topology t = full_topology(net);
  const NewtonResult held = newton_pf(net, t, {0, 1, 2}, start);
  ASSERT_TRUE(held.converged) << held.message;
  EXPECT_NEAR(held.state.qg[1], 0.05, 1e-12);
  EXPECT_LT(held.state.vm[1], 1.05);
  const NewtonResult free = newton_pf(net, t, {0, 1, 2}, start, {.q_limits = false});
  ASSERT_TRUE(free.converged);
  EXPECT_NEAR(free.state.vm[1], 1.05, 1e-12);
  EXPECT_GT(free.state.qg[1], 0.05);
}

TEST(Violation, ReportsEachBound) {
  const Network net = two_bus(0.5);
  const Topology t = full_topology(net);
  AcState s = flat_state(net);
  EXPECT_EQ(ac_violation(net, t, s).max(), 0.0);
  s.vm[1] = 1.2;
  EXPECT_NEAR(ac_violation(net, t, s).bounds, 0.1, 1e-12);
  s = flat_state(net);
  s.va[0] = 0.9;  // beyond ang_max = 0.8
  const AcViolation v = ac_violation(net, t, s);
  EXPECT_GT(v.residual, 1.0);
  EXPECT_GE(v.bounds, 0.1 - 1e-12);
  // Thermal limit 5; the from side carries 10 sin(0.6) + j 10 (1 - cos(0.6)).
  s.va[0] = 0.6;
  EXPECT_NEAR(ac_violation(net, t, s).bounds,
              std::hypot(10.0 * std::sin(0.6), 10.0 * (1.0 - std::cos(0.6))) - 5.0, 1e-12);
}

TEST(Redispatch, AllOffIsTrivial) {
  const Network net = lmbd();
  const Topology off{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  const RedispatchResult r = redispatch(net, uniform_risk(net, 0.5), off);
  EXPECT_EQ(r.status, RedispatchStatus::kTrivial);
  EXPECT_EQ(r.load_served, 0.0);
  EXPECT_TRUE(r.islands.empty());
  EXPECT_TRUE(certify(net, r));
}

TEST(Redispatch, IntactLmbdServesAllLoad) {
  const Network net = lmbd();
  const RedispatchResult r = redispatch(net, uniform_risk(net, 0.3), full_topology(net));
  ASSERT_EQ(r.status, RedispatchStatus::kFeasible) << r.message;
  EXPECT_NEAR(r.load_served, 3.15, 1e-4);
  EXPECT_NEAR(r.load_served_frac, 1.0, 1e-4);
  EXPECT_TRUE(certify(net, r));
  EXPECT_LE(oracle_violation(net, r.effective, r.state), 1e-6);
  ASSERT_EQ(r.islands.size(), 1u);
  EXPECT_EQ(r.islands[0].slack_bus, 0);
  // Full service with every line on: objective is (1 - a) - a.
  EXPECT_NEAR(r.recovered_objective, 0.7 - 0.3, 1e-4);
}

TEST(Redispatch, SeparatedGeneratorsServeOwnLoads) {
  const Network net = lmbd();
  const RedispatchResult r = redispatch(net, uniform_risk(net, 0.5), derive_topology(net, {0, 0, 0}));
  ASSERT_EQ(r.status, RedispatchStatus::kFeasible) << r.message;
  // Buses 1 and 2 supply themselves; bus 3 only has a condenser.
  EXPECT_NEAR(r.load_served, 2.2, 1e-4);
  EXPECT_EQ(r.islands.size(), 3u);
  EXPECT_LE(oracle_violation(net, r.effective, r.state), 1e-6);
}

TEST(Redispatch, ShedsIslandWithoutGeneration) {
  const Network net = two_bus(0.5);
  const Topology t{{1, 1}, {1}, {0}};
  const RedispatchResult r = redispatch(net, uniform_risk(net, 0.0), t);
  EXPECT_EQ(r.status, RedispatchStatus::kTrivial);
  ASSERT_EQ(r.islands.size(), 1u);
  EXPECT_TRUE(r.islands[0].shed);
  EXPECT_EQ(r.effective.z_bus, (std::vector<int>{0, 0}));
  EXPECT_EQ(r.effective.z_line, (std::vector<int>{0}));
  EXPECT_TRUE(certify(net, r));
}

TEST(Redispatch, ThermalLimitCapsService) {
  // Lossless line with a 0.3 rating: at most 0.3 reaches the load, and the
  // load has no reactive part, so exactly 0.3 of demand 1 is served at best.
  Network net(100.0, {{1, 0.9, 1.1}, {2, 0.9, 1.1}}, {lossless(1, 1, 2, -10.0, 0.3)},
              {gen(1, 1, 5.0)}, {load(1, 2, 1.0)}, {});
  const RedispatchResult r = redispatch(net, uniform_risk(net, 0.0), full_topology(net));
  ASSERT_EQ(r.status, RedispatchStatus::kFeasible) << r.message;
  EXPECT_LE(r.load_served, 0.3 + 1e-6);
  EXPECT_GE(r.load_served, 0.3 - 1e-3);
  EXPECT_LE(oracle_violation(net, r.effective, r.state), 1e-6);
}

TEST(Redispatch, MustRunOutputFindsLoad) {
  Network net(100.0, {{1, 0.9, 1.1}, {2, 0.9, 1.1}}, {lossless(1, 1, 2)},
              {{1, 1, 0.6, 2.0, -2.0, 2.0}}, {load(1, 2, 1.0, 0.2)}, {});
  const RedispatchResult r = redispatch(net, uniform_risk(net, 0.0), full_topology(net));
  ASSERT_EQ(r.status, RedispatchStatus::kFeasible) << r.message;
  EXPECT_NEAR(r.load_served, 1.0, 1e-6);
  EXPECT_LE(oracle_violation(net, r.effective, r.state), 1e-6);
}

TEST(Redispatch, MustRunAboveDemandShedsIsland) {
  Network net(100.0, {{1, 0.9, 1.1}, {2, 0.9, 1.1}}, {lossless(1, 1, 2)},
              {{1, 1, 1.5, 2.0, -2.0, 2.0}}, {load(1, 2, 1.0)}, {});
  const RedispatchResult r = redispatch(net, uniform_risk(net, 0.0), full_topology(net));
  EXPECT_EQ(r.status, RedispatchStatus::kTrivial);
  EXPECT_EQ(r.load_served, 0.0);
  EXPECT_TRUE(r.islands[0].shed);
  EXPECT_TRUE(certify(net, r));
}

TEST(Redispatch, RandomTopologiesCertify) {
  // Intact and random line states on a case with must-run units.
  const Network net = load_case_file(kCaseDir + "/case24_ieee_rts.m");
  const Scenario scn = uniform_risk(net, 0.0);
  const RedispatchResult full = redispatch(net, scn, full_topology(net));
  ASSERT_EQ(full.status, RedispatchStatus::kFeasible);
  EXPECT_NEAR(full.load_served_frac, 1.0, 1e-6);
  std::mt19937 rng(3);
  for (int k = 0; k < 8; ++k) {
    std::vector<int> z(net.num_lines());
    for (int& v : z) v = rng() % 4 != 0;
    const RedispatchResult r = redispatch(net, scn, derive_topology(net, z));
    ASSERT_NE(r.status, RedispatchStatus::kFailed) << r.message;
    EXPECT_LE(oracle_violation(net, r.effective, r.state), 1e-6);
    EXPECT_LE(r.load_served, full.load_served + 1e-6);
  }
}

TEST(Redispatch, AcceptedIteratesAreMonotone) {
  const Network net = ieee14();
  std::ostringstream trace;
  RedispatchOptions opts;
  opts.trace = &trace;
  Topology t = full_topology(net);
  t.z_line[0] = t.z_line[1] = 0;  // cut bus 1 off; generator 1 is left alone there
  const RedispatchResult r = redispatch(net, uniform_risk(net, 0.5), t, opts);
  ASSERT_NE(r.status, RedispatchStatus::kFailed) << r.message;
  EXPECT_FALSE(trace.str().empty());
  for (const IslandReport& rep : r.islands) {
    for (std::size_t k = 1; k < rep.accepted_loads.size(); ++k) {
      EXPECT_GE(rep.accepted_loads[k], rep.accepted_loads[k - 1] - 1e-9);
    }
  }
  EXPECT_TRUE(certify(net, r));
  EXPECT_LE(oracle_violation(net, r.effective, r.state), 1e-6);
}

TEST(Redispatch, LoadOrderDoesNotMatter) {
  // Two identical loads behind two identical rated lines; reversing the load
  // list must serve the same total.
  auto build = [](bool reversed) {
    std::vector<Load> loads = {load(1, 2, 0.8, 0.1), load(2, 3, 0.8, 0.1)};
    if (reversed) std::reverse(loads.begin(), loads.end());
    return Network(100.0, {{1, 0.9, 1.1}, {2, 0.9, 1.1}, {3, 0.9, 1.1}},
                   {lossless(1, 1, 2, -10.0, 0.5), lossless(2, 1, 3, -10.0, 0.5)},
                   {gen(1, 1, 5.0)}, loads, {});
  };
  const Network a = build(false);
  const Network b = build(true);
  const RedispatchResult ra = redispatch(a, uniform_risk(a, 0.0), full_topology(a));
  const RedispatchResult rb = redispatch(b, uniform_risk(b, 0.0), full_topology(b));
  ASSERT_EQ(ra.status, RedispatchStatus::kFeasible);
  ASSERT_EQ(rb.status, RedispatchStatus::kFeasible);
  EXPECT_NEAR(ra.load_served, rb.load_served, 1e-6);
  EXPECT_LE(ra.load_served, 1.0 + 1e-6);
}

TEST(Redispatch, DcTopologyOverstatesLoad) {
  const Network net = ieee14();
  const auto scns = generate_scenarios(net, 3, 1.0, AlphaMode::fixed(0.5), 11);
  for (const Scenario& scn : scns) {
    const MixedIntegerModel m = build_dc(net, scn);
    const MipResult mr = solve_mip(m);
    ASSERT_EQ(mr.status, MipStatus::kOptimal);
    const ShutoffSolution dc = extract_solution(net, scn, m, mr.incumbent);
    const RedispatchResult r = redispatch(net, scn, topology_of(dc));
    ASSERT_NE(r.status, RedispatchStatus::kFailed) << r.message;
    EXPECT_LE(r.load_served_frac, dc.load_served_frac + 1e-6);
    EXPECT_LE(r.recovered_objective, dc.objective + 1e-6);
    EXPECT_LE(oracle_violation(net, r.effective, r.state), 1e-6);
  }
}

TEST(Enumerate, FullRiskWeightTurnsEverythingOff) {
  const Network net = lmbd();
  Scenario scn = uniform_risk(net, 1.0);
  const ShutoffSolution s = ac_ops_enumerate(net, scn);
  EXPECT_EQ(s.z_line, (std::vector<int>{0, 0, 0}));
  EXPECT_EQ(s.z_bus, (std::vector<int>{0, 0, 0}));
  EXPECT_EQ(s.load_served_frac, 0.0);
  EXPECT_NEAR(s.objective, 0.0, 1e-12);
}

TEST(Enumerate, NoRiskWeightKeepsEverythingOn) {
  const Network net = lmbd();
  const ShutoffSolution s = ac_ops_enumerate(net, uniform_risk(net, 0.0));
  EXPECT_NEAR(s.objective, 1.0, 1e-4);
  EXPECT_NEAR(s.load_served_frac, 1.0, 1e-4);
}

TEST(Enumerate, MatchesBruteForceOverLineStates) {
  const Network net = lmbd();
  Scenario scn;
  scn.alpha = 0.5;
  scn.risk = {{1, 1.0}, {2, 2.0}, {3, 3.0}};
  const ShutoffSolution best = ac_ops_enumerate(net, scn);
  double brute = -kInf;
  std::vector<int> arg;
  for (int mask = 0; mask < 8; ++mask) {
    const std::vector<int> z = {(mask >> 2) & 1, (mask >> 1) & 1, mask & 1};
    const RedispatchResult r = redispatch(net, scn, derive_topology(net, z));
    ASSERT_NE(r.status, RedispatchStatus::kFailed);
    if (r.recovered_objective > brute + 1e-9) {
      brute = r.recovered_objective;
      arg = z;
    }
  }
  EXPECT_NEAR(best.objective, brute, 1e-9);
  EXPECT_EQ(best.z_line, arg);
}

TEST(Enumerate, WorkersGiveSameTable) {
  const Network net = load_case_file(kCaseDir + "/pglib_opf_case5_pjm.m");
  const auto one = enumerate_topologies(net, 12, {}, 1);
  const auto two = enumerate_topologies(net, 12, {}, 2);
  ASSERT_EQ(one.size(), 64u);
  for (std::size_t k = 0; k < one.size(); ++k) {
    EXPECT_EQ(one[k].z_line, two[k].z_line);
    EXPECT_EQ(one[k].result.state, two[k].result.state);
    if (one[k].result.status == RedispatchStatus::kFeasible) EXPECT_TRUE(certify(net, one[k].result));
    EXPECT_NE(one[k].result.status, RedispatchStatus::kFailed) << one[k].result.message;
  }
}

TEST(Enumerate, RejectsLargeNetworks) {
  const Network net = ieee14();
  EXPECT_THROW(ac_ops_enumerate(net, uniform_risk(net, 0.5)), AcError);
}

}  // namespace
}  // namespace ops
