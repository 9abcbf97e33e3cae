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

#include "ops/formulate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "ops/mip.hpp"

namespace ops {
namespace {

const std::string kCaseDir = OPS_CASE_DIR;
constexpr double kDeg = std::numbers::pi / 180.0;

Network ieee14() { return load_case_file(kCaseDir + "/pglib_opf_case14_ieee.m"); }

Line line_with_angles(double lo, double hi) {
  Line l;
  l.id = 1;
  l.ang_min = lo;
  l.ang_max = hi;
  return l;
}

Scenario uniform_risk(const Network& net, double alpha) {
  Scenario s;
  s.alpha = alpha;
  for (const auto& l : net.lines()) s.risk[l.id] = 1.0;
  return s;
}

TEST(ThetaDeltaMax, SumsLineLimits) {
  Network net = ieee14();
  double expected = 0.0;
  for (const auto& l : net.lines()) expected += std::max(std::abs(l.ang_min), std::abs(l.ang_max));
  EXPECT_NEAR(theta_delta_max(net), expected, 1e-12);
}

TEST(ThetaDeltaMax, ThreeThirtyDegreeLines) {
  const Network net = parse_native(R"({"base_mva": 100,
    "buses": [{"id": 1, "vmin": 0.9, "vmax": 1.1}, {"id": 2, "vmin": 0.9, "vmax": 1.1},
              {"id": 3, "vmin": 0.9, "vmax": 1.1}],
    "lines": [
      {"id": 1, "from_bus": 1, "to_bus": 2,
       "g_series": 0, "b_series": -10,
       "g_fr": 0, "b_fr": 0, "g_to": 0, "b_to": 0, "tap_re": 1, "tap_im": 0,
       "thermal": 1, "ang_min": -0.5235987755982988, "ang_max": 0.5235987755982988},
      {"id": 2, "from_bus": 2, "to_bus": 3,
       "g_series": 0, "b_series": -10,
       "g_fr": 0, "b_fr": 0, "g_to": 0, "b_to": 0, "tap_re": 1, "tap_im": 0,
       "thermal": 1, "ang_min": -0.5235987755982988, "ang_max": 0.5235987755982988},
      {"id": 3, "from_bus": 1, "to_bus": 3,
       "g_series": 0, "b_series": -10,
       "g_fr": 0, "b_fr": 0, "g_to": 0, "b_to": 0, "tap_re": 1, "tap_im": 0,
       "thermal": 1, "ang_min": -0.5235987755982988, "ang_max": 0.5235987755982988}],
    "generators": [], "loads": [{"id": 1, "bus": 2, "pd": 1, "qd": 0}], "shunts": []})");
  EXPECT_NEAR(theta_delta_max(net), std::numbers::pi / 2.0, 1e-12);
}

TEST(ThetaDeltaMax, SingleLine) {
  const Network net = parse_native(R"({"base_mva": 100,
    "buses": [{"id": 1, "vmin": 0.9, "vmax": 1.1}, {"id": 2, "vmin": 0.9, "vmax": 1.1}],
    "lines": [{"id": 1, "from_bus": 1, "to_bus": 2,
       "g_series": 0, "b_series": -10,
       "g_fr": 0, "b_fr": 0, "g_to": 0, "b_to": 0, "tap_re": 1, "tap_im": 0,
       "thermal": 1, "ang_min": -0.2, "ang_max": 0.2}],
    "generators": [], "loads": [{"id": 1, "bus": 2, "pd": 1, "qd": 0}], "shunts": []})");
  EXPECT_NEAR(theta_delta_max(net), 0.2, 1e-15);
}

void expect_bounds(const WBounds& b, double wr_lo, double wr_hi, double wi_lo, double wi_hi) {
  EXPECT_NEAR(b.wr_lo, wr_lo, 1e-5);
  EXPECT_NEAR(b.wr_hi, wr_hi, 1e-12);
  EXPECT_NEAR(b.wi_lo, wi_lo, 1e-12);
  EXPECT_NEAR(b.wi_hi, wi_hi, 1e-12);
}

TEST(WBounds, NonNegativeAngles) {
  expect_bounds(w_bounds(line_with_angles(0.0, 30 * kDeg), 0.9, 1.1, 0.9, 1.1), 0.70148, 1.21,
                0.0, 0.605);
}

TEST(WBounds, NonPositiveAngles) {
  expect_bounds(w_bounds(line_with_angles(-30 * kDeg, 0.0), 0.9, 1.1, 0.9, 1.1), 0.70148, 1.21,
                -0.605, 0.0);
}

TEST(WBounds, StraddlingZero) {
  expect_bounds(w_bounds(line_with_angles(-30 * kDeg, 30 * kDeg), 0.9, 1.1, 0.9, 1.1), 0.70148,
                1.21, -0.605, 0.605);
}

TEST(WBounds, RejectsRightAngles) {
  EXPECT_THROW(w_bounds(line_with_angles(-std::numbers::pi / 2, 0.1), 0.9, 1.1, 0.9, 1.1),
               FormulationError);
  EXPECT_THROW(w_bounds(line_with_angles(-0.1, 1.6), 0.9, 1.1, 0.9, 1.1), FormulationError);
}

TEST(WBounds, ContainsSampledProducts) {
  const Network net = ieee14();
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Plus a few asymmetric synthetic windows.
  std::vector<std::tuple<Line, double, double, double, double>> cases;
  for (std::size_t l = 0; l < net.num_lines(); ++l) {
    const auto& bi = net.buses()[net.from_index(l)];
    const auto& bj = net.buses()[net.to_index(l)];
    cases.emplace_back(net.lines()[l], bi.vmin, bi.vmax, bj.vmin, bj.vmax);
  }
  cases.emplace_back(line_with_angles(0.1, 0.9), 0.95, 1.05, 0.9, 1.1);
  cases.emplace_back(line_with_angles(-1.2, -0.3), 0.8, 1.2, 0.94, 1.06);
  cases.emplace_back(line_with_angles(-0.2, 1.4), 0.9, 1.0, 1.0, 1.1);
  for (const auto& [line, ilo, ihi, jlo, jhi] : cases) {
    const WBounds b = w_bounds(line, ilo, ihi, jlo, jhi);
    for (int k = 0; k < 10000; ++k) {
      const double vi = ilo + (ihi - ilo) * u(gen);
      const double vj = jlo + (jhi - jlo) * u(gen);
      const double th = line.ang_min + (line.ang_max - line.ang_min) * u(gen);
      const double wr = vi * vj * std::cos(th);
      const double wi = vi * vj * std::sin(th);
      ASSERT_GE(wr, b.wr_lo - 1e-12);
      ASSERT_LE(wr, b.wr_hi + 1e-12);
      ASSERT_GE(wi, b.wi_lo - 1e-12);
      ASSERT_LE(wi, b.wi_hi + 1e-12);
    }
  }
}

const char* kTwoLoadsTwoLines = R"({"base_mva": 100,
  "buses": [{"id": 1, "vmin": 0.9, "vmax": 1.1}, {"id": 2, "vmin": 0.9, "vmax": 1.1},
            {"id": 3, "vmin": 0.9, "vmax": 1.1}],
  "lines": [{"id": 1, "from_bus": 1, "to_bus": 2,
       "g_series": 0, "b_series": -10,
       "g_fr": 0, "b_fr": 0, "g_to": 0, "b_to": 0, "tap_re": 1, "tap_im": 0,
       "thermal": 2, "ang_min": -0.5, "ang_max": 0.5},
            {"id": 2, "from_bus": 2, "to_bus": 3,
       "g_series": 0, "b_series": -10,
       "g_fr": 0, "b_fr": 0, "g_to": 0, "b_to": 0, "tap_re": 1, "tap_im": 0,
       "thermal": 2, "ang_min": -0.5, "ang_max": 0.5}],
  "generators": [{"id": 1, "bus": 1, "pmin": 0, "pmax": 3, "qmin": -1, "qmax": 1}],
  "loads": [{"id": 1, "bus": 2, "pd": 1, "qd": 0}, {"id": 2, "bus": 3, "pd": 1, "qd": 0}],
  "shunts": []})";

TEST(BuildObjective, NormalizedCoefficients) {
  const Network net = parse_native(kTwoLoadsTwoLines);
  Scenario s;
  s.alpha = 0.5;
  s.risk = {{1, 3.0}, {2, 9.0}};
  const auto c = build_objective(net, s);
  ASSERT_EQ(c.load.size(), 2u);
  EXPECT_NEAR(c.load[0], 0.25, 1e-15);
  EXPECT_NEAR(c.load[1], 0.25, 1e-15);
  EXPECT_NEAR(c.line[0], -0.125, 1e-15);
  EXPECT_NEAR(c.line[1], -0.375, 1e-15);

  s.alpha = 0.0;
  for (double v : build_objective(net, s).line) EXPECT_EQ(v, 0.0);
  s.alpha = 1.0;
  for (double v : build_objective(net, s).load) EXPECT_EQ(v, 0.0);
}

TEST(BuildObjective, OnlyLoadsAndLinesAppear) {
  const Network net = parse_native(kTwoLoadsTwoLines);
  Scenario s;
  s.alpha = 0.5;
  s.risk = {{1, 3.0}, {2, 9.0}};
  for (auto f : {Formulation::kNF, Formulation::kDC, Formulation::kSOC}) {
    const auto m = build_model(f, net, s);
    std::set<int> allowed;
    for (std::size_t d = 0; d < 2; ++d) {
      allowed.insert(m.at({Component::kLoad, static_cast<int>(d), Role::kServed}));
      allowed.insert(m.at({Component::kLine, static_cast<int>(d), Role::kStatus}));
    }
    EXPECT_EQ(m.objective().size(), 4u);
    for (const auto& t : m.objective()) EXPECT_TRUE(allowed.count(t.var)) << to_string(f);
  }
}

TEST(BuildObjective, Errors) {
  const Network net = parse_native(kTwoLoadsTwoLines);
  Scenario s;
  s.alpha = 0.5;
  s.risk = {{1, 0.0}, {2, 0.0}};
  EXPECT_THROW(build_objective(net, s), FormulationError);
  s.risk = {{1, 1.0}};
  EXPECT_THROW(build_objective(net, s), FormulationError);
  // Zero total demand never reaches the builder.
  EXPECT_THROW(parse_native(R"({"base_mva": 100,
    "buses": [{"id": 1, "vmin": 0.9, "vmax": 1.1}, {"id": 2, "vmin": 0.9, "vmax": 1.1}],
    "lines": [{"id": 1, "from_bus": 1, "to_bus": 2,
       "g_series": 0, "b_series": -10,
       "g_fr": 0, "b_fr": 0, "g_to": 0, "b_to": 0, "tap_re": 1, "tap_im": 0,
       "thermal": 1, "ang_min": -0.5, "ang_max": 0.5}],
    "generators": [], "loads": [{"id": 1, "bus": 2, "pd": 0, "qd": 0}], "shunts": []})"),
               CaseError);
}

const char* kSingleBus = R"({"base_mva": 100,
  "buses": [{"id": 1, "vmin": 0.9, "vmax": 1.1}], "lines": [],
  "generators": [{"id": 1, "bus": 1, "pmin": 0, "pmax": 1, "qmin": -1, "qmax": 1}],
  "loads": [{"id": 1, "bus": 1, "pd": 1, "qd": 0}], "shunts": []})";

TEST(BuildNf, SingleBusServesAllLoad) {
  const Network net = parse_native(kSingleBus);
  Scenario s;
  s.alpha = 0.0;
  const auto m = build_nf(net, s);
  const auto r = solve_mip(m);
  ASSERT_EQ(r.status, MipStatus::kOptimal);
  EXPECT_NEAR(r.objective, 1.0, 1e-9);
  EXPECT_NEAR(r.incumbent[m.at({Component::kLoad, 0, Role::kServed})], 1.0, 1e-9);
  for (const auto& c : m.cones()) ADD_FAILURE() << "unexpected cone " << c.name;
}

TEST(BuildNf, FullRiskAversionShutsEverythingOff) {
  const Network net = ieee14();
  const auto m = build_nf(net, uniform_risk(net, 1.0));
  const auto r = solve_mip(m);
  ASSERT_EQ(r.status, MipStatus::kOptimal);
  EXPECT_NEAR(r.objective, 0.0, 1e-9);
  for (std::size_t l = 0; l < net.num_lines(); ++l) {
    EXPECT_LT(r.incumbent[m.at({Component::kLine, static_cast<int>(l), Role::kStatus})], 0.5);
  }
}

TEST(BuildNf, RowCountMatchesClosedForm) {
  const Network two = parse_native(R"({"base_mva": 100,
    "buses": [{"id": 1, "vmin": 0.9, "vmax": 1.1}, {"id": 2, "vmin": 0.9, "vmax": 1.1}],
    "lines": [{"id": 1, "from_bus": 1, "to_bus": 2,
       "g_series": 0, "b_series": -10,
       "g_fr": 0, "b_fr": 0, "g_to": 0, "b_to": 0, "tap_re": 1, "tap_im": 0,
       "thermal": 1, "ang_min": -0.5, "ang_max": 0.5}],
    "generators": [{"id": 1, "bus": 1, "pmin": 0, "pmax": 2, "qmin": -1, "qmax": 1}],
    "loads": [{"id": 1, "bus": 2, "pd": 1, "qd": 0}], "shunts": []})");
  // energization 2 + 1 + 1, generator 1, thermal 2, balance 2.
  EXPECT_EQ(nf_row_count(two), 9u);
  EXPECT_EQ(build_nf(two, uniform_risk(two, 0.3)).rows().size(), 9u);
  for (const char* name : {"pglib_opf_case14_ieee.m", "case24_ieee_rts.m", "case39.m"}) {
    const Network net = load_case_file(kCaseDir + "/" + name);
    EXPECT_EQ(build_nf(net, uniform_risk(net, 0.3)).rows().size(), nf_row_count(net)) << name;
  }
}

TEST(BuildNf, NoAngleOrVoltageVariables) {
  const Network net = ieee14();
  const auto m = build_nf(net, uniform_risk(net, 0.5));
  for (const auto& [key, var] : m.var_map()) {
    EXPECT_NE(key.role, Role::kAngle);
    EXPECT_NE(key.role, Role::kW);
    EXPECT_NE(key.role, Role::kQg);
  }
  EXPECT_TRUE(m.cones().empty());
}

// Largest violation among rows whose name starts with `prefix`.
double prefix_violation(const MixedIntegerModel& m, const std::string& prefix,
                        const std::vector<double>& x) {
  double v = 0.0;
  for (const auto& r : m.rows()) {
    if (r.name.rfind(prefix, 0) == 0) v = std::max(v, r.violation(x));
  }
  return v;
}

const char* kTwoBus = R"({"base_mva": 100,
  "buses": [{"id": 1, "vmin": 0.9, "vmax": 1.1}, {"id": 2, "vmin": 0.95, "vmax": 1.05}],
  "lines": [{"id": 1, "from_bus": 1, "to_bus": 2,
       "g_series": 0, "b_series": -10,
       "g_fr": 0, "b_fr": 0, "g_to": 0, "b_to": 0, "tap_re": 1, "tap_im": 0,
       "thermal": 2, "ang_min": -0.5, "ang_max": 0.5}],
  "generators": [{"id": 1, "bus": 1, "pmin": 0, "pmax": 2, "qmin": -1, "qmax": 1}],
  "loads": [{"id": 1, "bus": 2, "pd": 1, "qd": 0}], "shunts": []})";

TEST(BuildDc, EnergizedFlowFollowsAngles) {
  const Network net = parse_native(kTwoBus);
  const auto m = build_dc(net, uniform_risk(net, 0.2));
  std::vector<double> x(m.num_variables(), 0.0);
  const int p = m.at({Component::kLine, 0, Role::kPFrom});
  x[m.at({Component::kLine, 0, Role::kStatus})] = 1.0;
  x[m.at({Component::kBus, 0, Role::kAngle})] = 0.0;
  x[m.at({Component::kBus, 1, Role::kAngle})] = -0.1;
  x[p] = 1.0;
  EXPECT_LE(prefix_violation(m, "dc_flow", x), 1e-12);
  EXPECT_LE(prefix_violation(m, "angle", x), 1e-12);
  for (double off : {-0.01, 0.01}) {
    x[p] = 1.0 + off;
    EXPECT_GT(prefix_violation(m, "dc_flow", x), 0.005);
  }
}

TEST(BuildDc, OpenLineCarriesNothing) {
  const Network net = parse_native(kTwoBus);
  const auto m = build_dc(net, uniform_risk(net, 0.2));
  std::vector<double> x(m.num_variables(), 0.0);
  const int p = m.at({Component::kLine, 0, Role::kPFrom});
  const double big_m = theta_delta_max(net);
  // Any spread the angle bounds allow is accepted once the line is open.
  x[m.at({Component::kBus, 1, Role::kAngle})] = big_m;
  EXPECT_LE(prefix_violation(m, "dc_flow", x), 1e-12);
  EXPECT_LE(prefix_violation(m, "angle", x), 1e-12);
  x[p] = 0.01;
  EXPECT_GT(prefix_violation(m, "thermal", x), 0.005);
}

TEST(BuildDc, ReferenceAngleIsPinned) {
  const Network net = ieee14();
  const auto m = build_dc(net, uniform_risk(net, 0.2));
  const auto& v = m.variables()[m.at({Component::kBus, 0, Role::kAngle})];
  EXPECT_EQ(v.lo, 0.0);
  EXPECT_EQ(v.hi, 0.0);
  const double big_m = theta_delta_max(net);
  for (std::size_t i = 1; i < net.num_buses(); ++i) {
    const auto& t = m.variables()[m.at({Component::kBus, static_cast<int>(i), Role::kAngle})];
    EXPECT_EQ(t.lo, -big_m);
    EXPECT_EQ(t.hi, big_m);
  }
}

// Triangle with one generator and two loads. Every line state is checked by
// solving the DC power flow directly over a fine grid of served fractions.
const char* kTriangle = R"({"base_mva": 100,
  "buses": [{"id": 1, "vmin": 0.9, "vmax": 1.1}, {"id": 2, "vmin": 0.9, "vmax": 1.1},
            {"id": 3, "vmin": 0.9, "vmax": 1.1}],
  "lines": [{"id": 1, "from_bus": 1, "to_bus": 2,
       "g_series": 0, "b_series": -10,
       "g_fr": 0, "b_fr": 0, "g_to": 0, "b_to": 0, "tap_re": 1, "tap_im": 0,
       "thermal": 0.6, "ang_min": -0.5, "ang_max": 0.5},
            {"id": 2, "from_bus": 2, "to_bus": 3,
       "g_series": 0, "b_series": -8,
       "g_fr": 0, "b_fr": 0, "g_to": 0, "b_to": 0, "tap_re": 1, "tap_im": 0,
       "thermal": 0.5, "ang_min": -0.5, "ang_max": 0.5},
            {"id": 3, "from_bus": 1, "to_bus": 3,
       "g_series": 0, "b_series": -5,
       "g_fr": 0, "b_fr": 0, "g_to": 0, "b_to": 0, "tap_re": 1, "tap_im": 0,
       "thermal": 0.9, "ang_min": -0.5, "ang_max": 0.5}],
  "generators": [{"id": 1, "bus": 1, "pmin": 0, "pmax": 3, "qmin": -1, "qmax": 1}],
  "loads": [{"id": 1, "bus": 2, "pd": 1.0, "qd": 0}, {"id": 2, "bus": 3, "pd": 0.8, "qd": 0}],
  "shunts": []})";

struct MaskResult {
  bool feasible = false;
  double best = -kInf;
};

MaskResult enumerate_mask(const Network& net, const Scenario& scn, int mask, double big_m) {
  const auto obj = build_objective(net, scn);
  const auto& lines = net.lines();
  // Buses reachable from the generator bus (position 0) over closed lines.
  std::vector<bool> live(3, false);
  live[0] = true;
  for (int pass = 0; pass < 3; ++pass) {
    for (int l = 0; l < 3; ++l) {
      if (!((mask >> l) & 1)) continue;
      const auto i = net.from_index(l), j = net.to_index(l);
      if (live[i] || live[j]) live[i] = live[j] = true;
    }
  }
  double risk_term = 0.0;
  for (int l = 0; l < 3; ++l) risk_term += ((mask >> l) & 1) ? obj.line[l] : 0.0;

  MaskResult out;
  const int steps = 500;
  for (int a = 0; a <= steps; ++a) {
    for (int b = 0; b <= steps; ++b) {
      const double x2 = live[1] ? a / double(steps) : 0.0;
      const double x3 = live[2] ? b / double(steps) : 0.0;
      if ((!live[1] && a > 0) || (!live[2] && b > 0)) continue;
      // Nodal susceptance matrix over live buses 1 and 2 with bus 0 as reference.
      Eigen::Matrix2d bm = Eigen::Matrix2d::Zero();
      for (int l = 0; l < 3; ++l) {
        if (!((mask >> l) & 1)) continue;
        const int i = static_cast<int>(net.from_index(l));
        const int j = static_cast<int>(net.to_index(l));
        const double s = -lines[l].b_series;
        if (i > 0) bm(i - 1, i - 1) += s;
        if (j > 0) bm(j - 1, j - 1) += s;
        if (i > 0 && j > 0) {
          bm(i - 1, j - 1) -= s;
          bm(j - 1, i - 1) -= s;
        }
      }
      Eigen::Vector2d inj(-net.loads()[0].pd * x2, -net.loads()[1].pd * x3);
      Eigen::Vector3d theta = Eigen::Vector3d::Zero();
      for (int k = 0; k < 2; ++k) {
        if (!live[k + 1]) {
          bm.row(k).setZero();
          bm.col(k).setZero();
          bm(k, k) = 1.0;
          inj(k) = 0.0;
        }
      }
      const Eigen::Vector2d t = bm.ldlt().solve(inj);
      theta(1) = t(0);
      theta(2) = t(1);
      bool ok = -inj.sum() <= net.generators()[0].pmax + 1e-12;
      for (int l = 0; l < 3 && ok; ++l) {
        if (!((mask >> l) & 1)) continue;
        const double d = theta(net.from_index(l)) - theta(net.to_index(l));
        const double flow = -lines[l].b_series * d;
        ok = std::abs(flow) <= lines[l].thermal + 1e-12 && d >= lines[l].ang_min - 1e-12 &&
             d <= lines[l].ang_max + 1e-12;
      }
      if (!ok) continue;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) EXPECT_LE(std::abs(theta(i) - theta(j)), big_m + 1e-12);
      }
      out.feasible = true;
      out.best = std::max(out.best, obj.load[0] * x2 + obj.load[1] * x3 + risk_term);
    }
  }
  return out;
}

TEST(BuildDc, MatchesLineStateEnumeration) {
  const Network net = parse_native(kTriangle);
  Scenario s;
  s.alpha = 0.5;
  s.risk = {{1, 5.0}, {2, 1.0}, {3, 1.0}};
  const double big_m = theta_delta_max(net);
  std::vector<double> value(8);
  int best_mask = 0;
  for (int mask = 0; mask < 8; ++mask) {
    const auto r = enumerate_mask(net, s, mask, big_m);
    ASSERT_TRUE(r.feasible) << mask;
    value[mask] = r.best;
    if (r.best > value[best_mask]) best_mask = mask;
  }
  double runner_up = -kInf;
  for (int mask = 0; mask < 8; ++mask) {
    if (mask != best_mask) runner_up = std::max(runner_up, value[mask]);
  }
  ASSERT_GT(value[best_mask] - runner_up, 0.01) << "oracle optimum is not separated";

  const auto m = build_dc(net, s);
  SolveOptions opts;
  opts.rel_gap_tol = 1e-9;
  const auto r = solve_mip(m, opts);
  ASSERT_EQ(r.status, MipStatus::kOptimal);
  // Grid resolution bounds the oracle's shortfall.
  EXPECT_GE(r.objective, value[best_mask] - 1e-9);
  EXPECT_LE(r.objective, value[best_mask] + 0.005);
  int mask = 0;
  for (int l = 0; l < 3; ++l) {
    if (r.incumbent[m.at({Component::kLine, l, Role::kStatus})] > 0.5) mask |= 1 << l;
  }
  EXPECT_EQ(mask, best_mask);
}

TEST(Relaxation, NetworkFlowBoundsDc) {
  const Network net = ieee14();
  const auto scns = generate_scenarios(net, 3, 1.0, AlphaMode::uniform(), 31);
  for (const auto& s : scns) {
    SolveOptions opts;
    opts.rel_gap_tol = 1e-7;
    const auto nf = solve_mip(build_nf(net, s), opts);
    const auto dc = solve_mip(build_dc(net, s), opts);
    ASSERT_EQ(nf.status, MipStatus::kOptimal);
    ASSERT_EQ(dc.status, MipStatus::kOptimal);
    EXPECT_GE(nf.objective, dc.objective - 1e-6) << "scenario " << s.id;
  }
}

TEST(BuildSoc, ClosedLineTiesEndVoltages) {
  const Network net = parse_native(kTwoBus);
  const auto m = build_soc(net, uniform_risk(net, 0.2));
  std::vector<double> x(m.num_variables(), 0.0);
  x[m.at({Component::kLine, 0, Role::kStatus})] = 1.0;
  x[m.at({Component::kBus, 0, Role::kStatus})] = 1.0;
  x[m.at({Component::kBus, 1, Role::kStatus})] = 1.0;
  x[m.at({Component::kBus, 0, Role::kW})] = 1.02;
  x[m.at({Component::kBus, 1, Role::kW})] = 0.97;
  const int wfr = m.at({Component::kLine, 0, Role::kWFrom});
  const int wto = m.at({Component::kLine, 0, Role::kWTo});
  x[wfr] = 1.02;
  x[wto] = 0.97;
  EXPECT_LE(prefix_violation(m, "w_fr_link", x), 1e-12);
  EXPECT_LE(prefix_violation(m, "w_to_link", x), 1e-12);
  for (double off : {-0.01, 0.01}) {
    x[wfr] = 1.02 + off;
    EXPECT_GT(prefix_violation(m, "w_fr_link", x), 0.005);
  }
}

// Interval a variable is confined to by its bounds and by two-term rows
// pairing it with a fixed variable.
std::pair<double, double> implied_interval(const MixedIntegerModel& m, int var,
                                           const std::map<int, double>& fixed) {
  double lo = m.variables()[var].lo;
  double hi = m.variables()[var].hi;
  for (const auto& r : m.rows()) {
    double a = 0.0, rest = 0.0;
    bool usable = true;
    for (const auto& t : r.terms) {
      if (t.var == var) {
        a += t.coef;
      } else if (auto it = fixed.find(t.var); it != fixed.end()) {
        rest += t.coef * it->second;
      } else {
        usable = false;
      }
    }
    if (!usable || a == 0.0) continue;
    double rlo = (r.lo - rest) / a, rhi = (r.hi - rest) / a;
    if (a < 0.0) std::swap(rlo, rhi);
    lo = std::max(lo, rlo);
    hi = std::min(hi, rhi);
  }
  return {lo, hi};
}

TEST(BuildSoc, OpenLinePinsLiftedVariables) {
  const Network net = ieee14();
  const auto m = build_soc(net, uniform_risk(net, 0.4));
  for (std::size_t l = 0; l < net.num_lines(); ++l) {
    const int li = static_cast<int>(l);
    const std::map<int, double> fixed = {{m.at({Component::kLine, li, Role::kStatus}), 0.0}};
    for (Role role : {Role::kWFrom, Role::kWTo, Role::kWReal, Role::kWImag}) {
      const auto [lo, hi] = implied_interval(m, m.at({Component::kLine, li, role}), fixed);
      EXPECT_EQ(lo, 0.0) << "line " << l;
      EXPECT_EQ(hi, 0.0) << "line " << l;
    }
  }
}

TEST(BuildSoc, ConeCountAndStructure) {
  const Network net = ieee14();
  const auto m = build_soc(net, uniform_risk(net, 0.4));
  EXPECT_EQ(m.cones().size(), 5 * net.num_lines());
  EXPECT_FALSE(m.find({Component::kBus, 0, Role::kAngle}).has_value());
}

TEST(BuildSoc, FlatStartPointIsFeasible) {
  // Everything energized at unit voltage and zero angle, no load served.
  const Network net = parse_native(kTwoBus);
  const auto m = build_soc(net, uniform_risk(net, 0.2));
  std::vector<double> x(m.num_variables(), 0.0);
  for (const auto& [key, var] : m.var_map()) {
    if (key.role == Role::kStatus) x[var] = 1.0;
    if (key.role == Role::kW || key.role == Role::kWFrom || key.role == Role::kWTo ||
        key.role == Role::kWReal) {
      x[var] = 1.0;
    }
  }
  // Charging is zero here, so flows vanish at a flat profile.
  for (const auto& r : m.rows()) EXPECT_LE(r.violation(x), 1e-12) << r.name;
  for (const auto& c : m.cones()) EXPECT_LE(c.violation(x), 1e-12) << c.name;
}

TEST(Models, DeterministicConstruction) {
  const Network net = ieee14();
  const auto s = generate_scenarios(net, 1, 1.0, AlphaMode::uniform(), 4)[0];
  for (auto f : {Formulation::kNF, Formulation::kDC, Formulation::kSOC}) {
    const auto a = build_model(f, net, s);
    const auto b = build_model(f, net, s);
    ASSERT_EQ(a.num_variables(), b.num_variables());
    for (std::size_t v = 0; v < a.num_variables(); ++v) {
      EXPECT_EQ(a.variables()[v].name, b.variables()[v].name);
    }
    EXPECT_EQ(a.rows(), b.rows());
    EXPECT_EQ(a.cones(), b.cones());
    EXPECT_EQ(a.objective(), b.objective());
  }
}

TEST(Models, RowsReferenceValidVariables) {
  const Network net = ieee14();
  const auto s = uniform_risk(net, 0.5);
  for (auto f : {Formulation::kNF, Formulation::kDC, Formulation::kSOC}) {
    const auto m = build_model(f, net, s);
    const int n = static_cast<int>(m.num_variables());
    for (const auto& r : m.rows()) {
      for (const auto& t : r.terms) {
        EXPECT_GE(t.var, 0);
        EXPECT_LT(t.var, n);
        EXPECT_TRUE(std::isfinite(t.coef)) << r.name;
      }
    }
    for (const auto& t : m.objective()) EXPECT_TRUE(std::isfinite(t.coef));
  }
}

TEST(ParseFormulation, Names) {
  EXPECT_EQ(parse_formulation("nf"), Formulation::kNF);
  EXPECT_EQ(parse_formulation("dc"), Formulation::kDC);
  EXPECT_EQ(parse_formulation("soc"), Formulation::kSOC);
  EXPECT_THROW(parse_formulation("ac"), FormulationError);
}

TEST(ExtractSolution, RecomputesObjectiveFromRoundedValues) {
  const Network net = parse_native(kTwoLoadsTwoLines);
  Scenario s;
  s.alpha = 0.5;
  s.risk = {{1, 3.0}, {2, 9.0}};
  const auto m = build_nf(net, s);
  const auto r = solve_mip(m);
  ASSERT_EQ(r.status, MipStatus::kOptimal);
  const auto sol = extract_solution(net, s, m, r.incumbent);
  EXPECT_NEAR(sol.objective, r.objective, 1e-7);
  EXPECT_NEAR(sol.objective,
              0.5 * sol.load_served_frac - 0.5 * sol.risk_served_frac, 1e-12);
}

}  // namespace
}  // namespace ops
