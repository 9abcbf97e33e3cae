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

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ops {

std::string_view to_string(Formulation f) {
  switch (f) {
    case Formulation::kNF: return "nf";
    case Formulation::kDC: return "dc";
    case Formulation::kSOC: return "soc";
  }
  return "?";
}

Formulation parse_formulation(std::string_view name) {
  if (name == "nf") return Formulation::kNF;
  if (name == "dc") return Formulation::kDC;
  if (name == "soc") return Formulation::kSOC;
  throw FormulationError("unknown formulation '" + std::string(name) + "'");
}

double theta_delta_max(const Network& net) {
  double total = 0.0;
  for (const auto& line : net.lines()) {
    total += std::max(std::abs(line.ang_min), std::abs(line.ang_max));
  }
  return total;
}

WBounds w_bounds(const Line& line, double vi_lo, double vi_hi, double vj_lo, double vj_hi) {
  constexpr double kHalfPi = std::numbers::pi / 2.0;
  const double tmin = line.ang_min;
  const double tmax = line.ang_max;
  if (!(tmin > -kHalfPi && tmax < kHalfPi && tmin <= tmax)) {
    throw FormulationError("line " + std::to_string(line.id) +
                           ": angle limits must lie inside (-pi/2, pi/2)");
  }
  if (!(vi_lo > 0.0 && vj_lo > 0.0 && vi_lo <= vi_hi && vj_lo <= vj_hi)) {
    throw FormulationError("line " + std::to_string(line.id) + ": invalid voltage bounds");
  }
  const double hh = vi_hi * vj_hi;
  const double ll = vi_lo * vj_lo;
  WBounds b;
  if (tmin >= 0.0) {
    b.wr_hi = hh * std::cos(tmin);
    b.wr_lo = ll * std::cos(tmax);
    b.wi_hi = hh * std::sin(tmax);
    b.wi_lo = ll * std::sin(tmin);
  } else if (tmax <= 0.0) {
    b.wr_hi = hh * std::cos(tmax);
    b.wr_lo = ll * std::cos(tmin);
    b.wi_hi = ll * std::sin(tmax);
    b.wi_lo = hh * std::sin(tmin);
  } else {
    b.wr_hi = hh;
    b.wr_lo = ll * std::min(std::cos(tmin), std::cos(tmax));
    b.wi_hi = hh * std::sin(tmax);
    b.wi_lo = hh * std::sin(tmin);
  }
  return b;
}

ObjectiveCoefficients build_objective(const Network& net, const Scenario& scn) {
  const double ptot = net.total_demand();
  if (!(ptot > 0.0)) throw FormulationError("total demand must be positive");
  const double rtot = scn.total_risk();
  // With no lines the risk term is empty rather than undefined.
  if (!(rtot > 0.0) && net.num_lines() > 0) throw FormulationError("total risk must be positive");
  ObjectiveCoefficients c;
  for (const auto& load : net.loads()) {
    c.load.push_back((1.0 - scn.alpha) * load.weight * load.pd / ptot);
  }
  for (const auto& line : net.lines()) {
    auto it = scn.risk.find(line.id);
    if (it == scn.risk.end()) {
      throw FormulationError("scenario has no risk for line " + std::to_string(line.id));
    }
    c.line.push_back(-scn.alpha * it->second / rtot);
  }
  return c;
}

namespace {

std::string tag(const char* base, int id) { return std::string(base) + "[" + std::to_string(id) + "]"; }

LinearRow row(std::vector<Term> terms, double lo, double hi, std::string name) {
  LinearRow r;
  r.terms = std::move(terms);
  r.lo = lo;
  r.hi = hi;
  r.name = std::move(name);
  return r;
}

// Variable positions shared by every formulation.
struct Common {
  std::vector<int> z_bus, z_line, z_gen, x_load, x_shunt, pg;
};

// Component status and served-fraction variables, energization rows,
// active generation limits and the objective.
Common add_common(MixedIntegerModel& m, const Network& net, const Scenario& scn) {
  const auto obj = build_objective(net, scn);
  Common c;
  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    const int id = net.buses()[i].id;
    c.z_bus.push_back(m.add_variable({Component::kBus, static_cast<int>(i), Role::kStatus},
                                     tag("z_bus", id), 0.0, 1.0, true));
  }
  for (std::size_t l = 0; l < net.num_lines(); ++l) {
    const int id = net.lines()[l].id;
    c.z_line.push_back(m.add_variable({Component::kLine, static_cast<int>(l), Role::kStatus},
                                      tag("z_line", id), 0.0, 1.0, true));
  }
  for (std::size_t g = 0; g < net.generators().size(); ++g) {
    const int id = net.generators()[g].id;
    c.z_gen.push_back(m.add_variable({Component::kGenerator, static_cast<int>(g), Role::kStatus},
                                     tag("z_gen", id), 0.0, 1.0, true));
  }
  for (std::size_t d = 0; d < net.loads().size(); ++d) {
    const int id = net.loads()[d].id;
    c.x_load.push_back(m.add_variable({Component::kLoad, static_cast<int>(d), Role::kServed},
                                      tag("x_load", id), 0.0, 1.0));
  }
  for (std::size_t s = 0; s < net.shunts().size(); ++s) {
    const int id = net.shunts()[s].id;
    c.x_shunt.push_back(m.add_variable({Component::kShunt, static_cast<int>(s), Role::kServed},
                                       tag("x_shunt", id), 0.0, 1.0));
  }
  for (std::size_t g = 0; g < net.generators().size(); ++g) {
    const auto& gen = net.generators()[g];
    c.pg.push_back(m.add_variable({Component::kGenerator, static_cast<int>(g), Role::kPg},
                                  tag("pg", gen.id), std::min(gen.pmin, 0.0),
                                  std::max(gen.pmax, 0.0)));
  }

  for (std::size_t l = 0; l < net.num_lines(); ++l) {
    const int id = net.lines()[l].id;
    const int zi = c.z_bus[net.from_index(l)];
    const int zj = c.z_bus[net.to_index(l)];
    m.add_row(row({{c.z_line[l], 1.0}, {zi, -1.0}}, -kInf, 0.0, tag("line_on_from", id)));
    m.add_row(row({{c.z_line[l], 1.0}, {zj, -1.0}}, -kInf, 0.0, tag("line_on_to", id)));
  }
  for (std::size_t g = 0; g < net.generators().size(); ++g) {
    const int zi = c.z_bus[net.gen_bus_index(g)];
    m.add_row(row({{c.z_gen[g], 1.0}, {zi, -1.0}}, -kInf, 0.0,
                  tag("gen_on", net.generators()[g].id)));
  }
  for (std::size_t d = 0; d < net.loads().size(); ++d) {
    const int zi = c.z_bus[net.load_bus_index(d)];
    m.add_row(row({{c.x_load[d], 1.0}, {zi, -1.0}}, -kInf, 0.0, tag("load_on", net.loads()[d].id)));
  }
  for (std::size_t s = 0; s < net.shunts().size(); ++s) {
    const int zi = c.z_bus[net.shunt_bus_index(s)];
    m.add_row(row({{c.x_shunt[s], 1.0}, {zi, -1.0}}, -kInf, 0.0,
                  tag("shunt_on", net.shunts()[s].id)));
  }
  for (std::size_t g = 0; g < net.generators().size(); ++g) {
    const auto& gen = net.generators()[g];
    m.add_row(row({{c.pg[g], 1.0}, {c.z_gen[g], -gen.pmax}}, -kInf, 0.0, tag("pg_max", gen.id)));
    if (gen.pmin != 0.0) {
      m.add_row(row({{c.pg[g], 1.0}, {c.z_gen[g], -gen.pmin}}, 0.0, kInf, tag("pg_min", gen.id)));
    }
  }

  for (std::size_t d = 0; d < obj.load.size(); ++d) {
    if (obj.load[d] != 0.0) m.add_objective(c.x_load[d], obj.load[d]);
  }
  for (std::size_t l = 0; l < obj.line.size(); ++l) {
    if (obj.line[l] != 0.0) m.add_objective(c.z_line[l], obj.line[l]);
  }
  return c;
}

// Lossless active flow model shared by NF and DC: one flow per line with
// thermal rows and nodal balance. Returns the flow variable positions.
std::vector<int> add_lossless_flows(MixedIntegerModel& m, const Network& net, const Common& c) {
  std::vector<int> p;
  for (std::size_t l = 0; l < net.num_lines(); ++l) {
    const auto& line = net.lines()[l];
    p.push_back(m.add_variable({Component::kLine, static_cast<int>(l), Role::kPFrom},
                               tag("p_line", line.id), -line.thermal, line.thermal));
  }
  for (std::size_t l = 0; l < net.num_lines(); ++l) {
    const auto& line = net.lines()[l];
    m.add_row(row({{p[l], 1.0}, {c.z_line[l], -line.thermal}}, -kInf, 0.0,
                  tag("thermal_hi", line.id)));
    m.add_row(row({{p[l], 1.0}, {c.z_line[l], line.thermal}}, 0.0, kInf,
                  tag("thermal_lo", line.id)));
  }
  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    std::vector<Term> t;
    for (auto g : net.gens_at(i)) t.push_back({c.pg[g], 1.0});
    for (auto l : net.lines_at(i)) {
      t.push_back({p[l], net.from_index(l) == i ? -1.0 : 1.0});
    }
    for (auto d : net.loads_at(i)) t.push_back({c.x_load[d], -net.loads()[d].pd});
    for (auto s : net.shunts_at(i)) t.push_back({c.x_shunt[s], -net.shunts()[s].gs});
    m.add_row(row(std::move(t), 0.0, 0.0, tag("balance", net.buses()[i].id)));
  }
  return p;
}

}  // namespace

std::size_t nf_row_count(const Network& net) {
  std::size_t pmin_rows = 0;
  for (const auto& g : net.generators()) pmin_rows += g.pmin != 0.0 ? 1 : 0;
  return 2 * net.num_lines() + net.generators().size() + net.loads().size() +
         net.shunts().size() + net.generators().size() + pmin_rows + 2 * net.num_lines() +
         net.num_buses();
}

MixedIntegerModel build_nf(const Network& net, const Scenario& scn) {
  MixedIntegerModel m;
  const Common c = add_common(m, net, scn);
  add_lossless_flows(m, net, c);
  return m;
}

MixedIntegerModel build_dc(const Network& net, const Scenario& scn) {
  MixedIntegerModel m;
  const Common c = add_common(m, net, scn);
  const std::vector<int> p = add_lossless_flows(m, net, c);
  const double big_m = theta_delta_max(net);

  // Reference angle at the lowest bus id.
  std::size_t ref = 0;
  for (std::size_t i = 1; i < net.num_buses(); ++i) {
    if (net.buses()[i].id < net.buses()[ref].id) ref = i;
  }
  std::vector<int> theta;
  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    const double lim = i == ref ? 0.0 : big_m;
    theta.push_back(m.add_variable({Component::kBus, static_cast<int>(i), Role::kAngle},
                                   tag("theta", net.buses()[i].id), -lim, lim));
  }

  for (std::size_t l = 0; l < net.num_lines(); ++l) {
    const auto& line = net.lines()[l];
    const int ti = theta[net.from_index(l)];
    const int tj = theta[net.to_index(l)];
    const int z = c.z_line[l];
    // P = -b (theta_i - theta_j) when energized, relaxed by |b| M (1 - z).
    const double b = line.b_series / line.tap_sq();
    const double mb = std::abs(b) * big_m;
    m.add_row(row({{p[l], 1.0}, {ti, b}, {tj, -b}, {z, mb}}, -kInf, mb, tag("dc_flow_hi", line.id)));
    m.add_row(row({{p[l], 1.0}, {ti, b}, {tj, -b}, {z, -mb}}, -mb, kInf, tag("dc_flow_lo", line.id)));
    m.add_row(row({{ti, 1.0}, {tj, -1.0}, {z, big_m}}, -kInf, line.ang_max + big_m,
                  tag("angle_hi", line.id)));
    m.add_row(row({{ti, 1.0}, {tj, -1.0}, {z, -big_m}}, line.ang_min - big_m, kInf,
                  tag("angle_lo", line.id)));
  }
  return m;
}

MixedIntegerModel build_soc(const Network& net, const Scenario& scn) {
  MixedIntegerModel m;
  const Common c = add_common(m, net, scn);
  const auto& buses = net.buses();

  std::vector<int> qg;
  for (std::size_t g = 0; g < net.generators().size(); ++g) {
    const auto& gen = net.generators()[g];
    qg.push_back(m.add_variable({Component::kGenerator, static_cast<int>(g), Role::kQg},
                                tag("qg", gen.id), std::min(gen.qmin, 0.0),
                                std::max(gen.qmax, 0.0)));
    m.add_row(row({{qg[g], 1.0}, {c.z_gen[g], -gen.qmax}}, -kInf, 0.0, tag("qg_max", gen.id)));
    m.add_row(row({{qg[g], 1.0}, {c.z_gen[g], -gen.qmin}}, 0.0, kInf, tag("qg_min", gen.id)));
  }

  std::vector<int> w;
  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    const auto& bus = buses[i];
    const double hi2 = bus.vmax * bus.vmax;
    const double lo2 = bus.vmin * bus.vmin;
    w.push_back(m.add_variable({Component::kBus, static_cast<int>(i), Role::kW},
                               tag("w", bus.id), 0.0, hi2));
    m.add_row(row({{w[i], 1.0}, {c.z_bus[i], -hi2}}, -kInf, 0.0, tag("w_hi", bus.id)));
    m.add_row(row({{w[i], 1.0}, {c.z_bus[i], -lo2}}, 0.0, kInf, tag("w_lo", bus.id)));
  }

  const std::size_t nl = net.num_lines();
  std::vector<int> wfr(nl), wto(nl), wr(nl), wi(nl), pfr(nl), pto(nl), qfr(nl), qto(nl);
  for (std::size_t l = 0; l < nl; ++l) {
    const auto& line = net.lines()[l];
    const int li = static_cast<int>(l);
    const auto& bi = buses[net.from_index(l)];
    const auto& bj = buses[net.to_index(l)];
    const WBounds wb = w_bounds(line, bi.vmin, bi.vmax, bj.vmin, bj.vmax);
    wfr[l] = m.add_variable({Component::kLine, li, Role::kWFrom}, tag("w_fr", line.id), 0.0,
                            bi.vmax * bi.vmax);
    wto[l] = m.add_variable({Component::kLine, li, Role::kWTo}, tag("w_to", line.id), 0.0,
                            bj.vmax * bj.vmax);
    wr[l] = m.add_variable({Component::kLine, li, Role::kWReal}, tag("wr", line.id),
                           std::min(wb.wr_lo, 0.0), std::max(wb.wr_hi, 0.0));
    wi[l] = m.add_variable({Component::kLine, li, Role::kWImag}, tag("wi", line.id),
                           std::min(wb.wi_lo, 0.0), std::max(wb.wi_hi, 0.0));
    const double t = line.thermal;
    pfr[l] = m.add_variable({Component::kLine, li, Role::kPFrom}, tag("p_fr", line.id), -t, t);
    pto[l] = m.add_variable({Component::kLine, li, Role::kPTo}, tag("p_to", line.id), -t, t);
    qfr[l] = m.add_variable({Component::kLine, li, Role::kQFrom}, tag("q_fr", line.id), -t, t);
    qto[l] = m.add_variable({Component::kLine, li, Role::kQTo}, tag("q_to", line.id), -t, t);
  }

  for (std::size_t l = 0; l < nl; ++l) {
    const auto& line = net.lines()[l];
    const std::size_t i = net.from_index(l);
    const std::size_t j = net.to_index(l);
    const double vi_hi2 = buses[i].vmax * buses[i].vmax;
    const double vi_lo2 = buses[i].vmin * buses[i].vmin;
    const double vj_hi2 = buses[j].vmax * buses[j].vmax;
    const double vj_lo2 = buses[j].vmin * buses[j].vmin;
    const int z = c.z_line[l];
    const WBounds wb = w_bounds(line, buses[i].vmin, buses[i].vmax, buses[j].vmin, buses[j].vmax);

    m.add_row(row({{wfr[l], 1.0}, {z, -vi_hi2}}, -kInf, 0.0, tag("w_fr_hi", line.id)));
    m.add_row(row({{wfr[l], 1.0}, {z, -vi_lo2}}, 0.0, kInf, tag("w_fr_lo", line.id)));
    m.add_row(row({{wto[l], 1.0}, {z, -vj_hi2}}, -kInf, 0.0, tag("w_to_hi", line.id)));
    m.add_row(row({{wto[l], 1.0}, {z, -vj_lo2}}, 0.0, kInf, tag("w_to_lo", line.id)));

    m.add_row(row({{w[i], 1.0}, {wfr[l], -1.0}}, 0.0, kInf, tag("w_fr_link_hi", line.id)));
    m.add_row(row({{wfr[l], 1.0}, {w[i], -1.0}, {z, -vi_hi2}}, -vi_hi2, kInf,
                  tag("w_fr_link_lo", line.id)));
    m.add_row(row({{w[j], 1.0}, {wto[l], -1.0}}, 0.0, kInf, tag("w_to_link_hi", line.id)));
    m.add_row(row({{wto[l], 1.0}, {w[j], -1.0}, {z, -vj_hi2}}, -vj_hi2, kInf,
                  tag("w_to_link_lo", line.id)));

    m.add_row(row({{wr[l], 1.0}, {z, -wb.wr_hi}}, -kInf, 0.0, tag("wr_hi", line.id)));
    m.add_row(row({{wr[l], 1.0}, {z, -wb.wr_lo}}, 0.0, kInf, tag("wr_lo", line.id)));
    m.add_row(row({{wi[l], 1.0}, {z, -wb.wi_hi}}, -kInf, 0.0, tag("wi_hi", line.id)));
    m.add_row(row({{wi[l], 1.0}, {z, -wb.wi_lo}}, 0.0, kInf, tag("wi_lo", line.id)));

    m.add_row(row({{wi[l], 1.0}, {wr[l], -std::tan(line.ang_min)}}, 0.0, kInf,
                  tag("tan_lo", line.id)));
    m.add_row(row({{wi[l], 1.0}, {wr[l], -std::tan(line.ang_max)}}, -kInf, 0.0,
                  tag("tan_hi", line.id)));

    // Branch flows in the lifted variables; the to-side angle term uses
    // sin(theta_j - theta_i) = -W^I.
    const double g = line.g_series;
    const double b = line.b_series;
    const double tr = line.tap_re;
    const double ti = line.tap_im;
    const double tm = line.tap_sq();
    m.add_row(row({{pfr[l], 1.0},
                   {wfr[l], -(g + line.g_fr) / tm},
                   {wr[l], -(-g * tr + b * ti) / tm},
                   {wi[l], -(-b * tr - g * ti) / tm}},
                  0.0, 0.0, tag("p_fr_def", line.id)));
    m.add_row(row({{qfr[l], 1.0},
                   {wfr[l], (b + line.b_fr) / tm},
                   {wr[l], (-b * tr - g * ti) / tm},
                   {wi[l], -(-g * tr + b * ti) / tm}},
                  0.0, 0.0, tag("q_fr_def", line.id)));
    m.add_row(row({{pto[l], 1.0},
                   {wto[l], -(g + line.g_to)},
                   {wr[l], -(-g * tr - b * ti) / tm},
                   {wi[l], (-b * tr + g * ti) / tm}},
                  0.0, 0.0, tag("p_to_def", line.id)));
    m.add_row(row({{qto[l], 1.0},
                   {wto[l], (b + line.b_to)},
                   {wr[l], (-b * tr + g * ti) / tm},
                   {wi[l], (-g * tr - b * ti) / tm}},
                  0.0, 0.0, tag("q_to_def", line.id)));

    auto two = [](int v) { return AffineExpr{{{v, 2.0}}, 0.0}; };
    auto diff = [](std::vector<Term> a) { return AffineExpr{std::move(a), 0.0}; };
    m.add_cone({{two(wr[l]), two(wi[l]), diff({{w[i], 1.0}, {w[j], -1.0}})},
                {{{w[i], 1.0}, {w[j], 1.0}}, 0.0},
                tag("w_cone", line.id)});
    m.add_cone({{two(wr[l]), two(wi[l]), diff({{w[i], 1.0}, {z, -vj_hi2}})},
                {{{w[i], 1.0}, {z, vj_hi2}}, 0.0},
                tag("w_cone_fr", line.id)});
    m.add_cone({{two(wr[l]), two(wi[l]), diff({{z, vi_hi2}, {w[j], -1.0}})},
                {{{z, vi_hi2}, {w[j], 1.0}}, 0.0},
                tag("w_cone_to", line.id)});
    m.add_cone({{{{{pfr[l], 1.0}}, 0.0}, {{{qfr[l], 1.0}}, 0.0}},
                {{{z, line.thermal}}, 0.0},
                tag("thermal_fr", line.id)});
    m.add_cone({{{{{pto[l], 1.0}}, 0.0}, {{{qto[l], 1.0}}, 0.0}},
                {{{z, line.thermal}}, 0.0},
                tag("thermal_to", line.id)});
  }

  std::vector<int> ws;
  for (std::size_t s = 0; s < net.shunts().size(); ++s) {
    const auto& sh = net.shunts()[s];
    const std::size_t i = net.shunt_bus_index(s);
    const double hi2 = buses[i].vmax * buses[i].vmax;
    ws.push_back(m.add_variable({Component::kShunt, static_cast<int>(s), Role::kWShunt},
                                tag("ws", sh.id), 0.0, hi2));
    m.add_row(row({{ws[s], 1.0}, {w[i], -1.0}, {c.x_shunt[s], -hi2}}, -hi2, kInf,
                  tag("ws_mc1", sh.id)));
    m.add_row(row({{ws[s], 1.0}, {w[i], -1.0}}, -kInf, 0.0, tag("ws_mc2", sh.id)));
    m.add_row(row({{ws[s], 1.0}, {c.x_shunt[s], -hi2}}, -kInf, 0.0, tag("ws_mc3", sh.id)));
  }

  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    std::vector<Term> tp, tq;
    for (auto g : net.gens_at(i)) {
      tp.push_back({c.pg[g], 1.0});
      tq.push_back({qg[g], 1.0});
    }
    for (auto l : net.lines_at(i)) {
      const bool from = net.from_index(l) == i;
      tp.push_back({from ? pfr[l] : pto[l], -1.0});
      tq.push_back({from ? qfr[l] : qto[l], -1.0});
    }
    for (auto d : net.loads_at(i)) {
      tp.push_back({c.x_load[d], -net.loads()[d].pd});
      tq.push_back({c.x_load[d], -net.loads()[d].qd});
    }
    for (auto s : net.shunts_at(i)) {
      tp.push_back({ws[s], -net.shunts()[s].gs});
      tq.push_back({ws[s], net.shunts()[s].bs});
    }
    m.add_row(row(std::move(tp), 0.0, 0.0, tag("p_balance", buses[i].id)));
    m.add_row(row(std::move(tq), 0.0, 0.0, tag("q_balance", buses[i].id)));
  }
  return m;
}

MixedIntegerModel build_model(Formulation f, const Network& net, const Scenario& scn) {
  switch (f) {
    case Formulation::kNF: return build_nf(net, scn);
    case Formulation::kDC: return build_dc(net, scn);
    case Formulation::kSOC: return build_soc(net, scn);
  }
  throw FormulationError("unknown formulation");
}

void score_solution(const Network& net, const Scenario& scn, ShutoffSolution& sol) {
  const double ptot = net.total_demand();
  const double rtot = scn.total_risk();
  double load = 0.0;
  for (std::size_t d = 0; d < net.loads().size(); ++d) {
    load += net.loads()[d].weight * net.loads()[d].pd * sol.x_load[d];
  }
  double risk = 0.0;
  for (std::size_t l = 0; l < net.num_lines(); ++l) {
    risk += scn.risk.at(net.lines()[l].id) * sol.z_line[l];
  }
  sol.load_served_frac = load / ptot;
  sol.risk_served_frac = rtot > 0.0 ? risk / rtot : 0.0;
  sol.objective = (1.0 - scn.alpha) * sol.load_served_frac - scn.alpha * sol.risk_served_frac;
}

ShutoffSolution extract_solution(const Network& net, const Scenario& scn,
                                 const MixedIntegerModel& model, std::span<const double> x) {
  auto bin = [&](Component c, std::size_t i) {
    return x[model.at({c, static_cast<int>(i), Role::kStatus})] > 0.5 ? 1 : 0;
  };
  auto frac = [&](Component c, std::size_t i) {
    return std::clamp(x[model.at({c, static_cast<int>(i), Role::kServed})], 0.0, 1.0);
  };
  ShutoffSolution sol;
  for (std::size_t i = 0; i < net.num_buses(); ++i) sol.z_bus.push_back(bin(Component::kBus, i));
  for (std::size_t l = 0; l < net.num_lines(); ++l) sol.z_line.push_back(bin(Component::kLine, l));
  for (std::size_t g = 0; g < net.generators().size(); ++g) {
    sol.z_gen.push_back(bin(Component::kGenerator, g));
  }
  for (std::size_t d = 0; d < net.loads().size(); ++d) {
    sol.x_load.push_back(frac(Component::kLoad, d));
  }
  for (std::size_t s = 0; s < net.shunts().size(); ++s) {
    sol.x_shunt.push_back(frac(Component::kShunt, s));
  }
  score_solution(net, scn, sol);
  return sol;
}

}  // namespace ops
