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

#include "ops/network.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ops {
namespace {

using json = nlohmann::ordered_json;

constexpr double kDegToRad = std::numbers::pi / 180.0;

template <typename T>
std::unordered_map<int, std::size_t> index_ids(const std::vector<T>& items,
                                                const char* what) {
  std::unordered_map<int, std::size_t> pos;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!pos.emplace(items[i].id, i).second) {
      throw CaseError(std::string("duplicate ") + what + " id " +
                      std::to_string(items[i].id));
    }
  }
  return pos;
}

}  // namespace

Network::Network(double base_mva, std::vector<Bus> buses, std::vector<Line> lines,
                 std::vector<Generator> generators, std::vector<Load> loads,
                 std::vector<Shunt> shunts)
    : base_mva_(base_mva),
      buses_(std::move(buses)),
      lines_(std::move(lines)),
      generators_(std::move(generators)),
      loads_(std::move(loads)),
      shunts_(std::move(shunts)) {
  bus_pos_ = index_ids(buses_, "bus");
  line_pos_ = index_ids(lines_, "line");
  index_ids(generators_, "generator");
  index_ids(loads_, "load");
  index_ids(shunts_, "shunt");

  const std::size_t nb = buses_.size();
  bus_lines_.assign(nb, {});
  bus_gens_.assign(nb, {});
  bus_loads_.assign(nb, {});
  bus_shunts_.assign(nb, {});

  auto locate = [&](int bus_id, const char* what, int id) {
    auto it = bus_pos_.find(bus_id);
    if (it == bus_pos_.end()) {
      throw CaseError(std::string(what) + " " + std::to_string(id) +
                      " references missing bus " + std::to_string(bus_id));
    }
    return it->second;
  };

  for (std::size_t l = 0; l < lines_.size(); ++l) {
    const auto f = locate(lines_[l].from_bus, "line", lines_[l].id);
    const auto t = locate(lines_[l].to_bus, "line", lines_[l].id);
    line_from_.push_back(f);
    line_to_.push_back(t);
    bus_lines_[f].push_back(l);
    if (t != f) bus_lines_[t].push_back(l);
  }
  for (std::size_t g = 0; g < generators_.size(); ++g) {
    gen_bus_.push_back(locate(generators_[g].bus, "generator", generators_[g].id));
    bus_gens_[gen_bus_.back()].push_back(g);
  }
  for (std::size_t d = 0; d < loads_.size(); ++d) {
    load_bus_.push_back(locate(loads_[d].bus, "load", loads_[d].id));
    bus_loads_[load_bus_.back()].push_back(d);
  }
  for (std::size_t s = 0; s < shunts_.size(); ++s) {
    shunt_bus_.push_back(locate(shunts_[s].bus, "shunt", shunts_[s].id));
    bus_shunts_[shunt_bus_.back()].push_back(s);
  }
}

std::size_t Network::bus_index(int bus_id) const {
  auto it = bus_pos_.find(bus_id);
  if (it == bus_pos_.end()) throw CaseError("unknown bus id " + std::to_string(bus_id));
  return it->second;
}

std::size_t Network::line_index(int line_id) const {
  auto it = line_pos_.find(line_id);
  if (it == line_pos_.end()) throw CaseError("unknown line id " + std::to_string(line_id));
  return it->second;
}

double Network::total_demand() const {
  double total = 0.0;
  for (const auto& d : loads_) total += d.pd;
  return total;
}

bool Network::operator==(const Network& other) const {
  return base_mva_ == other.base_mva_ && buses_ == other.buses_ && lines_ == other.lines_ &&
         generators_ == other.generators_ && loads_ == other.loads_ &&
         shunts_ == other.shunts_;
}

// ---------------------------------------------------------------------------
// MATPOWER reader

namespace {

struct MatrixRow {
  int line_no = 0;
  std::vector<double> values;
};

struct MatpowerBlocks {
  double base_mva = 0.0;
  bool has_base = false;
  std::unordered_map<std::string, std::vector<MatrixRow>> matrices;
};

std::string strip_comment(const std::string& line) {
  auto pos = line.find('%');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

std::vector<double> parse_numbers(const std::string& chunk, int line_no) {
  std::vector<double> out;
  std::string token;
  std::istringstream in(chunk);
  while (in >> token) {
    // MATPOWER allows comma separated entries.
    std::string part;
    std::istringstream parts(token);
    while (std::getline(parts, part, ',')) {
      if (part.empty()) continue;
      char* end = nullptr;
      const double v = std::strtod(part.c_str(), &end);
      if (end == part.c_str() || *end != '\0') {
        throw CaseError("line " + std::to_string(line_no) + ": malformed matrix entry '" +
                        part + "'");
      }
      out.push_back(v);
    }
  }
  return out;
}

MatpowerBlocks scan_matpower(std::string_view text) {
  MatpowerBlocks blocks;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  std::string open_matrix;  // name of the matrix being read, empty when outside
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = strip_comment(raw);
    if (open_matrix.empty()) {
      auto mpc = line.find("mpc.");
      if (mpc == std::string::npos) continue;
      auto eq = line.find('=', mpc);
      if (eq == std::string::npos) continue;
      std::string name = line.substr(mpc + 4, eq - mpc - 4);
      name.erase(std::remove_if(name.begin(), name.end(), ::isspace), name.end());
      std::string rhs = line.substr(eq + 1);
      auto bracket = rhs.find('[');
      if (bracket == std::string::npos) {
        if (name == "baseMVA") {
          auto semi = rhs.find(';');
          auto vals = parse_numbers(rhs.substr(0, semi), line_no);
          if (vals.size() != 1) {
            throw CaseError("line " + std::to_string(line_no) + ": malformed baseMVA");
          }
          blocks.base_mva = vals[0];
          blocks.has_base = true;
        }
        continue;
      }
      open_matrix = name;
      blocks.matrices[name];
      line = rhs.substr(bracket + 1);
    }
    // Inside a matrix: rows end with ';' or a newline; the block ends at ']'.
    bool closes = false;
    auto close = line.find(']');
    if (close != std::string::npos) {
      closes = true;
      line = line.substr(0, close);
    }
    std::istringstream rows(line);
    std::string row;
    while (std::getline(rows, row, ';')) {
      auto vals = parse_numbers(row, line_no);
      if (!vals.empty()) blocks.matrices[open_matrix].push_back({line_no, std::move(vals)});
    }
    if (closes) open_matrix.clear();
  }
  if (!open_matrix.empty()) {
    throw CaseError("unterminated matrix mpc." + open_matrix);
  }
  return blocks;
}

void require_columns(const MatrixRow& row, std::size_t n, const char* matrix) {
  if (row.values.size() < n) {
    throw CaseError("line " + std::to_string(row.line_no) + ": mpc." + matrix + " row has " +
                    std::to_string(row.values.size()) + " columns, expected at least " +
                    std::to_string(n));
  }
}

int as_id(double v, int line_no) {
  if (v != std::floor(v)) {
    throw CaseError("line " + std::to_string(line_no) + ": non-integer id " + std::to_string(v));
  }
  return static_cast<int>(v);
}

double angle_limit(double deg, double fallback_deg) {
  if (std::abs(deg) >= 90.0) return fallback_deg * kDegToRad;
  return deg * kDegToRad;
}

}  // namespace

Network parse_matpower(std::string_view text) {
  const MatpowerBlocks blocks = scan_matpower(text);
  if (!blocks.has_base) throw CaseError("missing mpc.baseMVA");
  if (!(blocks.base_mva > 0.0)) throw CaseError("non-positive baseMVA");
  const double base = blocks.base_mva;

  auto matrix = [&](const char* name) -> const std::vector<MatrixRow>& {
    static const std::vector<MatrixRow> empty;
    auto it = blocks.matrices.find(name);
    return it == blocks.matrices.end() ? empty : it->second;
  };
  if (matrix("bus").empty()) throw CaseError("missing mpc.bus");

  std::vector<Bus> buses;
  std::vector<Load> loads;
  std::vector<Shunt> shunts;
  for (const auto& row : matrix("bus")) {
    require_columns(row, 13, "bus");
    const auto& v = row.values;
    const int id = as_id(v[0], row.line_no);
    buses.push_back({id, v[12], v[11]});
    if (v[2] != 0.0 || v[3] != 0.0) {
      loads.push_back({static_cast<int>(loads.size()) + 1, id, v[2] / base, v[3] / base, 1.0});
    }
    if (v[4] != 0.0 || v[5] != 0.0) {
      shunts.push_back({static_cast<int>(shunts.size()) + 1, id, v[4] / base, v[5] / base});
    }
  }

  std::vector<Generator> gens;
  int gen_row = 0;
  for (const auto& row : matrix("gen")) {
    require_columns(row, 10, "gen");
    ++gen_row;
    const auto& v = row.values;
    if (v[7] <= 0.0) continue;
    gens.push_back({gen_row, as_id(v[0], row.line_no), v[9] / base, v[8] / base, v[4] / base,
                    v[3] / base});
  }

  std::vector<Line> lines;
  std::vector<bool> unlimited;
  int branch_row = 0;
  for (const auto& row : matrix("branch")) {
    require_columns(row, 11, "branch");
    ++branch_row;
    const auto& v = row.values;
    if (v[10] <= 0.0) continue;
    Line line;
    line.id = branch_row;
    line.from_bus = as_id(v[0], row.line_no);
    line.to_bus = as_id(v[1], row.line_no);
    const std::complex<double> z(v[2], v[3]);
    if (std::abs(z) == 0.0) {
      throw CaseError("line " + std::to_string(row.line_no) + ": zero series impedance");
    }
    const std::complex<double> y = 1.0 / z;
    line.g_series = y.real();
    line.b_series = y.imag();
    line.b_fr = v[4] / 2.0;
    line.b_to = v[4] / 2.0;
    const double ratio = v[8] == 0.0 ? 1.0 : v[8];
    const double shift = v[9] * kDegToRad;
    line.tap_re = ratio * std::cos(shift);
    line.tap_im = ratio * std::sin(shift);
    line.thermal = v[5] / base;
    unlimited.push_back(v[5] == 0.0);
    double angmin = row.values.size() > 11 ? v[11] : 0.0;
    double angmax = row.values.size() > 12 ? v[12] : 0.0;
    if (angmin == 0.0 && angmax == 0.0) {
      angmin = -kDefaultAngleLimitDeg;
      angmax = kDefaultAngleLimitDeg;
    }
    line.ang_min = angle_limit(angmin, -kDefaultAngleLimitDeg);
    line.ang_max = angle_limit(angmax, kDefaultAngleLimitDeg);
    lines.push_back(line);
  }

  // rateA = 0 means unlimited; substitute a finite bound that never binds.
  double big_rating = 0.0;
  for (const auto& d : loads) big_rating += 2.0 * std::abs(d.pd);
  for (const auto& g : gens) big_rating += std::max(g.pmax, 0.0);
  for (std::size_t l = 0; l < lines.size(); ++l) {
    if (unlimited[l]) lines[l].thermal = big_rating;
  }

  return Network(base, std::move(buses), std::move(lines), std::move(gens), std::move(loads),
                 std::move(shunts));
}

// ---------------------------------------------------------------------------
// Native JSON format

namespace {

class FieldReader {
 public:
  FieldReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw CaseError(path_ + ": expected an object");
  }

  double number(const char* key) const {
    const json& v = at(key);
    if (!v.is_number()) throw CaseError(path_ + "." + key + ": expected a number");
    return v.get<double>();
  }

  double number_or(const char* key, double fallback) const {
    return obj_.contains(key) ? number(key) : fallback;
  }

  int integer(const char* key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) throw CaseError(path_ + "." + key + ": expected an integer");
    return v.get<int>();
  }

 private:
  const json& at(const char* key) const {
    auto it = obj_.find(key);
    if (it == obj_.end()) throw CaseError(path_ + "." + key + ": missing field");
    return *it;
  }

  const json& obj_;
  std::string path_;
};

template <typename T, typename F>
std::vector<T> read_array(const json& doc, const char* key, F&& read_one) {
  std::vector<T> out;
  auto it = doc.find(key);
  if (it == doc.end()) throw CaseError(std::string(key) + ": missing field");
  if (!it->is_array()) throw CaseError(std::string(key) + ": expected an array");
  for (std::size_t i = 0; i < it->size(); ++i) {
    out.push_back(read_one(FieldReader((*it)[i], std::string(key) + "[" + std::to_string(i) + "]")));
  }
  return out;
}

}  // namespace

Network parse_native(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CaseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw CaseError("document root must be an object");
  if (!doc.contains("base_mva") || !doc["base_mva"].is_number()) {
    throw CaseError("base_mva: missing or not a number");
  }
  const double base = doc["base_mva"].get<double>();
  if (!(base > 0.0)) throw CaseError("base_mva: must be positive");

  auto buses = read_array<Bus>(doc, "buses", [](const FieldReader& r) {
    return Bus{r.integer("id"), r.number("vmin"), r.number("vmax")};
  });
  auto lines = read_array<Line>(doc, "lines", [](const FieldReader& r) {
    Line l;
    l.id = r.integer("id");
    l.from_bus = r.integer("from_bus");
    l.to_bus = r.integer("to_bus");
    l.g_series = r.number("g_series");
    l.b_series = r.number("b_series");
    l.g_fr = r.number_or("g_fr", 0.0);
    l.b_fr = r.number_or("b_fr", 0.0);
    l.g_to = r.number_or("g_to", 0.0);
    l.b_to = r.number_or("b_to", 0.0);
    l.tap_re = r.number_or("tap_re", 1.0);
    l.tap_im = r.number_or("tap_im", 0.0);
    l.thermal = r.number("thermal");
    l.ang_min = r.number("ang_min");
    l.ang_max = r.number("ang_max");
    return l;
  });
  auto gens = read_array<Generator>(doc, "generators", [](const FieldReader& r) {
    return Generator{r.integer("id"), r.integer("bus"), r.number("pmin"), r.number("pmax"),
                     r.number("qmin"), r.number("qmax")};
  });
  auto loads = read_array<Load>(doc, "loads", [](const FieldReader& r) {
    return Load{r.integer("id"), r.integer("bus"), r.number("pd"), r.number("qd"),
                r.number_or("weight", 1.0)};
  });
  auto shunts = read_array<Shunt>(doc, "shunts", [](const FieldReader& r) {
    return Shunt{r.integer("id"), r.integer("bus"), r.number("gs"), r.number("bs")};
  });

  Network net(base, std::move(buses), std::move(lines), std::move(gens), std::move(loads),
              std::move(shunts));
  for (const auto& d : validate(net)) {
    if (d.component == "network" && d.rule.find("connected") != std::string::npos) continue;
    throw CaseError(d.component + ": " + d.rule);
  }
  return net;
}

std::string emit_native(const Network& net) {
  json doc;
  doc["base_mva"] = net.base_mva();
  doc["buses"] = json::array();
  for (const auto& b : net.buses()) {
    doc["buses"].push_back({{"id", b.id}, {"vmin", b.vmin}, {"vmax", b.vmax}});
  }
  doc["lines"] = json::array();
  for (const auto& l : net.lines()) {
    doc["lines"].push_back({{"id", l.id},
                            {"from_bus", l.from_bus},
                            {"to_bus", l.to_bus},
                            {"g_series", l.g_series},
                            {"b_series", l.b_series},
                            {"g_fr", l.g_fr},
                            {"b_fr", l.b_fr},
                            {"g_to", l.g_to},
                            {"b_to", l.b_to},
                            {"tap_re", l.tap_re},
                            {"tap_im", l.tap_im},
                            {"thermal", l.thermal},
                            {"ang_min", l.ang_min},
                            {"ang_max", l.ang_max}});
  }
  doc["generators"] = json::array();
  for (const auto& g : net.generators()) {
    doc["generators"].push_back({{"id", g.id},
                                 {"bus", g.bus},
                                 {"pmin", g.pmin},
                                 {"pmax", g.pmax},
                                 {"qmin", g.qmin},
                                 {"qmax", g.qmax}});
  }
  doc["loads"] = json::array();
  for (const auto& d : net.loads()) {
    doc["loads"].push_back(
        {{"id", d.id}, {"bus", d.bus}, {"pd", d.pd}, {"qd", d.qd}, {"weight", d.weight}});
  }
  doc["shunts"] = json::array();
  for (const auto& s : net.shunts()) {
    doc["shunts"].push_back({{"id", s.id}, {"bus", s.bus}, {"gs", s.gs}, {"bs", s.bs}});
  }
  return doc.dump(2) + "\n";
}

Network load_case_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CaseError("cannot open case file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const bool is_m = path.size() >= 2 && path.compare(path.size() - 2, 2, ".m") == 0;
  return is_m ? parse_matpower(buf.str()) : parse_native(buf.str());
}

// ---------------------------------------------------------------------------
// Validation

std::vector<Diagnostic> validate(const Network& net) {
  std::vector<Diagnostic> out;
  auto report = [&](std::string component, std::string rule) {
    out.push_back({std::move(component), std::move(rule)});
  };
  auto finite = [](std::initializer_list<double> vs) {
    return std::all_of(vs.begin(), vs.end(), [](double v) { return std::isfinite(v); });
  };
  const double half_pi = std::numbers::pi / 2.0;

  for (const auto& b : net.buses()) {
    const std::string who = "bus " + std::to_string(b.id);
    if (!finite({b.vmin, b.vmax})) report(who, "non-finite voltage bounds");
    if (!(b.vmin > 0.0)) report(who, "vmin must be positive");
    if (!(b.vmin <= b.vmax)) report(who, "vmin exceeds vmax");
  }
  for (const auto& l : net.lines()) {
    const std::string who = "line " + std::to_string(l.id);
    if (!finite({l.g_series, l.b_series, l.g_fr, l.b_fr, l.g_to, l.b_to, l.tap_re, l.tap_im,
                 l.thermal, l.ang_min, l.ang_max})) {
      report(who, "non-finite parameter");
    }
    if (l.from_bus == l.to_bus) report(who, "from_bus equals to_bus");
    if (!(l.thermal >= 0.0)) report(who, "negative thermal limit");
    if (!(l.ang_min <= l.ang_max)) report(who, "ang_min exceeds ang_max");
    if (!(l.tap_sq() > 0.0)) report(who, "zero transformer ratio");
    if (!(l.ang_min > -half_pi && l.ang_max < half_pi)) {
      report(who, "angle limits outside (-pi/2, pi/2)");
    }
  }
  for (const auto& g : net.generators()) {
    const std::string who = "generator " + std::to_string(g.id);
    if (!finite({g.pmin, g.pmax, g.qmin, g.qmax})) report(who, "non-finite limit");
    if (!(g.pmin <= g.pmax)) report(who, "pmin exceeds pmax");
    if (!(g.qmin <= g.qmax)) report(who, "qmin exceeds qmax");
  }
  for (const auto& d : net.loads()) {
    const std::string who = "load " + std::to_string(d.id);
    if (!finite({d.pd, d.qd, d.weight})) report(who, "non-finite value");
    if (!(d.weight > 0.0)) report(who, "weight must be positive");
    if (!(d.pd >= 0.0)) report(who, "negative active demand");
  }
  for (const auto& s : net.shunts()) {
    if (!finite({s.gs, s.bs})) report("shunt " + std::to_string(s.id), "non-finite admittance");
  }
  if (!(net.total_demand() > 0.0)) report("network", "total active demand must be positive");

  // Connectivity of the graph of all lines.
  const std::size_t nb = net.num_buses();
  if (nb > 1) {
    std::vector<std::size_t> parent(nb);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (std::size_t l = 0; l < net.num_lines(); ++l) {
      parent[find(net.from_index(l))] = find(net.to_index(l));
    }
    std::size_t components = 0;
    for (std::size_t i = 0; i < nb; ++i) components += find(i) == i;
    if (components > 1) {
      report("network", "line graph is not connected (" + std::to_string(components) +
                            " components)");
    }
  }
  return out;
}

}  // namespace ops
