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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ops {

// Raised for malformed or inconsistent case data. The message carries the
// offending line number (MATPOWER) or field path (native format).
class CaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// All electrical quantities below are per unit on Network::base_mva; angles
// are radians.

struct Bus {
  int id = 0;
  double vmin = 0.9;
  double vmax = 1.1;

  bool operator==(const Bus&) const = default;
};

struct Line {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  double g_series = 0.0;
  double b_series = 0.0;
  double g_fr = 0.0;
  double b_fr = 0.0;
  double g_to = 0.0;
  double b_to = 0.0;
  double tap_re = 1.0;
  double tap_im = 0.0;
  double thermal = 0.0;
  double ang_min = 0.0;
  double ang_max = 0.0;

  double tap_sq() const { return tap_re * tap_re + tap_im * tap_im; }

  bool operator==(const Line&) const = default;
};

struct Generator {
  int id = 0;
  int bus = 0;
  double pmin = 0.0;
  double pmax = 0.0;
  double qmin = 0.0;
  double qmax = 0.0;

  bool operator==(const Generator&) const = default;
};

struct Load {
  int id = 0;
  int bus = 0;
  double pd = 0.0;
  double qd = 0.0;
  double weight = 1.0;

  bool operator==(const Load&) const = default;
};

struct Shunt {
  int id = 0;
  int bus = 0;
  double gs = 0.0;
  double bs = 0.0;

  bool operator==(const Shunt&) const = default;
};

// Immutable per-unit network. Components keep the order they were given in;
// every module addresses them by that dense position ("index") and reports
// them by their id. Construction only checks referential integrity; the
// remaining invariants are reported by validate().
class Network {
 public:
  Network() = default;
  Network(double base_mva, std::vector<Bus> buses, std::vector<Line> lines,
          std::vector<Generator> generators, std::vector<Load> loads,
          std::vector<Shunt> shunts);

  double base_mva() const { return base_mva_; }
  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Line>& lines() const { return lines_; }
  const std::vector<Generator>& generators() const { return generators_; }
  const std::vector<Load>& loads() const { return loads_; }
  const std::vector<Shunt>& shunts() const { return shunts_; }

  std::size_t num_buses() const { return buses_.size(); }
  std::size_t num_lines() const { return lines_.size(); }

  // Dense bus position for a bus id; throws CaseError for unknown ids.
  std::size_t bus_index(int bus_id) const;
  std::size_t line_index(int line_id) const;

  // Endpoint bus positions of line `l`.
  std::size_t from_index(std::size_t l) const { return line_from_[l]; }
  std::size_t to_index(std::size_t l) const { return line_to_[l]; }

  // Incidence lists, by bus position.
  const std::vector<std::size_t>& lines_at(std::size_t bus) const { return bus_lines_[bus]; }
  const std::vector<std::size_t>& gens_at(std::size_t bus) const { return bus_gens_[bus]; }
  const std::vector<std::size_t>& loads_at(std::size_t bus) const { return bus_loads_[bus]; }
  const std::vector<std::size_t>& shunts_at(std::size_t bus) const { return bus_shunts_[bus]; }

  std::size_t gen_bus_index(std::size_t g) const { return gen_bus_[g]; }
  std::size_t load_bus_index(std::size_t d) const { return load_bus_[d]; }
  std::size_t shunt_bus_index(std::size_t s) const { return shunt_bus_[s]; }

  // Sum of active demand (the load normalizer of the shutoff objective).
  double total_demand() const;

  bool operator==(const Network& other) const;

 private:
  double base_mva_ = 100.0;
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  std::vector<Generator> generators_;
  std::vector<Load> loads_;
  std::vector<Shunt> shunts_;

  std::unordered_map<int, std::size_t> bus_pos_;
  std::unordered_map<int, std::size_t> line_pos_;
  std::vector<std::size_t> line_from_, line_to_;
  std::vector<std::size_t> gen_bus_, load_bus_, shunt_bus_;
  std::vector<std::vector<std::size_t>> bus_lines_, bus_gens_, bus_loads_, bus_shunts_;
};

struct Diagnostic {
  std::string component;  // e.g. "line 3", "bus 7", "network"
  std::string rule;       // violated invariant, human readable

  bool operator==(const Diagnostic&) const = default;
};

// Default angle-difference limit applied when a case leaves it unset.
inline constexpr double kDefaultAngleLimitDeg = 30.0;

// Reads the MATPOWER `.m` subset (mpc.baseMVA, mpc.bus, mpc.gen, mpc.branch;
// everything else is skipped). Out-of-service generators and branches are
// dropped.
Network parse_matpower(std::string_view text);

// Native JSON document: {base_mva, buses[], lines[], generators[], loads[],
// shunts[]} with field names matching the component structs.
Network parse_native(std::string_view text);
std::string emit_native(const Network& net);

// Loads a case by extension: `.m` for MATPOWER, anything else as native JSON.
Network load_case_file(const std::string& path);

// Empty iff every component invariant holds and the graph of all lines is
// connected.
std::vector<Diagnostic> validate(const Network& net);

}  // namespace ops
