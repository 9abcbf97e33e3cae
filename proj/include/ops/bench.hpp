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
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ops/acpower.hpp"
#include "ops/mip.hpp"
#include "ops/network.hpp"
#include "ops/scenario.hpp"

namespace ops {

class BenchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kResultsHeader =
    "case,scenario,alpha,formulation,objective,load_served_frac,risk_served_frac,status,gap,"
    "nodes,wall_time_s,ac_feasible_load_frac,ac_feasible_objective,redispatch_status";

// Formulation names accepted by the harness, in canonical order.
inline constexpr std::string_view kBenchFormulations[] = {"nf", "dc", "soc", "acx"};

// Throws BenchError for anything but nf, dc, soc, acx.
void check_formulation_name(std::string_view name);
// "nf,dc" -> {"nf", "dc"}; duplicates and unknown names are errors.
std::vector<std::string> parse_formulation_list(std::string_view text);

// One solve of one scenario. A solve that ends without any incumbent keeps
// NaN in its value fields and "none" as redispatch status; a solver
// breakdown is recorded with status "error".
struct RunRecord {
  std::string case_name;
  int scenario_id = 0;
  double alpha = 0.0;
  std::string formulation;
  double objective = 0.0;
  double load_served_frac = 0.0;
  double risk_served_frac = 0.0;
  std::string solve_status;
  double gap = 0.0;
  std::int64_t nodes = 0;
  double wall_time_s = 0.0;
  double ac_feasible_load_frac = 0.0;
  double ac_feasible_objective = 0.0;
  std::string redispatch_status;

  double overestimate_frac() const { return load_served_frac - ac_feasible_load_frac; }
  bool has_solution() const;
  bool operator==(const RunRecord&) const = default;
};

// CSV line without the trailing newline; doubles round-trip exactly.
std::string format_record(const RunRecord& rec);
RunRecord parse_record(std::string_view line);

// Reads a results file; the header must match exactly. A final line without
// a newline (an interrupted write) is ignored.
std::vector<RunRecord> read_results(const std::string& path);
std::vector<RunRecord> parse_results(std::string_view text);

struct ExperimentConfig {
  std::string case_path;
  // Either a scenario file or generation parameters.
  std::string scenarios_path;
  int generate_count = 0;
  double sigma = 1.0;
  AlphaMode alpha_mode = AlphaMode::uniform();
  std::uint64_t seed = 0;

  std::vector<std::string> formulations = {"nf", "dc", "soc", "acx"};
  std::string out_dir;
  int workers = 1;
  // Per-solve limit; the solver options keep their own copy in sync.
  double time_limit = 1800.0;
  SolveOptions solver;
  // A formulation whose time-limited share of all scenarios exceeds this
  // fraction is not run on the remaining scenarios.
  std::optional<double> skip_if_timeout_frac;
  std::size_t max_switchable = 12;
  RedispatchOptions redispatch;
  std::ostream* log = nullptr;
};

// JSON document mirroring the CLI flags: case, scenarios | generate {count,
// sigma, alpha, seed}, formulations, time_limit, workers, out,
// skip_if_timeout_frac, max_switchable, solver {node_selection, branch_rule,
// max_cuts_per_node, rel_gap_tol, int_tol, cone_viol_tol}.
ExperimentConfig parse_config(std::string_view json_text);

struct RunReport {
  std::size_t scenarios = 0;
  std::size_t records_written = 0;
  std::size_t records_existing = 0;
  std::vector<std::string> skipped_formulations;
};

// Path of the results file inside an output directory.
std::string results_path(const std::string& out_dir);

// Solves every scenario under every enabled formulation and appends one
// record per pair to <out_dir>/results.csv in scenario order. Pairs already
// present are not solved again.
RunReport run_experiment(const ExperimentConfig& config);

// Single solve and redispatch, as run_experiment does it. `table` is needed
// for "acx" only; `detail` receives the redispatch behind the record.
RunRecord run_one(const Network& net, const std::string& case_name, const Scenario& scn,
                  std::string_view formulation, const SolveOptions& solver,
                  const RedispatchOptions& redispatch,
                  const std::vector<EnumeratedTopology>* table = nullptr,
                  double table_time = 0.0, RedispatchResult* detail = nullptr);

struct FormulationSummary {
  std::string case_name;
  std::string formulation;
  std::size_t records = 0;  // with a solution
  std::size_t time_limited = 0;
  double mean_objective = 0.0;
  double mean_ac_objective = 0.0;
  double diff = 0.0;  // mean_objective - mean_ac_objective
  double mean_overestimate = 0.0;
  std::size_t overestimate_count = 0;  // overestimate_frac > 0.20
  double median_wall_time = 0.0;
};

struct PairwiseSummary {
  std::string case_name;
  std::string first, second;  // mean of first - second over shared scenarios
  std::size_t scenarios = 0;
  double mean_ac_difference = 0.0;
};

struct SummaryTable {
  std::vector<FormulationSummary> formulations;
  std::vector<PairwiseSummary> pairs;
  std::map<std::string, std::size_t> scenario_count;  // per case

  const FormulationSummary* find(std::string_view case_name, std::string_view f) const;
  const PairwiseSummary* find_pair(std::string_view case_name, std::string_view first,
                                   std::string_view second) const;
};

// Pairs reported, as (first, second): dc-nf, soc-dc, acx-dc, soc-acx.
inline constexpr std::pair<std::string_view, std::string_view> kSummaryPairs[] = {
    {"dc", "nf"}, {"soc", "dc"}, {"acx", "dc"}, {"soc", "acx"}};

SummaryTable summarize(const std::vector<RunRecord>& records);
std::string render_tables(const SummaryTable& table);

// Column selected by a plot field name: objective, load, risk, time or any
// numeric results column.
double record_field(const RunRecord& rec, std::string_view field);

// Mean of y over the `window` records nearest in alpha, one value per input
// point, in the order of `alpha` (which must be sorted ascending).
std::vector<double> rolling_nearest_mean(const std::vector<double>& alpha,
                                         const std::vector<double>& y, std::size_t window = 30);

std::string plot_scatter(const std::vector<RunRecord>& records, std::string_view y_field);

}  // namespace ops
