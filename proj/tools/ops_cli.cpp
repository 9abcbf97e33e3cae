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

// ops: scenario generation, experiment runs, summaries and plots.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "ops/bench.hpp"
#include "ops/network.hpp"
#include "ops/scenario.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ops::BenchError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw ops::BenchError("cannot write " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal power shutoff toolkit"};
  app.require_subcommand(1);

  // gen-scenarios
  auto* gen = app.add_subcommand("gen-scenarios", "Sample wildfire-risk scenarios for a case");
  std::string g_case, g_out, g_alpha = "uniform";
  int g_count = 0;
  double g_sigma = 1.0;
  std::uint64_t g_seed = 0;
  gen->add_option("--case", g_case, "Case file (.m or .json)")->required();
  gen->add_option("--count", g_count, "Number of scenarios")->required();
  gen->add_option("--sigma", g_sigma, "Rayleigh scale");
  gen->add_option("--alpha", g_alpha, "fixed:V or uniform");
  gen->add_option("--seed", g_seed, "Master seed");
  gen->add_option("--out", g_out, "Scenario file to write")->required();

  // run
  auto* run = app.add_subcommand("run", "Solve scenarios under each formulation");
  std::string r_config, r_case, r_scen, r_forms, r_out, r_nodesel, r_branch;
  double r_time = 0.0, r_skip = 0.0;
  int r_workers = 0, r_cuts = -1;
  bool r_quiet = false;
  run->add_option("--config", r_config, "JSON config; flags override it");
  run->add_option("--case", r_case, "Case file");
  run->add_option("--scenarios", r_scen, "Scenario file");
  run->add_option("--formulations", r_forms, "Comma list of nf,dc,soc,acx");
  run->add_option("--time-limit", r_time, "Per-solve time limit (s)");
  run->add_option("--workers", r_workers, "Concurrent scenarios");
  run->add_option("--out", r_out, "Output directory");
  auto* skip_opt = run->add_option("--skip-if-timeout-frac", r_skip,
                                   "Stop running a formulation once this share of scenarios timed out");
  run->add_option("--node-selection", r_nodesel, "best_bound or best_bound_plunge");
  run->add_option("--branch-rule", r_branch, "most_fractional or pseudocost");
  run->add_option("--max-cuts-per-node", r_cuts, "Cut rounds on a fractional node");
  run->add_flag("--quiet", r_quiet, "No per-record log");

  // summarize
  auto* sum = app.add_subcommand("summarize", "Print summary tables of a results directory");
  std::string s_dir;
  sum->add_option("dir", s_dir, "Results directory")->required();

  // plot
  auto* plot = app.add_subcommand("plot", "Scatter plot with rolling means against alpha");
  std::string p_dir, p_y = "objective", p_out;
  plot->add_option("dir", p_dir, "Results directory")->required();
  plot->add_option("--y", p_y, "objective, load, risk, time or a results column");
  plot->add_option("--out", p_out, "SVG file to write")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      ops::Network net = ops::load_case_file(g_case);
      ops::ScenarioSet set;
      set.case_name = std::filesystem::path(g_case).stem().string();
      set.sigma = g_sigma;
      set.seed = g_seed;
      set.scenarios =
          ops::generate_scenarios(net, g_count, g_sigma, ops::AlphaMode::parse(g_alpha), g_seed);
      write_file(g_out, ops::emit_scenarios(set));
      std::cout << "wrote " << set.scenarios.size() << " scenarios to " << g_out << '\n';
    } else if (*run) {
      ops::ExperimentConfig cfg;
      if (!r_config.empty()) cfg = ops::parse_config(slurp(r_config));
      if (!r_case.empty()) cfg.case_path = r_case;
      if (!r_scen.empty()) cfg.scenarios_path = r_scen;
      if (!r_forms.empty()) cfg.formulations = ops::parse_formulation_list(r_forms);
      if (r_time > 0) cfg.time_limit = r_time;
      if (r_workers > 0) cfg.workers = r_workers;
      if (!r_out.empty()) cfg.out_dir = r_out;
      if (skip_opt->count()) cfg.skip_if_timeout_frac = r_skip;
      if (!r_nodesel.empty()) cfg.solver.node_selection = ops::parse_node_selection(r_nodesel);
      if (!r_branch.empty()) cfg.solver.branch_rule = ops::parse_branch_rule(r_branch);
      if (r_cuts >= 0) cfg.solver.max_cuts_per_node = r_cuts;
      if (!r_quiet) cfg.log = &std::cerr;
      ops::RunReport rep = ops::run_experiment(cfg);
      std::cout << rep.scenarios << " scenarios, " << rep.records_existing << " records present, "
                << rep.records_written << " written to " << ops::results_path(cfg.out_dir) << '\n';
      for (const std::string& f : rep.skipped_formulations)
        std::cout << "skipped after time limits: " << f << '\n';
    } else if (*sum) {
      auto records = ops::read_results(ops::results_path(s_dir));
      std::cout << ops::render_tables(ops::summarize(records));
    } else if (*plot) {
      auto records = ops::read_results(ops::results_path(p_dir));
      write_file(p_out, ops::plot_scatter(records, p_y));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
