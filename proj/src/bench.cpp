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

#include "ops/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ops/formulate.hpp"

namespace ops {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kColumns = 14;

std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw BenchError("cannot format number");
  return std::string(buf, end);
}

double parse_double(std::string_view s, std::string_view column) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size())
    throw BenchError("bad number '" + std::string(s) + "' in column " + std::string(column));
  return v;
}

template <typename Int>
Int parse_int(std::string_view s, std::string_view column) {
  Int v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size())
    throw BenchError("bad integer '" + std::string(s) + "' in column " + std::string(column));
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BenchError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string display_name(std::string_view f) {
  if (f == "acx") return "AC";
  std::string s(f);
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

int formulation_rank(std::string_view f) {
  for (int i = 0; i < 4; ++i)
    if (kBenchFormulations[i] == f) return i;
  return 4;
}

}  // namespace

void check_formulation_name(std::string_view name) {
  for (std::string_view f : kBenchFormulations)
    if (f == name) return;
  throw BenchError("unknown formulation '" + std::string(name) + "'");
}

std::vector<std::string> parse_formulation_list(std::string_view text) {
  std::vector<std::string> out;
  for (std::string_view part : split(text, ',')) {
    check_formulation_name(part);
    if (std::find(out.begin(), out.end(), part) != out.end())
      throw BenchError("formulation '" + std::string(part) + "' listed twice");
    out.emplace_back(part);
  }
  return out;
}

bool RunRecord::has_solution() const { return !std::isnan(objective); }

std::string format_record(const RunRecord& r) {
  if (r.case_name.find_first_of(",\n") != std::string::npos)
    throw BenchError("case name may not contain commas or newlines");
  std::string s;
  s.reserve(200);
  s += r.case_name;
  s += ',' + std::to_string(r.scenario_id);
  s += ',' + fmt_double(r.alpha);
  s += ',' + r.formulation;
  s += ',' + fmt_double(r.objective);
  s += ',' + fmt_double(r.load_served_frac);
  s += ',' + fmt_double(r.risk_served_frac);
  s += ',' + r.solve_status;
  s += ',' + fmt_double(r.gap);
  s += ',' + std::to_string(r.nodes);
  s += ',' + fmt_double(r.wall_time_s);
  s += ',' + fmt_double(r.ac_feasible_load_frac);
  s += ',' + fmt_double(r.ac_feasible_objective);
  s += ',' + r.redispatch_status;
  return s;
}

RunRecord parse_record(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  auto f = split(line, ',');
  if (f.size() != kColumns)
    throw BenchError("expected " + std::to_string(kColumns) + " columns, got " +
                     std::to_string(f.size()));
  RunRecord r;
  r.case_name = f[0];
  r.scenario_id = parse_int<int>(f[1], "scenario");
  r.alpha = parse_double(f[2], "alpha");
  r.formulation = f[3];
  check_formulation_name(r.formulation);
  r.objective = parse_double(f[4], "objective");
  r.load_served_frac = parse_double(f[5], "load_served_frac");
  r.risk_served_frac = parse_double(f[6], "risk_served_frac");
  r.solve_status = f[7];
  r.gap = parse_double(f[8], "gap");
  r.nodes = parse_int<std::int64_t>(f[9], "nodes");
  r.wall_time_s = parse_double(f[10], "wall_time_s");
  r.ac_feasible_load_frac = parse_double(f[11], "ac_feasible_load_frac");
  r.ac_feasible_objective = parse_double(f[12], "ac_feasible_objective");
  r.redispatch_status = f[13];
  return r;
}

std::vector<RunRecord> parse_results(std::string_view text) {
  std::size_t nl = text.find('\n');
  std::string_view header = text.substr(0, nl);
  if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
  if (header != kResultsHeader) throw BenchError("results header does not match");
  std::vector<RunRecord> out;
  if (nl == std::string_view::npos) return out;
  std::size_t pos = nl + 1;
  std::size_t line_no = 1;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) break;  // interrupted write
    ++line_no;
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    try {
      out.push_back(parse_record(line));
    } catch (const BenchError& e) {
      throw BenchError("results line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<RunRecord> read_results(const std::string& path) {
  return parse_results(read_file(path));
}

ExperimentConfig parse_config(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw BenchError(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw BenchError("config must be a JSON object");
  static const std::set<std::string> known = {
      "case", "scenarios", "generate", "formulations", "time_limit", "workers", "out",
      "skip_if_timeout_frac", "max_switchable", "solver"};
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!known.count(it.key())) throw BenchError("config: unknown key '" + it.key() + "'");

  ExperimentConfig c;
  try {
    if (doc.contains("case")) c.case_path = doc["case"].get<std::string>();
    if (doc.contains("scenarios")) c.scenarios_path = doc["scenarios"].get<std::string>();
    if (doc.contains("generate")) {
      const auto& g = doc["generate"];
      c.generate_count = g.at("count").get<int>();
      c.sigma = g.value("sigma", 1.0);
      c.alpha_mode = AlphaMode::parse(g.value("alpha", std::string("uniform")));
      c.seed = g.value("seed", std::uint64_t{0});
    }
    if (doc.contains("formulations")) {
      const auto& f = doc["formulations"];
      if (f.is_string()) {
        c.formulations = parse_formulation_list(f.get<std::string>());
      } else {
        std::string joined;
        for (const auto& e : f) joined += (joined.empty() ? "" : ",") + e.get<std::string>();
        c.formulations = parse_formulation_list(joined);
      }
    }
    c.time_limit = doc.value("time_limit", c.time_limit);
    c.workers = doc.value("workers", c.workers);
    c.out_dir = doc.value("out", c.out_dir);
    if (doc.contains("skip_if_timeout_frac"))
      c.skip_if_timeout_frac = doc["skip_if_timeout_frac"].get<double>();
    c.max_switchable = doc.value("max_switchable", c.max_switchable);
    if (doc.contains("solver")) {
      const auto& s = doc["solver"];
      if (s.contains("node_selection"))
        c.solver.node_selection = parse_node_selection(s["node_selection"].get<std::string>());
      if (s.contains("branch_rule"))
        c.solver.branch_rule = parse_branch_rule(s["branch_rule"].get<std::string>());
      c.solver.max_cuts_per_node = s.value("max_cuts_per_node", c.solver.max_cuts_per_node);
      c.solver.rel_gap_tol = s.value("rel_gap_tol", c.solver.rel_gap_tol);
      c.solver.int_tol = s.value("int_tol", c.solver.int_tol);
      c.solver.cone_viol_tol = s.value("cone_viol_tol", c.solver.cone_viol_tol);
    }
  } catch (const nlohmann::json::exception& e) {
    throw BenchError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw BenchError(std::string("config: ") + e.what());
  } catch (const ScenarioError& e) {
    throw BenchError(std::string("config: ") + e.what());
  }
  c.solver.time_limit = c.time_limit;
  return c;
}

std::string results_path(const std::string& out_dir) {
  return (std::filesystem::path(out_dir) / "results.csv").string();
}

RunRecord run_one(const Network& net, const std::string& case_name, const Scenario& scn,
                  std::string_view formulation, const SolveOptions& solver,
                  const RedispatchOptions& redispatch_opts,
                  const std::vector<EnumeratedTopology>* table, double table_time,
                  RedispatchResult* detail) {
  RunRecord rec;
  rec.case_name = case_name;
  rec.scenario_id = scn.id;
  rec.alpha = scn.alpha;
  rec.formulation = formulation;
  auto t0 = std::chrono::steady_clock::now();

  if (formulation == "acx") {
    if (!table) throw BenchError("acx needs an enumeration table");
    ShutoffSolution sol = best_enumerated(net, scn, *table);
    rec.wall_time_s = table_time + seconds_since(t0);
    rec.objective = sol.objective;
    rec.load_served_frac = sol.load_served_frac;
    rec.risk_served_frac = sol.risk_served_frac;
    rec.solve_status = "optimal";
    rec.gap = 0.0;
    rec.nodes = static_cast<std::int64_t>(table->size());
    rec.ac_feasible_load_frac = sol.load_served_frac;
    rec.ac_feasible_objective = sol.objective;
    rec.redispatch_status = to_string(RedispatchStatus::kTrivial);  // blackout
    if (detail) {
      *detail = RedispatchResult{};
      detail->status = RedispatchStatus::kTrivial;
    }
    for (const EnumeratedTopology& e : *table) {
      if (e.z_line == sol.z_line && e.topology.z_bus == sol.z_bus) {
        rec.redispatch_status = to_string(e.result.status);
        if (detail) *detail = e.result;
        break;
      }
    }
    return rec;
  }

  check_formulation_name(formulation);
  MixedIntegerModel model = build_model(parse_formulation(formulation), net, scn);
  MipResult res;
  bool broke = false;
  try {
    res = solve_mip(model, solver);
  } catch (const MipError& e) {
    // keep the sweep going; the record carries the failure
    broke = true;
    res.nodes = e.node();
  }
  rec.wall_time_s = seconds_since(t0);
  rec.solve_status = broke ? "error" : std::string(to_string(res.status));
  rec.gap = res.gap;
  rec.nodes = res.nodes;
  if (broke || !res.has_incumbent) {
    rec.objective = rec.load_served_frac = rec.risk_served_frac = kNaN;
    rec.ac_feasible_load_frac = rec.ac_feasible_objective = kNaN;
    rec.redispatch_status = "none";
    return rec;
  }
  ShutoffSolution sol = extract_solution(net, scn, model, res.incumbent);
  rec.objective = sol.objective;
  rec.load_served_frac = sol.load_served_frac;
  rec.risk_served_frac = sol.risk_served_frac;
  RedispatchResult rd = redispatch(net, scn, topology_of(sol), redispatch_opts);
  rec.ac_feasible_load_frac = rd.load_served_frac;
  rec.ac_feasible_objective = rd.recovered_objective;
  rec.redispatch_status = to_string(rd.status);
  if (detail) *detail = std::move(rd);
  return rec;
}

RunReport run_experiment(const ExperimentConfig& config) {
  if (config.case_path.empty()) throw BenchError("no case given");
  if (config.out_dir.empty()) throw BenchError("no output directory given");
  if (config.formulations.empty()) throw BenchError("no formulations enabled");
  for (const std::string& f : config.formulations) check_formulation_name(f);
  if (config.workers < 1) throw BenchError("workers must be at least 1");

  const Network net = load_case_file(config.case_path);
  const std::string case_name = std::filesystem::path(config.case_path).stem().string();

  std::vector<Scenario> scenarios;
  if (!config.scenarios_path.empty()) {
    scenarios = load_scenario_file(config.scenarios_path).scenarios;
  } else if (config.generate_count > 0) {
    scenarios = generate_scenarios(net, config.generate_count, config.sigma, config.alpha_mode,
                                   config.seed);
  } else {
    throw BenchError("no scenario source given");
  }
  std::set<int> ids;
  for (const Scenario& s : scenarios) {
    if (!ids.insert(s.id).second)
      throw BenchError("duplicate scenario id " + std::to_string(s.id));
    try {
      check_scenario(net, s);
    } catch (const ScenarioError& e) {
      throw BenchError("scenario " + std::to_string(s.id) + " does not match the case: " +
                       e.what());
    }
  }
  bool want_acx = std::find(config.formulations.begin(), config.formulations.end(), "acx") !=
                  config.formulations.end();
  if (want_acx && net.num_lines() > config.max_switchable)
    throw BenchError("acx enumerates at most " + std::to_string(config.max_switchable) +
                     " lines; the case has " + std::to_string(net.num_lines()));

  std::filesystem::create_directories(config.out_dir);
  const std::string path = results_path(config.out_dir);
  std::vector<RunRecord> existing;
  if (std::filesystem::exists(path)) {
    std::string text = read_file(path);
    existing = parse_results(text);
    std::size_t keep = text.rfind('\n');
    if (keep != text.size() - 1) {
      // drop the partial line of an interrupted run
      std::filesystem::resize_file(path, keep == std::string::npos ? 0 : keep + 1);
    }
    for (const RunRecord& r : existing)
      if (r.case_name != case_name)
        throw BenchError("results file holds case '" + r.case_name + "', not '" + case_name +
                         "'");
  } else {
    std::ofstream out(path, std::ios::binary);
    out << kResultsHeader << '\n';
    if (!out) throw BenchError("cannot write " + path);
  }

  std::set<std::pair<int, std::string>> done;
  std::map<std::string, std::size_t> timeouts;
  for (const RunRecord& r : existing) {
    done.insert({r.scenario_id, r.formulation});
    if (r.solve_status == "time_limit") ++timeouts[r.formulation];
  }

  SolveOptions solver = config.solver;
  solver.time_limit = config.time_limit;

  std::vector<EnumeratedTopology> table;
  double table_time = 0.0;
  auto ensure_table = [&] {
    if (!table.empty()) return;
    auto t0 = std::chrono::steady_clock::now();
    table = enumerate_topologies(net, config.max_switchable, config.redispatch, config.workers);
    table_time = seconds_since(t0);
  };

  RunReport report;
  report.scenarios = scenarios.size();
  report.records_existing = existing.size();
  std::set<std::string> skipped;

  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw BenchError("cannot append to " + path);

  const std::size_t batch = static_cast<std::size_t>(config.workers);
  for (std::size_t first = 0; first < scenarios.size(); first += batch) {
    std::size_t last = std::min(scenarios.size(), first + batch);
    std::vector<std::string> active;
    for (const std::string& f : config.formulations) {
      if (config.skip_if_timeout_frac &&
          static_cast<double>(timeouts[f]) >
              *config.skip_if_timeout_frac * static_cast<double>(scenarios.size())) {
        skipped.insert(f);
        continue;
      }
      active.push_back(f);
    }
    std::vector<std::vector<std::string>> todo(last - first);
    bool any = false;
    for (std::size_t k = first; k < last; ++k) {
      for (const std::string& f : active) {
        if (!done.count({scenarios[k].id, f})) {
          todo[k - first].push_back(f);
          if (f == "acx") ensure_table();
          any = true;
        }
      }
    }
    if (!any) continue;

    std::vector<std::vector<RunRecord>> results(last - first);
    std::vector<std::exception_ptr> errors(last - first);
    auto work = [&](std::size_t k) {
      try {
        for (const std::string& f : todo[k])
          results[k].push_back(run_one(net, case_name, scenarios[first + k], f, solver,
                                       config.redispatch, &table, table_time));
      } catch (...) {
        errors[k] = std::current_exception();
      }
    };
    if (batch == 1) {
      work(0);
    } else {
      std::vector<std::thread> threads;
      for (std::size_t k = 0; k < last - first; ++k) threads.emplace_back(work, k);
      for (std::thread& t : threads) t.join();
    }
    // single writer, scenario order
    for (std::size_t k = 0; k < last - first; ++k) {
      if (errors[k]) std::rethrow_exception(errors[k]);
      for (const RunRecord& r : results[k]) {
        out << format_record(r) << '\n';
        done.insert({r.scenario_id, r.formulation});
        if (r.solve_status == "time_limit") ++timeouts[r.formulation];
        ++report.records_written;
        if (config.log)
          *config.log << "scenario " << r.scenario_id << ' ' << r.formulation << " obj "
                      << r.objective << " ac " << r.ac_feasible_objective << " "
                      << r.solve_status << ' ' << r.wall_time_s << "s\n";
      }
    }
    out.flush();
    if (!out) throw BenchError("write failed on " + path);
  }
  report.skipped_formulations.assign(skipped.begin(), skipped.end());
  return report;
}

const FormulationSummary* SummaryTable::find(std::string_view case_name,
                                             std::string_view f) const {
  for (const FormulationSummary& s : formulations)
    if (s.case_name == case_name && s.formulation == f) return &s;
  return nullptr;
}

const PairwiseSummary* SummaryTable::find_pair(std::string_view case_name,
                                               std::string_view first,
                                               std::string_view second) const {
  for (const PairwiseSummary& p : pairs)
    if (p.case_name == case_name && p.first == first && p.second == second) return &p;
  return nullptr;
}

SummaryTable summarize(const std::vector<RunRecord>& records) {
  if (records.empty()) throw BenchError("no results to summarize");
  SummaryTable table;

  // case -> formulation -> records
  std::map<std::string, std::map<std::string, std::vector<const RunRecord*>>> groups;
  std::map<std::string, std::set<int>> scenario_ids;
  for (const RunRecord& r : records) {
    groups[r.case_name][r.formulation].push_back(&r);
    scenario_ids[r.case_name].insert(r.scenario_id);
  }
  for (const auto& [c, ids] : scenario_ids) table.scenario_count[c] = ids.size();

  for (const auto& [case_name, by_f] : groups) {
    std::vector<std::string> names;
    for (const auto& kv : by_f) names.push_back(kv.first);
    std::sort(names.begin(), names.end(), [](const std::string& a, const std::string& b) {
      return formulation_rank(a) < formulation_rank(b);
    });
    for (const std::string& f : names) {
      const auto& rs = by_f.at(f);
      FormulationSummary s;
      s.case_name = case_name;
      s.formulation = f;
      double obj = 0.0, feas = 0.0, over = 0.0;
      std::vector<double> times;
      for (const RunRecord* r : rs) {
        times.push_back(r->wall_time_s);
        if (r->solve_status == "time_limit") ++s.time_limited;
        if (!r->has_solution()) continue;
        ++s.records;
        obj += r->objective;
        feas += r->ac_feasible_objective;
        over += r->overestimate_frac();
        if (r->overestimate_frac() > 0.20) ++s.overestimate_count;
      }
      if (s.records > 0) {
        double n = static_cast<double>(s.records);
        s.mean_objective = obj / n;
        s.mean_ac_objective = feas / n;
        s.mean_overestimate = over / n;
      }
      s.diff = s.mean_objective - s.mean_ac_objective;
      std::sort(times.begin(), times.end());
      std::size_t m = times.size();
      s.median_wall_time = m % 2 ? times[m / 2] : 0.5 * (times[m / 2 - 1] + times[m / 2]);
      table.formulations.push_back(s);
    }
    for (const auto& [a, b] : kSummaryPairs) {
      auto ia = by_f.find(std::string(a));
      auto ib = by_f.find(std::string(b));
      if (ia == by_f.end() || ib == by_f.end()) continue;
      std::map<int, double> second;
      for (const RunRecord* r : ib->second)
        if (r->has_solution()) second[r->scenario_id] = r->ac_feasible_objective;
      PairwiseSummary p;
      p.case_name = case_name;
      p.first = a;
      p.second = b;
      double sum = 0.0;
      for (const RunRecord* r : ia->second) {
        if (!r->has_solution()) continue;
        auto it = second.find(r->scenario_id);
        if (it == second.end()) continue;
        sum += r->ac_feasible_objective - it->second;
        ++p.scenarios;
      }
      if (p.scenarios == 0) continue;
      p.mean_ac_difference = sum / static_cast<double>(p.scenarios);
      table.pairs.push_back(p);
    }
  }
  return table;
}

namespace {

std::string cell(double v, int width) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%*.6f", width, v);
  return buf;
}

std::string pad(std::string_view s, int width) {
  std::string out(s);
  if (static_cast<int>(out.size()) < width) out.insert(0, width - out.size(), ' ');
  return out;
}

std::string pad_right(std::string_view s, int width) {
  std::string out(s);
  if (static_cast<int>(out.size()) < width) out.append(width - out.size(), ' ');
  return out;
}

}  // namespace

std::string render_tables(const SummaryTable& t) {
  std::ostringstream os;
  int cw = 4;
  for (const auto& [c, n] : t.scenario_count) cw = std::max(cw, static_cast<int>(c.size()));
  const int w = 10;

  os << "Average objective, AC-feasible objective and difference\n";
  os << pad_right("case", cw);
  for (std::string_view f : kBenchFormulations) {
    std::string n = display_name(f);
    os << " | " << pad(n + " obj", w) << ' ' << pad(n + " feas", w) << ' ' << pad("diff", w);
  }
  os << '\n';
  for (const auto& [c, n] : t.scenario_count) {
    os << pad_right(c, cw);
    for (std::string_view f : kBenchFormulations) {
      const FormulationSummary* s = t.find(c, f);
      os << " | ";
      if (!s || s->records == 0) {
        os << pad("--", w) << ' ' << pad("--", w) << ' ' << pad("--", w);
      } else {
        os << cell(s->mean_objective, w) << ' ' << cell(s->mean_ac_objective, w) << ' '
           << cell(s->diff, w);
      }
    }
    os << '\n';
  }

  os << "\nDifference of AC-feasible objectives\n";
  os << pad_right("case", cw);
  for (const auto& [a, b] : kSummaryPairs)
    os << " | " << pad(display_name(a) + "-" + display_name(b), w);
  os << '\n';
  for (const auto& [c, n] : t.scenario_count) {
    os << pad_right(c, cw);
    for (const auto& [a, b] : kSummaryPairs) {
      const PairwiseSummary* p = t.find_pair(c, a, b);
      os << " | " << (p ? cell(p->mean_ac_difference, w) : pad("--", w));
    }
    os << '\n';
  }

  os << "\nScenarios where the load delivered is overestimated by more than 20%\n";
  os << pad_right("case", cw) << " | " << pad("scenarios", w);
  for (std::string_view f : kBenchFormulations) os << " | " << pad(display_name(f), w);
  os << '\n';
  for (const auto& [c, n] : t.scenario_count) {
    os << pad_right(c, cw) << " | " << pad(std::to_string(n), w);
    for (std::string_view f : kBenchFormulations) {
      const FormulationSummary* s = t.find(c, f);
      os << " | " << (s ? pad(std::to_string(s->overestimate_count), w) : pad("--", w));
    }
    os << '\n';
  }

  os << "\nMedian solve time (s) and time-limited solves\n";
  os << pad_right("case", cw);
  for (std::string_view f : kBenchFormulations)
    os << " | " << pad(display_name(f) + " time", w) << ' ' << pad("limited", 7);
  os << '\n';
  for (const auto& [c, n] : t.scenario_count) {
    os << pad_right(c, cw);
    for (std::string_view f : kBenchFormulations) {
      const FormulationSummary* s = t.find(c, f);
      os << " | ";
      if (!s) {
        os << pad("--", w) << ' ' << pad("--", 7);
      } else {
        os << cell(s->median_wall_time, w) << ' ' << pad(std::to_string(s->time_limited), 7);
      }
    }
    os << '\n';
  }
  return os.str();
}

double record_field(const RunRecord& r, std::string_view field) {
  if (field == "objective") return r.objective;
  if (field == "load" || field == "load_served_frac") return r.load_served_frac;
  if (field == "risk" || field == "risk_served_frac") return r.risk_served_frac;
  if (field == "time" || field == "wall_time_s") return r.wall_time_s;
  if (field == "alpha") return r.alpha;
  if (field == "gap") return r.gap;
  if (field == "nodes") return static_cast<double>(r.nodes);
  if (field == "ac_feasible_load_frac") return r.ac_feasible_load_frac;
  if (field == "ac_feasible_objective") return r.ac_feasible_objective;
  if (field == "overestimate_frac") return r.overestimate_frac();
  throw BenchError("unknown field '" + std::string(field) + "'");
}

std::vector<double> rolling_nearest_mean(const std::vector<double>& alpha,
                                         const std::vector<double>& y, std::size_t window) {
  if (alpha.size() != y.size()) throw BenchError("alpha and y differ in length");
  if (window == 0) throw BenchError("window must be positive");
  const std::size_t n = alpha.size();
  for (std::size_t i = 1; i < n; ++i)
    if (alpha[i] < alpha[i - 1]) throw BenchError("alpha must be sorted");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = i, hi = i;
    while (hi - lo + 1 < window && (lo > 0 || hi + 1 < n)) {
      bool left = lo > 0 && (hi + 1 == n || alpha[i] - alpha[lo - 1] <= alpha[hi + 1] - alpha[i]);
      if (left) --lo;
      else ++hi;
    }
    double sum = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) sum += y[k];
    out[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

namespace {

std::string_view series_color(std::string_view f) {
  if (f == "nf") return "#1f77b4";
  if (f == "dc") return "#ff7f0e";
  if (f == "soc") return "#2ca02c";
  if (f == "acx") return "#d62728";
  return "#7f7f7f";
}

std::string_view field_label(std::string_view field) {
  if (field == "objective") return "objective";
  if (field == "load" || field == "load_served_frac") return "load served (fraction)";
  if (field == "risk" || field == "risk_served_frac") return "risk energized (fraction)";
  if (field == "time" || field == "wall_time_s") return "solve time (s)";
  return field;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

}  // namespace

std::string plot_scatter(const std::vector<RunRecord>& records, std::string_view y_field) {
  struct Series {
    std::string name;
    std::vector<std::pair<double, double>> pts;
  };
  std::vector<Series> series;
  for (const RunRecord& r : records) {
    double y = record_field(r, y_field);
    if (!std::isfinite(y) || !std::isfinite(r.alpha)) continue;
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const Series& s) { return s.name == r.formulation; });
    if (it == series.end()) {
      series.push_back({r.formulation, {}});
      it = series.end() - 1;
    }
    it->pts.emplace_back(r.alpha, y);
  }
  std::sort(series.begin(), series.end(), [](const Series& a, const Series& b) {
    return formulation_rank(a.name) < formulation_rank(b.name);
  });

  double xmin = 0.0, xmax = 1.0;
  double ymin = kInf, ymax = -kInf;
  for (const Series& s : series)
    for (auto [x, y] : s.pts) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (series.empty()) ymin = 0.0, ymax = 1.0;
  if (ymin >= 0.0 && ymax <= 1.0) {
    ymin = 0.0;
    ymax = 1.0;
  } else if (ymax - ymin < 1e-12) {
    ymin -= 0.5;
    ymax += 0.5;
  } else {
    double padv = 0.05 * (ymax - ymin);
    ymin -= padv;
    ymax += padv;
  }

  const double W = 640, H = 420, L = 70, R = 110, T = 20, B = 50;
  const double pw = W - L - R, ph = H - T - B;
  auto sx = [&](double x) { return L + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return T + (ymax - y) / (ymax - ymin) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(W) << "\" height=\""
     << num(H) << "\" viewBox=\"0 0 " << num(W) << ' ' << num(H) << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << num(W) << "\" height=\"" << num(H)
     << "\" fill=\"white\"/>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect x=\"" << num(L) << "\" y=\"" << num(T) << "\" width=\"" << num(pw)
     << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    double xv = xmin + (xmax - xmin) * k / 5.0;
    double yv = ymin + (ymax - ymin) * k / 5.0;
    os << "<line x1=\"" << num(sx(xv)) << "\" y1=\"" << num(T + ph) << "\" x2=\"" << num(sx(xv))
       << "\" y2=\"" << num(T + ph + 4) << "\" stroke=\"black\"/>";
    os << "<text x=\"" << num(sx(xv)) << "\" y=\"" << num(T + ph + 16)
       << "\" text-anchor=\"middle\">" << tick(xv) << "</text>\n";
    os << "<line x1=\"" << num(L - 4) << "\" y1=\"" << num(sy(yv)) << "\" x2=\"" << num(L)
       << "\" y2=\"" << num(sy(yv)) << "\" stroke=\"black\"/>";
    os << "<text x=\"" << num(L - 6) << "\" y=\"" << num(sy(yv) + 4)
       << "\" text-anchor=\"end\">" << tick(yv) << "</text>\n";
  }
  os << "<text x=\"" << num(L + pw / 2) << "\" y=\"" << num(H - 10)
     << "\" text-anchor=\"middle\">alpha</text>\n";
  os << "<text x=\"16\" y=\"" << num(T + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << num(T + ph / 2) << ")\">" << field_label(y_field) << "</text>\n";

  int legend = 0;
  for (Series& s : series) {
    std::stable_sort(s.pts.begin(), s.pts.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<double> xs, ys;
    for (auto [x, y] : s.pts) {
      xs.push_back(x);
      ys.push_back(y);
    }
    std::vector<double> trend = rolling_nearest_mean(xs, ys, 30);
    std::string_view color = series_color(s.name);
    os << "<g class=\"series\" data-formulation=\"" << s.name << "\">\n";
    for (std::size_t i = 0; i < xs.size(); ++i)
      os << "<circle cx=\"" << num(sx(xs[i])) << "\" cy=\"" << num(sy(ys[i]))
         << "\" r=\"2\" fill=\"" << color << "\" fill-opacity=\"0.5\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i)
      os << (i ? " " : "") << num(sx(xs[i])) << ',' << num(sy(trend[i]));
    os << "\"/>\n</g>\n";
    double ly = T + 10 + 16 * legend++;
    os << "<line x1=\"" << num(L + pw + 10) << "\" y1=\"" << num(ly) << "\" x2=\""
       << num(L + pw + 30) << "\" y2=\"" << num(ly) << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>";
    os << "<text x=\"" << num(L + pw + 35) << "\" y=\"" << num(ly + 4) << "\">"
       << display_name(s.name) << "</text>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace ops
