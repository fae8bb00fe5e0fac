// Command-line front end: case ingestion, cascade simulation, line
// classification, gain sweeps, and critical-gain tables.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridcascade/cases.hpp"
#include "gridcascade/cdf.hpp"
#include "gridcascade/errors.hpp"
#include "gridcascade/harness.hpp"

namespace {

using namespace cascade;

struct CommonOptions {
  std::string case_path;
  std::optional<double> step;
  std::optional<double> horizon;
  std::optional<double> alpha;
  std::optional<double> settle_tol;
  std::optional<double> settle_window;
  std::optional<double> damping;
  std::optional<double> inertia;
  std::optional<double> inertia_default;
  std::string sidecar_path;
  bool normalize = false;
  std::string format = "csv";
  std::string out_path;
  int jobs = 0;
};

void add_common(CLI::App* cmd, CommonOptions& options, bool with_case = true) {
  if (with_case) {
    cmd->add_option("case", options.case_path,
                    "case file (native gridcase or IEEE CDF), or 'five-node'")
        ->required();
  }
  cmd->add_option("--step", options.step, "integrator step h in seconds (default 1e-3)");
  cmd->add_option("--t-max", options.horizon, "simulation horizon in seconds (default 200)");
  cmd->add_option("--alpha", options.alpha, "overload threshold override");
  cmd->add_option("--settle-tol", options.settle_tol,
                  "settle velocity tolerance in rad/s (default 1e-6)");
  cmd->add_option("--settle-window", options.settle_window,
                  "quiet window in seconds (default 1)");
  cmd->add_option("--damping", options.damping, "set every node's damping");
  cmd->add_option("--inertia", options.inertia, "set every node's inertia");
  cmd->add_option("--inertia-default", options.inertia_default,
                  "inertia for nodes without a sidecar entry");
  cmd->add_option("--machine-params", options.sidecar_path,
                  "sidecar parameter table (format sidecar/1)");
  cmd->add_flag("--normalize-powers", options.normalize,
                "unit loads, generators at n_loads/n_generators");
  cmd->add_option("--format", options.format, "report format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--out", options.out_path, "write the report to this path");
  cmd->add_option("--jobs", options.jobs, "worker threads for sweeps (0 = auto)");
}

GridCase load_case(const CommonOptions& options) {
  GridCase grid;
  if (options.case_path == "five-node") {
    grid = builtin_five_node();
  } else {
    ParseOptions parse_options;
    parse_options.auto_normalize = options.normalize;
    grid = load_grid_file(options.case_path, parse_options);
  }

  ParamOverrides overrides;
  if (!options.sidecar_path.empty()) overrides = load_sidecar_file(options.sidecar_path);
  if (options.damping) overrides.damping_all = options.damping;
  if (options.inertia) overrides.inertia_all = options.inertia;
  if (options.inertia_default) overrides.inertia_default = options.inertia_default;
  if (options.alpha) overrides.alpha = options.alpha;
  if (!overrides.empty()) grid = apply_overrides(std::move(grid), overrides);
  if (options.normalize) grid = normalize_powers(std::move(grid));

  if (options.step) grid.defaults.step = *options.step;
  if (options.horizon) grid.defaults.horizon = *options.horizon;
  if (options.settle_tol) grid.defaults.settle_velocity_tol = *options.settle_tol;
  if (options.settle_window) grid.defaults.settle_window = *options.settle_window;

  ValidationResult topo_check = validate_topology(grid.topology);
  if (!topo_check.ok()) throw ValidationError(topo_check.summary());
  return grid;
}

std::pair<int, int> parse_fault(const std::string& text) {
  const size_t comma = text.find(',');
  if (comma == std::string::npos) {
    throw Error(ErrorCategory::usage, "--fault expects 'i,j', got '" + text + "'");
  }
  try {
    return {std::stoi(text.substr(0, comma)), std::stoi(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCategory::usage, "--fault expects 'i,j', got '" + text + "'");
  }
}

std::vector<NodeId> parse_pinned(const GridCase& grid, const std::string& text,
                                 bool generators_too) {
  std::vector<NodeId> pinned;
  if (generators_too) {
    pinned = grid.topology.generators;
  }
  if (!text.empty()) {
    std::istringstream stream(text);
    std::string token;
    while (std::getline(stream, token, ',')) {
      try {
        pinned.push_back(grid.external_to_internal(std::stoi(token)));
      } catch (const std::invalid_argument&) {
        throw Error(ErrorCategory::usage, "--pinned expects node ids, got '" + token + "'");
      } catch (const std::out_of_range&) {
        throw Error(ErrorCategory::usage, "--pinned expects node ids, got '" + token + "'");
      }
    }
  }
  return pinned;
}

std::vector<double> parse_gains(const std::string& text) {
  std::vector<double> gains;
  std::istringstream stream(text);
  std::string token;
  while (std::getline(stream, token, ',')) {
    try {
      gains.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw Error(ErrorCategory::usage, "--gains expects numbers, got '" + token + "'");
    }
  }
  if (gains.empty()) throw Error(ErrorCategory::usage, "--gains is empty");
  return gains;
}

void emit(const CommonOptions& options, const std::string& content) {
  if (options.out_path.empty()) {
    std::cout << content;
  } else {
    write_text_file(options.out_path, content);
    std::cout << "wrote " << options.out_path << "\n";
  }
}

void print_report_summary(const GridCase& grid, const CascadeReport& report) {
  std::printf("fault (%d,%d): n_c = %d, outcome = %s, t_end = %.3f s\n",
              grid.internal_to_external(report.fault_a),
              grid.internal_to_external(report.fault_b), report.n_c,
              to_string(report.outcome), report.final_time);
  if (report.settle_time) std::printf("settled since t = %.3f s\n", *report.settle_time);
  for (const TrippedLine& trip : report.tripped) {
    std::printf("  tripped (%d,%d) at t = %.3f s\n", grid.internal_to_external(trip.a),
                grid.internal_to_external(trip.b), trip.time);
  }
}

int run(int argc, char** argv) {
  CLI::App app{"coupled swing-equation cascade simulator with distributed control"};
  app.require_subcommand(1);

  // classify ----------------------------------------------------------------
  CommonOptions classify_options;
  CLI::App* classify_cmd = app.add_subcommand(
      "classify", "label every line: safe, static-failure or dynamic-only-failure");
  add_common(classify_cmd, classify_options);

  // sweep -------------------------------------------------------------------
  CommonOptions sweep_options;
  std::string sweep_fault;
  std::string sweep_mode = "full";
  std::string sweep_gains;
  std::string sweep_pinned;
  bool sweep_pin_generators = false;
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "n_c as a function of the control gain for one fault");
  add_common(sweep_cmd, sweep_options);
  sweep_cmd->add_option("--fault", sweep_fault, "faulted line as 'i,j' (source ids)")
      ->required();
  sweep_cmd->add_option("--mode", sweep_mode, "control mode: full, pin or off")
      ->check(CLI::IsMember({"full", "pin", "off"}));
  sweep_cmd->add_option("--gains", sweep_gains,
                        "comma-separated gains; default is 0 plus 24 log-spaced points "
                        "up to 1.1 x critical gain");
  sweep_cmd->add_option("--pinned", sweep_pinned, "pinned nodes as 'i,j,...' (source ids)");
  sweep_cmd->add_flag("--pin-generators", sweep_pin_generators,
                      "add every generator to the pinned set");

  // critical-gain -------------------------------------------------------------
  CommonOptions critical_options;
  std::vector<std::string> critical_faults;
  CLI::App* critical_cmd = app.add_subcommand(
      "critical-gain", "analytic gain bound per fault from the post-fault spectrum");
  add_common(critical_cmd, critical_options);
  critical_cmd->add_option("--fault", critical_faults,
                           "faulted line 'i,j'; repeatable; default: every line");

  // simulate ------------------------------------------------------------------
  CommonOptions simulate_options;
  std::string simulate_fault;
  std::string simulate_mode = "full";
  std::string simulate_pinned;
  bool simulate_pin_generators = false;
  double simulate_gain = 0.0;
  std::string trace_path;
  int trace_stride = 100;
  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "one dynamic cascade run with optional trajectory dump");
  add_common(simulate_cmd, simulate_options);
  simulate_cmd->add_option("--fault", simulate_fault, "faulted line as 'i,j' (source ids)")
      ->required();
  simulate_cmd->add_option("--kc", simulate_gain, "control gain k_c (default 0)");
  simulate_cmd->add_option("--mode", simulate_mode, "control mode: full, pin or off")
      ->check(CLI::IsMember({"full", "pin", "off"}));
  simulate_cmd->add_option("--pinned", simulate_pinned, "pinned nodes as 'i,j,...'");
  simulate_cmd->add_flag("--pin-generators", simulate_pin_generators,
                         "add every generator to the pinned set");
  simulate_cmd->add_option("--trace", trace_path, "write the trajectory CSV here");
  simulate_cmd->add_option("--trace-stride", trace_stride, "record every n-th step");

  // parse-cdf -----------------------------------------------------------------
  CommonOptions cdf_options_common;
  std::string cdf_susceptance = "1/x";
  std::string cdf_balance = "slack";
  std::string cdf_out;
  CLI::App* cdf_cmd = app.add_subcommand(
      "parse-cdf", "ingest an IEEE common-data-format file and summarize or convert it");
  cdf_cmd->add_option("file", cdf_options_common.case_path, "CDF file")->required();
  cdf_cmd->add_option("--susceptance", cdf_susceptance, "coupling model: 1/x or x/z2")
      ->check(CLI::IsMember({"1/x", "x/z2"}));
  cdf_cmd->add_option("--balance", cdf_balance, "power balancing: slack, uniform or none")
      ->check(CLI::IsMember({"slack", "uniform", "none"}));
  cdf_cmd->add_option("--alpha", cdf_options_common.alpha, "overload threshold");
  cdf_cmd->add_option("--out", cdf_out, "write the case in native format to this path");

  CLI11_PARSE(app, argc, argv);

  if (classify_cmd->parsed()) {
    const GridCase grid = load_case(classify_options);
    const ClassificationTable table =
        classify_all_lines(grid, grid.defaults, classify_options.jobs);
    std::fprintf(stderr, "%d lines: %d safe, %d static failures, %d dynamic-only failures\n",
                 static_cast<int>(table.rows.size()), table.safe_count, table.static_count,
                 table.dynamic_only_count);
    emit(classify_options, classify_options.format == "json"
                               ? classification_to_json(table, grid)
                               : classification_to_csv(table, grid));
    return 0;
  }

  if (sweep_cmd->parsed()) {
    const GridCase grid = load_case(sweep_options);
    const auto [fi, fj] = parse_fault(sweep_fault);
    const auto fault = grid.fault_by_external(fi, fj);

    std::vector<double> gains;
    if (!sweep_gains.empty()) {
      gains = parse_gains(sweep_gains);
    } else {
      try {
        gains = default_gain_grid(grid, fault.first, fault.second);
      } catch (const Error& error) {
        throw Error(ErrorCategory::usage,
                    std::string("pass --gains explicitly: the default grid needs the "
                                "analytic critical gain, and ") +
                        error.what());
      }
    }

    ControlConfig control;
    if (sweep_mode == "full") control = ControlConfig::full(0.0);
    else if (sweep_mode == "off") control = ControlConfig::off();
    else {
      const auto pinned = parse_pinned(grid, sweep_pinned, sweep_pin_generators);
      if (pinned.empty()) {
        std::fprintf(stderr,
                     "warning: pinning mode with an empty pinned set applies no control "
                     "(use --pinned or --pin-generators)\n");
      }
      control = ControlConfig::pinning(0.0, pinned, grid.topology.node_count);
    }

    const SweepCurve curve = gain_sweep(grid, fault.first, fault.second, gains, control,
                                        grid.defaults, sweep_options.jobs);
    emit(sweep_options, sweep_options.format == "json" ? sweep_to_json(curve, grid)
                                                       : sweep_to_csv(curve));
    return 0;
  }

  if (critical_cmd->parsed()) {
    const GridCase grid = load_case(critical_options);
    std::vector<std::pair<NodeId, NodeId>> faults;
    if (critical_faults.empty()) {
      for (const Line& line : grid.topology.lines) faults.push_back({line.a, line.b});
    } else {
      for (const std::string& text : critical_faults) {
        const auto [fi, fj] = parse_fault(text);
        faults.push_back(grid.fault_by_external(fi, fj));
      }
    }
    const auto rows = critical_gain_table(grid, faults);
    emit(critical_options, critical_options.format == "json"
                               ? critical_gains_to_json(rows, grid)
                               : critical_gains_to_csv(rows, grid));
    return 0;
  }

  if (simulate_cmd->parsed()) {
    const GridCase grid = load_case(simulate_options);
    const auto [fi, fj] = parse_fault(simulate_fault);
    const auto fault = grid.fault_by_external(fi, fj);

    ControlConfig control;
    if (simulate_mode == "full") control = ControlConfig::full(simulate_gain);
    else if (simulate_mode == "off") control = ControlConfig::off();
    else {
      const auto pinned = parse_pinned(grid, simulate_pinned, simulate_pin_generators);
      if (pinned.empty()) {
        std::fprintf(stderr,
                     "warning: pinning mode with an empty pinned set applies no control "
                     "(use --pinned or --pin-generators)\n");
      }
      control = ControlConfig::pinning(simulate_gain, pinned, grid.topology.node_count);
    }

    SimulateOptions sim_options;
    std::ofstream trace_file;
    std::optional<CsvTrajectoryWriter> writer;
    if (!trace_path.empty()) {
      trace_file.open(trace_path, std::ios::binary);
      if (!trace_file) throw IoError("cannot open " + trace_path + " for writing");
      writer.emplace(trace_file, grid);
      sim_options.trace = &*writer;
      sim_options.trace_stride = trace_stride;
    }

    const CascadeReport report = simulate_cascade(
        grid.topology, grid.params, fault.first, fault.second, grid.defaults, control,
        sim_options);
    print_report_summary(grid, report);
    if (!simulate_options.out_path.empty()) {
      write_text_file(simulate_options.out_path, cascade_report_to_json(report, grid));
      std::printf("wrote %s\n", simulate_options.out_path.c_str());
    }
    if (!trace_path.empty()) std::printf("wrote %s\n", trace_path.c_str());
    return 0;
  }

  if (cdf_cmd->parsed()) {
    CdfOptions options;
    options.susceptance = cdf_susceptance == "1/x"
                              ? CdfOptions::Susceptance::inverse_reactance
                              : CdfOptions::Susceptance::reactance_over_impedance_sq;
    if (cdf_balance == "slack") options.balance = CdfOptions::Balance::slack_bus;
    else if (cdf_balance == "uniform") options.balance = CdfOptions::Balance::uniform;
    else options.balance = CdfOptions::Balance::none;
    if (cdf_options_common.alpha) options.alpha = *cdf_options_common.alpha;

    const CdfCase parsed = load_cdf_file(cdf_options_common.case_path, options);
    std::printf("%s\n", parsed.grid.name.c_str());
    std::printf("buses: %d, machines: %d, branch records: %d, lines after merge: %d\n",
                parsed.bus_records, parsed.machine_count, parsed.branch_records,
                static_cast<int>(parsed.grid.topology.lines.size()));
    std::printf("base %.1f MVA, imbalance %.6f p.u. (%s)\n", parsed.mva_base,
                parsed.imbalance, parsed.grid.provenance.c_str());
    if (!cdf_out.empty()) {
      write_text_file(cdf_out, serialize_grid_case(parsed.grid));
      std::printf("wrote %s\n", cdf_out.c_str());
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& error) {
    std::fprintf(stderr, "error (%s): %s\n", to_string(error.category()), error.what());
    return static_cast<int>(error.category());
  } catch (const std::exception& error) {
    std::fprintf(stderr, "error: %s\n", error.what());
    return 1;
  }
}
