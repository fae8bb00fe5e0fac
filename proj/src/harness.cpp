#include "gridcascade/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "gridcascade/errors.hpp"

namespace cascade {

namespace {

using nlohmann::json;

// %.12g keeps reports readable and is still far tighter than any tolerance
// used by the analyses.
std::string format_value(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.12g", value);
  return buffer;
}

int default_jobs(size_t tasks) {
  const unsigned hardware = std::thread::hardware_concurrency();
  const size_t jobs = std::min<size_t>(tasks, hardware == 0 ? 2 : hardware);
  return static_cast<int>(std::max<size_t>(1, jobs));
}

/// Runs tasks[0..n) on a small pool; each task writes only its own slot.
void run_parallel(size_t count, int jobs, const std::function<void(size_t)>& task) {
  if (count == 0) return;
  const int workers = jobs > 0 ? std::min<int>(jobs, static_cast<int>(count))
                               : default_jobs(count);
  if (workers <= 1) {
    for (size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        task(i);
      }
    });
  }
  for (std::thread& thread : pool) thread.join();
}

json line_json(const GridCase& grid_case, NodeId a, NodeId b) {
  return json::array(
      {grid_case.internal_to_external(a), grid_case.internal_to_external(b)});
}

}  // namespace

const char* to_string(LineLabel label) {
  switch (label) {
    case LineLabel::safe: return "safe";
    case LineLabel::static_failure: return "static-failure";
    case LineLabel::dynamic_only_failure: return "dynamic-only-failure";
  }
  return "unknown";
}

ClassificationTable classify_all_lines(const GridCase& grid_case, const SimConfig& sim,
                                       int jobs) {
  ClassificationTable table;
  table.rows.resize(grid_case.topology.lines.size());

  run_parallel(grid_case.topology.lines.size(), jobs, [&](size_t idx) {
    const Line& line = grid_case.topology.lines[idx];
    LineClassification row;
    row.line = line;
    try {
      CascadeReport static_report = static_cascade(grid_case.topology, grid_case.params,
                                                   line.a, line.b, sim.threshold);
      row.static_nc = static_report.n_c;
      CascadeReport dynamic_report = simulate_cascade(grid_case.topology, grid_case.params,
                                                      line.a, line.b, sim,
                                                      ControlConfig::off());
      row.dynamic_nc = dynamic_report.n_c;
      row.dynamic_outcome = dynamic_report.outcome;
      if (row.static_nc > 0) {
        row.label = LineLabel::static_failure;
      } else if (row.dynamic_nc > 0) {
        row.label = LineLabel::dynamic_only_failure;
      } else {
        row.label = LineLabel::safe;
      }
    } catch (const Error& error) {
      row.error = error.what();
    }
    table.rows[idx] = std::move(row);
  });

  for (const LineClassification& row : table.rows) {
    if (!row.error.empty()) continue;
    switch (row.label) {
      case LineLabel::safe: ++table.safe_count; break;
      case LineLabel::static_failure: ++table.static_count; break;
      case LineLabel::dynamic_only_failure: ++table.dynamic_only_count; break;
    }
  }
  return table;
}

SweepCurve gain_sweep(const GridCase& grid_case, NodeId fault_i, NodeId fault_j,
                      std::vector<double> gains, const ControlConfig& control_template,
                      const SimConfig& sim, int jobs) {
  std::sort(gains.begin(), gains.end());
  SweepCurve curve;
  curve.fault_a = std::min(fault_i, fault_j);
  curve.fault_b = std::max(fault_i, fault_j);
  curve.mode = control_template.mode;
  curve.points.resize(gains.size());

  run_parallel(gains.size(), jobs, [&](size_t idx) {
    SweepPoint point;
    point.gain = gains[idx];
    ControlConfig control = control_template;
    control.gain = gains[idx];
    try {
      CascadeReport report =
          simulate_cascade(grid_case.topology, grid_case.params, fault_i, fault_j, sim,
                           control);
      point.n_c = report.n_c;
      point.outcome = report.outcome;
    } catch (const Error& error) {
      point.error = error.what();
    }
    curve.points[idx] = std::move(point);
  });
  return curve;
}

std::vector<double> default_gain_grid(const GridCase& grid_case, NodeId fault_i,
                                      NodeId fault_j) {
  const GridTopology post_fault = remove_line(grid_case.topology, fault_i, fault_j);
  const CriticalGain critical = critical_gain(post_fault, uniform_linear_params(grid_case));
  const double top = 1.1 * critical.value;
  std::vector<double> gains{0.0};
  if (top <= 0.0) return gains;
  const int points = 24;
  const double low = top / 100.0;
  for (int i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / (points - 1);
    gains.push_back(low * std::pow(top / low, t));
  }
  return gains;
}

LinearModelParams uniform_linear_params(const GridCase& grid_case) {
  const auto& topology = grid_case.topology;
  const auto& params = grid_case.params;
  if (topology.lines.empty()) throw ValidationError("case has no lines");
  const double k = topology.lines.front().coupling;
  for (const Line& line : topology.lines) {
    if (std::abs(line.coupling - k) > 1e-9 * std::max(1.0, std::abs(k))) {
      throw ValidationError(
          "critical-gain analysis assumes one uniform coupling k on every line; "
          "this case is weighted (found " + format_value(line.coupling) + " vs " +
          format_value(k) + ")");
    }
  }
  const double gamma = params.damping[0];
  for (int i = 0; i < topology.node_count; ++i) {
    if (std::abs(params.damping[i] - gamma) > 1e-9 * std::max(1.0, std::abs(gamma))) {
      throw ValidationError(
          "critical-gain analysis assumes one uniform damping coefficient; node " +
          std::to_string(grid_case.internal_to_external(i)) + " differs");
    }
    if (std::abs(params.inertia[i] - 1.0) > 1e-9) {
      throw ValidationError(
          "critical-gain analysis assumes unit inertia everywhere; node " +
          std::to_string(grid_case.internal_to_external(i)) +
          " has I = " + format_value(params.inertia[i]) +
          " (rescale time/parameters to I = 1 first)");
    }
  }
  LinearModelParams linear;
  linear.coupling = k;
  linear.damping = gamma;
  return linear;
}

std::vector<CriticalGainRow> critical_gain_table(
    const GridCase& grid_case, const std::vector<std::pair<NodeId, NodeId>>& faults) {
  const LinearModelParams linear = uniform_linear_params(grid_case);
  std::vector<CriticalGainRow> rows;
  rows.reserve(faults.size());
  for (const auto& [i, j] : faults) {
    CriticalGainRow row;
    row.line = Line::make(i, j, 0.0);
    try {
      const GridTopology post_fault = remove_line(grid_case.topology, i, j);
      const CriticalGain critical = critical_gain(post_fault, linear);
      row.gain = critical.value;
      row.lambda2 = critical.lambda2;
      row.degenerate = critical.degenerate;
    } catch (const Error& error) {
      row.error = error.what();
    }
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const CriticalGainRow& x, const CriticalGainRow& y) {
    return std::make_pair(x.line.a, x.line.b) < std::make_pair(y.line.a, y.line.b);
  });
  return rows;
}

std::vector<SweepCurve> pinning_experiment(const GridCase& grid_case,
                                           const std::vector<NodeId>& pinned,
                                           const std::vector<std::pair<NodeId, NodeId>>& faults,
                                           const std::vector<double>& gains,
                                           const SimConfig& sim, int jobs) {
  const ControlConfig control =
      ControlConfig::pinning(0.0, pinned, grid_case.topology.node_count);
  std::vector<SweepCurve> curves;
  curves.reserve(faults.size());
  for (const auto& [i, j] : faults) {
    curves.push_back(gain_sweep(grid_case, i, j, gains, control, sim, jobs));
  }
  return curves;
}

std::string sweep_to_csv(const SweepCurve& curve) {
  std::ostringstream out;
  out << "k_c,n_c\n";
  for (const SweepPoint& point : curve.points) {
    out << format_value(point.gain) << "," << point.n_c << "\n";
  }
  return out.str();
}

std::string sweep_to_json(const SweepCurve& curve, const GridCase& grid_case) {
  json root;
  root["schema"] = "gridcascade-sweep/1";
  root["fault"] = line_json(grid_case, curve.fault_a, curve.fault_b);
  root["mode"] = to_string(curve.mode);
  json points = json::array();
  for (const SweepPoint& point : curve.points) {
    json entry;
    entry["k_c"] = point.gain;
    entry["n_c"] = point.n_c;
    entry["outcome"] = to_string(point.outcome);
    if (!point.error.empty()) entry["error"] = point.error;
    points.push_back(entry);
  }
  root["points"] = points;
  return root.dump(2) + "\n";
}

std::string classification_to_csv(const ClassificationTable& table,
                                  const GridCase& grid_case) {
  std::ostringstream out;
  out << "line_i,line_j,label,static_n_c,dynamic_n_c,dynamic_outcome,error\n";
  for (const LineClassification& row : table.rows) {
    out << grid_case.internal_to_external(row.line.a) << ","
        << grid_case.internal_to_external(row.line.b) << "," << to_string(row.label) << ","
        << row.static_nc << "," << row.dynamic_nc << "," << to_string(row.dynamic_outcome)
        << "," << row.error << "\n";
  }
  return out.str();
}

std::string classification_to_json(const ClassificationTable& table,
                                   const GridCase& grid_case) {
  json root;
  root["schema"] = "gridcascade-classification/1";
  json safe = json::array();
  json static_failures = json::array();
  json dynamic_only = json::array();
  json errors = json::array();
  for (const LineClassification& row : table.rows) {
    if (!row.error.empty()) {
      json entry;
      entry["line"] = line_json(grid_case, row.line.a, row.line.b);
      entry["error"] = row.error;
      errors.push_back(entry);
      continue;
    }
    switch (row.label) {
      case LineLabel::safe:
        safe.push_back(line_json(grid_case, row.line.a, row.line.b));
        break;
      case LineLabel::static_failure:
        static_failures.push_back(line_json(grid_case, row.line.a, row.line.b));
        break;
      case LineLabel::dynamic_only_failure:
        dynamic_only.push_back(line_json(grid_case, row.line.a, row.line.b));
        break;
    }
  }
  root["safe"] = safe;
  root["static_failure"] = static_failures;
  root["dynamic_only_failure"] = dynamic_only;
  if (!errors.empty()) root["errors"] = errors;
  root["counts"] = {{"safe", table.safe_count},
                    {"static_failure", table.static_count},
                    {"dynamic_only_failure", table.dynamic_only_count}};
  return root.dump(2) + "\n";
}

std::string critical_gains_to_csv(const std::vector<CriticalGainRow>& rows,
                                  const GridCase& grid_case) {
  std::ostringstream out;
  out << "line_i,line_j,k_c_critical,lambda_2,degenerate,error\n";
  for (const CriticalGainRow& row : rows) {
    out << grid_case.internal_to_external(row.line.a) << ","
        << grid_case.internal_to_external(row.line.b) << ",";
    if (row.error.empty()) {
      out << format_value(row.gain) << "," << format_value(row.lambda2) << ","
          << (row.degenerate ? "yes" : "no") << ",";
    } else {
      out << ",,," << row.error;
    }
    out << "\n";
  }
  return out.str();
}

std::string critical_gains_to_json(const std::vector<CriticalGainRow>& rows,
                                   const GridCase& grid_case) {
  json root;
  root["schema"] = "gridcascade-critical-gain/1";
  json entries = json::array();
  for (const CriticalGainRow& row : rows) {
    json entry;
    entry["line"] = line_json(grid_case, row.line.a, row.line.b);
    if (row.error.empty()) {
      entry["k_c_critical"] = row.gain;
      entry["lambda_2"] = row.lambda2;
      entry["degenerate"] = row.degenerate;
    } else {
      entry["error"] = row.error;
    }
    entries.push_back(entry);
  }
  root["lines"] = entries;
  return root.dump(2) + "\n";
}

std::string cascade_report_to_json(const CascadeReport& report, const GridCase& grid_case) {
  json root;
  root["schema"] = "gridcascade-cascade/1";
  root["fault"] = line_json(grid_case, report.fault_a, report.fault_b);
  root["n_c"] = report.n_c;
  root["outcome"] = to_string(report.outcome);
  root["final_time"] = report.final_time;
  if (report.settle_time) root["settle_time"] = *report.settle_time;
  json tripped = json::array();
  for (const TrippedLine& trip : report.tripped) {
    json entry;
    entry["line"] = line_json(grid_case, trip.a, trip.b);
    entry["time"] = trip.time;
    tripped.push_back(entry);
  }
  root["tripped"] = tripped;
  json surviving = json::array();
  for (const Line& line : report.surviving_lines) {
    surviving.push_back(line_json(grid_case, line.a, line.b));
  }
  root["surviving_lines"] = surviving;
  return root.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("failed writing " + path);
}

CsvTrajectoryWriter::CsvTrajectoryWriter(std::ostream& out, const GridCase& grid_case)
    : out_(out), case_(grid_case), all_lines_(grid_case.topology.lines) {
  out_ << "time";
  for (int i = 0; i < grid_case.topology.node_count; ++i) {
    out_ << ",theta_" << grid_case.internal_to_external(i);
  }
  for (int i = 0; i < grid_case.topology.node_count; ++i) {
    out_ << ",omega_" << grid_case.internal_to_external(i);
  }
  for (const Line& line : all_lines_) {
    out_ << ",flow_" << grid_case.internal_to_external(line.a) << "_"
         << grid_case.internal_to_external(line.b);
  }
  out_ << "\n";
}

void CsvTrajectoryWriter::record(const DynamicState& state, const GridTopology& operating,
                                 const FlowMap& flows) {
  out_ << format_value(state.time);
  for (Eigen::Index i = 0; i < state.angles.size(); ++i) {
    out_ << "," << format_value(state.angles[i]);
  }
  for (Eigen::Index i = 0; i < state.velocities.size(); ++i) {
    out_ << "," << format_value(state.velocities[i]);
  }
  size_t cursor = 0;
  for (const Line& line : all_lines_) {
    out_ << ",";
    // Operating lines appear in the same relative order as the full set.
    if (cursor < operating.lines.size() && operating.lines[cursor].a == line.a &&
        operating.lines[cursor].b == line.b) {
      out_ << format_value(flows.values[cursor]);
      ++cursor;
    }
  }
  out_ << "\n";
}

}  // namespace cascade
