#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "gridcascade/cases.hpp"
#include "gridcascade/dynamics.hpp"
#include "gridcascade/spectral.hpp"

namespace cascade {

enum class LineLabel {
  safe,                  // neither engine trips anything further
  static_failure,        // the post-fault equilibrium itself overloads lines
  dynamic_only_failure,  // only the transient between equilibria trips lines
};

const char* to_string(LineLabel label);

struct LineClassification {
  Line line;
  LineLabel label = LineLabel::safe;
  int static_nc = 0;
  int dynamic_nc = 0;
  Outcome dynamic_outcome = Outcome::settled;
  std::string error;  // per-line solver failure, recorded instead of aborting
};

struct ClassificationTable {
  std::vector<LineClassification> rows;  // one per line, topology order
  int safe_count = 0;
  int static_count = 0;
  int dynamic_only_count = 0;
};

/// Runs the static and the uncontrolled dynamic cascade for every possible
/// initial fault and labels each line. Per-line solver failures land in the
/// row's error field. Runs execute concurrently (jobs <= 0 picks a default);
/// results are ordered by line, never by completion.
ClassificationTable classify_all_lines(const GridCase& grid_case, const SimConfig& sim,
                                       int jobs = 0);

struct SweepPoint {
  double gain = 0.0;
  int n_c = 0;
  Outcome outcome = Outcome::settled;
  std::string error;
};

struct SweepCurve {
  NodeId fault_a = 0;
  NodeId fault_b = 0;
  ControlMode mode = ControlMode::full;
  std::vector<SweepPoint> points;  // ordered by gain
};

/// n_c as a function of the control gain for one fault location. The control
/// template fixes mode and pinned set; its gain field is ignored.
SweepCurve gain_sweep(const GridCase& grid_case, NodeId fault_i, NodeId fault_j,
                      std::vector<double> gains, const ControlConfig& control_template,
                      const SimConfig& sim, int jobs = 0);

/// {0} plus 24 log-spaced gains up to 1.1 * critical gain of the fault.
std::vector<double> default_gain_grid(const GridCase& grid_case, NodeId fault_i,
                                      NodeId fault_j);

struct CriticalGainRow {
  Line line;
  double gain = 0.0;
  double lambda2 = 0.0;
  bool degenerate = false;
  std::string error;
};

/// Analytic critical gain per fault. Requires the uniform-parameter regime
/// (identical couplings, damping, inertia 1); refuses otherwise.
std::vector<CriticalGainRow> critical_gain_table(
    const GridCase& grid_case, const std::vector<std::pair<NodeId, NodeId>>& faults);

/// Extracts the uniform linear-analysis parameters, or throws ValidationError
/// explaining which parameter breaks the uniformity assumption.
LinearModelParams uniform_linear_params(const GridCase& grid_case);

/// Pinning-control gain sweeps for several faults with one pinned set.
std::vector<SweepCurve> pinning_experiment(const GridCase& grid_case,
                                           const std::vector<NodeId>& pinned,
                                           const std::vector<std::pair<NodeId, NodeId>>& faults,
                                           const std::vector<double>& gains,
                                           const SimConfig& sim, int jobs = 0);

// ---------------------------------------------------------------------------
// Report emission. Deterministic: fixed column order, fixed float format;
// serializing the same results twice yields byte-identical output.

std::string sweep_to_csv(const SweepCurve& curve);
std::string sweep_to_json(const SweepCurve& curve, const GridCase& grid_case);
std::string classification_to_csv(const ClassificationTable& table, const GridCase& grid_case);
std::string classification_to_json(const ClassificationTable& table,
                                   const GridCase& grid_case);
std::string critical_gains_to_csv(const std::vector<CriticalGainRow>& rows,
                                  const GridCase& grid_case);
std::string critical_gains_to_json(const std::vector<CriticalGainRow>& rows,
                                   const GridCase& grid_case);
std::string cascade_report_to_json(const CascadeReport& report, const GridCase& grid_case);

void write_text_file(const std::string& path, const std::string& content);

/// Streams (time, angles, velocities, per-line flows) rows; tripped lines
/// leave their column empty from the trip on. Column order follows the
/// original line order.
class CsvTrajectoryWriter final : public TrajectorySink {
 public:
  CsvTrajectoryWriter(std::ostream& out, const GridCase& grid_case);
  void record(const DynamicState& state, const GridTopology& operating,
              const FlowMap& flows) override;

 private:
  std::ostream& out_;
  const GridCase& case_;
  std::vector<Line> all_lines_;
};

}  // namespace cascade
