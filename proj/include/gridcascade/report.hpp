#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "gridcascade/grid.hpp"

namespace cascade {

/// One removed line. The static engine records the cascade iteration index in
/// `time`; the dynamic engine records simulated seconds (end of the step that
/// detected the overload).
struct TrippedLine {
  NodeId a = 0;
  NodeId b = 0;
  double time = 0.0;
};

enum class Outcome {
  settled,              // every velocity below tolerance for a full window, no overload
  horizon_exhausted,    // T_max reached while still in transit
  islanded_unbalanced,  // the cascade split off at least one component with sum(P) != 0
};

const char* to_string(Outcome outcome);

/// Result of one cascade run (static or dynamic).
struct CascadeReport {
  NodeId fault_a = 0;
  NodeId fault_b = 0;
  std::vector<TrippedLine> tripped;  // trip order; excludes the initial fault
  int n_c = 0;                       // == tripped.size()
  Outcome outcome = Outcome::settled;
  Eigen::VectorXd final_angles;
  Eigen::VectorXd final_velocities;  // zero for the static engine
  double final_time = 0.0;           // seconds (dynamic) or iterations (static)
  std::optional<double> settle_time; // start of the quiet window, when settled
  std::vector<Line> surviving_lines;

  bool first_trip_is(NodeId i, NodeId j) const {
    return !tripped.empty() &&
           Line{std::min(i, j), std::max(i, j), 0.0}.joins(tripped.front().a,
                                                           tripped.front().b);
  }
};

}  // namespace cascade
