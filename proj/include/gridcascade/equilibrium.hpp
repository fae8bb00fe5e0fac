#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "gridcascade/grid.hpp"
#include "gridcascade/report.hpp"

namespace cascade {

/// Fraction alpha of the maximum flow a line tolerates before tripping:
/// capacity C = alpha * K.
struct OverloadThreshold {
  double alpha = 0.6;
};

/// Signed per-line flows aligned with topology.lines. Convention: for a line
/// with endpoints a < b, values[idx] = K * sin(theta_b - theta_a).
struct FlowMap {
  std::vector<double> values;
};

/// Flows for every operating line. Throws on dimension mismatch.
FlowMap line_flows(const Eigen::VectorXd& angles, const GridTopology& topology);

/// F_ij = K_ij * sin(theta_j - theta_i) for an existing line, either endpoint
/// order; swapping the endpoints flips the sign exactly.
double flow_between(const Eigen::VectorXd& angles, const GridTopology& topology, NodeId i,
                    NodeId j);

/// Indices (into topology.lines) of lines with |F| strictly above alpha * K.
/// Ties at exactly the capacity do not trip.
std::vector<int> overloaded_lines(const FlowMap& flows, const GridTopology& topology,
                                  OverloadThreshold threshold);

/// Power-balance residual of the synchronous fixed point, per node:
/// r_i = P_i + sum_j K_ij sin(theta_j - theta_i).
Eigen::VectorXd equilibrium_residual(const Eigen::VectorXd& angles,
                                     const GridTopology& topology,
                                     const MachineParams& params);

struct NewtonOptions {
  double tolerance = 1e-10;        // max-norm residual target
  int max_iterations = 100;
  double balance_tolerance = 1e-9; // per-component |sum P| precondition
};

enum class SolveStatus {
  converged,
  unbalanced_component,
  no_convergence,
  singular_jacobian,
};

const char* to_string(SolveStatus status);

struct EquilibriumResult {
  SolveStatus status = SolveStatus::no_convergence;
  Eigen::VectorXd angles;
  double residual = 0.0;
  int iterations = 0;
  std::string detail;

  bool ok() const { return status == SolveStatus::converged; }
};

/// Newton-Raphson solve of the fixed point. The gauge is removed by pinning
/// the smallest node of every connected component to angle zero (the guess is
/// shifted accordingly, which changes nothing physical). Requires
/// |sum P_i| <= balance_tolerance on every component.
EquilibriumResult solve_equilibrium(const GridTopology& topology, const MachineParams& params,
                                    const Eigen::VectorXd& guess,
                                    const NewtonOptions& options = {});

struct StaticCascadeOptions {
  NewtonOptions newton{};
  int max_iterations = 0;  // 0 = line count (each round removes at least one line)
};

/// Quasi-static cascade: remove the faulted line, re-solve the equilibrium,
/// trip every line whose equilibrium flow exceeds capacity (all at once), and
/// repeat to a fixed point. A component whose powers do not balance admits no
/// equilibrium: all of its lines are marked failed and it drops out of the
/// iteration. Trip "times" are iteration indices. Throws SolverError if
/// Newton fails on a balanced component, or ValidationError if the pre-fault
/// equilibrium is missing or already overloaded.
CascadeReport static_cascade(const GridTopology& topology, const MachineParams& params,
                             NodeId fault_i, NodeId fault_j, OverloadThreshold threshold,
                             const StaticCascadeOptions& options = {});

}  // namespace cascade
