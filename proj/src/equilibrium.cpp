#include "gridcascade/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gridcascade/errors.hpp"

namespace cascade {

const char* to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::settled: return "settled";
    case Outcome::horizon_exhausted: return "horizon-exhausted";
    case Outcome::islanded_unbalanced: return "islanded-unbalanced";
  }
  return "unknown";
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::unbalanced_component: return "unbalanced-component";
    case SolveStatus::no_convergence: return "no-convergence";
    case SolveStatus::singular_jacobian: return "singular-jacobian";
  }
  return "unknown";
}

FlowMap line_flows(const Eigen::VectorXd& angles, const GridTopology& topology) {
  if (angles.size() != topology.node_count) {
    throw ValidationError("angle vector size " + std::to_string(angles.size()) +
                          " does not match node count " +
                          std::to_string(topology.node_count));
  }
  FlowMap flows;
  flows.values.resize(topology.lines.size());
  for (size_t idx = 0; idx < topology.lines.size(); ++idx) {
    const Line& line = topology.lines[idx];
    flows.values[idx] = line.coupling * std::sin(angles[line.b] - angles[line.a]);
  }
  return flows;
}

double flow_between(const Eigen::VectorXd& angles, const GridTopology& topology, NodeId i,
                    NodeId j) {
  auto index = topology.line_index(i, j);
  if (!index) {
    throw ValidationError("no line between " + std::to_string(i) + " and " +
                          std::to_string(j));
  }
  const Line& line = topology.lines[*index];
  return line.coupling * std::sin(angles[j] - angles[i]);
}

std::vector<int> overloaded_lines(const FlowMap& flows, const GridTopology& topology,
                                  OverloadThreshold threshold) {
  if (flows.values.size() != topology.lines.size()) {
    throw ValidationError("flow map does not cover the operating lines");
  }
  std::vector<int> result;
  for (size_t idx = 0; idx < topology.lines.size(); ++idx) {
    // Strict inequality: a flow at exactly alpha*K does not trip.
    if (std::abs(flows.values[idx]) > threshold.alpha * topology.lines[idx].coupling) {
      result.push_back(static_cast<int>(idx));
    }
  }
  return result;
}

Eigen::VectorXd equilibrium_residual(const Eigen::VectorXd& angles,
                                     const GridTopology& topology,
                                     const MachineParams& params) {
  Eigen::VectorXd residual = params.power;
  for (const Line& line : topology.lines) {
    const double s = line.coupling * std::sin(angles[line.b] - angles[line.a]);
    residual[line.a] += s;
    residual[line.b] -= s;
  }
  return residual;
}

EquilibriumResult solve_equilibrium(const GridTopology& topology, const MachineParams& params,
                                    const Eigen::VectorXd& guess,
                                    const NewtonOptions& options) {
  const int n = topology.node_count;
  if (params.power.size() != n || guess.size() != n) {
    throw ValidationError("parameter or guess dimension does not match node count");
  }

  EquilibriumResult result;
  const auto components = connected_components(topology);
  for (const auto& component : components) {
    double sum = 0.0;
    for (NodeId node : component) sum += params.power[node];
    if (std::abs(sum) > options.balance_tolerance) {
      result.status = SolveStatus::unbalanced_component;
      std::ostringstream detail;
      detail << "component containing node " << component.front() << " has sum(P) = " << sum;
      result.detail = detail.str();
      return result;
    }
  }

  // Gauge: pin the smallest node of every component to angle zero. Shifting
  // the guess per component changes no flow.
  Eigen::VectorXd theta = guess;
  std::vector<NodeId> pins;
  pins.reserve(components.size());
  for (const auto& component : components) {
    const NodeId pin = component.front();
    const double shift = theta[pin];
    for (NodeId node : component) theta[node] -= shift;
    pins.push_back(pin);
  }

  Eigen::VectorXd residual = equilibrium_residual(theta, topology, params);
  double residual_norm = residual.lpNorm<Eigen::Infinity>();

  Eigen::MatrixXd jacobian(n, n);
  for (int iteration = 1; iteration <= options.max_iterations; ++iteration) {
    if (residual_norm < options.tolerance) {
      result.status = SolveStatus::converged;
      result.angles = theta;
      result.residual = residual_norm;
      result.iterations = iteration - 1;
      return result;
    }

    jacobian.setZero();
    for (const Line& line : topology.lines) {
      const double c = line.coupling * std::cos(theta[line.b] - theta[line.a]);
      jacobian(line.a, line.b) += c;
      jacobian(line.b, line.a) += c;
      jacobian(line.a, line.a) -= c;
      jacobian(line.b, line.b) -= c;
    }
    Eigen::VectorXd rhs = -residual;
    for (NodeId pin : pins) {
      jacobian.row(pin).setZero();
      jacobian(pin, pin) = 1.0;
      rhs[pin] = 0.0;
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(jacobian);
    if (!lu.isInvertible()) {
      result.status = SolveStatus::singular_jacobian;
      result.residual = residual_norm;
      result.iterations = iteration;
      result.detail = "Jacobian singular at iteration " + std::to_string(iteration);
      return result;
    }
    Eigen::VectorXd step = lu.solve(rhs);
    for (NodeId pin : pins) step[pin] = 0.0;  // keep the gauge exact, not just tiny

    // Backtrack if the full step increases the residual.
    double scale = 1.0;
    bool accepted = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::VectorXd candidate = theta + scale * step;
      Eigen::VectorXd candidate_residual = equilibrium_residual(candidate, topology, params);
      const double candidate_norm = candidate_residual.lpNorm<Eigen::Infinity>();
      if (candidate_norm < residual_norm || candidate_norm < options.tolerance) {
        theta = std::move(candidate);
        residual = std::move(candidate_residual);
        residual_norm = candidate_norm;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) {
      result.status = SolveStatus::no_convergence;
      result.residual = residual_norm;
      result.iterations = iteration;
      result.detail = "stalled: backtracking found no descent";
      return result;
    }
  }

  if (residual_norm < options.tolerance) {
    result.status = SolveStatus::converged;
    result.angles = theta;
    result.residual = residual_norm;
    result.iterations = options.max_iterations;
    return result;
  }
  result.status = SolveStatus::no_convergence;
  result.residual = residual_norm;
  result.iterations = options.max_iterations;
  result.detail = "residual " + std::to_string(residual_norm) + " after max iterations";
  return result;
}

CascadeReport static_cascade(const GridTopology& topology, const MachineParams& params,
                             NodeId fault_i, NodeId fault_j, OverloadThreshold threshold,
                             const StaticCascadeOptions& options) {
  EquilibriumResult prefault = solve_equilibrium(
      topology, params, Eigen::VectorXd::Zero(topology.node_count), options.newton);
  if (!prefault.ok()) {
    throw ValidationError(std::string("pre-fault equilibrium unavailable: ") +
                          to_string(prefault.status) +
                          (prefault.detail.empty() ? "" : " (" + prefault.detail + ")"));
  }
  {
    FlowMap flows = line_flows(prefault.angles, topology);
    if (!overloaded_lines(flows, topology, threshold).empty()) {
      throw ValidationError("pre-fault equilibrium is already overloaded");
    }
  }

  CascadeReport report;
  report.fault_a = std::min(fault_i, fault_j);
  report.fault_b = std::max(fault_i, fault_j);

  GridTopology current = remove_line(topology, fault_i, fault_j);
  Eigen::VectorXd solve_power = params.power;
  std::vector<bool> excluded(topology.node_count, false);
  bool islanded = false;
  Eigen::VectorXd final_angles = Eigen::VectorXd::Zero(topology.node_count);

  const int max_rounds =
      options.max_iterations > 0 ? options.max_iterations : static_cast<int>(topology.lines.size()) + 1;

  int round = 1;
  for (; round <= max_rounds; ++round) {
    // Islanding sweep: a component that cannot balance its powers admits no
    // equilibrium; every line inside it fails and it leaves the iteration.
    bool removed_any = false;
    for (const auto& component : connected_components(current)) {
      if (excluded[component.front()]) continue;
      double sum = 0.0;
      for (NodeId node : component) sum += solve_power[node];
      if (std::abs(sum) <= options.newton.balance_tolerance) continue;

      islanded = true;
      std::vector<Line> alive;
      alive.reserve(current.lines.size());
      for (const Line& line : current.lines) {
        const bool inside = std::binary_search(component.begin(), component.end(), line.a);
        if (inside) {
          report.tripped.push_back({line.a, line.b, static_cast<double>(round)});
          removed_any = true;
        } else {
          alive.push_back(line);
        }
      }
      current.lines = std::move(alive);
      for (NodeId node : component) {
        excluded[node] = true;
        solve_power[node] = 0.0;
      }
    }

    MachineParams round_params = params;
    round_params.power = solve_power;
    // Warm start from the pre-fault equilibrium for every post-fault solve.
    Eigen::VectorXd warm = prefault.angles;
    for (int node = 0; node < topology.node_count; ++node) {
      if (excluded[node]) warm[node] = 0.0;
    }
    EquilibriumResult solved = solve_equilibrium(current, round_params, warm, options.newton);
    if (!solved.ok()) {
      throw SolverError(std::string("static cascade round ") + std::to_string(round) + ": " +
                        to_string(solved.status) +
                        (solved.detail.empty() ? "" : " (" + solved.detail + ")"));
    }
    final_angles = solved.angles;

    FlowMap flows = line_flows(solved.angles, current);
    std::vector<int> over = overloaded_lines(flows, current, threshold);
    if (over.empty() && !removed_any) {
      break;  // fixed point
    }
    // Remove every overloaded line simultaneously.
    for (int idx : over) {
      const Line& line = current.lines[idx];
      report.tripped.push_back({line.a, line.b, static_cast<double>(round)});
    }
    for (auto it = over.rbegin(); it != over.rend(); ++it) {
      current.lines.erase(current.lines.begin() + *it);
    }
  }
  if (round > max_rounds) {
    throw SolverError("static cascade did not reach a fixed point within " +
                      std::to_string(max_rounds) + " rounds");
  }

  report.n_c = static_cast<int>(report.tripped.size());
  report.outcome = islanded ? Outcome::islanded_unbalanced : Outcome::settled;
  report.final_angles = final_angles;
  report.final_velocities = Eigen::VectorXd::Zero(topology.node_count);
  report.final_time = static_cast<double>(round);
  report.surviving_lines = current.lines;
  return report;
}

}  // namespace cascade
