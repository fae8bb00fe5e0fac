#include "gridcascade/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "gridcascade/errors.hpp"

namespace cascade {

const char* to_string(ControlMode mode) {
  switch (mode) {
    case ControlMode::off: return "off";
    case ControlMode::full: return "full";
    case ControlMode::pinning: return "pinning";
  }
  return "unknown";
}

ControlConfig ControlConfig::off() { return ControlConfig{}; }

ControlConfig ControlConfig::full(double gain) {
  ControlConfig config;
  config.mode = ControlMode::full;
  config.gain = gain;
  return config;
}

ControlConfig ControlConfig::pinning(double gain, const std::vector<NodeId>& nodes,
                                     int node_count) {
  ControlConfig config;
  config.mode = ControlMode::pinning;
  config.gain = gain;
  config.pinned.assign(node_count, 0);
  for (NodeId node : nodes) {
    if (node < 0 || node >= node_count) {
      throw ValidationError("pinned node " + std::to_string(node) + " outside 0.." +
                            std::to_string(node_count - 1));
    }
    config.pinned[node] = 1;
  }
  return config;
}

Eigen::VectorXd control_input(const DynamicState& state, const GridTopology& operating,
                              const ControlConfig& control) {
  Eigen::VectorXd input = Eigen::VectorXd::Zero(operating.node_count);
  if (!control.active()) return input;
  for (const Line& line : operating.lines) {
    const double diff = state.velocities[line.b] - state.velocities[line.a];
    if (control.is_pinned(line.a)) input[line.a] += control.gain * diff;
    if (control.is_pinned(line.b)) input[line.b] -= control.gain * diff;
  }
  return input;
}

SwingIntegrator::SwingIntegrator(const GridTopology& operating, const MachineParams& params,
                                 const ControlConfig& control)
    : params_(params), control_(control) {
  const int n = operating.node_count;
  if (params_.inertia.size() != n || params_.damping.size() != n ||
      params_.power.size() != n) {
    throw ValidationError("machine parameter dimensions do not match node count");
  }
  if (control_.mode == ControlMode::pinning &&
      control_.pinned.size() != static_cast<size_t>(n)) {
    throw ValidationError("pinned indicator size does not match node count");
  }
  k1a_.resize(n); k1v_.resize(n); k2a_.resize(n); k2v_.resize(n);
  k3a_.resize(n); k3v_.resize(n); k4a_.resize(n); k4v_.resize(n);
  ta_.resize(n); tv_.resize(n);
  set_topology(operating);
}

void SwingIntegrator::set_topology(const GridTopology& operating) {
  const size_t count = operating.lines.size();
  line_a_.resize(count);
  line_b_.resize(count);
  line_k_.resize(count);
  for (size_t i = 0; i < count; ++i) {
    line_a_[i] = operating.lines[i].a;
    line_b_[i] = operating.lines[i].b;
    line_k_[i] = operating.lines[i].coupling;
  }
}

void SwingIntegrator::rhs(const Eigen::VectorXd& angles, const Eigen::VectorXd& velocities,
                          Eigen::VectorXd& dangles, Eigen::VectorXd& dvelocities) const {
  dangles = velocities;
  dvelocities = params_.power - params_.damping.cwiseProduct(velocities);
  for (size_t i = 0; i < line_a_.size(); ++i) {
    const NodeId a = line_a_[i];
    const NodeId b = line_b_[i];
    const double s = line_k_[i] * std::sin(angles[b] - angles[a]);
    dvelocities[a] += s;
    dvelocities[b] -= s;
  }
  if (control_.active()) {
    const double gain = control_.gain;
    if (control_.mode == ControlMode::full) {
      for (size_t i = 0; i < line_a_.size(); ++i) {
        const double diff = gain * (velocities[line_b_[i]] - velocities[line_a_[i]]);
        dvelocities[line_a_[i]] += diff;
        dvelocities[line_b_[i]] -= diff;
      }
    } else {
      for (size_t i = 0; i < line_a_.size(); ++i) {
        const NodeId a = line_a_[i];
        const NodeId b = line_b_[i];
        const double diff = gain * (velocities[b] - velocities[a]);
        if (control_.pinned[a]) dvelocities[a] += diff;
        if (control_.pinned[b]) dvelocities[b] -= diff;
      }
    }
  }
  dvelocities.array() /= params_.inertia.array();
}

void SwingIntegrator::step(DynamicState& state, double h) {
  rhs(state.angles, state.velocities, k1a_, k1v_);
  ta_ = state.angles + (h / 2.0) * k1a_;
  tv_ = state.velocities + (h / 2.0) * k1v_;
  rhs(ta_, tv_, k2a_, k2v_);
  ta_ = state.angles + (h / 2.0) * k2a_;
  tv_ = state.velocities + (h / 2.0) * k2v_;
  rhs(ta_, tv_, k3a_, k3v_);
  ta_ = state.angles + h * k3a_;
  tv_ = state.velocities + h * k3v_;
  rhs(ta_, tv_, k4a_, k4v_);
  state.angles += (h / 6.0) * (k1a_ + 2.0 * k2a_ + 2.0 * k3a_ + k4a_);
  state.velocities += (h / 6.0) * (k1v_ + 2.0 * k2v_ + 2.0 * k3v_ + k4v_);
  state.time += h;
}

Derivatives swing_rhs(const DynamicState& state, const GridTopology& operating,
                      const MachineParams& params, const ControlConfig& control) {
  SwingIntegrator integrator(operating, params, control);
  Derivatives result;
  result.dangles.resize(operating.node_count);
  result.dvelocities.resize(operating.node_count);
  integrator.rhs(state.angles, state.velocities, result.dangles, result.dvelocities);
  return result;
}

DynamicState integrate_step(const DynamicState& state, const GridTopology& operating,
                            const MachineParams& params, const ControlConfig& control,
                            double step) {
  SwingIntegrator integrator(operating, params, control);
  DynamicState next = state;
  integrator.step(next, step);
  if (!next.angles.allFinite() || !next.velocities.allFinite()) {
    std::ostringstream message;
    message << "integration diverged at t = " << next.time;
    throw SolverError(message.str());
  }
  return next;
}

namespace {

struct ComponentView {
  std::vector<std::vector<NodeId>> members;
  bool any_unbalanced = false;

  void rebuild(const GridTopology& operating, const Eigen::VectorXd& power,
               double balance_tolerance) {
    members = connected_components(operating);
    any_unbalanced = false;
    for (const auto& component : members) {
      double sum = 0.0;
      for (NodeId node : component) sum += power[node];
      if (std::abs(sum) > balance_tolerance) {
        any_unbalanced = true;
        break;
      }
    }
  }

  /// True when every component is internally phase-locked: all members within
  /// tolerance of the component's mean velocity.
  bool relative_quiet(const Eigen::VectorXd& velocities, double tolerance) const {
    for (const auto& component : members) {
      double mean = 0.0;
      for (NodeId node : component) mean += velocities[node];
      mean /= static_cast<double>(component.size());
      for (NodeId node : component) {
        if (std::abs(velocities[node] - mean) >= tolerance) return false;
      }
    }
    return true;
  }
};

}  // namespace

CascadeReport simulate_cascade(const GridTopology& topology, const MachineParams& params,
                               NodeId fault_i, NodeId fault_j, const SimConfig& sim,
                               const ControlConfig& control, const SimulateOptions& options) {
  if (!(sim.step > 0.0) || !(sim.horizon > 0.0) || !(sim.settle_velocity_tol > 0.0) ||
      !(sim.settle_window > 0.0)) {
    throw ValidationError("simulation config requires positive step, horizon and tolerances");
  }

  EquilibriumResult prefault = solve_equilibrium(
      topology, params, Eigen::VectorXd::Zero(topology.node_count), options.newton);
  if (!prefault.ok()) {
    throw ValidationError(std::string("pre-fault equilibrium unavailable: ") +
                          to_string(prefault.status) +
                          (prefault.detail.empty() ? "" : " (" + prefault.detail + ")"));
  }
  {
    FlowMap flows = line_flows(prefault.angles, topology);
    if (!overloaded_lines(flows, topology, sim.threshold).empty()) {
      throw ValidationError("pre-fault equilibrium is already overloaded");
    }
  }

  CascadeReport report;
  report.fault_a = std::min(fault_i, fault_j);
  report.fault_b = std::max(fault_i, fault_j);

  GridTopology current = remove_line(topology, fault_i, fault_j);
  DynamicState state;
  state.angles = prefault.angles;
  state.velocities = Eigen::VectorXd::Zero(topology.node_count);
  state.time = 0.0;

  SwingIntegrator integrator(current, params, control);
  ComponentView components;
  components.rebuild(current, params.power, options.newton.balance_tolerance);

  std::vector<double> flow_buffer(current.lines.size());
  std::vector<int> trip_buffer;
  constexpr double kNotQuiet = -1.0;
  double abs_quiet_since = kNotQuiet;
  double rel_quiet_since = kNotQuiet;
  std::optional<Outcome> outcome;
  long step_index = 0;

  const double h = sim.step;
  while (state.time < sim.horizon - 1e-12) {
    integrator.step(state, h);
    ++step_index;
    if (!state.angles.allFinite() || !state.velocities.allFinite()) {
      std::ostringstream message;
      message << "integration diverged at t = " << state.time;
      throw SolverError(message.str());
    }

    // Overload scan on the post-step state; all violators trip together.
    trip_buffer.clear();
    flow_buffer.resize(current.lines.size());
    for (size_t idx = 0; idx < current.lines.size(); ++idx) {
      const Line& line = current.lines[idx];
      const double flow = line.coupling * std::sin(state.angles[line.b] - state.angles[line.a]);
      flow_buffer[idx] = flow;
      if (std::abs(flow) > sim.threshold.alpha * line.coupling) {
        trip_buffer.push_back(static_cast<int>(idx));
      }
    }
    if (!trip_buffer.empty()) {
      for (int idx : trip_buffer) {
        const Line& line = current.lines[idx];
        report.tripped.push_back({line.a, line.b, state.time});
      }
      for (auto it = trip_buffer.rbegin(); it != trip_buffer.rend(); ++it) {
        current.lines.erase(current.lines.begin() + *it);
      }
      integrator.set_topology(current);
      components.rebuild(current, params.power, options.newton.balance_tolerance);
      abs_quiet_since = kNotQuiet;
      rel_quiet_since = kNotQuiet;
    } else {
      const double max_speed = state.velocities.cwiseAbs().maxCoeff();
      if (max_speed < sim.settle_velocity_tol) {
        if (abs_quiet_since < 0.0) abs_quiet_since = state.time;
      } else {
        abs_quiet_since = kNotQuiet;
      }
      if (components.relative_quiet(state.velocities, sim.settle_velocity_tol)) {
        if (rel_quiet_since < 0.0) rel_quiet_since = state.time;
      } else {
        rel_quiet_since = kNotQuiet;
      }

      if (!components.any_unbalanced && abs_quiet_since >= 0.0 &&
          state.time - abs_quiet_since >= sim.settle_window) {
        outcome = Outcome::settled;
        report.settle_time = abs_quiet_since;
        break;
      }
      if (components.any_unbalanced && rel_quiet_since >= 0.0 &&
          state.time - rel_quiet_since >= sim.settle_window) {
        // Every component is phase-locked, flows are frozen below capacity,
        // and an unbalanced island can never reach omega = 0: final state.
        outcome = Outcome::islanded_unbalanced;
        break;
      }
    }

    if (options.trace != nullptr && step_index % options.trace_stride == 0) {
      FlowMap flows;
      if (!trip_buffer.empty()) {
        flows = line_flows(state.angles, current);  // indices shifted by the trips
      } else {
        flows.values = flow_buffer;
      }
      options.trace->record(state, current, flows);
    }
  }

  if (!outcome) {
    outcome = components.any_unbalanced ? Outcome::islanded_unbalanced
                                        : Outcome::horizon_exhausted;
  }

  report.n_c = static_cast<int>(report.tripped.size());
  report.outcome = *outcome;
  report.final_angles = state.angles;
  report.final_velocities = state.velocities;
  report.final_time = state.time;
  report.surviving_lines = current.lines;
  return report;
}

}  // namespace cascade
