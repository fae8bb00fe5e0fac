#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "gridcascade/equilibrium.hpp"
#include "gridcascade/grid.hpp"
#include "gridcascade/report.hpp"

namespace cascade {

enum class ControlMode {
  off,      // u = 0
  full,     // every node controlled
  pinning,  // only the pinned subset controlled
};

const char* to_string(ControlMode mode);

/// Distributed frequency-difference control: u_i = k_c * xi_i * sum over
/// operating lines (i,j) of (omega_j - omega_i). The controller layer shares
/// the physical wiring, unweighted.
struct ControlConfig {
  ControlMode mode = ControlMode::off;
  double gain = 0.0;                // k_c >= 0
  std::vector<std::uint8_t> pinned; // xi_i; used only in pinning mode

  static ControlConfig off();
  static ControlConfig full(double gain);
  static ControlConfig pinning(double gain, const std::vector<NodeId>& nodes,
                               int node_count);

  bool active() const { return mode != ControlMode::off && gain > 0.0; }
  bool is_pinned(NodeId i) const {
    return mode == ControlMode::full ||
           (mode == ControlMode::pinning && i < static_cast<NodeId>(pinned.size()) &&
            pinned[i] != 0);
  }
};

struct SimConfig {
  double step = 1e-3;              // RK4 step h, seconds
  double horizon = 200.0;          // T_max, seconds
  double settle_velocity_tol = 1e-6;  // rad/s
  double settle_window = 1.0;      // seconds the quiet condition must persist
  OverloadThreshold threshold{};
};

struct DynamicState {
  Eigen::VectorXd angles;
  Eigen::VectorXd velocities;
  double time = 0.0;
};

/// Per-node control inputs for the current operating topology.
Eigen::VectorXd control_input(const DynamicState& state, const GridTopology& operating,
                              const ControlConfig& control);

struct Derivatives {
  Eigen::VectorXd dangles;
  Eigen::VectorXd dvelocities;
};

/// Right-hand side of the controlled swing equations on the operating lines.
Derivatives swing_rhs(const DynamicState& state, const GridTopology& operating,
                      const MachineParams& params, const ControlConfig& control);

/// One classical RK4 step. Throws SolverError if the state leaves the finite
/// range (integration diverged).
DynamicState integrate_step(const DynamicState& state, const GridTopology& operating,
                            const MachineParams& params, const ControlConfig& control,
                            double step);

/// Allocation-free RK4 stepper over a fixed operating topology; rebuild via
/// set_topology after a trip. simulate_cascade drives one of these.
class SwingIntegrator {
 public:
  SwingIntegrator(const GridTopology& operating, const MachineParams& params,
                  const ControlConfig& control);

  void set_topology(const GridTopology& operating);
  void step(DynamicState& state, double h);
  void rhs(const Eigen::VectorXd& angles, const Eigen::VectorXd& velocities,
           Eigen::VectorXd& dangles, Eigen::VectorXd& dvelocities) const;

 private:
  MachineParams params_;
  ControlConfig control_;
  std::vector<NodeId> line_a_;
  std::vector<NodeId> line_b_;
  std::vector<double> line_k_;
  // RK4 workspaces
  Eigen::VectorXd k1a_, k1v_, k2a_, k2v_, k3a_, k3v_, k4a_, k4v_, ta_, tv_;
};

/// Receives post-step samples from simulate_cascade (trajectory dumps).
class TrajectorySink {
 public:
  virtual ~TrajectorySink() = default;
  virtual void record(const DynamicState& state, const GridTopology& operating,
                      const FlowMap& flows) = 0;
};

struct SimulateOptions {
  NewtonOptions newton{};       // pre-fault equilibrium solve
  TrajectorySink* trace = nullptr;
  int trace_stride = 100;       // record every n-th step
};

/// Dynamic cascade run: start at the pre-fault equilibrium, remove the
/// faulted line at t = 0, integrate the controlled swing equations, and after
/// every step trip all lines whose flow magnitude strictly exceeds capacity
/// (removing them from both layers). Ends when (a) every |omega_i| stays
/// below tolerance for a full window with no overload (settled), (b) the
/// horizon is reached, or (c) every component is phase-locked with at least
/// one of them unbalanced, so no further trip is possible
/// (islanded-unbalanced; such components spin at sum(P)/sum(gamma) and never
/// meet the absolute criterion). Unbalanced islands keep being integrated;
/// only the overload condition removes lines.
CascadeReport simulate_cascade(const GridTopology& topology, const MachineParams& params,
                               NodeId fault_i, NodeId fault_j, const SimConfig& sim,
                               const ControlConfig& control,
                               const SimulateOptions& options = {});

}  // namespace cascade
