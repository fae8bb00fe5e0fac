#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace cascade {

/// Dense 0-based node index. External formats may number nodes differently;
/// ingestion owns the mapping.
using NodeId = int;

/// Undirected transmission line with per-unit coupling strength K.
/// Endpoints are normalized to a < b so line sets iterate deterministically;
/// the flow sign convention is anchored to the smaller endpoint.
struct Line {
  NodeId a = 0;
  NodeId b = 0;
  double coupling = 0.0;

  static Line make(NodeId i, NodeId j, double coupling);

  bool joins(NodeId i, NodeId j) const {
    return (a == i && b == j) || (a == j && b == i);
  }

  friend bool operator==(const Line&, const Line&) = default;
};

/// Grid wiring: node set, operating lines, generator subset.
///
/// The control layer shares the physical wiring (a tripped line disappears
/// from both layers), so no separate control adjacency is stored. Values are
/// treated as immutable once built; mutation means constructing a new
/// topology (see remove_line).
struct GridTopology {
  int node_count = 0;
  std::vector<Line> lines;         // sorted by (a, b), at most one per pair
  std::vector<NodeId> generators;  // sorted

  bool has_line(NodeId i, NodeId j) const { return line_index(i, j).has_value(); }
  std::optional<int> line_index(NodeId i, NodeId j) const;
  bool is_generator(NodeId i) const;
  std::vector<int> degrees() const;
};

/// Normalizes line endpoint order and sorts lines/generators. Does not
/// validate; run validate_topology for that.
GridTopology make_topology(int node_count, std::vector<Line> lines,
                           std::vector<NodeId> generators);

/// Per-node rotating-machine parameters, indexed like the topology's nodes.
struct MachineParams {
  Eigen::VectorXd inertia;  // I_i > 0
  Eigen::VectorXd damping;  // gamma_i > 0
  Eigen::VectorXd power;    // P_i, positive injects, negative absorbs
};

MachineParams uniform_params(int node_count, double inertia, double damping,
                             const Eigen::VectorXd& power);

enum class ValidationCode {
  self_loop,
  duplicate_line,
  dangling_node,
  nonpositive_coupling,
  generator_out_of_range,
  bad_dimension,
  nonpositive_inertia,
  nonpositive_damping,
  power_imbalance,
};

struct ValidationIssue {
  ValidationCode code;
  std::string message;
};

struct ValidationResult {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  bool has(ValidationCode code) const;
  std::string summary() const;
};

ValidationResult validate_topology(const GridTopology& topology);

/// Checks positivity of inertia/damping and (as a warning-grade entry) the
/// network balance sum(P_i) = 0 required for an equilibrium to exist.
ValidationResult validate_params(const GridTopology& topology, const MachineParams& params,
                                 double balance_tolerance = 1e-9);

/// Returns a copy of the topology without the named line (either endpoint
/// order). Throws ValidationError if the line does not exist.
GridTopology remove_line(const GridTopology& topology, NodeId i, NodeId j);

/// Adds a line; used by tests to re-add what remove_line dropped.
GridTopology add_line(const GridTopology& topology, const Line& line);

/// Undirected connectivity partition. Components are ordered by their
/// smallest contained node; members are sorted.
std::vector<std::vector<NodeId>> connected_components(const GridTopology& topology);

enum class Weighting {
  unweighted,  // adjacency entries a_ij = 1
  physical,    // adjacency entries K_ij
};

/// Dense Laplacian L = D - A for the requested weighting. Symmetric positive
/// semi-definite with zero row sums by construction.
Eigen::MatrixXd laplacian(const GridTopology& topology, Weighting weighting);

}  // namespace cascade
