#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gridcascade/dynamics.hpp"
#include "gridcascade/grid.hpp"

namespace cascade {

/// One ready-to-simulate case study: wiring, machine parameters, simulation
/// defaults, and the mapping to the source format's node numbering.
struct GridCase {
  GridTopology topology;
  MachineParams params;
  SimConfig defaults;
  std::string name;
  std::string provenance;
  std::vector<int> external_ids;  // internal index -> source node id

  NodeId external_to_internal(int external) const;
  int internal_to_external(NodeId internal) const { return external_ids.at(internal); }
  std::pair<NodeId, NodeId> fault_by_external(int i, int j) const;
};

/// The five-node illustrative grid: two generators (nodes 2 and 5, P = 1.5),
/// three unit loads, seven identically weighted lines (k = 1.63), I = 1,
/// gamma = 0.1, alpha = 0.6.
GridCase builtin_five_node();

struct ParseOptions {
  bool auto_normalize = false;     // rebalance unit-load/scaled-generator style
  double balance_tolerance = 1e-9;
};

/// Parses the native "gridcase/1" text format (sections for globals, nodes,
/// lines). Throws ParseError with a 1-based line number on syntax errors,
/// ValidationError on semantic ones (including unbalanced powers unless
/// auto_normalize is set).
GridCase parse_grid_text(std::string_view text, const ParseOptions& options = {});

/// Canonical serialization; parse_grid_text(serialize_grid_case(c)) == c.
std::string serialize_grid_case(const GridCase& grid_case);

/// Reads a case from disk, dispatching on content: native format tag or IEEE
/// common-data-format sections.
GridCase load_grid_file(const std::string& path, const ParseOptions& options = {});

/// Per-node (keyed by source node id) and global parameter overrides, applied
/// after parsing. Application order: *_all, then *_default on nodes without a
/// per-node entry, then per-node values.
struct ParamOverrides {
  std::map<int, double> inertia_by_node;
  std::map<int, double> damping_by_node;
  std::map<int, double> power_by_node;
  std::optional<double> inertia_all;
  std::optional<double> damping_all;
  std::optional<double> power_all;
  std::optional<double> inertia_default;
  std::optional<double> damping_default;
  std::optional<double> alpha;

  bool empty() const;
};

/// Sidecar parameter table: one row per node, `<node-id> key=value ...`, plus
/// optional `default key=value` / `all key=value` rows. Keys: inertia,
/// damping, power.
ParamOverrides parse_sidecar(std::string_view text);
ParamOverrides load_sidecar_file(const std::string& path);

/// Throws ValidationError if an override references an unknown node id.
GridCase apply_overrides(GridCase grid_case, const ParamOverrides& overrides);

/// Unit-load normalization: every load gets P = -1, every generator
/// P = (number of loads)/(number of generators), so the network balances
/// exactly. Requires both sets nonempty.
GridCase normalize_powers(GridCase grid_case);

}  // namespace cascade
