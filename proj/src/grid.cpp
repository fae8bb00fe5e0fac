#include "gridcascade/grid.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

#include "gridcascade/errors.hpp"

namespace cascade {

Line Line::make(NodeId i, NodeId j, double coupling) {
  Line line;
  line.a = std::min(i, j);
  line.b = std::max(i, j);
  line.coupling = coupling;
  return line;
}

std::optional<int> GridTopology::line_index(NodeId i, NodeId j) const {
  const NodeId lo = std::min(i, j);
  const NodeId hi = std::max(i, j);
  auto it = std::lower_bound(lines.begin(), lines.end(), std::make_pair(lo, hi),
                             [](const Line& line, const std::pair<NodeId, NodeId>& key) {
                               return std::make_pair(line.a, line.b) < key;
                             });
  if (it != lines.end() && it->a == lo && it->b == hi) {
    return static_cast<int>(it - lines.begin());
  }
  return std::nullopt;
}

bool GridTopology::is_generator(NodeId i) const {
  return std::binary_search(generators.begin(), generators.end(), i);
}

std::vector<int> GridTopology::degrees() const {
  std::vector<int> degree(node_count, 0);
  for (const Line& line : lines) {
    if (line.a >= 0 && line.a < node_count) ++degree[line.a];
    if (line.b >= 0 && line.b < node_count && line.b != line.a) ++degree[line.b];
  }
  return degree;
}

GridTopology make_topology(int node_count, std::vector<Line> lines,
                           std::vector<NodeId> generators) {
  for (Line& line : lines) {
    if (line.a > line.b) std::swap(line.a, line.b);
  }
  std::sort(lines.begin(), lines.end(), [](const Line& x, const Line& y) {
    return std::make_pair(x.a, x.b) < std::make_pair(y.a, y.b);
  });
  std::sort(generators.begin(), generators.end());
  generators.erase(std::unique(generators.begin(), generators.end()), generators.end());
  GridTopology topology;
  topology.node_count = node_count;
  topology.lines = std::move(lines);
  topology.generators = std::move(generators);
  return topology;
}

MachineParams uniform_params(int node_count, double inertia, double damping,
                             const Eigen::VectorXd& power) {
  MachineParams params;
  params.inertia = Eigen::VectorXd::Constant(node_count, inertia);
  params.damping = Eigen::VectorXd::Constant(node_count, damping);
  params.power = power;
  return params;
}

bool ValidationResult::has(ValidationCode code) const {
  return std::any_of(issues.begin(), issues.end(),
                     [code](const ValidationIssue& issue) { return issue.code == code; });
}

std::string ValidationResult::summary() const {
  std::ostringstream out;
  for (size_t i = 0; i < issues.size(); ++i) {
    if (i > 0) out << "; ";
    out << issues[i].message;
  }
  return out.str();
}

namespace {

std::string line_name(NodeId a, NodeId b) {
  std::ostringstream out;
  out << "(" << a << "," << b << ")";
  return out.str();
}

}  // namespace

ValidationResult validate_topology(const GridTopology& topology) {
  ValidationResult result;
  auto report = [&result](ValidationCode code, const std::string& message) {
    result.issues.push_back({code, message});
  };

  const Line* previous = nullptr;
  for (const Line& line : topology.lines) {
    if (line.a == line.b) {
      report(ValidationCode::self_loop, "self-loop at node " + std::to_string(line.a));
    }
    if (line.a < 0 || line.a >= topology.node_count || line.b < 0 ||
        line.b >= topology.node_count) {
      report(ValidationCode::dangling_node,
             "line " + line_name(line.a, line.b) + " references a node outside 0.." +
                 std::to_string(topology.node_count - 1));
    }
    if (!(line.coupling > 0.0)) {
      report(ValidationCode::nonpositive_coupling,
             "line " + line_name(line.a, line.b) + " has nonpositive coupling " +
                 std::to_string(line.coupling));
    }
    if (previous != nullptr && previous->a == line.a && previous->b == line.b) {
      report(ValidationCode::duplicate_line,
             "duplicate line " + line_name(line.a, line.b));
    }
    previous = &line;
  }
  for (NodeId g : topology.generators) {
    if (g < 0 || g >= topology.node_count) {
      report(ValidationCode::generator_out_of_range,
             "generator id " + std::to_string(g) + " outside 0.." +
                 std::to_string(topology.node_count - 1));
    }
  }
  return result;
}

ValidationResult validate_params(const GridTopology& topology, const MachineParams& params,
                                 double balance_tolerance) {
  ValidationResult result;
  const int n = topology.node_count;
  if (params.inertia.size() != n || params.damping.size() != n || params.power.size() != n) {
    result.issues.push_back({ValidationCode::bad_dimension,
                             "parameter vectors do not match node count " + std::to_string(n)});
    return result;
  }
  for (int i = 0; i < n; ++i) {
    if (!(params.inertia[i] > 0.0)) {
      result.issues.push_back({ValidationCode::nonpositive_inertia,
                               "inertia of node " + std::to_string(i) + " is not positive"});
    }
    if (!(params.damping[i] > 0.0)) {
      result.issues.push_back({ValidationCode::nonpositive_damping,
                               "damping of node " + std::to_string(i) + " is not positive"});
    }
  }
  const double imbalance = params.power.sum();
  if (std::abs(imbalance) > balance_tolerance) {
    std::ostringstream message;
    message << "net power imbalance sum(P) = " << imbalance;
    result.issues.push_back({ValidationCode::power_imbalance, message.str()});
  }
  return result;
}

GridTopology remove_line(const GridTopology& topology, NodeId i, NodeId j) {
  auto index = topology.line_index(i, j);
  if (!index) {
    throw ValidationError("line " + line_name(i, j) + " not found");
  }
  GridTopology result = topology;
  result.lines.erase(result.lines.begin() + *index);
  return result;
}

GridTopology add_line(const GridTopology& topology, const Line& line) {
  std::vector<Line> lines = topology.lines;
  lines.push_back(line);
  return make_topology(topology.node_count, std::move(lines), topology.generators);
}

std::vector<std::vector<NodeId>> connected_components(const GridTopology& topology) {
  const int n = topology.node_count;
  std::vector<std::vector<NodeId>> adjacency(n);
  for (const Line& line : topology.lines) {
    adjacency[line.a].push_back(line.b);
    adjacency[line.b].push_back(line.a);
  }
  std::vector<std::vector<NodeId>> components;
  std::vector<bool> seen(n, false);
  std::vector<NodeId> stack;
  for (NodeId start = 0; start < n; ++start) {
    if (seen[start]) continue;
    std::vector<NodeId> component;
    stack.push_back(start);
    seen[start] = true;
    while (!stack.empty()) {
      NodeId node = stack.back();
      stack.pop_back();
      component.push_back(node);
      for (NodeId next : adjacency[node]) {
        if (!seen[next]) {
          seen[next] = true;
          stack.push_back(next);
        }
      }
    }
    std::sort(component.begin(), component.end());
    components.push_back(std::move(component));
  }
  // Scanning starts from node 0 upward, so components are already ordered by
  // smallest member.
  return components;
}

Eigen::MatrixXd laplacian(const GridTopology& topology, Weighting weighting) {
  const int n = topology.node_count;
  Eigen::MatrixXd result = Eigen::MatrixXd::Zero(n, n);
  for (const Line& line : topology.lines) {
    const double w = weighting == Weighting::physical ? line.coupling : 1.0;
    result(line.a, line.b) -= w;
    result(line.b, line.a) -= w;
    result(line.a, line.a) += w;
    result(line.b, line.b) += w;
  }
  return result;
}

const char* to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::parse: return "parse-error";
    case ErrorCategory::validation: return "validation-error";
    case ErrorCategory::solver: return "solver-error";
    case ErrorCategory::io: return "io-error";
  }
  return "error";
}

std::string ParseError::format(const std::string& message, int line, int column) {
  std::ostringstream out;
  out << message;
  if (line > 0) {
    out << " (line " << line;
    if (column > 0) out << ", column " << column;
    out << ")";
  }
  return out.str();
}

}  // namespace cascade
