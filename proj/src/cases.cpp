#include "gridcascade/cases.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gridcascade/cdf.hpp"
#include "gridcascade/errors.hpp"

namespace cascade {

namespace {

std::string trim(std::string_view text) {
  size_t first = 0;
  size_t last = text.size();
  while (first < last && std::isspace(static_cast<unsigned char>(text[first]))) ++first;
  while (last > first && std::isspace(static_cast<unsigned char>(text[last - 1]))) --last;
  return std::string(text.substr(first, last - first));
}

std::string strip_comment(const std::string& line) {
  const size_t hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

double parse_double(const std::string& token, int line_no, const std::string& what) {
  try {
    size_t consumed = 0;
    const double value = std::stod(token, &consumed);
    if (consumed != token.size()) throw std::invalid_argument(token);
    return value;
  } catch (const std::exception&) {
    throw ParseError("expected a number for " + what + ", got '" + token + "'", line_no);
  }
}

int parse_int(const std::string& token, int line_no, const std::string& what) {
  try {
    size_t consumed = 0;
    const int value = std::stoi(token, &consumed);
    if (consumed != token.size()) throw std::invalid_argument(token);
    return value;
  } catch (const std::exception&) {
    throw ParseError("expected an integer for " + what + ", got '" + token + "'", line_no);
  }
}

// Shortest representation that parses back to the same double.
std::string format_exact(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, end);
}

}  // namespace

NodeId GridCase::external_to_internal(int external) const {
  auto it = std::lower_bound(external_ids.begin(), external_ids.end(), external);
  if (it == external_ids.end() || *it != external) {
    throw ValidationError("unknown node id " + std::to_string(external));
  }
  return static_cast<NodeId>(it - external_ids.begin());
}

std::pair<NodeId, NodeId> GridCase::fault_by_external(int i, int j) const {
  return {external_to_internal(i), external_to_internal(j)};
}

GridCase builtin_five_node() {
  GridCase result;
  const double k = 1.63;
  std::vector<Line> lines;
  for (auto [i, j] : {std::pair{1, 2}, {1, 3}, {1, 5}, {2, 3}, {2, 4}, {3, 4}, {4, 5}}) {
    lines.push_back(Line::make(i - 1, j - 1, k));
  }
  result.topology = make_topology(5, std::move(lines), {1, 4});
  Eigen::VectorXd power(5);
  power << -1.0, 1.5, -1.0, -1.0, 1.5;
  result.params = uniform_params(5, 1.0, 0.1, power);
  result.defaults.threshold.alpha = 0.6;
  result.name = "five-node";
  result.provenance = "built-in illustrative five-node grid (two generators, three loads)";
  result.external_ids = {1, 2, 3, 4, 5};
  return result;
}

GridCase parse_grid_text(std::string_view text, const ParseOptions& options) {
  struct NodeRow {
    int id = 0;
    bool generator = false;
    double power = 0.0;
    std::optional<double> inertia;
    std::optional<double> damping;
    int line_no = 0;
  };
  struct LineRow {
    int i = 0;
    int j = 0;
    std::optional<double> coupling;
    int line_no = 0;
  };

  std::optional<double> global_k, global_alpha, global_inertia, global_damping;
  std::vector<NodeRow> node_rows;
  std::vector<LineRow> line_rows;
  std::string name;
  std::string source;

  enum class Section { preamble, globals, nodes, lines };
  Section section = Section::preamble;
  bool format_seen = false;

  std::istringstream stream{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(stream, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;

    if (!format_seen) {
      if (line != "format gridcase/1") {
        throw ParseError("expected 'format gridcase/1' as the first directive", line_no);
      }
      format_seen = true;
      continue;
    }
    if (line.front() == '[') {
      if (line == "[globals]") section = Section::globals;
      else if (line == "[nodes]") section = Section::nodes;
      else if (line == "[lines]") section = Section::lines;
      else throw ParseError("unknown section " + line, line_no);
      continue;
    }
    if (section == Section::preamble) {
      if (line.rfind("name ", 0) == 0) {
        name = trim(line.substr(5));
        continue;
      }
      if (line.rfind("source ", 0) == 0) {
        source = trim(line.substr(7));
        continue;
      }
      throw ParseError("unexpected directive before the first section: '" + line + "'",
                       line_no);
    }
    if (section == Section::globals) {
      const size_t eq = line.find('=');
      if (eq == std::string::npos) {
        throw ParseError("globals entries use 'key = value'", line_no);
      }
      const std::string key = trim(line.substr(0, eq));
      const double value = parse_double(trim(line.substr(eq + 1)), line_no, key);
      if (key == "k") global_k = value;
      else if (key == "alpha") global_alpha = value;
      else if (key == "inertia") global_inertia = value;
      else if (key == "damping") global_damping = value;
      else throw ParseError("unknown global '" + key + "'", line_no);
      continue;
    }

    std::istringstream fields(line);
    if (section == Section::nodes) {
      NodeRow row;
      row.line_no = line_no;
      std::string id_token, role, power_token;
      fields >> id_token >> role >> power_token;
      if (power_token.empty()) {
        throw ParseError("node rows are '<id> <role> <P> [inertia] [damping]'", line_no);
      }
      row.id = parse_int(id_token, line_no, "node id");
      if (row.id < 1) throw ParseError("node ids are positive integers", line_no);
      if (role == "generator") row.generator = true;
      else if (role == "load") row.generator = false;
      else throw ParseError("node role must be 'generator' or 'load', got '" + role + "'",
                            line_no);
      row.power = parse_double(power_token, line_no, "node power");
      std::string extra;
      if (fields >> extra) row.inertia = parse_double(extra, line_no, "node inertia");
      if (fields >> extra) row.damping = parse_double(extra, line_no, "node damping");
      if (fields >> extra) throw ParseError("too many fields in node row", line_no);
      node_rows.push_back(row);
    } else {
      LineRow row;
      row.line_no = line_no;
      std::string i_token, j_token;
      fields >> i_token >> j_token;
      if (j_token.empty()) throw ParseError("line rows are '<i> <j> [coupling]'", line_no);
      row.i = parse_int(i_token, line_no, "line endpoint");
      row.j = parse_int(j_token, line_no, "line endpoint");
      std::string extra;
      if (fields >> extra) row.coupling = parse_double(extra, line_no, "line coupling");
      if (fields >> extra) throw ParseError("too many fields in line row", line_no);
      line_rows.push_back(row);
    }
  }

  if (!format_seen) throw ParseError("empty input: missing 'format gridcase/1'", 1);
  if (node_rows.empty()) throw ParseError("no [nodes] section or it is empty", line_no);
  if (line_rows.empty()) throw ParseError("no [lines] section or it is empty", line_no);

  std::vector<int> ids;
  ids.reserve(node_rows.size());
  for (const NodeRow& row : node_rows) ids.push_back(row.id);
  std::sort(ids.begin(), ids.end());
  for (size_t i = 1; i < ids.size(); ++i) {
    if (ids[i] == ids[i - 1]) {
      throw ParseError("duplicate node id " + std::to_string(ids[i]));
    }
  }
  auto to_internal = [&ids](int id) {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    return it != ids.end() && *it == id ? static_cast<int>(it - ids.begin()) : -1;
  };

  const int n = static_cast<int>(ids.size());
  GridCase result;
  result.name = name;
  result.provenance = source;
  result.external_ids = ids;
  result.params.inertia.resize(n);
  result.params.damping.resize(n);
  result.params.power.resize(n);

  std::vector<NodeId> generators;
  for (const NodeRow& row : node_rows) {
    const int internal = to_internal(row.id);
    if (row.generator) generators.push_back(internal);
    result.params.power[internal] = row.power;
    if (row.inertia) result.params.inertia[internal] = *row.inertia;
    else if (global_inertia) result.params.inertia[internal] = *global_inertia;
    else throw ParseError("node " + std::to_string(row.id) +
                              " has no inertia and [globals] sets none",
                          row.line_no);
    if (row.damping) result.params.damping[internal] = *row.damping;
    else if (global_damping) result.params.damping[internal] = *global_damping;
    else throw ParseError("node " + std::to_string(row.id) +
                              " has no damping and [globals] sets none",
                          row.line_no);
  }

  std::vector<Line> lines;
  lines.reserve(line_rows.size());
  for (const LineRow& row : line_rows) {
    const int a = to_internal(row.i);
    const int b = to_internal(row.j);
    if (a < 0 || b < 0) {
      throw ParseError("line references unknown node " +
                           std::to_string(a < 0 ? row.i : row.j),
                       row.line_no);
    }
    double coupling = 0.0;
    if (row.coupling) coupling = *row.coupling;
    else if (global_k) coupling = *global_k;
    else throw ParseError("line has no coupling and [globals] sets no k", row.line_no);
    const Line line = Line::make(a, b, coupling);
    for (const Line& existing : lines) {
      if (existing.a == line.a && existing.b == line.b) {
        throw ParseError("duplicate line (" + std::to_string(row.i) + "," +
                             std::to_string(row.j) + ")",
                         row.line_no);
      }
    }
    lines.push_back(line);
  }

  result.topology = make_topology(n, std::move(lines), std::move(generators));
  if (global_alpha) result.defaults.threshold.alpha = *global_alpha;

  ValidationResult validation = validate_topology(result.topology);
  if (!validation.ok()) throw ValidationError(validation.summary());
  ValidationResult param_check =
      validate_params(result.topology, result.params, options.balance_tolerance);
  ValidationResult hard_issues;
  for (const ValidationIssue& issue : param_check.issues) {
    if (issue.code != ValidationCode::power_imbalance) hard_issues.issues.push_back(issue);
  }
  if (!hard_issues.ok()) throw ValidationError(hard_issues.summary());
  if (param_check.has(ValidationCode::power_imbalance)) {
    if (options.auto_normalize) {
      result = normalize_powers(std::move(result));
    } else {
      throw ValidationError(param_check.summary() +
                            " (enable auto-normalize or balance the file)");
    }
  }
  return result;
}

std::string serialize_grid_case(const GridCase& grid_case) {
  std::ostringstream out;
  out << "format gridcase/1\n";
  if (!grid_case.name.empty()) out << "name " << grid_case.name << "\n";
  if (!grid_case.provenance.empty()) out << "source " << grid_case.provenance << "\n";
  out << "[globals]\n";
  out << "alpha = " << format_exact(grid_case.defaults.threshold.alpha) << "\n";
  out << "[nodes]\n";
  for (int i = 0; i < grid_case.topology.node_count; ++i) {
    out << grid_case.external_ids[i] << " "
        << (grid_case.topology.is_generator(i) ? "generator" : "load") << " "
        << format_exact(grid_case.params.power[i]) << " "
        << format_exact(grid_case.params.inertia[i]) << " "
        << format_exact(grid_case.params.damping[i]) << "\n";
  }
  out << "[lines]\n";
  for (const Line& line : grid_case.topology.lines) {
    out << grid_case.external_ids[line.a] << " " << grid_case.external_ids[line.b] << " "
        << format_exact(line.coupling) << "\n";
  }
  return out.str();
}

GridCase load_grid_file(const std::string& path, const ParseOptions& options) {
  std::ifstream input(path);
  if (!input) throw IoError("cannot open " + path);
  std::stringstream buffer;
  buffer << input.rdbuf();
  const std::string text = buffer.str();

  if (text.find("BUS DATA FOLLOWS") != std::string::npos) {
    return parse_ieee_cdf(text).grid;
  }
  return parse_grid_text(text, options);
}

bool ParamOverrides::empty() const {
  return inertia_by_node.empty() && damping_by_node.empty() && power_by_node.empty() &&
         !inertia_all && !damping_all && !power_all && !inertia_default &&
         !damping_default && !alpha;
}

ParamOverrides parse_sidecar(std::string_view text) {
  ParamOverrides overrides;
  std::istringstream stream{std::string(text)};
  std::string raw;
  int line_no = 0;
  bool format_seen = false;
  while (std::getline(stream, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (!format_seen) {
      if (line != "format sidecar/1") {
        throw ParseError("expected 'format sidecar/1' as the first directive", line_no);
      }
      format_seen = true;
      continue;
    }
    std::istringstream fields(line);
    std::string subject;
    fields >> subject;
    std::string assignment;
    bool any = false;
    while (fields >> assignment) {
      const size_t eq = assignment.find('=');
      if (eq == std::string::npos) {
        throw ParseError("sidecar entries use key=value, got '" + assignment + "'", line_no);
      }
      const std::string key = assignment.substr(0, eq);
      const double value = parse_double(assignment.substr(eq + 1), line_no, key);
      any = true;
      if (subject == "default") {
        if (key == "inertia") overrides.inertia_default = value;
        else if (key == "damping") overrides.damping_default = value;
        else throw ParseError("'default' supports inertia/damping, got '" + key + "'",
                              line_no);
      } else if (subject == "all") {
        if (key == "inertia") overrides.inertia_all = value;
        else if (key == "damping") overrides.damping_all = value;
        else if (key == "power") overrides.power_all = value;
        else throw ParseError("'all' supports inertia/damping/power, got '" + key + "'",
                              line_no);
      } else {
        const int node = parse_int(subject, line_no, "node id");
        if (key == "inertia") overrides.inertia_by_node[node] = value;
        else if (key == "damping") overrides.damping_by_node[node] = value;
        else if (key == "power") overrides.power_by_node[node] = value;
        else throw ParseError("unknown parameter '" + key + "'", line_no);
      }
    }
    if (!any) throw ParseError("sidecar row carries no key=value assignment", line_no);
  }
  if (!format_seen) throw ParseError("empty input: missing 'format sidecar/1'", 1);
  return overrides;
}

ParamOverrides load_sidecar_file(const std::string& path) {
  std::ifstream input(path);
  if (!input) throw IoError("cannot open " + path);
  std::stringstream buffer;
  buffer << input.rdbuf();
  return parse_sidecar(buffer.str());
}

GridCase apply_overrides(GridCase grid_case, const ParamOverrides& overrides) {
  auto apply_vector = [&grid_case](Eigen::VectorXd& values,
                                   const std::optional<double>& all,
                                   const std::optional<double>& fallback,
                                   const std::map<int, double>& by_node) {
    if (all) values.setConstant(*all);
    if (fallback) {
      for (int i = 0; i < grid_case.topology.node_count; ++i) {
        if (!by_node.count(grid_case.external_ids[i])) values[i] = *fallback;
      }
    }
    for (const auto& [external, value] : by_node) {
      values[grid_case.external_to_internal(external)] = value;
    }
  };
  apply_vector(grid_case.params.inertia, overrides.inertia_all, overrides.inertia_default,
               overrides.inertia_by_node);
  apply_vector(grid_case.params.damping, overrides.damping_all, overrides.damping_default,
               overrides.damping_by_node);
  apply_vector(grid_case.params.power, overrides.power_all, std::nullopt,
               overrides.power_by_node);
  if (overrides.alpha) grid_case.defaults.threshold.alpha = *overrides.alpha;
  return grid_case;
}

GridCase normalize_powers(GridCase grid_case) {
  const int n = grid_case.topology.node_count;
  const int generators = static_cast<int>(grid_case.topology.generators.size());
  const int loads = n - generators;
  if (generators == 0) throw ValidationError("normalize_powers: no generators in the case");
  if (loads == 0) throw ValidationError("normalize_powers: no loads in the case");
  const double generator_power = static_cast<double>(loads) / static_cast<double>(generators);
  for (int i = 0; i < n; ++i) {
    grid_case.params.power[i] =
        grid_case.topology.is_generator(i) ? generator_power : -1.0;
  }
  return grid_case;
}

}  // namespace cascade
