#include "gridcascade/cdf.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "gridcascade/errors.hpp"

namespace cascade {

namespace {

// 1-based inclusive column slice, tolerant of short lines and blank fields.
std::string field(const std::string& line, int first, int last) {
  if (first > static_cast<int>(line.size())) return {};
  const int begin = first - 1;
  const int count = std::min(last, static_cast<int>(line.size())) - begin;
  if (count <= 0) return {};
  std::string result = line.substr(begin, count);
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  result.erase(result.begin(), std::find_if(result.begin(), result.end(), not_space));
  result.erase(std::find_if(result.rbegin(), result.rend(), not_space).base(), result.end());
  return result;
}

double numeric_field(const std::string& line, int first, int last, int line_no,
                     const std::string& what, double blank_value) {
  const std::string token = field(line, first, last);
  if (token.empty()) return blank_value;
  try {
    size_t consumed = 0;
    const double value = std::stod(token, &consumed);
    if (consumed != token.size()) throw std::invalid_argument(token);
    return value;
  } catch (const std::exception&) {
    throw ParseError("malformed " + what + " field '" + token + "'", line_no);
  }
}

int int_field(const std::string& line, int first, int last, int line_no,
              const std::string& what) {
  const double value = numeric_field(line, first, last, line_no, what, 0.0);
  return static_cast<int>(std::lround(value));
}

bool is_terminator(const std::string& line) {
  const std::string token = field(line, 1, 8);
  return token.rfind("-999", 0) == 0 || token.rfind("-99", 0) == 0;
}

std::string upper(std::string text) {
  std::transform(text.begin(), text.end(), text.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  return text;
}

}  // namespace

CdfCase parse_ieee_cdf(std::string_view text, const CdfOptions& options) {
  std::vector<std::string> lines;
  {
    std::istringstream stream{std::string(text)};
    std::string raw;
    while (std::getline(stream, raw)) {
      if (!raw.empty() && raw.back() == '\r') raw.pop_back();
      lines.push_back(raw);
    }
  }
  if (lines.empty()) throw ParseError("empty input", 1);

  CdfCase result;
  result.mva_base = numeric_field(lines[0], 32, 37, 1, "MVA base", 0.0);
  if (!(result.mva_base > 0.0)) {
    throw ParseError("title card carries no positive MVA base in columns 32-37", 1);
  }
  std::string case_name = field(lines[0], 46, 73);

  struct Bus {
    int number = 0;
    int type = 0;
    double load_mw = 0.0;
    double gen_mw = 0.0;
  };
  std::vector<Bus> buses;

  struct Branch {
    int from = 0;
    int to = 0;
    double resistance = 0.0;
    double reactance = 0.0;
  };
  std::vector<Branch> branches;

  size_t cursor = 1;
  auto find_section = [&](const std::string& tag) {
    for (; cursor < lines.size(); ++cursor) {
      if (upper(lines[cursor]).rfind(tag, 0) == 0) {
        ++cursor;
        return true;
      }
    }
    return false;
  };

  if (!find_section("BUS DATA FOLLOWS")) {
    throw ParseError("no 'BUS DATA FOLLOWS' section");
  }
  bool terminated = false;
  for (; cursor < lines.size(); ++cursor) {
    const std::string& line = lines[cursor];
    if (field(line, 1, 10).empty()) continue;
    if (is_terminator(line)) {
      terminated = true;
      ++cursor;
      break;
    }
    const int line_no = static_cast<int>(cursor) + 1;
    Bus bus;
    bus.number = int_field(line, 1, 4, line_no, "bus number");
    if (bus.number <= 0) throw ParseError("malformed bus number", line_no);
    bus.type = int_field(line, 25, 26, line_no, "bus type");
    bus.load_mw = numeric_field(line, 41, 49, line_no, "load MW", 0.0);
    bus.gen_mw = numeric_field(line, 60, 67, line_no, "generation MW", 0.0);
    buses.push_back(bus);
  }
  if (!terminated) throw ParseError("BUS DATA section not terminated by -999");

  if (!find_section("BRANCH DATA FOLLOWS")) {
    throw ParseError("no 'BRANCH DATA FOLLOWS' section");
  }
  terminated = false;
  for (; cursor < lines.size(); ++cursor) {
    const std::string& line = lines[cursor];
    if (field(line, 1, 10).empty()) continue;
    if (is_terminator(line)) {
      terminated = true;
      break;
    }
    const int line_no = static_cast<int>(cursor) + 1;
    Branch branch;
    branch.from = int_field(line, 1, 4, line_no, "from bus");
    branch.to = int_field(line, 6, 9, line_no, "to bus");
    if (branch.from <= 0 || branch.to <= 0) {
      throw ParseError("malformed branch endpoints", line_no);
    }
    if (branch.from == branch.to) {
      throw ParseError("branch joins bus " + std::to_string(branch.from) + " to itself",
                       line_no);
    }
    branch.resistance = numeric_field(line, 20, 29, line_no, "branch resistance", 0.0);
    branch.reactance = numeric_field(line, 30, 40, line_no, "branch reactance", 0.0);
    if (branch.reactance == 0.0) {
      throw ParseError("zero reactance branch " + std::to_string(branch.from) + "-" +
                           std::to_string(branch.to),
                       line_no);
    }
    branches.push_back(branch);
  }
  if (!terminated) throw ParseError("BRANCH DATA section not terminated by -999");

  result.bus_records = static_cast<int>(buses.size());
  result.branch_records = static_cast<int>(branches.size());
  if (buses.empty()) throw ParseError("no bus cards");

  std::vector<int> numbers;
  numbers.reserve(buses.size());
  for (const Bus& bus : buses) numbers.push_back(bus.number);
  std::sort(numbers.begin(), numbers.end());
  if (std::adjacent_find(numbers.begin(), numbers.end()) != numbers.end()) {
    throw ParseError("duplicate bus number in BUS DATA");
  }
  auto to_internal = [&numbers](int number) {
    auto it = std::lower_bound(numbers.begin(), numbers.end(), number);
    return it != numbers.end() && *it == number ? static_cast<int>(it - numbers.begin()) : -1;
  };

  const int n = static_cast<int>(buses.size());
  Eigen::VectorXd power = Eigen::VectorXd::Zero(n);
  std::vector<NodeId> machines;
  int slack = -1;
  for (const Bus& bus : buses) {
    const int internal = to_internal(bus.number);
    power[internal] = (bus.gen_mw - bus.load_mw) / result.mva_base;
    if (bus.type == 3 && slack < 0) slack = bus.number;
    if (bus.type == 2 || bus.type == 3 || bus.gen_mw != 0.0) {
      machines.push_back(internal);
    }
  }
  result.machine_count = static_cast<int>(machines.size());
  result.slack_bus = slack;

  // Parallel circuits between the same pair merge by summing susceptances.
  std::map<std::pair<int, int>, double> couplings;
  for (const Branch& branch : branches) {
    const double x = std::abs(branch.reactance);
    double susceptance = 0.0;
    switch (options.susceptance) {
      case CdfOptions::Susceptance::inverse_reactance:
        susceptance = 1.0 / x;
        break;
      case CdfOptions::Susceptance::reactance_over_impedance_sq:
        susceptance = x / (branch.resistance * branch.resistance + x * x);
        break;
    }
    const int a = to_internal(branch.from);
    const int b = to_internal(branch.to);
    if (a < 0 || b < 0) {
      throw ParseError("branch references unknown bus " +
                       std::to_string(a < 0 ? branch.from : branch.to));
    }
    couplings[{std::min(a, b), std::max(a, b)}] += susceptance;
  }
  std::vector<Line> grid_lines;
  grid_lines.reserve(couplings.size());
  for (const auto& [pair, coupling] : couplings) {
    grid_lines.push_back(Line::make(pair.first, pair.second, coupling));
  }

  result.imbalance = power.sum();
  std::ostringstream provenance;
  provenance << "IEEE common data format, base " << result.mva_base << " MVA";
  if (std::abs(result.imbalance) > 1e-9) {
    switch (options.balance) {
      case CdfOptions::Balance::slack_bus:
        if (slack >= 0) {
          power[to_internal(slack)] -= result.imbalance;
          provenance << "; net imbalance " << result.imbalance
                     << " p.u. absorbed at slack bus " << slack;
          break;
        }
        [[fallthrough]];  // no slack bus: spread it
      case CdfOptions::Balance::uniform:
        power.array() -= result.imbalance / static_cast<double>(n);
        provenance << "; net imbalance " << result.imbalance
                   << " p.u. spread uniformly over " << n << " buses";
        break;
      case CdfOptions::Balance::none:
        provenance << "; net imbalance " << result.imbalance << " p.u. left in place";
        break;
    }
  }

  result.grid.topology = make_topology(n, std::move(grid_lines), std::move(machines));
  result.grid.params = uniform_params(n, options.default_inertia, options.default_damping,
                                      power);
  result.grid.defaults.threshold.alpha = options.alpha;
  result.grid.name = case_name.empty() ? "cdf-case" : case_name;
  result.grid.provenance = provenance.str();
  result.grid.external_ids = numbers;

  ValidationResult validation = validate_topology(result.grid.topology);
  if (!validation.ok()) throw ValidationError(validation.summary());
  return result;
}

CdfCase load_cdf_file(const std::string& path, const CdfOptions& options) {
  std::ifstream input(path);
  if (!input) throw IoError("cannot open " + path);
  std::stringstream buffer;
  buffer << input.rdbuf();
  return parse_ieee_cdf(buffer.str(), options);
}

}  // namespace cascade
