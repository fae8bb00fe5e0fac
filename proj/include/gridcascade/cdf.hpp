#pragma once

#include <string>
#include <string_view>

#include "gridcascade/cases.hpp"

namespace cascade {

/// Options for IEEE common-data-format ingestion (1973 fixed-column exchange
/// format: title card, BUS DATA and BRANCH DATA sections, each terminated by
/// -999).
struct CdfOptions {
  /// How a branch impedance becomes a coupling strength. The model is
  /// lossless with unit voltages, so the default drops the resistance.
  enum class Susceptance {
    inverse_reactance,            // K = 1/x
    reactance_over_impedance_sq,  // K = x/(r^2 + x^2)
  };
  Susceptance susceptance = Susceptance::inverse_reactance;

  /// Solved load-flow files carry losses, so generation and load do not sum
  /// to zero; the synchronous fixed point needs an exact balance.
  enum class Balance {
    slack_bus,  // absorb the mismatch at the type-3 (slack) bus
    uniform,    // spread the mismatch over all buses
    none,       // keep the raw powers (case will carry an imbalance warning)
  };
  Balance balance = Balance::slack_bus;

  double default_inertia = 1.0;  // the CDF text carries no machine dynamics
  double default_damping = 0.1;
  double alpha = 0.6;
};

struct CdfCase {
  GridCase grid;
  int bus_records = 0;
  int branch_records = 0;     // raw cards; parallel circuits merge into one line
  int machine_count = 0;      // type 2/3 buses or buses with generation
  double mva_base = 0.0;
  double imbalance = 0.0;     // sum of P before balancing, per unit
  int slack_bus = -1;         // external number, -1 if none
};

CdfCase parse_ieee_cdf(std::string_view text, const CdfOptions& options = {});
CdfCase load_cdf_file(const std::string& path, const CdfOptions& options = {});

}  // namespace cascade
