#pragma once

#include <iosfwd>
#include <string>

#include "intrahost/integrate.hpp"
#include "intrahost/model.hpp"
#include "intrahost/outcome.hpp"

namespace intrahost {

/// A parsed scenario file: model, integration options and initial state.
struct Scenario {
  ModelSpec spec;
  IntegratorOptions options;
  SystemState initial;
  bool explicit_initial = false;
};

/// DFE plus a merozoite inoculum of 1e-3 for every strain.
SystemState default_initial(const ModelSpec& spec);

/// Parses JSON text with strict schema checking: unknown keys are rejected
/// (ParseError), semantic violations raise ValidationError.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

/// Canonical single-line JSON echo of a scenario (sorted keys, shortest
/// round-trip floats). Parsing it back reproduces the scenario.
std::string scenario_to_json(const Scenario& scenario);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double value);

/// Trajectory CSV: a '# scenario: ...' echo line, the header
/// t,x,y_1_s1..y_k_s1,g_s1,m_s1,... and one row per sample, then a trailing
/// '# terminal: ...' comment row. Byte-deterministic for fixed inputs.
void write_trajectory_csv(std::ostream& os, const Scenario& scenario,
                          const Trajectory& traj);

/// Sweep CSV: swept values, per-strain R0 and T0 columns, prediction kind,
/// and a match column (empty unless simulated). Deterministic row order.
void write_sweep_csv(std::ostream& os, const ModelSpec& spec,
                     const SweepReport& report);

}  // namespace intrahost
