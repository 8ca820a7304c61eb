// Command line front end: analyze | simulate | verify | sweep over JSON
// scenario files. Exit codes: 0 ok, 2 scenario parse error, 3 validation
// error, 4 integrator failure, 5 verification mismatch.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "intrahost/scenario.hpp"

namespace {

using namespace intrahost;

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string describe_prediction(const OutcomePrediction& pred) {
  switch (pred.kind) {
    case OutcomeKind::Clearance:
      return "Clearance (R0 = " + fixed4(pred.r0) + " <= 1)";
    case OutcomeKind::ExclusionWinner:
      return "ExclusionWinner{" + std::to_string(*pred.winner + 1) + "}";
    case OutcomeKind::NonGeneric:
      return "NonGeneric (top T0 tied)";
    case OutcomeKind::InconclusiveStability:
      return "InconclusiveStability (winner strain " +
             std::to_string(*pred.winner + 1) + ", SCstab fails)";
  }
  return "?";
}

int threads_from_env() {
  const char* env = std::getenv("INTRAHOST_THREADS");
  if (!env) return 0;
  const int value = std::atoi(env);
  return value > 0 ? value : 0;
}

int cmd_analyze(const std::string& path, const std::string& out_path) {
  const Scenario sc = load_scenario(path);
  const OutcomePrediction pred = predict(sc.spec);
  const ThresholdReport& rep = pred.thresholds;

  std::cout << "scenario: " << path << "\n";
  std::cout << "x* = " << fixed4(rep.xstar) << "\n";
  std::cout << "alpha* = " << fixed4(rep.alpha_star) << "\n";
  for (int i = 0; i < sc.spec.n; ++i) {
    const StrainThresholds& st = rep.strains[static_cast<std::size_t>(i)];
    std::cout << "strain " << i + 1 << ": R0 = " << fixed4(st.r0)
              << "  T0 = " << fixed4(st.t0);
    const auto ee = endemic_equilibrium(sc.spec, i);
    if (ee) {
      std::cout << "  EE: xbar = " << fixed4(ee->xbar) << "  ybar = [";
      for (int j = 0; j < sc.spec.k; ++j)
        std::cout << (j ? " " : "") << fixed4(ee->ybar(j));
      std::cout << "]  gbar = " << fixed4(ee->gbar)
                << "  mbar = " << fixed4(ee->mbar());
      std::cout << "  SCstab: " << (check_scstab(sc.spec, i) ? "holds" : "fails");
    } else {
      std::cout << "  EE: none";
    }
    std::cout << "\n";
  }
  std::cout << "overall R0 = " << fixed4(pred.r0)
            << (rep.generic ? " (generic)" : " (nongeneric: top T0 tied)") << "\n";
  if (pred.amg_condition)
    std::cout << "AMG condition: " << (*pred.amg_condition ? "holds" : "fails") << "\n";
  std::cout << "prediction: " << describe_prediction(pred) << "\n";

  if (!out_path.empty()) {
    nlohmann::json doc;
    doc["xstar"] = rep.xstar;
    doc["alpha_star"] = rep.alpha_star;
    doc["overall_r0"] = pred.r0;
    doc["generic"] = rep.generic;
    doc["strains"] = nlohmann::json::array();
    for (int i = 0; i < sc.spec.n; ++i) {
      const StrainThresholds& st = rep.strains[static_cast<std::size_t>(i)];
      nlohmann::json row;
      row["r0"] = st.r0;
      row["t0"] = st.t0;
      const auto ee = endemic_equilibrium(sc.spec, i);
      if (ee) {
        row["ee"] = {{"xbar", ee->xbar},
                     {"ybar", std::vector<double>(ee->zbar.begin(), ee->zbar.end() - 1)},
                     {"gbar", ee->gbar},
                     {"mbar", ee->mbar()},
                     {"residual_norm", ee->residual_norm}};
        row["scstab"] = check_scstab(sc.spec, i);
      } else {
        row["ee"] = nullptr;
      }
      doc["strains"].push_back(row);
    }
    doc["amg_condition"] =
        pred.amg_condition ? nlohmann::json(*pred.amg_condition) : nlohmann::json();
    doc["prediction"] = {{"kind", to_string(pred.kind)},
                         {"winner", pred.winner
                                        ? nlohmann::json(*pred.winner + 1)
                                        : nlohmann::json()}};
    std::ofstream out(out_path);
    if (!out) throw Error("cannot write report to '" + out_path + "'");
    out << doc.dump(2) << "\n";
  }
  return 0;
}

int cmd_simulate(const std::string& path, const std::string& out_path) {
  const Scenario sc = load_scenario(path);
  const Trajectory traj = integrate(sc.spec, sc.initial, sc.options);
  if (out_path.empty()) {
    write_trajectory_csv(std::cout, sc, traj);
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw Error("cannot write trajectory to '" + out_path + "'");
    write_trajectory_csv(out, sc, traj);
  }
  return 0;
}

int cmd_verify(const std::string& path) {
  const Scenario sc = load_scenario(path);
  const ExperimentReport report = run_experiment(sc.spec, sc.initial, sc.options);

  std::cout << "prediction: " << describe_prediction(report.prediction) << "\n";
  std::cout << "terminal: " << format_double(report.trajectory.terminal.t)
            << " days, extinct strains:";
  if (report.trajectory.terminal.extinct.empty()) std::cout << " none";
  for (int i : report.trajectory.terminal.extinct) std::cout << " " << i + 1;
  std::cout << "\n";

  if (report.invariant_face_start) {
    std::cout << "verify: SKIPPED (initial state on an invariant face; "
                 "excluded from match statistics)\n";
    return 0;
  }
  if (report.prediction.kind == OutcomeKind::NonGeneric) {
    std::cout << "verify: SKIPPED (nongeneric thresholds; no winner defined)\n";
    return 0;
  }

  const bool matched = report.matched.value_or(false);
  std::cout << "match: " << (matched ? "yes" : "NO") << "\n";
  bool decrease_ok = false;
  if (report.decrease) {
    decrease_ok = report.decrease->pass;
    std::cout << "lyapunov decrease: " << (decrease_ok ? "pass" : "FAIL")
              << " (max increase " << format_double(report.decrease->max_increase)
              << ", tol " << format_double(report.decrease->tol) << ")\n";
  }

  if (matched && decrease_ok) {
    std::cout << "verify: PASS\n";
    return 0;
  }

  std::cout << "verify: FAIL\n";
  // diagnostic dump of the Lyapunov samples
  VSelector sel = VSelector::clearance();
  if (report.prediction.winner) {
    const LyapunovCertificate cert = certificate(sc.spec, *report.prediction.winner);
    sel = sc.spec.n == 1 ? VSelector::endemic(cert) : VSelector::multistrain(cert);
  }
  std::cout << "# t,V\n";
  for (std::size_t s = 0; s < report.trajectory.times.size(); ++s) {
    double v = std::numeric_limits<double>::quiet_NaN();
    try {
      v = v_eval(sc.spec, sel, unpack(report.trajectory.states[s], sc.spec));
    } catch (const DomainError&) {
    }
    std::cout << format_double(report.trajectory.times[s]) << ","
              << format_double(v) << "\n";
  }
  return 5;
}

int cmd_sweep(const std::string& path, const std::string& param, double from,
              double to, int steps, bool simulate, const std::string& out_path) {
  if (steps < 1 || steps > 100000)
    throw ValidationError("--steps must be between 1 and 1e5");
  const Scenario sc = load_scenario(path);

  SweepAxis axis;
  axis.param = param;
  if (steps == 1) {
    axis.values.push_back(from);
  } else {
    axis.values.reserve(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i)
      axis.values.push_back(from + (to - from) * static_cast<double>(i) /
                                       static_cast<double>(steps - 1));
  }

  SweepOptions sweep_opts;
  sweep_opts.simulate = simulate;
  sweep_opts.threads = threads_from_env();
  const SweepReport report = sweep(sc.spec, {axis}, sc.options, sweep_opts);

  if (out_path.empty()) {
    write_sweep_csv(std::cout, sc.spec, report);
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw Error("cannot write sweep to '" + out_path + "'");
    write_sweep_csv(out, sc.spec, report);
  }
  if (report.match_rate)
    std::cerr << "match rate: " << format_double(*report.match_rate) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"within-host multi-strain infection model: thresholds, "
               "equilibria, Lyapunov verification, simulation"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_path;
  std::string param;
  double from = 0.0, to = 0.0;
  int steps = 1;
  bool simulate_cells = false;

  CLI::App* analyze = app.add_subcommand("analyze", "thresholds, equilibria and outcome prediction");
  analyze->add_option("scenario", scenario_path, "scenario JSON file")->required();
  analyze->add_option("--out", out_path, "write a JSON report");

  CLI::App* simulate = app.add_subcommand("simulate", "integrate and write a trajectory CSV");
  simulate->add_option("scenario", scenario_path, "scenario JSON file")->required();
  simulate->add_option("--out", out_path, "trajectory CSV path (default stdout)");

  CLI::App* verify = app.add_subcommand("verify", "check the prediction against a simulation");
  verify->add_option("scenario", scenario_path, "scenario JSON file")->required();

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "sweep one parameter over a grid");
  sweep_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
  sweep_cmd->add_option("--param", param, "parameter path, e.g. strain1.beta")->required();
  sweep_cmd->add_option("--from", from, "first value")->required();
  sweep_cmd->add_option("--to", to, "last value")->required();
  sweep_cmd->add_option("--steps", steps, "number of grid points")->required();
  sweep_cmd->add_flag("--simulate", simulate_cells, "run an experiment per cell");
  sweep_cmd->add_option("--out", out_path, "sweep CSV path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) return cmd_analyze(scenario_path, out_path);
    if (simulate->parsed()) return cmd_simulate(scenario_path, out_path);
    if (verify->parsed()) return cmd_verify(scenario_path);
    if (sweep_cmd->parsed())
      return cmd_sweep(scenario_path, param, from, to, steps, simulate_cells, out_path);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const StepSizeUnderflow& e) {
    std::cerr << "integrator error: " << e.what() << "\n";
    return 4;
  } catch (const NonFiniteState& e) {
    std::cerr << "integrator error: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
