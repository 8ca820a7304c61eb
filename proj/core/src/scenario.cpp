#include "intrahost/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace intrahost {

using nlohmann::json;

SystemState default_initial(const ModelSpec& spec) { return inoculated_dfe(spec); }

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
  throw ParseError("scenario schema error at " + where + ": " + what);
}

void check_object(const json& node, const std::string& where,
                  std::initializer_list<const char*> allowed) {
  if (!node.is_object()) schema_error(where, "expected an object");
  for (const auto& [key, value] : node.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) schema_error(where, "unknown key '" + key + "'");
  }
}

const json& require(const json& node, const std::string& where, const char* key) {
  const auto it = node.find(key);
  if (it == node.end()) schema_error(where, std::string("missing key '") + key + "'");
  return *it;
}

double get_number(const json& node, const std::string& where, const char* key) {
  const json& v = require(node, where, key);
  if (!v.is_number()) schema_error(where + "." + key, "expected a number");
  return v.get<double>();
}

double get_number_or(const json& node, const std::string& where, const char* key,
                     double fallback) {
  const auto it = node.find(key);
  if (it == node.end()) return fallback;
  if (!it->is_number()) schema_error(where + "." + key, "expected a number");
  return it->get<double>();
}

int get_int(const json& node, const std::string& where, const char* key) {
  const json& v = require(node, where, key);
  if (!v.is_number_integer()) schema_error(where + "." + key, "expected an integer");
  return v.get<int>();
}

std::vector<double> get_array(const json& node, const std::string& where,
                              const char* key, std::size_t expected) {
  const json& v = require(node, where, key);
  if (!v.is_array()) schema_error(where + "." + key, "expected an array");
  if (v.size() != expected)
    schema_error(where + "." + key,
                 "expected " + std::to_string(expected) + " entries, got " +
                     std::to_string(v.size()));
  std::vector<double> out;
  out.reserve(v.size());
  for (const json& e : v) {
    if (!e.is_number()) schema_error(where + "." + key, "expected numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }

  check_object(root, "scenario",
               {"model", "recruitment", "strains", "simulation", "initial"});

  Scenario sc;

  const json& model = require(root, "scenario", "model");
  check_object(model, "model", {"k", "n", "u", "include_gametocytes"});
  sc.spec.k = get_int(model, "model", "k");
  sc.spec.n = get_int(model, "model", "n");
  sc.spec.u = get_number(model, "model", "u");
  if (const auto it = model.find("include_gametocytes"); it != model.end()) {
    if (!it->is_boolean()) schema_error("model.include_gametocytes", "expected a bool");
    sc.spec.include_gametocytes = it->get<bool>();
  }

  const json& rec = require(root, "scenario", "recruitment");
  const json& type = require(rec, "recruitment", "type");
  if (!type.is_string()) schema_error("recruitment.type", "expected a string");
  const std::string kind = type.get<std::string>();
  if (kind == "constant") {
    check_object(rec, "recruitment", {"type", "lambda", "mu_x"});
    sc.spec.recruitment = RecruitmentModel::constant(
        get_number(rec, "recruitment", "lambda"), get_number(rec, "recruitment", "mu_x"));
  } else if (kind == "logistic") {
    check_object(rec, "recruitment", {"type", "lambda", "mu_x", "s", "K"});
    sc.spec.recruitment = RecruitmentModel::logistic(
        get_number(rec, "recruitment", "lambda"), get_number(rec, "recruitment", "s"),
        get_number(rec, "recruitment", "K"), get_number(rec, "recruitment", "mu_x"));
  } else {
    schema_error("recruitment.type", "expected 'constant' or 'logistic'");
  }

  const json& strains = require(root, "scenario", "strains");
  if (!strains.is_array()) schema_error("strains", "expected an array");
  if (sc.spec.k < 1 || sc.spec.n < 1)
    throw ValidationError("model.k and model.n must be >= 1");
  int index = 0;
  for (const json& node : strains) {
    const std::string where = "strains[" + std::to_string(index++) + "]";
    check_object(node, where,
                 {"beta", "r", "gammas", "alphas", "mu_m", "delta", "mu_g"});
    StrainParams sp;
    sp.beta = get_number(node, where, "beta");
    sp.r = get_number(node, where, "r");
    sp.gammas = get_array(node, where, "gammas", static_cast<std::size_t>(sc.spec.k));
    sp.alphas = get_array(node, where, "alphas", static_cast<std::size_t>(sc.spec.k));
    sp.mu_m = get_number(node, where, "mu_m");
    sp.delta = get_number_or(node, where, "delta", 0.0);
    sp.mu_g = get_number_or(node, where, "mu_g", 1.0);
    sc.spec.strains.push_back(std::move(sp));
  }

  const ValidationReport validation = validate_spec(sc.spec);
  if (!validation.ok) {
    std::string msg = "invalid model:";
    for (const ValidationIssue& issue : validation.issues) msg += " " + issue.detail + ";";
    throw ValidationError(msg);
  }

  sc.options.t_end = 2000.0 / min_rate(sc.spec);
  if (const auto it = root.find("simulation"); it != root.end()) {
    const json& sim = *it;
    check_object(sim, "simulation",
                 {"t_end", "rtol", "atol", "extinction_eps", "samples"});
    sc.options.t_end = get_number_or(sim, "simulation", "t_end", sc.options.t_end);
    sc.options.rtol = get_number_or(sim, "simulation", "rtol", sc.options.rtol);
    sc.options.atol = get_number_or(sim, "simulation", "atol", sc.options.atol);
    sc.options.extinction_eps =
        get_number_or(sim, "simulation", "extinction_eps", sc.options.extinction_eps);
    if (const auto s = sim.find("samples"); s != sim.end()) {
      if (!s->is_number_integer()) schema_error("simulation.samples", "expected an integer");
      const int samples = s->get<int>();
      if (samples < 2) throw ValidationError("simulation.samples must be >= 2");
      if (samples > 1000000)
        throw ValidationError("simulation.samples must be <= 1e6");
      sc.options.samples = static_cast<std::size_t>(samples);
    }
  }
  if (!(sc.options.t_end > 0.0)) throw ValidationError("simulation.t_end must be > 0");
  if (!(sc.options.rtol > 0.0) || !(sc.options.atol > 0.0))
    throw ValidationError("simulation tolerances must be > 0");
  if (!(sc.options.extinction_eps > 0.0))
    throw ValidationError("simulation.extinction_eps must be > 0");

  if (const auto it = root.find("initial"); it != root.end()) {
    const json& init = *it;
    check_object(init, "initial", {"x", "strains"});
    sc.explicit_initial = true;
    sc.initial.x = get_number(init, "initial", "x");
    const json& list = require(init, "initial", "strains");
    if (!list.is_array() || list.size() != static_cast<std::size_t>(sc.spec.n))
      schema_error("initial.strains", "expected one entry per strain");
    int si = 0;
    for (const json& node : list) {
      const std::string where = "initial.strains[" + std::to_string(si++) + "]";
      check_object(node, where, {"y", "g", "m"});
      StrainState st;
      st.y = get_array(node, where, "y", static_cast<std::size_t>(sc.spec.k));
      st.g = get_number_or(node, where, "g", 0.0);
      st.m = get_number(node, where, "m");
      sc.initial.strains.push_back(std::move(st));
    }
    const std::vector<double> flat = pack(sc.initial);
    for (double v : flat)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ValidationError("initial state must be finite and nonnegative");
  } else {
    sc.initial = default_initial(sc.spec);
  }

  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open scenario file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::string scenario_to_json(const Scenario& scenario) {
  const ModelSpec& spec = scenario.spec;
  json root;
  root["model"] = {{"k", spec.k},
                   {"n", spec.n},
                   {"u", spec.u},
                   {"include_gametocytes", spec.include_gametocytes}};
  if (spec.recruitment.kind == RecruitmentModel::Kind::Constant) {
    root["recruitment"] = {{"type", "constant"},
                           {"lambda", spec.recruitment.lambda},
                           {"mu_x", spec.recruitment.mu_x}};
  } else {
    root["recruitment"] = {{"type", "logistic"},
                           {"lambda", spec.recruitment.lambda},
                           {"mu_x", spec.recruitment.mu_x},
                           {"s", spec.recruitment.s},
                           {"K", spec.recruitment.K}};
  }
  root["strains"] = json::array();
  for (const StrainParams& sp : spec.strains) {
    root["strains"].push_back({{"beta", sp.beta},
                               {"r", sp.r},
                               {"gammas", sp.gammas},
                               {"alphas", sp.alphas},
                               {"mu_m", sp.mu_m},
                               {"delta", sp.delta},
                               {"mu_g", sp.mu_g}});
  }
  root["simulation"] = {{"t_end", scenario.options.t_end},
                        {"rtol", scenario.options.rtol},
                        {"atol", scenario.options.atol},
                        {"extinction_eps", scenario.options.extinction_eps},
                        {"samples", scenario.options.samples}};
  root["initial"] = {{"x", scenario.initial.x}, {"strains", json::array()}};
  for (const StrainState& st : scenario.initial.strains)
    root["initial"]["strains"].push_back({{"y", st.y}, {"g", st.g}, {"m", st.m}});
  return root.dump();
}

std::string format_double(double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

namespace {

const char* to_string(TerminalKind kind) {
  switch (kind) {
    case TerminalKind::ReachedTEnd: return "ReachedTEnd";
    case TerminalKind::SteadyState: return "SteadyState";
    case TerminalKind::Extinction: return "Extinction";
  }
  return "?";
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Scenario& scenario,
                          const Trajectory& traj) {
  const ModelSpec& spec = scenario.spec;
  os << "# scenario: " << scenario_to_json(scenario) << "\n";
  os << "t,x";
  for (int i = 1; i <= spec.n; ++i) {
    for (int j = 1; j <= spec.k; ++j) os << ",y_" << j << "_s" << i;
    os << ",g_s" << i << ",m_s" << i;
  }
  os << "\n";
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    os << format_double(traj.times[s]);
    for (double v : traj.states[s]) os << "," << format_double(v);
    os << "\n";
  }
  os << "# terminal: " << to_string(traj.terminal.kind)
     << " t=" << format_double(traj.terminal.t) << " extinct=";
  if (traj.terminal.extinct.empty()) {
    os << "none";
  } else {
    for (std::size_t i = 0; i < traj.terminal.extinct.size(); ++i)
      os << (i ? "," : "") << (traj.terminal.extinct[i] + 1);
  }
  os << "\n";
}

void write_sweep_csv(std::ostream& os, const ModelSpec& spec,
                     const SweepReport& report) {
  for (const SweepAxis& ax : report.axes) os << ax.param << ",";
  for (int i = 1; i <= spec.n; ++i) os << "r0_s" << i << ",";
  for (int i = 1; i <= spec.n; ++i) os << "t0_s" << i << ",";
  os << "prediction,match\n";

  for (const SweepCell& cell : report.cells) {
    for (double v : cell.values) os << format_double(v) << ",";
    if (!cell.valid) {
      for (int i = 0; i < 2 * spec.n; ++i) os << "nan,";
      os << "Invalid,\n";
      continue;
    }
    for (double v : cell.r0s) os << format_double(v) << ",";
    for (double v : cell.t0s) os << format_double(v) << ",";
    os << to_string(cell.kind);
    if (cell.winner) os << "{" << *cell.winner + 1 << "}";
    os << ",";
    if (cell.matched) os << (*cell.matched ? "true" : "false");
    os << "\n";
  }
}

}  // namespace intrahost
