#include "intrahost/outcome.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <thread>

namespace intrahost {

const char* to_string(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::Clearance: return "Clearance";
    case OutcomeKind::ExclusionWinner: return "ExclusionWinner";
    case OutcomeKind::NonGeneric: return "NonGeneric";
    case OutcomeKind::InconclusiveStability: return "InconclusiveStability";
  }
  return "?";
}

bool check_scstab(const ModelSpec& spec, int strain) {
  double threshold = 0.0;
  const auto ee = endemic_equilibrium(spec, strain, &threshold);
  if (!ee)
    throw NoEndemicEquilibrium(threshold, "SCstab is about an EE; T0 <= 1 here");
  const StrainParams& sp = spec.strains[static_cast<std::size_t>(strain)];
  const double xstar = solve_xstar(spec.recruitment);
  const double astar = alpha_star(spec.recruitment, xstar);
  return spec.u * sp.beta * spec.recruitment.phi(ee->xbar) <= astar * sp.mu_m;
}

namespace {

bool amg_shape(const ModelSpec& spec) {
  return spec.k == 1 && spec.n == 1 && spec.u == 1.0 &&
         spec.recruitment.kind == RecruitmentModel::Kind::Constant &&
         !spec.strains.empty() &&
         spec.strains[0].alphas[0] == spec.strains[0].gammas[0];
}

}  // namespace

bool check_amg_condition(const ModelSpec& spec) {
  if (!amg_shape(spec))
    throw WrongModelShape(
        "needs k = 1, n = 1, u = 1, constant recruitment, alpha_1 == gamma_1");
  const StrainParams& sp = spec.strains[0];
  if (sp.r < 1.0)
    throw WrongModelShape("the condition is defined for r >= 1");
  const double root = std::sqrt(sp.r) + std::sqrt(sp.r - 1.0);
  return sp.beta * spec.recruitment.lambda <=
         root * root * spec.recruitment.mu_x * sp.mu_m;
}

OutcomePrediction predict(const ModelSpec& spec) {
  OutcomePrediction pred;
  pred.thresholds = threshold_report(spec);
  pred.r0 = pred.thresholds.r0;
  pred.t0s.reserve(pred.thresholds.strains.size());
  for (const StrainThresholds& st : pred.thresholds.strains)
    pred.t0s.push_back(st.t0);
  if (amg_shape(spec)) pred.amg_condition = check_amg_condition(spec);

  if (pred.r0 <= 1.0) {
    pred.kind = OutcomeKind::Clearance;
    return pred;
  }
  if (!pred.thresholds.generic) {
    pred.kind = OutcomeKind::NonGeneric;
    return pred;
  }
  pred.winner = pred.thresholds.winner;
  pred.scstab_holds = check_scstab(spec, *pred.winner);
  pred.kind = pred.scstab_holds ? OutcomeKind::ExclusionWinner
                                : OutcomeKind::InconclusiveStability;
  return pred;
}

namespace {

bool within(double value, double target, double rtol) {
  return std::abs(value - target) <= rtol * (1.0 + std::abs(target));
}

bool on_invariant_face(const StrainState& st) {
  if (st.m != 0.0) return false;
  for (double y : st.y)
    if (y != 0.0) return false;
  return true;
}

// componentwise match against a reference state; gametocytes only compared
// when they are part of the dynamics
bool state_matches(const ModelSpec& spec, const SystemState& got,
                   const SystemState& want) {
  if (!within(got.x, want.x, kMatchTol)) return false;
  for (int i = 0; i < spec.n; ++i) {
    const StrainState& a = got.strains[static_cast<std::size_t>(i)];
    const StrainState& b = want.strains[static_cast<std::size_t>(i)];
    for (int j = 0; j < spec.k; ++j)
      if (!within(a.y[static_cast<std::size_t>(j)], b.y[static_cast<std::size_t>(j)],
                  kMatchTol))
        return false;
    if (spec.include_gametocytes && !within(a.g, b.g, kMatchTol)) return false;
    if (!within(a.m, b.m, kMatchTol)) return false;
  }
  return true;
}

}  // namespace

ExperimentReport run_experiment(const ModelSpec& spec, const SystemState& initial,
                                const IntegratorOptions& opts) {
  ExperimentReport report;
  report.prediction = predict(spec);

  for (const StrainState& st : initial.strains) {
    if (on_invariant_face(st)) {
      report.invariant_face_start = true;
      report.note = "initial state lies on an invariant face; match skipped";
      break;
    }
  }

  report.trajectory = integrate(spec, initial, opts);
  report.extinct = detect_extinction(report.trajectory, spec, opts.extinction_eps);
  const SystemState terminal = unpack(report.trajectory.terminal_state(), spec);

  const OutcomePrediction& pred = report.prediction;
  if (!report.invariant_face_start) {
    switch (pred.kind) {
      case OutcomeKind::Clearance: {
        bool all_gone = true;
        for (bool e : report.extinct) all_gone = all_gone && e;
        report.matched =
            all_gone && within(terminal.x, pred.thresholds.xstar, kMatchTol);
        break;
      }
      case OutcomeKind::ExclusionWinner:
      case OutcomeKind::InconclusiveStability: {
        const int w = *pred.winner;
        const auto ee = endemic_equilibrium(spec, w);
        bool losers_gone = true;
        for (int i = 0; i < spec.n; ++i)
          if (i != w) losers_gone = losers_gone && report.extinct[static_cast<std::size_t>(i)];
        report.matched = losers_gone && !report.extinct[static_cast<std::size_t>(w)] &&
                         state_matches(spec, terminal,
                                       boundary_equilibrium_state(spec, *ee));
        break;
      }
      case OutcomeKind::NonGeneric:
        report.note = "nongeneric thresholds; no winner to check";
        break;
    }
  }

  switch (pred.kind) {
    case OutcomeKind::Clearance:
      report.decrease =
          verify_decrease(spec, VSelector::clearance(), report.trajectory);
      break;
    case OutcomeKind::ExclusionWinner:
    case OutcomeKind::InconclusiveStability: {
      const LyapunovCertificate cert = certificate(spec, *pred.winner);
      const VSelector sel = spec.n == 1 ? VSelector::endemic(cert)
                                        : VSelector::multistrain(cert);
      report.decrease = verify_decrease(spec, sel, report.trajectory);
      break;
    }
    case OutcomeKind::NonGeneric:
      break;
  }
  return report;
}

ParamSetter resolve_param_path(const ModelSpec& spec, const std::string& path) {
  const auto bad = [&](const std::string& why) {
    return ValidationError("unknown parameter path '" + path + "': " + why);
  };
  const std::size_t dot = path.find('.');
  if (dot == std::string::npos || dot + 1 >= path.size())
    throw bad("expected <object>.<field>");
  const std::string head = path.substr(0, dot);
  const std::string field = path.substr(dot + 1);

  const auto parse_index = [](const std::string& text) -> int {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return -1;
    return value;
  };

  if (head == "model") {
    if (field == "u") return [](ModelSpec& m, double v) { m.u = v; };
    throw bad("model has only 'u'");
  }
  if (head == "recruitment") {
    if (field == "lambda")
      return [](ModelSpec& m, double v) { m.recruitment.lambda = v; };
    if (field == "mu_x") return [](ModelSpec& m, double v) { m.recruitment.mu_x = v; };
    if (field == "s") return [](ModelSpec& m, double v) { m.recruitment.s = v; };
    if (field == "K") return [](ModelSpec& m, double v) { m.recruitment.K = v; };
    throw bad("recruitment has lambda, mu_x, s, K");
  }
  if (head.rfind("strain", 0) == 0) {
    const int idx = parse_index(head.substr(6));
    if (idx < 1 || idx > spec.n) throw bad("strain index out of range");
    const std::size_t i = static_cast<std::size_t>(idx - 1);
    if (field == "beta") return [i](ModelSpec& m, double v) { m.strains[i].beta = v; };
    if (field == "r") return [i](ModelSpec& m, double v) { m.strains[i].r = v; };
    if (field == "mu_m") return [i](ModelSpec& m, double v) { m.strains[i].mu_m = v; };
    if (field == "delta") return [i](ModelSpec& m, double v) { m.strains[i].delta = v; };
    if (field == "mu_g") return [i](ModelSpec& m, double v) { m.strains[i].mu_g = v; };
    if (field.rfind("gamma", 0) == 0) {
      const int j = parse_index(field.substr(5));
      if (j < 1 || j > spec.k) throw bad("gamma stage index out of range");
      return [i, j](ModelSpec& m, double v) {
        m.strains[i].gammas[static_cast<std::size_t>(j - 1)] = v;
      };
    }
    if (field.rfind("alpha", 0) == 0) {
      const int j = parse_index(field.substr(5));
      if (j < 1 || j > spec.k) throw bad("alpha stage index out of range");
      return [i, j](ModelSpec& m, double v) {
        m.strains[i].alphas[static_cast<std::size_t>(j - 1)] = v;
      };
    }
    throw bad("strain fields: beta, r, mu_m, delta, mu_g, gamma<j>, alpha<j>");
  }
  throw bad("expected strain<i>, recruitment, or model");
}

SweepReport sweep(const ModelSpec& spec, const std::vector<SweepAxis>& axes,
                  const IntegratorOptions& opts, const SweepOptions& sweep_opts) {
  if (axes.empty()) throw ValidationError("sweep needs at least one axis");
  if (axes.size() > 3) throw BudgetExceeded("sweep grids are limited to 3 axes");

  std::vector<ParamSetter> setters;
  std::size_t cells = 1;
  for (const SweepAxis& ax : axes) {
    if (ax.values.empty()) throw ValidationError("sweep axis has no values");
    setters.push_back(resolve_param_path(spec, ax.param));
    cells *= ax.values.size();
    if (cells > 100000) throw BudgetExceeded("sweep grids are limited to 1e5 cells");
  }

  SweepReport report;
  report.axes = axes;
  report.cells.resize(cells);

  const auto run_cell = [&](std::size_t index) {
    SweepCell& cell = report.cells[index];
    ModelSpec local = spec;
    cell.values.resize(axes.size());
    std::size_t rem = index;
    for (std::size_t a = axes.size(); a-- > 0;) {
      const std::size_t v = rem % axes[a].values.size();
      rem /= axes[a].values.size();
      cell.values[a] = axes[a].values[v];
      setters[a](local, cell.values[a]);
    }
    try {
      if (!validate_spec(local).ok) return;
      const OutcomePrediction pred = predict(local);
      cell.valid = true;
      for (const StrainThresholds& st : pred.thresholds.strains) {
        cell.r0s.push_back(st.r0);
        cell.t0s.push_back(st.t0);
      }
      cell.kind = pred.kind;
      cell.winner = pred.winner;
      if (sweep_opts.simulate) {
        const ExperimentReport run = run_experiment(local, inoculated_dfe(local), opts);
        cell.matched = run.matched;
      }
    } catch (const Error&) {
      cell.valid = false;
    }
  };

  unsigned threads = sweep_opts.threads > 0
                         ? static_cast<unsigned>(sweep_opts.threads)
                         : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(cells));
  if (threads <= 1) {
    for (std::size_t i = 0; i < cells; ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < cells; i = next.fetch_add(1))
          run_cell(i);
      });
    }
    for (std::thread& th : pool) th.join();
  }

  std::size_t defined = 0, matched = 0;
  for (const SweepCell& cell : report.cells) {
    if (!cell.valid) ++report.n_invalid;
    if (cell.valid && cell.kind == OutcomeKind::NonGeneric) ++report.n_nongeneric;
    if (cell.matched) {
      ++defined;
      if (*cell.matched) ++matched;
    }
  }
  if (defined > 0)
    report.match_rate = static_cast<double>(matched) / static_cast<double>(defined);
  return report;
}

}  // namespace intrahost
