#include "intrahost/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace intrahost {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_strain_index(const ModelSpec& spec, int strain) {
  if (strain < 0 || strain >= spec.n)
    throw DimensionMismatch("strain index out of range");
}

void check_state_shape(const ModelSpec& spec, const SystemState& state) {
  if (static_cast<int>(state.strains.size()) != spec.n)
    throw DimensionMismatch("state does not match spec strain count");
  for (const StrainState& st : state.strains)
    if (static_cast<int>(st.y.size()) != spec.k)
      throw DimensionMismatch("state does not match spec stage count");
}

std::vector<double> strain_z(const StrainState& st) {
  std::vector<double> z(st.y);
  z.push_back(st.m);
  return z;
}

// x - c*ln(x), the building block of every function here
double entropy_term(double x, double c) { return x - c * std::log(x); }

EndemicEquilibrium require_ee(const ModelSpec& spec, int strain) {
  double threshold = 0.0;
  auto ee = endemic_equilibrium(spec, strain, &threshold);
  if (!ee)
    throw NoEndemicEquilibrium(threshold,
                               "strain has no endemic equilibrium (T0 <= 1)");
  return *ee;
}

}  // namespace

LyapunovCertificate certificate(const ModelSpec& spec, int strain) {
  check_strain_index(spec, strain);
  const EndemicEquilibrium ee = require_ee(spec, strain);
  const StrainParams& sp = spec.strains[static_cast<std::size_t>(strain)];
  const std::size_t k = static_cast<std::size_t>(spec.k);

  LyapunovCertificate cert;
  cert.strain_index = strain;
  cert.xbar = ee.xbar;
  cert.a = sp.mu_m / (sp.beta * ee.xbar);
  // chain relations: b_{k+1} = 1, b_k alpha_k = r gamma_k,
  // b_j alpha_j = gamma_j b_{j+1}
  cert.b.assign(k + 1, 1.0);
  cert.b[k - 1] = sp.r * sp.gammas[k - 1] / sp.alphas[k - 1];
  for (std::size_t j = k - 1; j-- > 0;)
    cert.b[j] = sp.gammas[j] * cert.b[j + 1] / sp.alphas[j];
  return cert;
}

double v_dfe_component(const StrainParams& strain, double xstar,
                       std::span<const double> z) {
  const StageMatrix A0(strain, static_cast<int>(strain.gammas.size()));
  const std::vector<double> w = A0.neg_solve(z);
  return strain.beta * xstar * w.back();
}

double v_clearance(const ModelSpec& spec, const SystemState& state) {
  check_state_shape(spec, state);
  if (!(state.x > 0.0)) throw DomainError("clearance V requires x > 0");
  const double xstar = solve_xstar(spec.recruitment);
  double v = entropy_term(state.x, xstar) - xstar * (1.0 - std::log(xstar));
  for (int i = 0; i < spec.n; ++i)
    v += v_dfe_component(spec.strains[static_cast<std::size_t>(i)], xstar,
                         strain_z(state.strains[static_cast<std::size_t>(i)]));
  return v;
}

double v_endemic(const ModelSpec& spec, int strain, const LyapunovCertificate& cert,
                 const SystemState& state) {
  check_strain_index(spec, strain);
  check_state_shape(spec, state);
  const StrainState& st = state.strains[static_cast<std::size_t>(strain)];
  if (!(state.x > 0.0) || !(st.m > 0.0) ||
      std::any_of(st.y.begin(), st.y.end(), [](double y) { return !(y > 0.0); }))
    throw DomainError("endemic V requires positive strain coordinates");

  const EndemicEquilibrium ee = require_ee(spec, strain);
  double v = cert.a * (entropy_term(state.x, ee.xbar) - entropy_term(ee.xbar, ee.xbar));
  for (int j = 0; j < spec.k; ++j) {
    const double zb = ee.zbar[static_cast<std::size_t>(j)];
    v += cert.b[static_cast<std::size_t>(j)] *
         (entropy_term(st.y[static_cast<std::size_t>(j)], zb) - entropy_term(zb, zb));
  }
  v += entropy_term(st.m, ee.mbar()) - entropy_term(ee.mbar(), ee.mbar());
  return v;
}

namespace {

// the composite function is built around the strict argmax-T0 strain; any
// other certificate would not make the cross terms nonpositive
void check_is_winner(const ThresholdReport& report, int strain) {
  if (!report.generic)
    throw NotGeneric("top threshold is tied; composite V undefined");
  if (!report.winner || *report.winner != strain)
    throw DomainError("certificate does not belong to the argmax-T0 strain");
}

}  // namespace

double v_multistrain(const ModelSpec& spec, const LyapunovCertificate& winner_cert,
                     const SystemState& state) {
  const ThresholdReport report = threshold_report(spec);
  const int w = winner_cert.strain_index;
  check_strain_index(spec, w);
  check_is_winner(report, w);

  double v = report.strains[static_cast<std::size_t>(w)].t0 *
             v_endemic(spec, w, winner_cert, state);
  for (int i = 0; i < spec.n; ++i) {
    if (i == w) continue;
    v += winner_cert.a *
         v_dfe_component(spec.strains[static_cast<std::size_t>(i)], report.xstar,
                         strain_z(state.strains[static_cast<std::size_t>(i)]));
  }
  return v;
}

double v_eval(const ModelSpec& spec, const VSelector& sel, const SystemState& state) {
  switch (sel.kind) {
    case VKind::Clearance:
      return v_clearance(spec, state);
    case VKind::DfeLinear: {
      check_state_shape(spec, state);
      const double xstar = solve_xstar(spec.recruitment);
      double v = 0.0;
      for (int i = 0; i < spec.n; ++i)
        v += v_dfe_component(spec.strains[static_cast<std::size_t>(i)], xstar,
                             strain_z(state.strains[static_cast<std::size_t>(i)]));
      return v;
    }
    case VKind::Endemic:
      return v_endemic(spec, sel.cert->strain_index, *sel.cert, state);
    case VKind::Multistrain:
      return v_multistrain(spec, *sel.cert, state);
  }
  throw Error("unreachable V selector");
}

namespace {

// Exact derivative of the single-strain endemic V along the full flow,
// written before the mean-value substitution so it holds for every f:
//   a [f(x) + f(xbar) - f(xbar) x/xbar - f(x) xbar/x]
//   + r gamma_k ybar_k [k + x/xbar - (x/xbar)(m/mbar)(ybar_1/y_1)
//     - sum_{j>=2} (y_{j-1}/ybar_{j-1})(ybar_j/y_j) - (y_k/ybar_k)(mbar/m)]
//   - a (x - xbar) * sum_{i != w} beta_i m_i.
double vdot_endemic_closed(const ModelSpec& spec, int w,
                           const LyapunovCertificate& cert,
                           const EndemicEquilibrium& ee, const SystemState& state) {
  const StrainParams& sp = spec.strains[static_cast<std::size_t>(w)];
  const StrainState& st = state.strains[static_cast<std::size_t>(w)];
  if (!(state.x > 0.0) || !(st.m > 0.0) ||
      std::any_of(st.y.begin(), st.y.end(), [](double y) { return !(y > 0.0); }))
    throw DomainError("endemic Vdot requires positive strain coordinates");

  const double x = state.x;
  const double xbar = ee.xbar;
  const double fx = spec.recruitment.f(x);
  const double fbar = spec.recruitment.f(xbar);
  const double ratio = x / xbar;

  const std::size_t k = static_cast<std::size_t>(spec.k);
  const double mbar = ee.mbar();
  double bracket = static_cast<double>(spec.k) + ratio;
  bracket -= ratio * (st.m / mbar) * (ee.zbar[0] / st.y[0]);
  for (std::size_t j = 1; j < k; ++j)
    bracket -= (st.y[j - 1] / ee.zbar[j - 1]) * (ee.zbar[j] / st.y[j]);
  bracket -= (st.y[k - 1] / ee.zbar[k - 1]) * (mbar / st.m);

  const double burst = sp.r * sp.gammas[k - 1] * ee.zbar[k - 1];
  double v = cert.a * (fx + fbar - fbar * ratio - fx / ratio) + burst * bracket;

  double other_load = 0.0;
  for (int i = 0; i < spec.n; ++i)
    if (i != w)
      other_load += spec.strains[static_cast<std::size_t>(i)].beta *
                    state.strains[static_cast<std::size_t>(i)].m;
  v -= cert.a * (x - xbar) * other_load;
  return v;
}

}  // namespace

double vdot_analytic(const ModelSpec& spec, const VSelector& sel,
                     const SystemState& state) {
  check_state_shape(spec, state);
  switch (sel.kind) {
    case VKind::Clearance: {
      if (!(state.x > 0.0)) throw DomainError("clearance Vdot requires x > 0");
      const double xstar = solve_xstar(spec.recruitment);
      double v = (state.x - xstar) / state.x * spec.recruitment.phi(state.x);
      for (int i = 0; i < spec.n; ++i) {
        const StrainParams& sp = spec.strains[static_cast<std::size_t>(i)];
        v += sp.beta * state.x * state.strains[static_cast<std::size_t>(i)].m *
             (t0(sp, xstar, spec.u) - 1.0);
      }
      return v;
    }
    case VKind::DfeLinear: {
      const double xstar = solve_xstar(spec.recruitment);
      double v = 0.0;
      for (int i = 0; i < spec.n; ++i) {
        const StrainParams& sp = spec.strains[static_cast<std::size_t>(i)];
        v += sp.beta * state.strains[static_cast<std::size_t>(i)].m *
             (t0(sp, xstar, spec.u) * state.x - xstar);
      }
      return v;
    }
    case VKind::Endemic: {
      const int w = sel.cert->strain_index;
      check_strain_index(spec, w);
      const EndemicEquilibrium ee = require_ee(spec, w);
      return vdot_endemic_closed(spec, w, *sel.cert, ee, state);
    }
    case VKind::Multistrain: {
      const ThresholdReport report = threshold_report(spec);
      const int w = sel.cert->strain_index;
      check_strain_index(spec, w);
      check_is_winner(report, w);
      const EndemicEquilibrium ee = require_ee(spec, w);
      const double t0w = report.strains[static_cast<std::size_t>(w)].t0;

      // the cross-strain part of the endemic derivative folds into the
      // T0 differences once T0^w xbar_w = x* is used
      SystemState solo = state;
      for (int i = 0; i < spec.n; ++i) {
        if (i == w) continue;
        StrainState& st = solo.strains[static_cast<std::size_t>(i)];
        std::fill(st.y.begin(), st.y.end(), 0.0);
        st.m = 0.0;
      }
      double v = t0w * vdot_endemic_closed(spec, w, *sel.cert, ee, solo);
      for (int i = 0; i < spec.n; ++i) {
        if (i == w) continue;
        const StrainParams& sp = spec.strains[static_cast<std::size_t>(i)];
        v += sel.cert->a * sp.beta * state.strains[static_cast<std::size_t>(i)].m *
             state.x * (report.strains[static_cast<std::size_t>(i)].t0 - t0w);
      }
      return v;
    }
  }
  throw Error("unreachable V selector");
}

double vdot_chain_rule(const ModelSpec& spec, const VSelector& sel,
                       const SystemState& state) {
  check_state_shape(spec, state);
  const std::vector<double> flat = pack(state);
  std::vector<double> deriv(flat.size());
  vector_field(spec, flat, deriv);
  const StateLayout lay{spec.k, spec.n};
  const double xstar = solve_xstar(spec.recruitment);

  std::vector<double> grad(flat.size(), 0.0);
  const auto add_dfe_grads = [&](double weight, int skip) {
    std::vector<double> ew;
    for (int i = 0; i < spec.n; ++i) {
      if (i == skip) continue;
      const StrainParams& sp = spec.strains[static_cast<std::size_t>(i)];
      const StageMatrix A0(sp, spec.k);
      ew.assign(A0.size(), 0.0);
      ew.back() = 1.0;
      const std::vector<double> g = A0.neg_solve_transpose(ew);
      for (int j = 0; j < spec.k; ++j)
        grad[lay.y(i, j)] +=
            weight * sp.beta * xstar * g[static_cast<std::size_t>(j)];
      grad[lay.m(i)] += weight * sp.beta * xstar * g.back();
    }
  };
  const auto add_endemic_grads = [&](double weight, const LyapunovCertificate& cert) {
    const int w = cert.strain_index;
    const EndemicEquilibrium ee = require_ee(spec, w);
    const StrainState& st = state.strains[static_cast<std::size_t>(w)];
    grad[lay.x()] += weight * cert.a * (1.0 - ee.xbar / state.x);
    for (int j = 0; j < spec.k; ++j)
      grad[lay.y(w, j)] += weight * cert.b[static_cast<std::size_t>(j)] *
                           (1.0 - ee.zbar[static_cast<std::size_t>(j)] /
                                      st.y[static_cast<std::size_t>(j)]);
    grad[lay.m(w)] += weight * (1.0 - ee.mbar() / st.m);
  };

  switch (sel.kind) {
    case VKind::Clearance:
      grad[lay.x()] = 1.0 - xstar / state.x;
      add_dfe_grads(1.0, -1);
      break;
    case VKind::DfeLinear:
      add_dfe_grads(1.0, -1);
      break;
    case VKind::Endemic:
      add_endemic_grads(1.0, *sel.cert);
      break;
    case VKind::Multistrain: {
      const ThresholdReport report = threshold_report(spec);
      const int w = sel.cert->strain_index;
      check_is_winner(report, w);
      add_endemic_grads(report.strains[static_cast<std::size_t>(w)].t0, *sel.cert);
      add_dfe_grads(sel.cert->a, w);
      break;
    }
  }

  double v = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) v += grad[i] * deriv[i];
  return v;
}

double phi_dotvee(const ModelSpec& spec, int strain, const LyapunovCertificate& cert,
                  const SystemState& state) {
  if (!spec.recruitment.constant_rate())
    throw UnsupportedRecruitment(
        "the displayed derivative needs f' == 0; use the chain rule instead");
  check_strain_index(spec, strain);
  check_state_shape(spec, state);
  const StrainParams& sp = spec.strains[static_cast<std::size_t>(strain)];
  const StrainState& st = state.strains[static_cast<std::size_t>(strain)];
  if (!(state.x > 0.0) || !(st.m > 0.0) ||
      std::any_of(st.y.begin(), st.y.end(), [](double y) { return !(y > 0.0); }))
    throw DomainError("Phi requires positive strain coordinates");

  const EndemicEquilibrium ee = require_ee(spec, strain);
  const double x = state.x;
  const double xbar = ee.xbar;
  const double mbar = ee.mbar();
  const std::size_t k = static_cast<std::size_t>(spec.k);

  double bracket = static_cast<double>(spec.k) + 2.0 - xbar / x;
  bracket -= (x / xbar) * (st.m / mbar) * (ee.zbar[0] / st.y[0]);
  for (std::size_t j = 1; j < k; ++j)
    bracket -= (st.y[j - 1] / ee.zbar[j - 1]) * (ee.zbar[j] / st.y[j]);
  bracket -= (st.y[k - 1] / ee.zbar[k - 1]) * (mbar / st.m);

  const double diff = x - xbar;
  const double well = cert.b[0] * spec.recruitment.mu_x * xbar -
                      spec.u * spec.recruitment.f(xbar);
  return -well * diff * diff / (x * xbar) +
         sp.r * sp.gammas[k - 1] * ee.zbar[k - 1] * bracket;
}

DecreaseReport verify_decrease(const ModelSpec& spec, const VSelector& sel,
                               const Trajectory& traj) {
  DecreaseReport report;
  report.samples = traj.states.size();

  double prev = kInf;
  bool seen_finite = false;
  for (const std::vector<double>& flat : traj.states) {
    double v = kInf;
    try {
      v = v_eval(spec, sel, unpack(flat, spec));
    } catch (const DomainError&) {
      v = kInf;
    }
    if (std::isfinite(v)) {
      report.max_abs_v = std::max(report.max_abs_v, std::abs(v));
      if (seen_finite && std::isfinite(prev))
        report.max_increase = std::max(report.max_increase, v - prev);
      seen_finite = true;
    } else if (!seen_finite) {
      ++report.skipped;
    } else {
      report.max_increase = kInf;  // left the domain after entering it
    }
    prev = v;
  }

  report.tol = 1e-8 * (1.0 + report.max_abs_v);
  report.pass = seen_finite && report.max_increase <= report.tol;
  return report;
}

}  // namespace intrahost
