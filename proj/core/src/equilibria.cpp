#include "intrahost/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "intrahost/thresholds.hpp"

namespace intrahost {

SystemState dfe(const ModelSpec& spec) {
  SystemState state = zero_state(spec);
  state.x = solve_xstar(spec.recruitment);
  return state;
}

std::optional<EndemicEquilibrium> endemic_equilibrium(const ModelSpec& spec,
                                                      int strain, double* t0_out) {
  if (strain < 0 || strain >= spec.n)
    throw DimensionMismatch("strain index out of range");
  const StrainParams& sp = spec.strains[static_cast<std::size_t>(strain)];

  const double xstar = solve_xstar(spec.recruitment);
  const double threshold = t0(sp, xstar, spec.u);
  if (t0_out) *t0_out = threshold;
  if (threshold <= 1.0) return std::nullopt;

  double passage = 1.0;  // r * prod gamma/alpha
  for (std::size_t j = 0; j < sp.gammas.size(); ++j)
    passage *= sp.gammas[j] / sp.alphas[j];
  passage *= sp.r;

  EndemicEquilibrium ee;
  ee.strain_index = strain;
  ee.xbar = sp.mu_m / (sp.beta * (passage - spec.u));

  const StageMatrix A0(sp, spec.k);
  std::vector<double> v(A0.size(), 0.0);
  v.front() = 1.0;
  v.back() = -spec.u;
  ee.zbar = A0.neg_solve(v);
  const double phibar = spec.recruitment.phi(ee.xbar);
  for (double& z : ee.zbar) z *= phibar;
  ee.gbar = sp.delta / sp.mu_g * ee.zbar[static_cast<std::size_t>(spec.k) - 1];

  const std::vector<double> flat = pack(boundary_equilibrium_state(spec, ee));
  std::vector<double> deriv(flat.size());
  vector_field(spec, flat, deriv);
  double norm = 0.0;
  for (double d : deriv) norm = std::max(norm, std::abs(d));
  ee.residual_norm = norm;
  return ee;
}

SystemState boundary_equilibrium_state(const ModelSpec& spec,
                                       const EndemicEquilibrium& ee) {
  SystemState state = zero_state(spec);
  state.x = ee.xbar;
  StrainState& st = state.strains[static_cast<std::size_t>(ee.strain_index)];
  st.y.assign(ee.zbar.begin(), ee.zbar.end() - 1);
  st.m = ee.zbar.back();
  st.g = spec.include_gametocytes ? ee.gbar : 0.0;
  return state;
}

SystemState inoculated_dfe(const ModelSpec& spec, double merozoites) {
  SystemState state = dfe(spec);
  for (StrainState& st : state.strains) st.m = merozoites;
  return state;
}

}  // namespace intrahost
