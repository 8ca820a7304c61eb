#pragma once

#include <optional>
#include <span>
#include <vector>

#include "intrahost/equilibria.hpp"
#include "intrahost/integrate.hpp"
#include "intrahost/model.hpp"
#include "intrahost/thresholds.hpp"

namespace intrahost {

/// Coefficients of the endemic Lyapunov function
///   V = a(x - xbar ln x) + sum_j b_j (z_j - zbar_j ln z_j)
/// for one strain, normalized so b_{k+1} = 1. They span the kernel of the
/// block matrix pairing (e_1 - u e_w) with A0^T:
///   <b, e_1 - u e_w> = a        and       b = a beta xbar (-A0^{-T}) e_w,
/// equivalently the chain relations a + u = b_1, b_j alpha_j = gamma_j b_{j+1},
/// b_k alpha_k = r gamma_k. Positive whenever a > 0.
struct LyapunovCertificate {
  int strain_index = 0;
  double a = 0.0;
  std::vector<double> b;  ///< k+1 entries, b.back() == 1
  double xbar = 0.0;
};

/// Builds the certificate for a strain with T0 > 1 (throws
/// NoEndemicEquilibrium otherwise): a = mu_m/(beta*xbar), b by
/// back-substitution through the chain relations.
LyapunovCertificate certificate(const ModelSpec& spec, int strain);

/// Linear component beta*x* <e_w, (-A0^{-1}) z> of the clearance function,
/// one bidiagonal solve. Nonnegative for z >= 0.
double v_dfe_component(const StrainParams& strain, double xstar,
                       std::span<const double> z);

/// Clearance Lyapunov function
///   (x - x* ln x) - x*(1 - ln x*) + sum_i V_DFE(z_i),
/// zero exactly at the DFE. Requires x > 0.
double v_clearance(const ModelSpec& spec, const SystemState& state);

/// Endemic Lyapunov function for one strain, shifted so its minimum (at the
/// endemic equilibrium) is zero. Requires x > 0 and positive strain-i
/// coordinates.
double v_endemic(const ModelSpec& spec, int strain,
                 const LyapunovCertificate& cert, const SystemState& state);

/// Composite multi-strain function T0^w V_EE(x, z_w) + a sum_{i != w} V_DFE(z_i)
/// where w is the strict argmax-T0 strain carried by the certificate.
/// Throws NotGeneric when the top threshold is tied.
double v_multistrain(const ModelSpec& spec, const LyapunovCertificate& winner_cert,
                     const SystemState& state);

enum class VKind { Clearance, DfeLinear, Endemic, Multistrain };

/// Selects which Lyapunov function vdot/verify operate on. Endemic and
/// Multistrain carry the winner's certificate.
struct VSelector {
  VKind kind = VKind::Clearance;
  std::optional<LyapunovCertificate> cert;

  static VSelector clearance() { return {VKind::Clearance, std::nullopt}; }
  static VSelector dfe_linear() { return {VKind::DfeLinear, std::nullopt}; }
  static VSelector endemic(LyapunovCertificate c) {
    return {VKind::Endemic, std::move(c)};
  }
  static VSelector multistrain(LyapunovCertificate c) {
    return {VKind::Multistrain, std::move(c)};
  }
};

/// Value of the selected function at a state.
double v_eval(const ModelSpec& spec, const VSelector& sel, const SystemState& state);

/// Closed-form derivative of the selected function along the flow. Exact for
/// every recruitment model (the endemic form is evaluated before the
/// mean-value substitution, so no unknown intermediate point appears).
double vdot_analytic(const ModelSpec& spec, const VSelector& sel,
                     const SystemState& state);

/// <grad V, vector_field(state)>: the independent chain-rule route used to
/// cross-check vdot_analytic.
double vdot_chain_rule(const ModelSpec& spec, const VSelector& sel,
                       const SystemState& state);

/// The displayed derivative bracket of the endemic function for constant
/// recruitment (the f'(xi) term vanishes identically):
///   Phi = -(b_1 mu_x xbar - u f(xbar)) (x-xbar)^2/(x xbar)
///         + r gamma_k ybar_k [k+2 - xbar/x - (x/xbar)(m/mbar)(ybar_1/y_1)
///           - sum_{j=2..k} (y_{j-1}/ybar_{j-1})(ybar_j/y_j) - (y_k/ybar_k)(mbar/m)].
/// Throws UnsupportedRecruitment when f' is not identically zero.
double phi_dotvee(const ModelSpec& spec, int strain,
                  const LyapunovCertificate& cert, const SystemState& state);

struct DecreaseReport {
  double max_increase = 0.0;  ///< largest forward difference between samples
  double max_abs_v = 0.0;
  double tol = 0.0;  ///< 1e-8 * (1 + max_abs_v)
  std::size_t samples = 0;
  std::size_t skipped = 0;  ///< leading samples outside the domain of V
  bool pass = false;
};

/// Evaluates V along a trajectory and reports the worst forward difference.
/// Samples outside the domain of V (a coordinate at zero before the flow
/// enters the interior) evaluate to +infinity and only count against the
/// check if V returns to infinity after having been finite.
DecreaseReport verify_decrease(const ModelSpec& spec, const VSelector& sel,
                               const Trajectory& traj);

}  // namespace intrahost
