#pragma once

#include <optional>
#include <vector>

#include "intrahost/model.hpp"

namespace intrahost {

/// Closed-form endemic equilibrium of one strain (all other strains zero).
struct EndemicEquilibrium {
  int strain_index = 0;
  double xbar = 0.0;
  std::vector<double> zbar;  ///< ybar_1..ybar_k, mbar
  double gbar = 0.0;
  double residual_norm = 0.0;  ///< |RHS|_inf at the equilibrium, per day

  double ybar(int stage) const { return zbar[static_cast<std::size_t>(stage)]; }
  double mbar() const { return zbar.back(); }
};

/// Disease-free equilibrium (x*, 0, ..., 0).
SystemState dfe(const ModelSpec& spec);

/// Endemic equilibrium of strain `strain`, or nullopt when T0 <= 1. The
/// threshold value is written to t0_out (when non-null) either way.
std::optional<EndemicEquilibrium> endemic_equilibrium(const ModelSpec& spec,
                                                      int strain,
                                                      double* t0_out = nullptr);

/// Full-system state with strain ee.strain_index at its equilibrium and all
/// other strains at zero.
SystemState boundary_equilibrium_state(const ModelSpec& spec,
                                       const EndemicEquilibrium& ee);

/// DFE plus a merozoite inoculum for every strain; the canonical start off
/// the invariant faces.
SystemState inoculated_dfe(const ModelSpec& spec, double merozoites = 1e-3);

}  // namespace intrahost
