#pragma once

#include <limits>
#include <vector>

#include "intrahost/model.hpp"

namespace intrahost {

struct IntegratorOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double t_end = 0.0;  ///< days; must be > 0
  double max_step = std::numeric_limits<double>::infinity();
  double initial_step = 0.0;  ///< 0 selects the step automatically
  double extinction_eps = 1e-12;
  /// Steady state declared when |RHS|_inf < steady_tol * (1 + |state|_inf).
  double steady_tol = 1e-9;
  std::size_t samples = 200;  ///< dense-output count including t = 0
};

enum class TerminalKind { ReachedTEnd, SteadyState, Extinction };

struct TerminalEvent {
  TerminalKind kind = TerminalKind::ReachedTEnd;
  double t = 0.0;
  std::vector<int> extinct;  ///< strains flagged extinct at termination
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;  ///< flattened, one per time
  TerminalEvent terminal;

  const std::vector<double>& terminal_state() const& { return states.back(); }
  // calling on a temporary hands the state out by value instead of dangling
  std::vector<double> terminal_state() && { return std::move(states.back()); }
};

/// Integrates the system with the adaptive Dormand-Prince 5(4) pair and
/// dense output at opts.samples equispaced times. Components driven below
/// zero by roundoff are clamped to zero when the undershoot is within atol;
/// larger undershoots reject the step and retry at half size. Integration
/// ends at t_end, or earlier once the steady-state test holds.
Trajectory integrate(const ModelSpec& spec, const SystemState& initial,
                     const IntegratorOptions& opts);

/// Strain i is extinct when max(y_{.,i}, m_i) stays below extinction_eps
/// over the trailing 10% of the sampled time span.
std::vector<bool> detect_extinction(const Trajectory& traj, const ModelSpec& spec,
                                    double extinction_eps = 1e-12);

bool steady_state_detect(const ModelSpec& spec, const SystemState& state,
                         double steady_tol = 1e-9);

}  // namespace intrahost
