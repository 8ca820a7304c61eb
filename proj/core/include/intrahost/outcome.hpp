#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "intrahost/lyapunov.hpp"

namespace intrahost {

enum class OutcomeKind { Clearance, ExclusionWinner, NonGeneric, InconclusiveStability };

const char* to_string(OutcomeKind kind);

struct OutcomePrediction {
  OutcomeKind kind = OutcomeKind::Clearance;
  std::optional<int> winner;  ///< set for ExclusionWinner and InconclusiveStability
  double r0 = 0.0;
  std::vector<double> t0s;
  bool scstab_holds = false;           ///< for the winner; false when no winner
  std::optional<bool> amg_condition;   ///< only for the original 3d shape
  ThresholdReport thresholds;
};

/// Sufficient stability condition u*beta*phi(xbar) <= alpha* * mu_m for the
/// endemic equilibrium of one strain (requires T0 > 1). Always true for u = 0.
bool check_scstab(const ModelSpec& spec, int strain);

/// Weaker sufficient condition beta*Lambda <= (sqrt(r)+sqrt(r-1))^2 mu_x mu_m
/// for the original three-dimensional shape: k = 1, n = 1, u = 1, constant
/// recruitment, alpha_1 == gamma_1. Throws WrongModelShape otherwise.
bool check_amg_condition(const ModelSpec& spec);

/// Clearance when R0 <= 1; NonGeneric on a top-T0 tie; otherwise the
/// argmax-T0 strain wins, downgraded to InconclusiveStability (winner still
/// reported) when the sufficient condition fails for it.
OutcomePrediction predict(const ModelSpec& spec);

/// Relative tolerance for matching a terminal state against an equilibrium.
inline constexpr double kMatchTol = 1e-3;

struct ExperimentReport {
  OutcomePrediction prediction;
  Trajectory trajectory;
  std::vector<bool> extinct;
  /// Prediction confirmed by the simulation; empty when no check is defined
  /// (nongeneric prediction or an invariant-face start).
  std::optional<bool> matched;
  bool invariant_face_start = false;
  std::optional<DecreaseReport> decrease;
  std::string note;
};

/// Integrates from `initial`, compares extinction flags and the terminal
/// state against the prediction, and verifies Lyapunov decrease for the
/// matching function. Strains starting with y = m = 0 sit on an invariant
/// face; such runs are flagged and excluded from match statistics.
ExperimentReport run_experiment(const ModelSpec& spec, const SystemState& initial,
                                const IntegratorOptions& opts);

/// Setter produced by resolve_param_path.
using ParamSetter = std::function<void(ModelSpec&, double)>;

/// Resolves "strain2.beta", "strain1.gamma3", "recruitment.lambda",
/// "model.u", ... against the model shape. Throws ValidationError on unknown paths.
ParamSetter resolve_param_path(const ModelSpec& spec, const std::string& path);

struct SweepAxis {
  std::string param;
  std::vector<double> values;
};

struct SweepOptions {
  bool simulate = false;
  int threads = 0;  ///< 0 picks hardware concurrency
};

struct SweepCell {
  std::vector<double> values;  ///< one per axis
  bool valid = false;          ///< cell spec passed validation
  std::vector<double> r0s;
  std::vector<double> t0s;
  OutcomeKind kind = OutcomeKind::Clearance;
  std::optional<int> winner;
  std::optional<bool> matched;
};

struct SweepReport {
  std::vector<SweepAxis> axes;
  std::vector<SweepCell> cells;  ///< row-major over axes, last axis fastest
  std::size_t n_nongeneric = 0;
  std::size_t n_invalid = 0;
  std::optional<double> match_rate;  ///< over cells with a defined match
};

/// Evaluates predict (and optionally run_experiment) over the grid in
/// parallel. At most 3 axes and 1e5 cells; larger grids throw BudgetExceeded.
SweepReport sweep(const ModelSpec& spec, const std::vector<SweepAxis>& axes,
                  const IntegratorOptions& opts, const SweepOptions& sweep_opts);

}  // namespace intrahost
