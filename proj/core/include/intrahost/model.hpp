#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "intrahost/errors.hpp"

namespace intrahost {

/// Red blood cell recruitment law. f(x) is the bone-marrow production rate
/// and phi(x) = f(x) - mu_x*x the net growth of uninfected cells in the
/// absence of parasites. Admissible parameters give a unique homeostatic
/// level x* > 0 with phi(x*) = 0, phi > 0 below it and phi < 0 above it.
struct RecruitmentModel {
  enum class Kind { Constant, Logistic };

  Kind kind = Kind::Constant;
  double lambda = 1.0;  ///< baseline production, cells/(ul*day)
  double mu_x = 0.1;    ///< RBC death rate, 1/day
  double s = 0.0;       ///< logistic self-renewal rate, 1/day
  double K = 1.0;       ///< logistic capacity scale, cells/ul

  static RecruitmentModel constant(double lambda, double mu_x);
  static RecruitmentModel logistic(double lambda, double s, double K, double mu_x);

  double f(double x) const;
  double fprime(double x) const;
  double phi(double x) const { return f(x) - mu_x * x; }
  double phiprime(double x) const { return fprime(x) - mu_x; }

  /// True when f' vanishes identically (constant production).
  bool constant_rate() const { return kind == Kind::Constant || s == 0.0; }
};

/// Rates of one parasite strain cycling through k infected-cell stages.
/// All rates are per day and strictly positive except delta which may be 0.
struct StrainParams {
  double beta = 0.0;           ///< merozoite-RBC contact rate, ul/(cells*day)
  double r = 0.0;              ///< merozoites released per bursting cell
  std::vector<double> gammas;  ///< stage transition rates gamma_1..gamma_k
  std::vector<double> alphas;  ///< stage exit rates alpha_1..alpha_k
  double mu_m = 0.0;           ///< merozoite clearance rate
  double delta = 0.0;          ///< gametocyte production rate (may be 0)
  double mu_g = 1.0;           ///< gametocyte clearance rate
};

/// Full parameterization: n strains, k stages each, invasion-loss
/// multiplicity u (number of merozoites absorbed per invaded cell).
struct ModelSpec {
  int k = 1;
  int n = 1;
  double u = 0.0;
  bool include_gametocytes = true;
  RecruitmentModel recruitment;
  std::vector<StrainParams> strains;

  std::size_t dim() const {
    return 1 + static_cast<std::size_t>(n) * (static_cast<std::size_t>(k) + 2);
  }
};

/// One strain's state: stage occupancies y[0..k-1], gametocytes g,
/// free merozoites m. Concentrations, cells/ul.
struct StrainState {
  std::vector<double> y;
  double g = 0.0;
  double m = 0.0;
};

/// Full system state. The flattened layout is fixed:
///   [x, y_{1,1}..y_{k,1}, g_1, m_1, y_{1,2}, ..., g_n, m_n]
/// for a total dimension of 1 + n*(k+2).
struct SystemState {
  double x = 0.0;
  std::vector<StrainState> strains;
};

/// Index arithmetic for the flattened layout.
struct StateLayout {
  int k = 1;
  int n = 1;

  std::size_t dim() const {
    return 1 + static_cast<std::size_t>(n) * (static_cast<std::size_t>(k) + 2);
  }
  std::size_t x() const { return 0; }
  std::size_t block(int strain) const {
    return 1 + static_cast<std::size_t>(strain) * (static_cast<std::size_t>(k) + 2);
  }
  std::size_t y(int strain, int stage) const { return block(strain) + stage; }
  std::size_t g(int strain) const { return block(strain) + k; }
  std::size_t m(int strain) const { return block(strain) + k + 1; }
};

struct ValidationIssue {
  enum class Code {
    NonPositiveParameter,
    NonUniqueRoot,
    NoRootInBracket,
    DimensionMismatch,
    HypothesisViolated,
  };
  Code code;
  std::string detail;
};

struct ValidationReport {
  bool ok = false;
  double xstar = 0.0;  ///< homeostatic RBC level; meaningful only when ok
  std::vector<ValidationIssue> issues;
};

/// Checks positivity of all parameters, consistent strain shapes, and the
/// recruitment hypothesis (sign-sampled on [0, 4*x_guess] plus root solve).
ValidationReport validate_spec(const ModelSpec& spec);

/// Right-hand side of the n-strain k-stage system, flat layout. The
/// gametocyte derivatives are produced only when spec.include_gametocytes is
/// set (zero otherwise); gametocytes never feed back into other components.
void vector_field(const ModelSpec& spec, std::span<const double> state,
                  std::span<double> deriv);
SystemState vector_field(const ModelSpec& spec, const SystemState& state);

/// Componentwise sum of the magnitudes of all the terms entering the
/// right-hand side; infinity norm. Natural scale for equilibrium residuals.
double rhs_magnitude_scale(const ModelSpec& spec, std::span<const double> state);

std::vector<double> pack(const SystemState& state);
SystemState unpack(std::span<const double> flat, const ModelSpec& spec);

SystemState zero_state(const ModelSpec& spec);

/// Slowest rate constant of the model (mu_x, gammas, alphas, mu_m, and mu_g
/// when gametocytes are active). Used to scale integration horizons.
double min_rate(const ModelSpec& spec);

}  // namespace intrahost
