#pragma once

#include <optional>
#include <span>
#include <vector>

#include "intrahost/model.hpp"

namespace intrahost {

/// Stage matrix A0 of one strain: (k+1)x(k+1), lower bidiagonal with
/// diagonal (-alpha_1, ..., -alpha_k, -mu_m), subdiagonal gamma_1..gamma_{k-1}
/// and r*gamma_k in the last row. Metzler and nonsingular; all solves exploit
/// the bidiagonal structure in O(k).
class StageMatrix {
 public:
  StageMatrix(const StrainParams& strain, int k);

  std::size_t size() const { return static_cast<std::size_t>(k_) + 1; }
  double operator()(std::size_t row, std::size_t col) const;
  /// Row-major dense copy, size (k+1)^2.
  std::vector<double> dense() const;

  /// Solves (-A0) w = v by forward substitution. w >= 0 whenever v >= 0.
  std::vector<double> neg_solve(std::span<const double> v) const;
  /// Solves (-A0)^T w = v by back substitution.
  std::vector<double> neg_solve_transpose(std::span<const double> v) const;

  double mu_m() const { return mu_m_; }

 private:
  int k_;
  std::vector<double> alphas_;
  std::vector<double> gammas_;
  double r_;
  double mu_m_;
};

StageMatrix build_A0(const StrainParams& strain, int k);

/// Unique positive root of phi. Bracketed bisection polished by Newton;
/// constant recruitment returns lambda/mu_x exactly.
double solve_xstar(const RecruitmentModel& recruitment);

/// Action of (-A0)^{-1} on v (dimension checked).
std::vector<double> neg_A0_solve(const StageMatrix& A0, std::span<const double> v);

/// Basic reproduction number of one strain,
///   R0 = r*beta*x*/(mu_m + u*beta*x*) * (gamma_1...gamma_k)/(alpha_1...alpha_k).
double r0_closed_form(const StrainParams& strain, double xstar, double u);

/// Same number via the next-generation route: beta*x* <(-A*)^{-1} e_1, e_w>
/// with A* = A0 - u*beta*x* e_w e_w^T, solved directly.
double r0_next_generation(const StrainParams& strain, double xstar, double u);

/// Next-generation route through the rank-one update of (-A0)^{-1}: the last
/// row scaled by mu_m/(mu_m + u*beta*x*). Must agree with the direct solve.
double r0_next_generation_smw(const StrainParams& strain, double xstar, double u);

/// Invasion threshold T0 = beta*x* <(-A0)^{-1}(e_1 - u e_w), e_w>. May be
/// nonpositive; equals x*/xbar whenever it is nonzero.
double t0(const StrainParams& strain, double xstar, double u);

/// alpha* = -max of phi' on [0, x*]. Exactly mu_x for constant recruitment;
/// otherwise a 4096-point grid with golden-section refinement.
double alpha_star(const RecruitmentModel& recruitment, double xstar);

struct StrainThresholds {
  double r0 = 0.0;
  double t0 = 0.0;
};

/// Relative gap under which the two largest T0 values count as tied.
inline constexpr double kGenericityTol = 1e-9;

struct ThresholdReport {
  double xstar = 0.0;
  double alpha_star = 0.0;
  std::vector<StrainThresholds> strains;
  double r0 = 0.0;                  ///< max over strains
  bool generic = true;              ///< largest T0 strictly unique
  std::optional<int> winner;        ///< argmax T0; set iff r0 > 1 and generic
};

ThresholdReport threshold_report(const ModelSpec& spec);

}  // namespace intrahost
