#include "intrahost/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace intrahost {

StageMatrix::StageMatrix(const StrainParams& strain, int k)
    : k_(k),
      alphas_(strain.alphas),
      gammas_(strain.gammas),
      r_(strain.r),
      mu_m_(strain.mu_m) {
  if (k < 1) throw DimensionMismatch("stage matrix requires k >= 1");
  if (alphas_.size() != static_cast<std::size_t>(k) ||
      gammas_.size() != static_cast<std::size_t>(k)) {
    throw DimensionMismatch("strain rate vectors do not have k entries");
  }
  for (double a : alphas_)
    if (a == 0.0) throw SingularMatrix("zero alpha would make A0 singular");
  if (mu_m_ == 0.0) throw SingularMatrix("zero mu_m would make A0 singular");
}

double StageMatrix::operator()(std::size_t row, std::size_t col) const {
  const std::size_t k = static_cast<std::size_t>(k_);
  if (row == col) return row < k ? -alphas_[row] : -mu_m_;
  if (row == col + 1) {
    // subdiagonal: gamma_1..gamma_{k-1}, then r*gamma_k in the last row
    return row < k ? gammas_[col] : r_ * gammas_[k - 1];
  }
  return 0.0;
}

std::vector<double> StageMatrix::dense() const {
  const std::size_t m = size();
  std::vector<double> out(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = (*this)(i, j);
  return out;
}

std::vector<double> StageMatrix::neg_solve(std::span<const double> v) const {
  if (v.size() != size()) throw DimensionMismatch("vector does not match A0 size");
  const std::size_t k = static_cast<std::size_t>(k_);
  std::vector<double> w(size());
  w[0] = v[0] / alphas_[0];
  for (std::size_t j = 1; j < k; ++j)
    w[j] = (v[j] + gammas_[j - 1] * w[j - 1]) / alphas_[j];
  w[k] = (v[k] + r_ * gammas_[k - 1] * w[k - 1]) / mu_m_;
  return w;
}

std::vector<double> StageMatrix::neg_solve_transpose(std::span<const double> v) const {
  if (v.size() != size()) throw DimensionMismatch("vector does not match A0 size");
  const std::size_t k = static_cast<std::size_t>(k_);
  std::vector<double> w(size());
  w[k] = v[k] / mu_m_;
  w[k - 1] = (v[k - 1] + r_ * gammas_[k - 1] * w[k]) / alphas_[k - 1];
  for (std::size_t j = k - 1; j-- > 0;)
    w[j] = (v[j] + gammas_[j] * w[j + 1]) / alphas_[j];
  return w;
}

StageMatrix build_A0(const StrainParams& strain, int k) { return {strain, k}; }

double solve_xstar(const RecruitmentModel& recruitment) {
  if (recruitment.kind == RecruitmentModel::Kind::Constant)
    return recruitment.lambda / recruitment.mu_x;

  // Bracket the root, bisect, then polish with Newton.
  double lo = 0.0;
  double hi = std::max(recruitment.lambda / recruitment.mu_x, 1e-6);
  int expansions = 0;
  while (recruitment.phi(hi) > 0.0) {
    hi *= 2.0;
    if (++expansions > 200 || !std::isfinite(hi))
      throw NoRootInBracket("phi does not become negative on the search range");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (recruitment.phi(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-12 * hi) break;
  }

  double x = 0.5 * (lo + hi);
  const auto target = [&] {
    return 1e-12 * std::max(recruitment.lambda, recruitment.mu_x * x);
  };
  for (int i = 0; i < 20; ++i) {
    const double p = recruitment.phi(x);
    if (std::abs(p) < target()) break;
    const double d = recruitment.phiprime(x);
    if (d == 0.0) break;
    const double next = x - p / d;
    if (!(next > lo && next < hi)) break;  // keep Newton inside the bracket
    x = next;
  }
  return x;
}

std::vector<double> neg_A0_solve(const StageMatrix& A0, std::span<const double> v) {
  return A0.neg_solve(v);
}

namespace {

int stage_count(const StrainParams& strain) {
  if (strain.gammas.size() != strain.alphas.size() || strain.gammas.empty())
    throw DimensionMismatch("strain rate vectors disagree on k");
  return static_cast<int>(strain.gammas.size());
}

// gamma_1...gamma_k / alpha_1...alpha_k, accumulated ratio by ratio
double stage_passage_ratio(const StrainParams& strain) {
  double prod = 1.0;
  for (std::size_t j = 0; j < strain.gammas.size(); ++j)
    prod *= strain.gammas[j] / strain.alphas[j];
  return prod;
}

}  // namespace

double r0_closed_form(const StrainParams& strain, double xstar, double u) {
  const double bx = strain.beta * xstar;
  return strain.r * bx / (strain.mu_m + u * bx) * stage_passage_ratio(strain);
}

double r0_next_generation(const StrainParams& strain, double xstar, double u) {
  const int k = stage_count(strain);
  const double bx = strain.beta * xstar;
  // (-A*) differs from (-A0) only in the last pivot, mu_m + u*beta*x*, so the
  // forward substitution carries over unchanged.
  std::vector<double> w(static_cast<std::size_t>(k) + 1, 0.0);
  w[0] = 1.0 / strain.alphas[0];
  for (int j = 1; j < k; ++j)
    w[j] = strain.gammas[j - 1] * w[j - 1] / strain.alphas[j];
  const double last_pivot = strain.mu_m + u * bx;
  if (last_pivot == 0.0) throw SingularMatrix("A* has a zero pivot");
  w[k] = strain.r * strain.gammas[k - 1] * w[k - 1] / last_pivot;
  return bx * w[k];
}

double r0_next_generation_smw(const StrainParams& strain, double xstar, double u) {
  const int k = stage_count(strain);
  const double bx = strain.beta * xstar;
  const StageMatrix A0(strain, k);
  std::vector<double> e1(static_cast<std::size_t>(k) + 1, 0.0);
  e1[0] = 1.0;
  const std::vector<double> w = A0.neg_solve(e1);
  return bx * w.back() * strain.mu_m / (strain.mu_m + u * bx);
}

double t0(const StrainParams& strain, double xstar, double u) {
  const int k = stage_count(strain);
  const StageMatrix A0(strain, k);
  std::vector<double> v(static_cast<std::size_t>(k) + 1, 0.0);
  v[0] = 1.0;
  v[static_cast<std::size_t>(k)] = -u;
  const std::vector<double> w = A0.neg_solve(v);
  return strain.beta * xstar * w.back();
}

double alpha_star(const RecruitmentModel& recruitment, double xstar) {
  if (recruitment.kind == RecruitmentModel::Kind::Constant)
    return recruitment.mu_x;

  constexpr int kGrid = 4096;
  double best = -std::numeric_limits<double>::infinity();
  int best_i = 0;
  for (int i = 0; i < kGrid; ++i) {
    const double x = xstar * static_cast<double>(i) / (kGrid - 1);
    const double d = recruitment.phiprime(x);
    if (d > best) {
      best = d;
      best_i = i;
    }
  }

  // Golden-section refinement around the best grid cell.
  double a = xstar * static_cast<double>(std::max(0, best_i - 1)) / (kGrid - 1);
  double b = xstar * static_cast<double>(std::min(kGrid - 1, best_i + 1)) / (kGrid - 1);
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = recruitment.phiprime(c);
  double fd = recruitment.phiprime(d);
  for (int it = 0; it < 100 && (b - a) > 1e-14 * std::max(1.0, xstar); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = recruitment.phiprime(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = recruitment.phiprime(d);
    }
  }
  best = std::max(best, std::max(fc, fd));
  return -best;
}

ThresholdReport threshold_report(const ModelSpec& spec) {
  ThresholdReport report;
  report.xstar = solve_xstar(spec.recruitment);
  report.alpha_star = alpha_star(spec.recruitment, report.xstar);

  report.strains.reserve(spec.strains.size());
  for (const StrainParams& sp : spec.strains) {
    StrainThresholds st;
    st.r0 = r0_closed_form(sp, report.xstar, spec.u);
    st.t0 = t0(sp, report.xstar, spec.u);
    report.strains.push_back(st);
  }

  report.r0 = 0.0;
  int argmax_t0 = 0;
  double best_t0 = -std::numeric_limits<double>::infinity();
  double second_t0 = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < report.strains.size(); ++i) {
    report.r0 = std::max(report.r0, report.strains[i].r0);
    const double t = report.strains[i].t0;
    if (t > best_t0) {
      second_t0 = best_t0;
      best_t0 = t;
      argmax_t0 = static_cast<int>(i);
    } else if (t > second_t0) {
      second_t0 = t;
    }
  }

  report.generic = report.strains.size() < 2 ||
                   (best_t0 - second_t0) > kGenericityTol * std::max(1.0, std::abs(best_t0));
  if (report.r0 > 1.0 && report.generic) report.winner = argmax_t0;
  return report;
}

}  // namespace intrahost
