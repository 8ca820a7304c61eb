// Test-side oracles, deliberately independent of the library's solve paths:
// dense LU / eigensolvers from Eigen, a second transcription of the vector
// field built from dense stage matrices, finite differences, and a seeded
// random model sampler.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "intrahost/equilibria.hpp"
#include "intrahost/model.hpp"
#include "intrahost/thresholds.hpp"

namespace oracles {

using namespace intrahost;

inline Eigen::MatrixXd dense_matrix(const StageMatrix& A0) {
  const auto flat = A0.dense();
  const auto m = static_cast<Eigen::Index>(A0.size());
  Eigen::MatrixXd M(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      M(i, j) = flat[static_cast<std::size_t>(i * m + j)];
  return M;
}

// (-A0)^{-1} v by dense LU, the reference for the bidiagonal substitution
inline std::vector<double> dense_neg_solve(const StageMatrix& A0,
                                           const std::vector<double>& v) {
  const Eigen::MatrixXd M = -dense_matrix(A0);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    rhs(static_cast<Eigen::Index>(i)) = v[i];
  const Eigen::VectorXd w = M.fullPivLu().solve(rhs);
  return {w.data(), w.data() + w.size()};
}

// Second, independently coded right-hand side: the condensed block form
// x' = phi(x) - x sum beta_i <z_i, e_w>,
// z_i' = beta_i x <z_i, e_w> (e_1 - u e_w) + A_i z_i, assembled through dense
// matrix-vector products.
inline std::vector<double> reference_rhs(const ModelSpec& spec,
                                         const std::vector<double>& state) {
  const StateLayout lay{spec.k, spec.n};
  std::vector<double> out(state.size(), 0.0);
  const double x = state[lay.x()];

  double load = 0.0;
  for (int i = 0; i < spec.n; ++i)
    load += spec.strains[static_cast<std::size_t>(i)].beta * state[lay.m(i)];
  out[lay.x()] = spec.recruitment.phi(x) - x * load;

  for (int i = 0; i < spec.n; ++i) {
    const StrainParams& sp = spec.strains[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd A = dense_matrix(StageMatrix(sp, spec.k));
    const Eigen::Index m = A.rows();
    Eigen::VectorXd z(m);
    for (int j = 0; j < spec.k; ++j) z(j) = state[lay.y(i, j)];
    z(m - 1) = state[lay.m(i)];

    Eigen::VectorXd forcing = Eigen::VectorXd::Zero(m);
    forcing(0) = 1.0;
    forcing(m - 1) = -spec.u;
    const Eigen::VectorXd zdot = sp.beta * x * z(m - 1) * forcing + A * z;

    for (int j = 0; j < spec.k; ++j) out[lay.y(i, j)] = zdot(j);
    out[lay.m(i)] = zdot(m - 1);
    out[lay.g(i)] = spec.include_gametocytes
                        ? sp.delta * state[lay.y(i, spec.k - 1)] -
                              sp.mu_g * state[lay.g(i)]
                        : 0.0;
  }
  return out;
}

inline double inf_norm(const std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n = std::max(n, std::abs(x));
  return n;
}

// central-difference gradient of a scalar function of a flat state
inline std::vector<double> fd_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& at, double step = 1e-6) {
  std::vector<double> grad(at.size());
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(at[i]));
    std::vector<double> hi = at, lo = at;
    hi[i] += h;
    lo[i] -= h;
    grad[i] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return grad;
}

// damped multistart Newton on vector_field = 0; returns the root when the
// residual converges
inline std::optional<std::vector<double>> newton_root(const ModelSpec& spec,
                                                      std::vector<double> state,
                                                      int max_iter = 80) {
  const auto n = static_cast<Eigen::Index>(state.size());
  std::vector<double> f(state.size());
  for (int iter = 0; iter < max_iter; ++iter) {
    vector_field(spec, state, f);
    double fn = inf_norm(f);
    const double scale = 1.0 + rhs_magnitude_scale(spec, state);
    if (fn <= 1e-13 * scale) return state;

    Eigen::MatrixXd J(n, n);
    std::vector<double> fp(state.size()), fm(state.size());
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(state[static_cast<std::size_t>(j)]));
      std::vector<double> sp = state, sm = state;
      sp[static_cast<std::size_t>(j)] += h;
      sm[static_cast<std::size_t>(j)] -= h;
      vector_field(spec, sp, fp);
      vector_field(spec, sm, fm);
      for (Eigen::Index i = 0; i < n; ++i)
        J(i, j) = (fp[static_cast<std::size_t>(i)] - fm[static_cast<std::size_t>(i)]) /
                  (2.0 * h);
    }
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) rhs(i) = -f[static_cast<std::size_t>(i)];
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    if (!lu.isInvertible()) return std::nullopt;
    const Eigen::VectorXd dx = lu.solve(rhs);

    double lambda = 1.0;
    bool improved = false;
    for (int back = 0; back < 30; ++back) {
      std::vector<double> trial = state;
      for (Eigen::Index i = 0; i < n; ++i)
        trial[static_cast<std::size_t>(i)] += lambda * dx(i);
      vector_field(spec, trial, fp);
      if (inf_norm(fp) < fn) {
        state = trial;
        improved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!improved) return std::nullopt;
  }
  return std::nullopt;
}

// ---- seeded random model construction ----

struct Sampler {
  std::mt19937_64 rng;

  explicit Sampler(std::uint64_t seed) : rng(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  }
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }
  int uniform_int(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  }

  StrainParams strain(int k) {
    StrainParams sp;
    sp.beta = log_uniform(0.02, 1.0);
    sp.r = uniform(4.0, 30.0);
    sp.mu_m = log_uniform(1.0, 15.0);
    sp.delta = uniform(0.0, 1.0);
    sp.mu_g = log_uniform(0.2, 2.0);
    for (int j = 0; j < k; ++j) {
      sp.gammas.push_back(log_uniform(0.2, 5.0));
      sp.alphas.push_back(log_uniform(0.2, 5.0));
    }
    return sp;
  }

  RecruitmentModel recruitment(bool allow_logistic = true) {
    const double mu_x = log_uniform(0.05, 0.5);
    const double lambda = log_uniform(0.5, 4.0);
    if (allow_logistic && uniform(0.0, 1.0) < 0.4) {
      // s < mu_x keeps alpha* positive so SCstab can hold with u > 0
      const double s = uniform(0.0, 0.9) * mu_x;
      const double K = log_uniform(5.0, 50.0);
      return RecruitmentModel::logistic(lambda, s, K, mu_x);
    }
    return RecruitmentModel::constant(lambda, mu_x);
  }

  ModelSpec spec(int k, int n, double u, bool allow_logistic = true) {
    ModelSpec m;
    m.k = k;
    m.n = n;
    m.u = u;
    m.recruitment = recruitment(allow_logistic);
    for (int i = 0; i < n; ++i) m.strains.push_back(strain(k));
    return m;
  }

  // raises r until the stage passage product r*prod(gamma/alpha) exceeds `floor`
  static void ensure_passage_above(StrainParams& sp, double floor) {
    double ratio = 1.0;
    for (std::size_t j = 0; j < sp.gammas.size(); ++j)
      ratio *= sp.gammas[j] / sp.alphas[j];
    if (sp.r * ratio <= floor) sp.r = 1.2 * floor / ratio;
  }

  // scales beta so the strain hits a target T0, raising r first when the
  // passage product would force beta <= 0
  static void set_beta_for_t0(StrainParams& sp, double xstar, double u,
                              double target) {
    ensure_passage_above(sp, u + 0.5);
    double passage = sp.r;
    for (std::size_t j = 0; j < sp.gammas.size(); ++j)
      passage *= sp.gammas[j] / sp.alphas[j];
    sp.beta = target * sp.mu_m / (xstar * (passage - u));
  }

  // scales beta so the strain hits a target R0, raising r as needed
  static void set_beta_for_r0(StrainParams& sp, double xstar, double u,
                              double target) {
    ensure_passage_above(sp, target * u + 0.5);
    double passage = sp.r;
    for (std::size_t j = 0; j < sp.gammas.size(); ++j)
      passage *= sp.gammas[j] / sp.alphas[j];
    sp.beta = target * sp.mu_m / (xstar * (passage - target * u));
  }

  std::vector<double> random_state(const ModelSpec& m, double x_hi,
                                   double parasite_hi) {
    std::vector<double> flat(m.dim());
    flat[0] = uniform(0.0, x_hi);
    for (std::size_t i = 1; i < flat.size(); ++i)
      flat[i] = uniform(0.0, parasite_hi);
    return flat;
  }

  std::vector<double> random_positive_state(const ModelSpec& m, double x_hi,
                                            double parasite_hi) {
    std::vector<double> flat(m.dim());
    flat[0] = uniform(0.05, x_hi);
    for (std::size_t i = 1; i < flat.size(); ++i)
      flat[i] = uniform(0.01, parasite_hi);
    return flat;
  }
};

}  // namespace oracles
