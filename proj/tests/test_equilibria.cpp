#include <doctest.h>

#include <cmath>

#include "intrahost/equilibria.hpp"
#include "intrahost/thresholds.hpp"
#include "support/oracles.hpp"

using namespace intrahost;

namespace {

ModelSpec running_example() {
  ModelSpec spec;
  spec.k = 1;
  spec.n = 1;
  spec.u = 1.0;
  spec.recruitment = RecruitmentModel::constant(1.0, 0.1);
  StrainParams sp;
  sp.beta = 0.2;
  sp.r = 16.0;
  sp.gammas = {0.5};
  sp.alphas = {0.5};
  sp.mu_m = 10.0;
  sp.delta = 0.2;
  sp.mu_g = 0.1;
  spec.strains = {sp};
  return spec;
}

}  // namespace

TEST_CASE("dfe is (x*, 0, ..., 0)") {
  const ModelSpec spec = running_example();
  const SystemState state = dfe(spec);
  CHECK(state.x == 10.0);
  CHECK(state.strains[0].y[0] == 0.0);
  CHECK(state.strains[0].g == 0.0);
  CHECK(state.strains[0].m == 0.0);

  ModelSpec logistic = spec;
  logistic.recruitment = RecruitmentModel::logistic(1.0, 0.05, 20.0, 0.1);
  CHECK(dfe(logistic).x == doctest::Approx(12.360679774997896).epsilon(1e-13));
}

TEST_CASE("endemic equilibrium of the running example in closed form") {
  const ModelSpec spec = running_example();
  const auto ee = endemic_equilibrium(spec, 0);
  REQUIRE(ee.has_value());
  CHECK(ee->xbar == doctest::Approx(10.0 / 3.0).epsilon(1e-14));
  CHECK(ee->ybar(0) == doctest::Approx(4.0 / 3.0).epsilon(1e-13));
  CHECK(ee->mbar() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(ee->gbar == doctest::Approx(2.0 * 4.0 / 3.0).epsilon(1e-13));

  // residual oracle: the full-system vector field vanishes at the EE
  const std::vector<double> flat = pack(boundary_equilibrium_state(spec, *ee));
  std::vector<double> deriv(flat.size());
  vector_field(spec, flat, deriv);
  CHECK(oracles::inf_norm(deriv) <= 1e-12 * (1.0 + rhs_magnitude_scale(spec, flat)));
  CHECK(ee->residual_norm <= 1e-12 * (1.0 + rhs_magnitude_scale(spec, flat)));
}

TEST_CASE("no endemic equilibrium below threshold, T0 reported") {
  ModelSpec spec = running_example();
  spec.strains[0].beta = 0.05;
  double threshold = 0.0;
  const auto ee = endemic_equilibrium(spec, 0, &threshold);
  CHECK_FALSE(ee.has_value());
  CHECK(threshold == doctest::Approx(0.75).epsilon(1e-13));
}

TEST_CASE("mbar = phi(xbar) / (beta xbar) on random supercritical draws") {
  oracles::Sampler sampler(8201);
  int hits = 0;
  while (hits < 60) {
    ModelSpec spec = sampler.spec(sampler.uniform_int(1, 6), 1,
                                  sampler.uniform(0.0, 1.5));
    const auto ee = endemic_equilibrium(spec, 0);
    if (!ee) continue;
    ++hits;
    const double expect =
        spec.recruitment.phi(ee->xbar) / (spec.strains[0].beta * ee->xbar);
    CHECK(ee->mbar() == doctest::Approx(expect).epsilon(1e-11));
    CHECK(ee->xbar > 0.0);
    CHECK(ee->xbar < solve_xstar(spec.recruitment));
    for (double z : ee->zbar) CHECK(z > 0.0);
  }
}

TEST_CASE("xbar depends only on strain parameters, zbar scales with phi(xbar)") {
  oracles::Sampler sampler(8202);
  for (int trial = 0; trial < 30; ++trial) {
    ModelSpec constant = sampler.spec(sampler.uniform_int(1, 4), 1, 0.8, false);
    oracles::Sampler::set_beta_for_t0(constant.strains[0],
                                      solve_xstar(constant.recruitment), 0.8, 3.0);
    const auto ee_const = endemic_equilibrium(constant, 0);
    REQUIRE(ee_const.has_value());

    ModelSpec scaled = constant;
    scaled.recruitment.lambda *= 1.7;  // moves x*, phi, but not xbar
    const auto ee_scaled = endemic_equilibrium(scaled, 0);
    REQUIRE(ee_scaled.has_value());
    CHECK(ee_scaled->xbar == doctest::Approx(ee_const->xbar).epsilon(1e-13));

    const double ratio = scaled.recruitment.phi(ee_scaled->xbar) /
                         constant.recruitment.phi(ee_const->xbar);
    for (std::size_t j = 0; j < ee_const->zbar.size(); ++j)
      CHECK(ee_scaled->zbar[j] ==
            doctest::Approx(ee_const->zbar[j] * ratio).epsilon(1e-11));
  }
}

TEST_CASE("multistart Newton finds only the DFE and the closed-form EE") {
  oracles::Sampler sampler(8203);
  int instances = 0;
  while (instances < 8) {
    ModelSpec spec = sampler.spec(sampler.uniform_int(1, 3), 1,
                                  sampler.uniform(0.0, 1.2));
    oracles::Sampler::ensure_passage_above(spec.strains[0], spec.u + 0.5);
    oracles::Sampler::set_beta_for_t0(spec.strains[0],
                                      solve_xstar(spec.recruitment), spec.u,
                                      sampler.uniform(1.5, 4.0));
    const auto ee = endemic_equilibrium(spec, 0);
    if (!ee) continue;
    ++instances;

    const std::vector<double> at_dfe = pack(dfe(spec));
    const std::vector<double> at_ee = pack(boundary_equilibrium_state(spec, *ee));
    const double xstar = solve_xstar(spec.recruitment);

    for (int seed = 0; seed < 25; ++seed) {
      const auto root =
          oracles::newton_root(spec, sampler.random_state(spec, 2.0 * xstar, 3.0));
      if (!root) continue;
      // uniqueness holds on the nonnegative orthant; a logistic phi also has
      // a negative root whose axis equilibrium does not count
      bool in_orthant = true;
      for (double v : *root) in_orthant = in_orthant && v >= -1e-8 * (1.0 + xstar);
      if (!in_orthant) continue;
      double d_dfe = 0.0, d_ee = 0.0;
      for (std::size_t j = 0; j < root->size(); ++j) {
        d_dfe = std::max(d_dfe, std::abs((*root)[j] - at_dfe[j]));
        d_ee = std::max(d_ee, std::abs((*root)[j] - at_ee[j]));
      }
      CHECK(std::min(d_dfe, d_ee) <= 1e-6 * (1.0 + xstar));
    }
  }
}
