#include <doctest.h>

#include <cmath>

#include "intrahost/model.hpp"
#include "intrahost/equilibria.hpp"
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

TEST_CASE("validate_spec accepts the constant-recruitment example") {
  const auto report = validate_spec(running_example());
  REQUIRE(report.ok);
  CHECK(report.xstar == doctest::Approx(10.0).epsilon(1e-14));
}

TEST_CASE("validate_spec rejects a zero death rate") {
  ModelSpec spec = running_example();
  spec.recruitment.mu_x = 0.0;
  const auto report = validate_spec(spec);
  REQUIRE_FALSE(report.ok);
  bool found = false;
  for (const auto& issue : report.issues)
    found = found || issue.code == ValidationIssue::Code::NonPositiveParameter;
  CHECK(found);
}

TEST_CASE("validate_spec accepts the logistic example and finds its root") {
  ModelSpec spec = running_example();
  spec.recruitment = RecruitmentModel::logistic(1.0, 0.05, 20.0, 0.1);
  const auto report = validate_spec(spec);
  REQUIRE(report.ok);
  // bisection oracle: unique positive root of 1 + 0.05 x (1 - x/20) - 0.1 x,
  // analytically 10 (sqrt(5) - 1)
  CHECK(report.xstar == doctest::Approx(12.360679774997896).epsilon(1e-12));
}

TEST_CASE("validate_spec flags mismatched stage vectors") {
  ModelSpec spec = running_example();
  spec.strains[0].gammas = {0.5, 0.5};
  const auto report = validate_spec(spec);
  REQUIRE_FALSE(report.ok);
  CHECK(report.issues[0].code == ValidationIssue::Code::DimensionMismatch);
}

TEST_CASE("validate_spec flags a recruitment law with phi(0) = 0") {
  ModelSpec spec = running_example();
  spec.recruitment = RecruitmentModel::logistic(0.0, 0.3, 20.0, 0.1);
  const auto report = validate_spec(spec);
  REQUIRE_FALSE(report.ok);
}

TEST_CASE("vector_field matches the hand-evaluated single-strain example") {
  ModelSpec spec = running_example();
  spec.include_gametocytes = false;
  SystemState state;
  state.x = 10.0;
  state.strains = {{std::vector<double>{0.0}, 0.0, 1.0}};
  const SystemState d = vector_field(spec, state);
  CHECK(d.x == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(d.strains[0].y[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(d.strains[0].m == doctest::Approx(-12.0).epsilon(1e-14));
  CHECK(d.strains[0].g == 0.0);
}

TEST_CASE("vector_field vanishes at the DFE") {
  const ModelSpec spec = running_example();
  const std::vector<double> flat = pack(dfe(spec));
  std::vector<double> deriv(flat.size());
  vector_field(spec, flat, deriv);
  CHECK(oracles::inf_norm(deriv) <= 1e-14);
}

TEST_CASE("vector_field vanishes at the closed-form endemic equilibrium") {
  const ModelSpec spec = running_example();
  const auto ee = endemic_equilibrium(spec, 0);
  REQUIRE(ee.has_value());
  const std::vector<double> flat = pack(boundary_equilibrium_state(spec, *ee));
  std::vector<double> deriv(flat.size());
  vector_field(spec, flat, deriv);
  const double scale = rhs_magnitude_scale(spec, flat);
  CHECK(oracles::inf_norm(deriv) <= 1e-12 * (1.0 + scale));
}

TEST_CASE("pack flattens in the documented order") {
  SystemState state;
  state.x = 1.0;
  state.strains = {{std::vector<double>{2.0}, 3.0, 4.0}};
  CHECK(pack(state) == std::vector<double>{1.0, 2.0, 3.0, 4.0});
}

TEST_CASE("unpack round-trips random states and rejects bad lengths") {
  oracles::Sampler sampler(7001);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = sampler.uniform_int(1, 6);
    const int n = sampler.uniform_int(1, 4);
    const ModelSpec spec = sampler.spec(k, n, 0.5);
    const std::vector<double> flat = sampler.random_state(spec, 10.0, 3.0);
    CHECK(pack(unpack(flat, spec)) == flat);
  }
  const ModelSpec spec = running_example();
  CHECK_THROWS_AS(unpack(std::vector<double>{1.0, 2.0, 3.0}, spec),
                  DimensionMismatch);
}

TEST_CASE("gametocytes never influence the other components") {
  oracles::Sampler sampler(7002);
  for (int trial = 0; trial < 40; ++trial) {
    const ModelSpec spec =
        sampler.spec(sampler.uniform_int(1, 5), sampler.uniform_int(1, 3), 1.0);
    const StateLayout lay{spec.k, spec.n};
    std::vector<double> a = sampler.random_state(spec, 10.0, 3.0);
    std::vector<double> b = a;
    for (int i = 0; i < spec.n; ++i) b[lay.g(i)] = sampler.uniform(0.0, 50.0);

    std::vector<double> da(a.size()), db(b.size());
    vector_field(spec, a, da);
    vector_field(spec, b, db);
    for (std::size_t j = 0; j < a.size(); ++j) {
      bool is_g = false;
      for (int i = 0; i < spec.n; ++i) is_g = is_g || j == lay.g(i);
      if (!is_g) CHECK(da[j] == db[j]);
    }
  }
}

TEST_CASE("vector_field agrees with an independently coded right-hand side") {
  oracles::Sampler sampler(7003);
  for (int trial = 0; trial < 60; ++trial) {
    const ModelSpec spec = sampler.spec(sampler.uniform_int(1, 6),
                                        sampler.uniform_int(1, 3),
                                        sampler.uniform(0.0, 2.0));
    const std::vector<double> state = sampler.random_state(spec, 10.0, 3.0);
    std::vector<double> deriv(state.size());
    vector_field(spec, state, deriv);
    const std::vector<double> ref = oracles::reference_rhs(spec, state);
    for (std::size_t j = 0; j < state.size(); ++j)
      CHECK(deriv[j] == doctest::Approx(ref[j]).epsilon(1e-12));
  }
}

TEST_CASE("the flow points inward on every boundary face except the x axis") {
  oracles::Sampler sampler(7004);
  for (int trial = 0; trial < 40; ++trial) {
    const ModelSpec spec =
        sampler.spec(sampler.uniform_int(1, 5), sampler.uniform_int(1, 3), 1.0);
    std::vector<double> state = sampler.random_state(spec, 10.0, 3.0);
    // zero a few random non-x coordinates
    for (int z = 0; z < 3; ++z) {
      const std::size_t j = static_cast<std::size_t>(
          sampler.uniform_int(1, static_cast<int>(state.size()) - 1));
      state[j] = 0.0;
    }
    std::vector<double> deriv(state.size());
    vector_field(spec, state, deriv);
    for (std::size_t j = 1; j < state.size(); ++j)
      if (state[j] == 0.0) CHECK(deriv[j] >= 0.0);
  }
}

TEST_CASE("min_rate scans every rate in the model") {
  ModelSpec spec = running_example();
  CHECK(min_rate(spec) == doctest::Approx(0.1));  // mu_x and mu_g tie here
  spec.include_gametocytes = false;
  spec.strains[0].mu_g = 0.001;  // now ignored
  CHECK(min_rate(spec) == doctest::Approx(0.1));
}
