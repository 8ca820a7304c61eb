#include "intrahost/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "intrahost/thresholds.hpp"

namespace intrahost {

RecruitmentModel RecruitmentModel::constant(double lambda, double mu_x) {
  RecruitmentModel r;
  r.kind = Kind::Constant;
  r.lambda = lambda;
  r.mu_x = mu_x;
  return r;
}

RecruitmentModel RecruitmentModel::logistic(double lambda, double s, double K,
                                            double mu_x) {
  RecruitmentModel r;
  r.kind = Kind::Logistic;
  r.lambda = lambda;
  r.s = s;
  r.K = K;
  r.mu_x = mu_x;
  return r;
}

double RecruitmentModel::f(double x) const {
  if (kind == Kind::Constant) return lambda;
  return lambda + s * x * (1.0 - x / K);
}

double RecruitmentModel::fprime(double x) const {
  if (kind == Kind::Constant) return 0.0;
  return s * (1.0 - 2.0 * x / K);
}

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }
bool nonneg_finite(double v) { return std::isfinite(v) && v >= 0.0; }

void require_positive(std::vector<ValidationIssue>& issues, double v,
                     const std::string& name) {
  if (!positive_finite(v)) {
    issues.push_back({ValidationIssue::Code::NonPositiveParameter,
                      name + " must be finite and > 0"});
  }
}

void require_nonneg(std::vector<ValidationIssue>& issues, double v,
                    const std::string& name) {
  if (!nonneg_finite(v)) {
    issues.push_back({ValidationIssue::Code::NonPositiveParameter,
                      name + " must be finite and >= 0"});
  }
}

// Rough location of the positive root of phi, used to size the sampling
// window before the actual root solve.
double xstar_guess(const RecruitmentModel& rec) {
  if (rec.kind == RecruitmentModel::Kind::Constant || rec.s == 0.0)
    return rec.lambda / rec.mu_x;
  // phi(x) = -(s/K) x^2 + (s - mu_x) x + lambda, take the positive root
  const double a = -rec.s / rec.K;
  const double b = rec.s - rec.mu_x;
  const double c = rec.lambda;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return rec.lambda / rec.mu_x;
  return (-b - std::sqrt(disc)) / (2.0 * a);
}

}  // namespace

ValidationReport validate_spec(const ModelSpec& spec) {
  ValidationReport report;
  auto& issues = report.issues;

  if (spec.k < 1)
    issues.push_back({ValidationIssue::Code::NonPositiveParameter, "k must be >= 1"});
  if (spec.n < 1)
    issues.push_back({ValidationIssue::Code::NonPositiveParameter, "n must be >= 1"});
  require_nonneg(issues, spec.u, "u");

  const RecruitmentModel& rec = spec.recruitment;
  require_positive(issues, rec.mu_x, "recruitment.mu_x");
  if (rec.kind == RecruitmentModel::Kind::Constant) {
    require_positive(issues, rec.lambda, "recruitment.lambda");
  } else {
    require_nonneg(issues, rec.lambda, "recruitment.lambda");
    require_nonneg(issues, rec.s, "recruitment.s");
    require_positive(issues, rec.K, "recruitment.K");
  }

  if (static_cast<int>(spec.strains.size()) != spec.n) {
    issues.push_back({ValidationIssue::Code::DimensionMismatch,
                      "strains array size does not match n"});
  }
  for (std::size_t i = 0; i < spec.strains.size(); ++i) {
    const StrainParams& sp = spec.strains[i];
    const std::string tag = "strain" + std::to_string(i + 1) + ".";
    if (spec.k >= 1 &&
        (sp.gammas.size() != static_cast<std::size_t>(spec.k) ||
         sp.alphas.size() != static_cast<std::size_t>(spec.k))) {
      issues.push_back({ValidationIssue::Code::DimensionMismatch,
                        tag + "gammas/alphas must have k entries"});
      continue;
    }
    require_positive(issues, sp.beta, tag + "beta");
    require_positive(issues, sp.r, tag + "r");
    require_positive(issues, sp.mu_m, tag + "mu_m");
    require_nonneg(issues, sp.delta, tag + "delta");
    require_positive(issues, sp.mu_g, tag + "mu_g");
    for (std::size_t j = 0; j < sp.gammas.size(); ++j)
      require_positive(issues, sp.gammas[j], tag + "gamma" + std::to_string(j + 1));
    for (std::size_t j = 0; j < sp.alphas.size(); ++j)
      require_positive(issues, sp.alphas[j], tag + "alpha" + std::to_string(j + 1));
  }

  if (!issues.empty()) return report;

  // Homeostasis hypothesis: sample the sign of phi densely, then solve for
  // the root. Exactly one + -> - change, strictly positive before it.
  const double guess = xstar_guess(rec);
  const double hi = 4.0 * guess;
  constexpr int kSamples = 4096;
  int sign_changes = 0;
  int prev_sign = 0;
  bool nonpositive_before_root = false;
  for (int i = 0; i < kSamples; ++i) {
    const double x = hi * static_cast<double>(i) / (kSamples - 1);
    const double p = rec.phi(x);
    const int sign = (p > 0.0) - (p < 0.0);
    if (prev_sign != 0 && sign != 0 && sign != prev_sign) ++sign_changes;
    if (sign_changes == 0 && sign <= 0) nonpositive_before_root = true;
    if (sign != 0) prev_sign = sign;
  }
  if (sign_changes > 1) {
    issues.push_back({ValidationIssue::Code::NonUniqueRoot,
                      "phi changes sign more than once on [0, 4*x_guess]"});
    return report;
  }
  if (nonpositive_before_root) {
    // The single sampled root can only hide phi(x) <= 0 at x below it, which
    // breaks phi > 0 on [0, x*).
    issues.push_back({ValidationIssue::Code::HypothesisViolated,
                      "phi is not strictly positive on [0, x*)"});
    return report;
  }

  try {
    report.xstar = solve_xstar(rec);
  } catch (const NoRootInBracket& e) {
    issues.push_back({ValidationIssue::Code::NoRootInBracket, e.what()});
    return report;
  }

  report.ok = true;
  return report;
}

namespace {

void check_flat_dim(const ModelSpec& spec, std::size_t got) {
  if (spec.strains.size() != static_cast<std::size_t>(spec.n))
    throw DimensionMismatch("model has n strains but a different array size");
  if (got != spec.dim()) {
    std::ostringstream os;
    os << "flat state has dimension " << got << ", the model requires "
       << spec.dim();
    throw DimensionMismatch(os.str());
  }
}

}  // namespace

void vector_field(const ModelSpec& spec, std::span<const double> state,
                  std::span<double> deriv) {
  check_flat_dim(spec, state.size());
  check_flat_dim(spec, deriv.size());

  const StateLayout lay{spec.k, spec.n};
  const double x = state[lay.x()];

  double infection_load = 0.0;  // sum_i beta_i m_i
  for (int i = 0; i < spec.n; ++i)
    infection_load += spec.strains[i].beta * state[lay.m(i)];

  deriv[lay.x()] = spec.recruitment.phi(x) - x * infection_load;

  for (int i = 0; i < spec.n; ++i) {
    const StrainParams& sp = spec.strains[i];
    const double m = state[lay.m(i)];
    const double invasion = sp.beta * x * m;

    deriv[lay.y(i, 0)] = invasion - sp.alphas[0] * state[lay.y(i, 0)];
    for (int j = 1; j < spec.k; ++j) {
      deriv[lay.y(i, j)] =
          sp.gammas[j - 1] * state[lay.y(i, j - 1)] - sp.alphas[j] * state[lay.y(i, j)];
    }
    const double y_last = state[lay.y(i, spec.k - 1)];
    deriv[lay.g(i)] = spec.include_gametocytes
                          ? sp.delta * y_last - sp.mu_g * state[lay.g(i)]
                          : 0.0;
    deriv[lay.m(i)] = sp.r * sp.gammas[spec.k - 1] * y_last - sp.mu_m * m -
                      spec.u * invasion;
  }
}

SystemState vector_field(const ModelSpec& spec, const SystemState& state) {
  const std::vector<double> flat = pack(state);
  check_flat_dim(spec, flat.size());
  std::vector<double> out(flat.size());
  vector_field(spec, flat, out);
  return unpack(out, spec);
}

double rhs_magnitude_scale(const ModelSpec& spec, std::span<const double> state) {
  check_flat_dim(spec, state.size());
  const StateLayout lay{spec.k, spec.n};
  const double x = std::abs(state[lay.x()]);

  double scale = 0.0;
  double load = 0.0;
  for (int i = 0; i < spec.n; ++i)
    load += spec.strains[i].beta * std::abs(state[lay.m(i)]);
  scale = std::max(scale, std::abs(spec.recruitment.phi(x)) + x * load);

  for (int i = 0; i < spec.n; ++i) {
    const StrainParams& sp = spec.strains[i];
    const double m = std::abs(state[lay.m(i)]);
    const double invasion = sp.beta * x * m;
    scale = std::max(scale, invasion + sp.alphas[0] * std::abs(state[lay.y(i, 0)]));
    for (int j = 1; j < spec.k; ++j) {
      scale = std::max(scale, sp.gammas[j - 1] * std::abs(state[lay.y(i, j - 1)]) +
                                  sp.alphas[j] * std::abs(state[lay.y(i, j)]));
    }
    const double y_last = std::abs(state[lay.y(i, spec.k - 1)]);
    if (spec.include_gametocytes) {
      scale = std::max(scale,
                       sp.delta * y_last + sp.mu_g * std::abs(state[lay.g(i)]));
    }
    scale = std::max(scale, sp.r * sp.gammas[spec.k - 1] * y_last + sp.mu_m * m +
                                spec.u * invasion);
  }
  return scale;
}

std::vector<double> pack(const SystemState& state) {
  const std::size_t n = state.strains.size();
  const std::size_t k = n > 0 ? state.strains[0].y.size() : 0;
  for (const StrainState& st : state.strains) {
    if (st.y.size() != k)
      throw DimensionMismatch("strains disagree on the number of stages");
  }
  std::vector<double> flat;
  flat.reserve(1 + n * (k + 2));
  flat.push_back(state.x);
  for (const StrainState& st : state.strains) {
    flat.insert(flat.end(), st.y.begin(), st.y.end());
    flat.push_back(st.g);
    flat.push_back(st.m);
  }
  return flat;
}

SystemState unpack(std::span<const double> flat, const ModelSpec& spec) {
  check_flat_dim(spec, flat.size());
  const StateLayout lay{spec.k, spec.n};
  SystemState state;
  state.x = flat[lay.x()];
  state.strains.resize(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    StrainState& st = state.strains[i];
    st.y.assign(flat.begin() + lay.y(i, 0), flat.begin() + lay.y(i, 0) + spec.k);
    st.g = flat[lay.g(i)];
    st.m = flat[lay.m(i)];
  }
  return state;
}

SystemState zero_state(const ModelSpec& spec) {
  SystemState state;
  state.x = 0.0;
  state.strains.assign(spec.n, StrainState{std::vector<double>(spec.k, 0.0), 0.0, 0.0});
  return state;
}

double min_rate(const ModelSpec& spec) {
  double rate = spec.recruitment.mu_x;
  for (const StrainParams& sp : spec.strains) {
    rate = std::min(rate, sp.mu_m);
    for (double g : sp.gammas) rate = std::min(rate, g);
    for (double a : sp.alphas) rate = std::min(rate, a);
    if (spec.include_gametocytes) rate = std::min(rate, sp.mu_g);
  }
  return rate;
}

}  // namespace intrahost
