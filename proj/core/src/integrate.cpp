#include "intrahost/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace intrahost {

namespace {

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
// weights of (5th order solution) - (embedded 4th order solution)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output coefficients of the order-4 continuous extension
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

double inf_norm(std::span<const double> v) {
  double n = 0.0;
  for (double x : v) n = std::max(n, std::abs(x));
  return n;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

struct DenseStep {
  // u(theta) = y0 + theta*(c1 + (1-theta)*(c2 + theta*(c3 + (1-theta)*c4)))
  std::vector<double> y0, c1, c2, c3, c4;

  void build(std::span<const double> y, std::span<const double> y1, double h,
             std::span<const double> k1, std::span<const double> k3,
             std::span<const double> k4, std::span<const double> k5,
             std::span<const double> k6, std::span<const double> k7) {
    const std::size_t n = y.size();
    y0.assign(y.begin(), y.end());
    c1.resize(n);
    c2.resize(n);
    c3.resize(n);
    c4.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double ydiff = y1[i] - y[i];
      const double bspl = h * k1[i] - ydiff;
      c1[i] = ydiff;
      c2[i] = bspl;
      c3[i] = ydiff - h * k7[i] - bspl;
      c4[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                   d6 * k6[i] + d7 * k7[i]);
    }
  }

  std::vector<double> eval(double theta) const {
    std::vector<double> out(y0.size());
    const double omt = 1.0 - theta;
    for (std::size_t i = 0; i < y0.size(); ++i)
      out[i] = y0[i] + theta * (c1[i] + omt * (c2[i] + theta * (c3[i] + omt * c4[i])));
    return out;
  }
};

void validate_options(const IntegratorOptions& opts) {
  if (!(opts.t_end > 0.0)) throw ValidationError("t_end must be > 0");
  if (!(opts.rtol > 0.0) || !(opts.atol > 0.0))
    throw ValidationError("rtol and atol must be > 0");
  if (!(opts.max_step > 0.0)) throw ValidationError("max_step must be > 0");
  if (!(opts.extinction_eps > 0.0))
    throw ValidationError("extinction_eps must be > 0");
  if (!(opts.steady_tol > 0.0)) throw ValidationError("steady_tol must be > 0");
  if (opts.samples < 2) throw ValidationError("samples must be >= 2");
}

double initial_step_guess(const ModelSpec& spec, std::span<const double> y,
                          std::span<const double> f0,
                          const IntegratorOptions& opts) {
  const std::size_t n = y.size();
  double d0 = 0.0, d1n = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = opts.atol + opts.rtol * std::abs(y[i]);
    d0 += (y[i] / sc) * (y[i] / sc);
    d1n += (f0[i] / sc) * (f0[i] / sc);
  }
  d0 = std::sqrt(d0 / static_cast<double>(n));
  d1n = std::sqrt(d1n / static_cast<double>(n));

  double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
  h0 = std::min({h0, opts.t_end, opts.max_step});

  std::vector<double> y1(n), f1(n);
  for (std::size_t i = 0; i < n; ++i) y1[i] = y[i] + h0 * f0[i];
  vector_field(spec, y1, f1);
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = opts.atol + opts.rtol * std::abs(y[i]);
    d2 += ((f1[i] - f0[i]) / sc) * ((f1[i] - f0[i]) / sc);
  }
  d2 = std::sqrt(d2 / static_cast<double>(n)) / h0;

  const double dm = std::max(d1n, d2);
  const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                : std::pow(0.01 / dm, 0.2);
  return std::min({100.0 * h0, h1, opts.t_end, opts.max_step});
}

}  // namespace

Trajectory integrate(const ModelSpec& spec, const SystemState& initial,
                     const IntegratorOptions& opts) {
  validate_options(opts);

  std::vector<double> y = pack(initial);
  if (y.size() != spec.dim())
    throw DimensionMismatch("initial state does not match spec");
  if (!all_finite(y)) throw NonFiniteState("initial state is not finite");

  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n),
      y1(n);

  vector_field(spec, y, k1);
  if (!all_finite(k1)) throw NonFiniteState("vector field not finite at t = 0");

  Trajectory traj;
  const std::size_t samples = opts.samples;
  const auto sample_time = [&](std::size_t j) {
    return opts.t_end * static_cast<double>(j) / static_cast<double>(samples - 1);
  };
  traj.times.push_back(0.0);
  traj.states.push_back(y);
  std::size_t next_sample = 1;

  double t = 0.0;

  double h = opts.initial_step > 0.0
                 ? std::min({opts.initial_step, opts.t_end, opts.max_step})
                 : initial_step_guess(spec, y, k1, opts);
  bool just_rejected = false;
  DenseStep dense;

  while (t < opts.t_end) {
    if (h > opts.max_step) h = opts.max_step;
    bool last_step = false;
    if (t + h >= opts.t_end) {
      h = opts.t_end - t;
      last_step = true;
    }
    const double h_floor =
        16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1.0);
    if (h <= h_floor) {
      if (last_step) {
        // only a roundoff sliver of the horizon is left; finish in place
        t = opts.t_end;
        while (next_sample < samples) {
          traj.times.push_back(sample_time(next_sample++));
          traj.states.push_back(y);
        }
        break;
      }
      throw StepSizeUnderflow("step size underflow at t = " + std::to_string(t));
    }

    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
    vector_field(spec, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    vector_field(spec, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    vector_field(spec, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    vector_field(spec, ytmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                            a64 * k4[i] + a65 * k5[i]);
    vector_field(spec, ytmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] +
                          a76 * k6[i]);
    vector_field(spec, y1, k7);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc =
          opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                            e6 * k6[i] + e7 * k7[i]);
      err += (e / sc) * (e / sc);
    }
    err = std::sqrt(err / static_cast<double>(n));

    if (!std::isfinite(err) || err > 1.0) {
      const double fac =
          std::isfinite(err)
              ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0)
              : 0.2;
      h *= std::min(fac, 0.9);
      just_rejected = true;
      continue;
    }

    // negative undershoot: clamp within atol, otherwise retry at half step
    double worst = 0.0;
    for (double v : y1) worst = std::min(worst, v);
    if (worst < -opts.atol) {
      h *= 0.5;
      just_rejected = true;
      continue;
    }
    if (worst < 0.0) {
      for (double& v : y1)
        if (v < 0.0) v = 0.0;
      vector_field(spec, y1, k7);  // keep the FSAL slot consistent
    }

    dense.build(y, y1, h, k1, k3, k4, k5, k6, k7);

    const double t_new = last_step ? opts.t_end : t + h;
    while (next_sample < samples && sample_time(next_sample) <= t_new) {
      const double ts = sample_time(next_sample);
      std::vector<double> ys =
          ts == t_new ? y1 : dense.eval((ts - t) / h);
      for (double& v : ys)
        if (v < 0.0) v = 0.0;
      traj.times.push_back(ts);
      traj.states.push_back(std::move(ys));
      ++next_sample;
    }

    t = t_new;
    y.swap(y1);
    k1.swap(k7);

    const double fac = err == 0.0 ? 10.0 : 0.9 * std::pow(err, -0.2);
    h *= std::clamp(fac, 0.2, just_rejected ? 1.0 : 10.0);
    just_rejected = false;
  }

  traj.terminal.t = t;
  const std::vector<bool> flags = detect_extinction(traj, spec, opts.extinction_eps);
  for (std::size_t i = 0; i < flags.size(); ++i)
    if (flags[i]) traj.terminal.extinct.push_back(static_cast<int>(i));
  // classification only; the horizon is always integrated in full (a settled
  // system costs next to nothing, the controller grows the step geometrically)
  if (inf_norm(k1) < opts.steady_tol * (1.0 + inf_norm(y)))
    traj.terminal.kind = TerminalKind::SteadyState;
  else if (!traj.terminal.extinct.empty())
    traj.terminal.kind = TerminalKind::Extinction;
  else
    traj.terminal.kind = TerminalKind::ReachedTEnd;
  return traj;
}

std::vector<bool> detect_extinction(const Trajectory& traj, const ModelSpec& spec,
                                    double extinction_eps) {
  const StateLayout lay{spec.k, spec.n};
  std::vector<bool> extinct(static_cast<std::size_t>(spec.n), false);
  if (traj.times.empty()) return extinct;

  const double t_last = traj.times.back();
  const double t_first = traj.times.front();
  const double window = t_last - 0.1 * (t_last - t_first);

  for (int i = 0; i < spec.n; ++i) {
    double worst = 0.0;
    for (std::size_t s = traj.times.size(); s-- > 0;) {
      if (traj.times[s] < window && s + 1 != traj.times.size()) break;
      const std::vector<double>& st = traj.states[s];
      for (int j = 0; j < spec.k; ++j)
        worst = std::max(worst, std::abs(st[lay.y(i, j)]));
      worst = std::max(worst, std::abs(st[lay.m(i)]));
    }
    extinct[static_cast<std::size_t>(i)] = worst < extinction_eps;
  }
  return extinct;
}

bool steady_state_detect(const ModelSpec& spec, const SystemState& state,
                         double steady_tol) {
  const std::vector<double> flat = pack(state);
  std::vector<double> deriv(flat.size());
  vector_field(spec, flat, deriv);
  return inf_norm(deriv) < steady_tol * (1.0 + inf_norm(flat));
}

}  // namespace intrahost
