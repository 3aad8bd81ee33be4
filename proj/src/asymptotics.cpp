#include "sspop/asymptotics.hpp"

#include "sspop/errors.hpp"

#include <cmath>
#include <future>
#include <limits>

namespace sspop {
namespace {

constexpr int kTauPoints = 1000;
constexpr int kSupportSamples = 100;
constexpr int kRateSamples = 10000;

// Infimum of f + g: dense comb plus table knots.
double inf_of_sum(const CoefficientFn& f, const CoefficientFn& g, double m) {
  std::vector<double> xs;
  xs.reserve(kRateSamples + 1);
  for (int k = 0; k <= kRateSamples; ++k) xs.push_back(m * k / kRateSamples);
  for (const CoefficientFn* c : {&f, &g}) {
    if (const auto* t = std::get_if<form::Table>(&c->form())) {
      xs.insert(xs.end(), t->knots.begin(), t->knots.end());
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (double s : xs) best = std::min(best, f(s) + g(s));
  return best;
}

double sampled_sup(const CoefficientFn& f, double a, double b) {
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < kSupportSamples; ++k) {
    best = std::max(best, f(a + (b - a) * k / (kSupportSamples - 1)));
  }
  return best;
}

double corner_integral(const BirthKernel& beta, double m, double delta) {
  const double h = delta / kSupportSamples;
  double sum = 0.0;
  for (int i = 0; i < kSupportSamples; ++i) {
    const double s = (i + 0.5) * h;
    for (int j = 0; j < kSupportSamples; ++j) {
      const double y = m - delta + (j + 0.5) * h;
      sum += beta(s, y);
    }
  }
  return sum * h * h;
}

}  // namespace

double tau(const ModelParams& params, double s) {
  if (!(s >= 0.0 && s <= params.m)) {
    throw DomainError("tau: size outside [0, m]");
  }
  if (s == 0.0) return 0.0;
  const double h = s / (kTauPoints - 1);
  double sum = 0.0;
  for (int k = 0; k < kTauPoints; ++k) {
    const double r = k == kTauPoints - 1 ? s : k * h;
    const double w = (k == 0 || k == kTauPoints - 1) ? 0.5 : 1.0;
    sum += w / min_growth(params, r);
  }
  return sum * h;
}

PopulationState normalized_profile(const PopulationState& state, double cell_width) {
  const double mass = cell_width * (state.u1.sum() + state.u2.sum());
  if (!(mass > 0.0)) throw ExtinctionError("cannot normalize a state with zero mass");
  return {state.t, state.u1 / mass, state.u2 / mass};
}

double l1_distance(const PopulationState& a, const PopulationState& b, double cell_width) {
  return cell_width * ((a.u1 - b.u1).lpNorm<1>() + (a.u2 - b.u2).lpNorm<1>());
}

std::vector<double> profile_drift(const Trajectory& trajectory) {
  const PopulationState last = normalized_profile(trajectory.states.back(), trajectory.cell_width);
  std::vector<double> out;
  out.reserve(trajectory.states.size());
  for (const auto& s : trajectory.states) {
    out.push_back(l1_distance(normalized_profile(s, trajectory.cell_width), last,
                              trajectory.cell_width));
  }
  return out;
}

GrowthEstimate growth_rate(const Trajectory& trajectory, double window_fraction) {
  const auto& obs = trajectory.observables;
  if (obs.size() < 10) throw ConfigError("growth_rate needs at least 10 observations");
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) {
    throw ConfigError("window_fraction must lie in (0, 1]");
  }
  const double t0 = obs.front().t;
  const double t1 = obs.back().t;
  const double start = t1 - window_fraction * (t1 - t0);

  double n = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& o : obs) {
    if (o.t < start) continue;
    if (!(o.total > 0.0)) {
      throw ExtinctionError("total mass vanished at t = " + std::to_string(o.t) +
                            "; growth rate is -inf");
    }
    const double y = std::log(o.total);
    n += 1.0;
    sx += o.t;
    sy += y;
    sxx += o.t * o.t;
    sxy += o.t * y;
    syy += y * y;
  }
  if (n < 2.0) throw ConfigError("regression window holds fewer than two observations");

  const double mx = sx / n;
  const double my = sy / n;
  const double cxx = sxx / n - mx * mx;
  const double cxy = sxy / n - mx * my;
  const double cyy = syy / n - my * my;
  if (!(cxx > 0.0)) throw ConfigError("regression window spans no time");

  GrowthEstimate g;
  g.rate = cxy / cxx;
  g.t_start = start;
  g.t_end = t1;
  g.r_squared = cyy > 0.0 ? std::min(1.0, cxy * cxy / (cxx * cyy)) : 1.0;
  g.profile = normalized_profile(trajectory.states.back(), trajectory.cell_width);
  return g;
}

AegReport aeg_check(const ModelParams& params, const Grid& grid, const PopulationState& initial_a,
                    const PopulationState& initial_b, double t_end, double tol,
                    const AegOptions& options) {
  if (!(t_end > 0.0)) throw ConfigError("aeg_check needs t_end > 0");
  for (const auto* s : {&initial_a, &initial_b}) {
    if (!(total_mass(*s, grid) > 0.0)) throw ConfigError("aeg_check needs nonzero initial states");
  }
  const auto times = even_output_times(t_end, options.output_count);
  const auto run = [&](const PopulationState& init) {
    return simulate(params, grid, init, t_end, times, options.simulation);
  };
  auto future_b = std::async(std::launch::async, run, std::cref(initial_b));
  AegReport r;
  r.trajectory_a = run(initial_a);
  r.trajectory_b = future_b.get();

  const double h = grid.cell_width;
  const auto halfway = [&](const Trajectory& tr) -> const PopulationState& {
    const PopulationState* best = &tr.states.front();
    for (const auto& s : tr.states) {
      if (std::abs(s.t - 0.5 * t_end) < std::abs(best->t - 0.5 * t_end)) best = &s;
    }
    return *best;
  };

  const auto ga = growth_rate(r.trajectory_a, options.window_fraction);
  const auto gb = growth_rate(r.trajectory_b, options.window_fraction);
  r.rate_a = ga.rate;
  r.rate_b = gb.rate;
  r.profile_distance = l1_distance(ga.profile, gb.profile, h);
  r.drift_a = l1_distance(normalized_profile(halfway(r.trajectory_a), h), ga.profile, h);
  r.drift_b = l1_distance(normalized_profile(halfway(r.trajectory_b), h), gb.profile, h);
  r.consistent = r.profile_distance < tol && r.drift_a < tol && r.drift_b < tol &&
                 std::abs(r.rate_a - r.rate_b) < tol;
  return r;
}

ExtinctionCheck extinction_sufficient(const ModelParams& params) {
  ExtinctionCheck e;
  e.birth_bound = params.birth_bound();
  e.transfer_bound = params.transfer_bound();
  e.lhs = params.m * e.birth_bound + e.transfer_bound;
  e.rhs = std::min(inf_of_sum(params.mu, params.c1, params.m), params.c2.inf_value());
  e.holds = e.lhs < e.rhs;
  return e;
}

IrreducibilityFlags irreducibility_conditions(const ModelParams& params, double epsilon) {
  const double m = params.m;
  if (!(epsilon > 0.0 && epsilon <= 0.5 * m)) throw ConfigError("epsilon must lie in (0, m/2]");
  IrreducibilityFlags f{true, true, true};
  for (double delta : {epsilon, 0.5 * epsilon, 0.25 * epsilon}) {
    f.birth_corner_ok = f.birth_corner_ok && corner_integral(params.beta, m, delta) > 0.0;
    f.c1_at_zero_ok = f.c1_at_zero_ok && sampled_sup(params.c1, 0.0, delta) > 0.0;
    f.c2_at_m_ok = f.c2_at_m_ok && sampled_sup(params.c2, m - delta, m) > 0.0;
  }
  return f;
}

}  // namespace sspop
