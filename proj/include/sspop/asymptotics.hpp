#pragma once

#include "sspop/coeffs.hpp"
#include "sspop/solver.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace sspop {

/// Upper bound on the time to grow from size 0 to size s in either phase:
/// int_0^s dr / min(gamma1, gamma2), composite trapezoid on 1000 points.
double tau(const ModelParams& params, double s);

struct GrowthEstimate {
  double rate = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  double r_squared = 0.0;
  /// Final snapshot scaled to unit mass: cell_width * sum(u1 + u2) == 1.
  PopulationState profile;
};

/// Least-squares slope of log(total mass) over the trailing window_fraction of
/// the time range. Throws ExtinctionError when the mass vanishes in the window.
GrowthEstimate growth_rate(const Trajectory& trajectory, double window_fraction);

/// State scaled to unit L1 mass; throws ExtinctionError on zero mass.
PopulationState normalized_profile(const PopulationState& state, double cell_width);

/// cell_width * sum |a - b| over both phases.
double l1_distance(const PopulationState& a, const PopulationState& b, double cell_width);

/// L1 distance of every snapshot's normalized profile to the final one.
std::vector<double> profile_drift(const Trajectory& trajectory);

inline constexpr std::string_view kAegConsistent = "AEG-consistent";
inline constexpr std::string_view kAegInconsistent = "not-AEG-consistent";

struct AegOptions {
  int output_count = 50;
  double window_fraction = 0.5;
  SimulationOptions simulation;
};

struct AegReport {
  double rate_a = 0.0;
  double rate_b = 0.0;
  /// Final normalized profiles of run a vs run b.
  double profile_distance = 0.0;
  /// Normalized profile at t_end / 2 vs t_end, per run.
  double drift_a = 0.0;
  double drift_b = 0.0;
  bool consistent = false;
  Trajectory trajectory_a;
  Trajectory trajectory_b;

  std::string_view verdict() const { return consistent ? kAegConsistent : kAegInconsistent; }
};

/// Runs both initial conditions (concurrently) and compares their growth
/// rates and normalized profiles against tol.
AegReport aeg_check(const ModelParams& params, const Grid& grid, const PopulationState& initial_a,
                    const PopulationState& initial_b, double t_end, double tol,
                    const AegOptions& options = {});

struct ExtinctionCheck {
  bool holds = false;
  double lhs = 0.0;  // m B + C
  double rhs = 0.0;  // min(inf(mu + c1), inf c2)
  double birth_bound = 0.0;
  double transfer_bound = 0.0;
};

/// Sufficient condition for a negative growth bound, with strict inequality.
ExtinctionCheck extinction_sufficient(const ModelParams& params);

struct IrreducibilityFlags {
  bool birth_corner_ok = false;
  bool c1_at_zero_ok = false;
  bool c2_at_m_ok = false;

  bool all() const { return birth_corner_ok && c1_at_zero_ok && c2_at_m_ok; }
};

/// Checks births near (small s, large y) and transfer supports reaching 0 and
/// m at the scales epsilon, epsilon/2, epsilon/4.
IrreducibilityFlags irreducibility_conditions(const ModelParams& params, double epsilon);

}  // namespace sspop
