#pragma once

#include "sspop/coeffs.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sspop {

enum class Task { simulate, spectral, rank_n, generator_eig, aeg, report };

std::string_view to_string(Task task);

struct GridSpec {
  double m = 1.0;
  int n_cells = 200;
  bool operator==(const GridSpec&) const = default;
};

struct TimeSpec {
  double t_end = 10.0;
  /// Explicit snapshot times; when empty, output_count evenly spaced ones.
  std::vector<double> output_times;
  int output_count = 50;
  bool operator==(const TimeSpec&) const = default;
};

struct InitialSpec {
  CoefficientFn u1;
  CoefficientFn u2;
  bool operator==(const InitialSpec&) const = default;
};

struct Tolerances {
  double safety = 0.9;        // fraction of the CFL / positivity step bound
  double tol = 1e-10;         // root bisection width
  double power_tol = 1e-9;    // power iteration
  double aeg_tol = 0.05;
  double window_fraction = 0.5;
  double epsilon = 0.25;      // irreducibility scale, in units of m
  bool operator==(const Tolerances&) const = default;
};

struct SweepSpec {
  double lambda_min = -1.0;
  double lambda_max = 5.0;
  int points = 61;
  bool operator==(const SweepSpec&) const = default;
};

/// One task on one model. Built only through parse_config, so a RunConfig in
/// hand always satisfies the model assumptions.
struct RunConfig {
  Task task = Task::simulate;
  ModelParams model;
  GridSpec grid;
  TimeSpec time;
  InitialSpec initial;
  /// Second initial condition for the aeg task.
  InitialSpec initial_b;
  Tolerances tolerances;
  SweepSpec sweep;
  /// Partition count for separable envelopes of a general kernel.
  int envelope_n = 4;

  bool operator==(const RunConfig&) const = default;
};

/// Parses and validates a JSON config document. Unknown keys are rejected.
/// Throws ParseError (with line and column, or the offending key path) or
/// ConfigError naming the violated model assumption.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Inverse of parse_config: parse_config(render_config(c)) == c.
std::string render_config(const RunConfig& config);

}  // namespace sspop
