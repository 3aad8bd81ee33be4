#pragma once

#include "sspop/coeffs.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace sspop {

/// Uniform cell-centered partition of [0, m].
struct Grid {
  double m = 1.0;
  int n_cells = 2;
  double cell_width = 0.5;
  Eigen::VectorXd centers;

  /// Left face of cell i; face(n_cells) == m exactly.
  double face(int i) const { return i == n_cells ? m : i * cell_width; }
};

Grid build_grid(double m, int n_cells);

/// Cell averages of the active (u1) and resting (u2) densities at time t.
struct PopulationState {
  double t = 0.0;
  Eigen::VectorXd u1;
  Eigen::VectorXd u2;
};

PopulationState zero_state(const Grid& grid);
/// Samples the two density profiles at the cell centers.
PopulationState sample_state(const Grid& grid, const CoefficientFn& u1, const CoefficientFn& u2);

double mass1(const PopulationState& state, const Grid& grid);
double mass2(const PopulationState& state, const Grid& grid);
double total_mass(const PopulationState& state, const Grid& grid);
double min_density(const PopulationState& state);

/// Coefficients sampled once on a grid: face speeds for transport, cell-center
/// rates and the midpoint-rule birth matrix for the reaction step.
class Discretization {
 public:
  Discretization(const ModelParams& params, const Grid& grid);

  const Grid& grid() const { return grid_; }
  /// Speeds at faces 0..n_cells. Face 0 carries no flux (no influx at s = 0).
  const Eigen::VectorXd& face_speed1() const { return face_speed1_; }
  const Eigen::VectorXd& face_speed2() const { return face_speed2_; }
  /// mu + c1 at the centers.
  const Eigen::VectorXd& loss1() const { return loss1_; }
  const Eigen::VectorXd& c1() const { return c1_; }
  const Eigen::VectorXd& c2() const { return c2_; }
  /// birth(i, j) = cell_width * beta(s_i, s_j).
  const Eigen::MatrixXd& birth() const { return birth_; }

  /// Largest dt keeping every donor-cell update a convex combination.
  double transport_dt_limit() const;
  /// Reaction updates stay nonnegative for dt strictly below this.
  double reaction_dt_limit() const;

 private:
  Grid grid_;
  Eigen::VectorXd face_speed1_;
  Eigen::VectorXd face_speed2_;
  Eigen::VectorXd loss1_;
  Eigen::VectorXd c1_;
  Eigen::VectorXd c2_;
  Eigen::MatrixXd birth_;
};

/// safety * cell_width / max(sup gamma1, sup gamma2)
double cfl_dt(const ModelParams& params, const Grid& grid, double safety);

/// Conservative donor-cell upwind transport of both phases; zero influx at
/// s = 0, free outflow at s = m.
PopulationState transport_step(const PopulationState& state, const Discretization& disc, double dt);
PopulationState transport_step(const PopulationState& state, const ModelParams& params,
                               const Grid& grid, double dt);

/// Mass that leaves through s = m during transport_step(state, disc, dt).
double outflow_mass(const PopulationState& state, const Discretization& disc, double dt);

/// Explicit Euler on mortality, transfers and the birth integral.
PopulationState reaction_birth_step(const PopulationState& state, const Discretization& disc,
                                    double dt);
PopulationState reaction_birth_step(const PopulationState& state, const ModelParams& params,
                                    const Grid& grid, double dt);

/// Reaction/birth first, then transport.
PopulationState lie_step(const PopulationState& state, const Discretization& disc, double dt);
PopulationState lie_step(const PopulationState& state, const ModelParams& params,
                         const Grid& grid, double dt);

struct Observation {
  double t = 0.0;
  double mass1 = 0.0;
  double mass2 = 0.0;
  double total = 0.0;
  /// Mass that has left through s = m since t = 0.
  double cumulative_outflow = 0.0;
};

struct Trajectory {
  double cell_width = 0.0;
  /// Initial state, then one snapshot per output time.
  std::vector<PopulationState> states;
  /// One row per accepted step, starting at t = 0.
  std::vector<Observation> observables;
};

struct SimulationOptions {
  /// Fraction of the transport and reaction step limits actually used.
  double safety = 0.9;
};

/// Integrates from initial.t to t_end with Lie splitting. output_times must be
/// strictly increasing inside (initial.t, t_end]; t_end is always recorded.
Trajectory simulate(const ModelParams& params, const Grid& grid, const PopulationState& initial,
                    double t_end, std::span<const double> output_times,
                    const SimulationOptions& options = {});

/// n evenly spaced times ending at t_end (t_end / n, 2 t_end / n, ..., t_end).
std::vector<double> even_output_times(double t_end, int n);

}  // namespace sspop
