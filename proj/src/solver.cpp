#include "sspop/solver.hpp"

#include "sspop/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace sspop {
namespace {

void check_shape(const PopulationState& state, const Grid& grid) {
  if (state.u1.size() != grid.n_cells || state.u2.size() != grid.n_cells) {
    throw ConfigError("state has " + std::to_string(state.u1.size()) + "/" +
                      std::to_string(state.u2.size()) + " cells, grid has " +
                      std::to_string(grid.n_cells));
  }
}

// Flux differences for one phase; face 0 carries nothing in.
Eigen::VectorXd upwind(const Eigen::VectorXd& u, const Eigen::VectorXd& speed, double ratio) {
  const Eigen::Index n = u.size();
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double in = i == 0 ? 0.0 : speed(i) * u(i - 1);
    const double out_flux = speed(i + 1) * u(i);
    out(i) = u(i) + ratio * (in - out_flux);
  }
  return out;
}

}  // namespace

Grid build_grid(double m, int n_cells) {
  if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("grid: m must be positive");
  if (n_cells < 2) throw ConfigError("grid: n_cells must be at least 2");
  Grid g;
  g.m = m;
  g.n_cells = n_cells;
  g.cell_width = m / n_cells;
  g.centers.resize(n_cells);
  for (int i = 0; i < n_cells; ++i) g.centers(i) = (i + 0.5) * g.cell_width;
  return g;
}

PopulationState zero_state(const Grid& grid) {
  return {0.0, Eigen::VectorXd::Zero(grid.n_cells), Eigen::VectorXd::Zero(grid.n_cells)};
}

PopulationState sample_state(const Grid& grid, const CoefficientFn& u1, const CoefficientFn& u2) {
  PopulationState s = zero_state(grid);
  for (int i = 0; i < grid.n_cells; ++i) {
    s.u1(i) = u1(grid.centers(i));
    s.u2(i) = u2(grid.centers(i));
  }
  return s;
}

double mass1(const PopulationState& state, const Grid& grid) {
  return grid.cell_width * state.u1.sum();
}

double mass2(const PopulationState& state, const Grid& grid) {
  return grid.cell_width * state.u2.sum();
}

double total_mass(const PopulationState& state, const Grid& grid) {
  return grid.cell_width * (state.u1.sum() + state.u2.sum());
}

double min_density(const PopulationState& state) {
  return std::min(state.u1.minCoeff(), state.u2.minCoeff());
}

Discretization::Discretization(const ModelParams& params, const Grid& grid) : grid_(grid) {
  if (std::abs(params.m - grid.m) > 1e-12 * std::max(1.0, grid.m)) {
    throw ConfigError("grid m does not match model m");
  }
  const int n = grid.n_cells;
  face_speed1_.resize(n + 1);
  face_speed2_.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    face_speed1_(i) = params.gamma1(grid.face(i));
    face_speed2_(i) = params.gamma2(grid.face(i));
  }
  loss1_.resize(n);
  c1_.resize(n);
  c2_.resize(n);
  for (int i = 0; i < n; ++i) {
    const double s = grid.centers(i);
    c1_(i) = params.c1(s);
    c2_(i) = params.c2(s);
    loss1_(i) = params.mu(s) + c1_(i);
  }
  birth_.resize(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      birth_(i, j) = grid.cell_width * params.beta(grid.centers(i), grid.centers(j));
    }
  }
}

double Discretization::transport_dt_limit() const {
  const double vmax = std::max(face_speed1_.maxCoeff(), face_speed2_.maxCoeff());
  return grid_.cell_width / vmax;
}

double Discretization::reaction_dt_limit() const {
  const double rmax = std::max(loss1_.maxCoeff(), c2_.maxCoeff());
  return rmax > 0.0 ? 1.0 / rmax : std::numeric_limits<double>::infinity();
}

double cfl_dt(const ModelParams& params, const Grid& grid, double safety) {
  if (!(safety > 0.0 && safety <= 1.0)) throw ConfigError("CFL safety factor must lie in (0, 1]");
  return safety * grid.cell_width /
         std::max(params.gamma1.sup_norm(), params.gamma2.sup_norm());
}

PopulationState transport_step(const PopulationState& state, const Discretization& disc, double dt) {
  check_shape(state, disc.grid());
  if (!(dt > 0.0)) throw StepError("transport step needs dt > 0");
  const double limit = disc.transport_dt_limit();
  if (dt > limit * (1.0 + 1e-12)) {
    throw StepError("CFL violated: dt = " + std::to_string(dt) + " exceeds " +
                    std::to_string(limit));
  }
  const double ratio = dt / disc.grid().cell_width;
  return {state.t + dt, upwind(state.u1, disc.face_speed1(), ratio),
          upwind(state.u2, disc.face_speed2(), ratio)};
}

PopulationState transport_step(const PopulationState& state, const ModelParams& params,
                               const Grid& grid, double dt) {
  return transport_step(state, Discretization(params, grid), dt);
}

double outflow_mass(const PopulationState& state, const Discretization& disc, double dt) {
  const Eigen::Index last = state.u1.size() - 1;
  const int n = disc.grid().n_cells;
  return dt * (disc.face_speed1()(n) * state.u1(last) + disc.face_speed2()(n) * state.u2(last));
}

PopulationState reaction_birth_step(const PopulationState& state, const Discretization& disc,
                                    double dt) {
  check_shape(state, disc.grid());
  if (!(dt > 0.0)) throw StepError("reaction step needs dt > 0");
  if (!(dt < disc.reaction_dt_limit())) {
    throw StepError("positivity bound violated: dt * sup(rate) >= 1 for dt = " +
                    std::to_string(dt));
  }
  const Eigen::VectorXd births = disc.birth() * state.u1;
  const Eigen::VectorXd to_rest = disc.c1().cwiseProduct(state.u1);
  const Eigen::VectorXd to_active = disc.c2().cwiseProduct(state.u2);
  PopulationState next;
  next.t = state.t;
  next.u1 = state.u1 + dt * (births + to_active - disc.loss1().cwiseProduct(state.u1));
  next.u2 = state.u2 + dt * (to_rest - to_active);
  return next;
}

PopulationState reaction_birth_step(const PopulationState& state, const ModelParams& params,
                                    const Grid& grid, double dt) {
  return reaction_birth_step(state, Discretization(params, grid), dt);
}

PopulationState lie_step(const PopulationState& state, const Discretization& disc, double dt) {
  return transport_step(reaction_birth_step(state, disc, dt), disc, dt);
}

PopulationState lie_step(const PopulationState& state, const ModelParams& params, const Grid& grid,
                         double dt) {
  return lie_step(state, Discretization(params, grid), dt);
}

std::vector<double> even_output_times(double t_end, int n) {
  std::vector<double> times;
  if (!(t_end > 0.0) || n < 1) return times;
  times.reserve(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) times.push_back(t_end * k / n);
  times.back() = t_end;
  return times;
}

Trajectory simulate(const ModelParams& params, const Grid& grid, const PopulationState& initial,
                    double t_end, std::span<const double> output_times,
                    const SimulationOptions& options) {
  check_shape(initial, grid);
  if (!(min_density(initial) >= 0.0)) throw ConfigError("initial state must be nonnegative");
  if (!(t_end >= initial.t) || !std::isfinite(t_end)) {
    throw ConfigError("t_end must be finite and not before the initial time");
  }
  if (!(options.safety > 0.0 && options.safety <= 1.0)) {
    throw ConfigError("safety factor must lie in (0, 1]");
  }

  std::vector<double> targets;
  for (double t : output_times) {
    if (!(t > initial.t) || t > t_end) {
      throw ConfigError("output times must lie in (t0, t_end]");
    }
    if (!targets.empty() && !(t > targets.back())) {
      throw ConfigError("output times must be strictly increasing");
    }
    targets.push_back(t);
  }
  if (t_end > initial.t && (targets.empty() || targets.back() < t_end)) targets.push_back(t_end);

  const Discretization disc(params, grid);
  const double dt_max = std::min(options.safety * disc.transport_dt_limit(),
                                 options.safety * disc.reaction_dt_limit());

  Trajectory traj;
  traj.cell_width = grid.cell_width;
  traj.states.push_back(initial);
  const double m0_1 = mass1(initial, grid);
  const double m0_2 = mass2(initial, grid);
  traj.observables.push_back({initial.t, m0_1, m0_2, m0_1 + m0_2, 0.0});

  PopulationState state = initial;
  double outflow = 0.0;
  for (double target : targets) {
    while (state.t < target) {
      const double gap = target - state.t;
      const bool last = gap <= dt_max * (1.0 + 1e-12);
      const double dt = last ? gap : dt_max;
      PopulationState mid = reaction_birth_step(state, disc, dt);
      outflow += outflow_mass(mid, disc, dt);
      state = transport_step(mid, disc, dt);
      if (last) state.t = target;
      if (!state.u1.allFinite() || !state.u2.allFinite()) {
        throw NumericalError("non-finite density at t = " + std::to_string(state.t));
      }
      const double a = mass1(state, grid);
      const double b = mass2(state, grid);
      traj.observables.push_back({state.t, a, b, a + b, outflow});
    }
    traj.states.push_back(state);
  }
  return traj;
}

}  // namespace sspop
