#include "sspop/run.hpp"

#include "sspop/asymptotics.hpp"
#include "sspop/csv.hpp"
#include "sspop/errors.hpp"
#include "sspop/spectral.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sspop {
namespace fs = std::filesystem;

namespace {

std::string time_label(double t) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", t);
  return buf;
}

// Collects outputs of one run; removes them all unless committed.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;

  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : files_) fs::remove(p, ec);
  }

  fs::path add(const std::string& name) {
    files_.push_back(dir_ / name);
    return files_.back();
  }

  std::vector<fs::path> commit() {
    committed_ = true;
    return files_;
  }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
  bool committed_ = false;
};

struct Headline {
  std::vector<std::pair<std::string, std::string>> rows;

  void add(std::string key, double v) { rows.emplace_back(std::move(key), format_number(v)); }
  void add(std::string key, int v) { rows.emplace_back(std::move(key), std::to_string(v)); }
  void add(std::string key, bool v) { rows.emplace_back(std::move(key), v ? "true" : "false"); }
  void add(std::string key, std::string_view v) { rows.emplace_back(std::move(key), std::string(v)); }
  void add(std::string key, const char* v) { add(std::move(key), std::string_view(v)); }
};

std::vector<double> snapshot_times(const RunConfig& c) {
  if (!c.time.output_times.empty()) return c.time.output_times;
  return even_output_times(c.time.t_end, c.time.output_count);
}

void write_observables(const Trajectory& tr, const fs::path& path) {
  CsvWriter w(path, {"t", "mass1", "mass2", "total"});
  for (const auto& o : tr.observables) w.row({o.t, o.mass1, o.mass2, o.total});
  w.close();
}

void write_profile(const PopulationState& s, const Grid& grid, const fs::path& path) {
  CsvWriter w(path, {"s", "u1", "u2"});
  for (int i = 0; i < grid.n_cells; ++i) w.row({grid.centers(i), s.u1(i), s.u2(i)});
  w.close();
}

// Sweep of a scalar characteristic curve plus a final row at the root.
template <typename Fn>
void write_sweep(const SweepSpec& sweep, Fn&& curve, double root, const fs::path& path) {
  CsvWriter w(path, {"lambda", "K_lambda"});
  for (int k = 0; k < sweep.points; ++k) {
    const double lambda =
        sweep.lambda_min + (sweep.lambda_max - sweep.lambda_min) * k / (sweep.points - 1);
    w.row({lambda, curve(lambda)});
  }
  w.row({root, curve(root)});
  w.close();
}

void add_result(Headline& h, const std::string& prefix, const SpectralResult& r) {
  h.add(prefix + "method", to_string(r.method));
  h.add(prefix + "lambda_star", r.lambda_star);
  h.add(prefix + "k_at_zero", r.k_at_zero);
  h.add(prefix + "bracket_lo", r.lo);
  h.add(prefix + "bracket_hi", r.hi);
  h.add(prefix + "iterations", r.iterations);
}

void task_simulate(const RunConfig& c, const Grid& grid, OutputSet& out, Headline& h) {
  const auto times = snapshot_times(c);
  const auto init = sample_state(grid, c.initial.u1, c.initial.u2);
  const auto tr = simulate(c.model, grid, init, c.time.t_end, times, {c.tolerances.safety});
  write_observables(tr, out.add("observables.csv"));
  double min_u = 0.0;
  for (const auto& s : tr.states) {
    write_profile(s, grid, out.add("profile_" + time_label(s.t) + ".csv"));
    min_u = std::min(min_u, min_density(s));
  }
  h.add("t_end", c.time.t_end);
  h.add("final_total_mass", tr.observables.back().total);
  h.add("min_density", min_u);
  h.add("steps", static_cast<int>(tr.observables.size()) - 1);
  if (tr.observables.size() >= 10) {
    try {
      const auto g = growth_rate(tr, c.tolerances.window_fraction);
      h.add("growth_rate", g.rate);
      h.add("r_squared", g.r_squared);
    } catch (const ExtinctionError&) {
      h.add("growth_rate", ExtinctionError::rate());
    }
  }
}

void task_spectral(const RunConfig& c, OutputSet& out, Headline& h) {
  const auto r = solve_lambda_star(c.model, c.tolerances.tol);
  add_result(h, "", r);
  try {
    const auto closed = solve_lambda_star_closed_form(c.model, c.tolerances.tol);
    h.add("closed_form_lambda_star", closed.lambda_star);
  } catch (const MethodError&) {
  }
  const CharMatrix chi(c.model);
  write_sweep(c.sweep, [&](double l) { return chi(l)(0, 0); }, r.lambda_star,
              out.add("spectral.csv"));
}

void task_rank_n(const RunConfig& c, OutputSet& out, Headline& h) {
  if (c.model.beta.is_separable()) {
    const auto r = solve_rank_n_root(c.model, c.tolerances.tol);
    h.add("rank", c.model.beta.rank());
    add_result(h, "", r);
    const CharMatrix chi(c.model);
    write_sweep(c.sweep, [&](double l) { return spectral_radius(chi(l)); }, r.lambda_star,
                out.add("spectral.csv"));
    return;
  }
  h.add("envelope_n", c.envelope_n);
  ModelParams lower = c.model;
  ModelParams upper = c.model;
  lower.beta = separable_envelope(c.model.beta, c.envelope_n, EnvelopeSide::lower);
  upper.beta = separable_envelope(c.model.beta, c.envelope_n, EnvelopeSide::upper);
  const auto ru = solve_rank_n_root(upper, c.tolerances.tol);
  const ModelParams* swept = &upper;
  double swept_root = ru.lambda_star;
  try {
    const auto rl = solve_rank_n_root(lower, c.tolerances.tol);
    add_result(h, "lower_", rl);
    swept = &lower;
    swept_root = rl.lambda_star;
  } catch (const NoRootError&) {
    h.add("lower_lambda_star", "none");
  }
  add_result(h, "upper_", ru);
  h.add("sweep_kernel", swept == &lower ? "lower" : "upper");
  const CharMatrix chi(*swept);
  write_sweep(c.sweep, [&](double l) { return spectral_radius(chi(l)); }, swept_root,
              out.add("spectral.csv"));
}

void task_generator(const RunConfig& c, const Grid& grid, OutputSet& out, Headline& h) {
  const auto pair = dominant_eigenpair(generator_matrix(c.model, grid), c.tolerances.power_tol);
  h.add("n_cells", grid.n_cells);
  h.add("dominant_eigenvalue", pair.value);
  h.add("iterations", pair.iterations);
  CsvWriter w(out.add("eigenvector.csv"), {"s", "u1", "u2"});
  const int n = grid.n_cells;
  for (int i = 0; i < n; ++i) {
    w.row({grid.centers(i), pair.vector(i) / grid.cell_width, pair.vector(n + i) / grid.cell_width});
  }
  w.close();
}

void task_aeg(const RunConfig& c, const Grid& grid, OutputSet& out, Headline& h) {
  AegOptions opts;
  opts.output_count = c.time.output_count;
  opts.window_fraction = c.tolerances.window_fraction;
  opts.simulation.safety = c.tolerances.safety;
  const auto a = sample_state(grid, c.initial.u1, c.initial.u2);
  const auto b = sample_state(grid, c.initial_b.u1, c.initial_b.u2);
  const auto r = aeg_check(c.model, grid, a, b, c.time.t_end, c.tolerances.aeg_tol, opts);
  write_observables(r.trajectory_a, out.add("observables.csv"));
  write_observables(r.trajectory_b, out.add("observables_b.csv"));
  const std::string label = time_label(c.time.t_end);
  write_profile(r.trajectory_a.states.back(), grid, out.add("profile_" + label + ".csv"));
  write_profile(r.trajectory_b.states.back(), grid, out.add("profile_b_" + label + ".csv"));
  h.add("rate_a", r.rate_a);
  h.add("rate_b", r.rate_b);
  h.add("profile_distance", r.profile_distance);
  h.add("drift_a", r.drift_a);
  h.add("drift_b", r.drift_b);
  h.add("tol", c.tolerances.aeg_tol);
  h.add("verdict", r.verdict());
}

void task_report(const RunConfig& c, const Grid& grid, Headline& h) {
  const auto& p = c.model;
  h.add("tau_m", tau(p, p.m));
  const auto ext = extinction_sufficient(p);
  h.add("birth_bound_B", ext.birth_bound);
  h.add("transfer_bound_C", ext.transfer_bound);
  h.add("extinction_lhs", ext.lhs);
  h.add("extinction_rhs", ext.rhs);
  h.add("extinction_holds", ext.holds);
  const auto irr = irreducibility_conditions(p, c.tolerances.epsilon * p.m);
  h.add("birth_corner_ok", irr.birth_corner_ok);
  h.add("c1_at_zero_ok", irr.c1_at_zero_ok);
  h.add("c2_at_m_ok", irr.c2_at_m_ok);
  if (p.beta.is_separable() && p.beta.rank() == 1) {
    add_result(h, "", solve_lambda_star(p, c.tolerances.tol));
  } else if (p.beta.is_separable()) {
    add_result(h, "", solve_rank_n_root(p, c.tolerances.tol));
  } else {
    ModelParams bound = p;
    bound.beta = separable_envelope(p.beta, c.envelope_n, EnvelopeSide::upper);
    add_result(h, "upper_", solve_rank_n_root(bound, c.tolerances.tol));
    bound.beta = separable_envelope(p.beta, c.envelope_n, EnvelopeSide::lower);
    try {
      add_result(h, "lower_", solve_rank_n_root(bound, c.tolerances.tol));
    } catch (const NoRootError&) {
      h.add("lower_lambda_star", "none");
    }
  }
  const auto gen = generator_spectral_bound(p, grid, c.tolerances.power_tol);
  h.add("generator_eigenvalue", gen.lambda_star);
}

}  // namespace

std::string RunReport::value(const std::string& key) const {
  for (const auto& [k, v] : headline) {
    if (k == key) return v;
  }
  return {};
}

std::string RunReport::summary_line() const {
  std::ostringstream os;
  os << to_string(task) << ':';
  for (const auto& [k, v] : headline) os << ' ' << k << '=' << v;
  char buf[64];
  std::snprintf(buf, sizeof buf, " (%zu files, %.2fs)", files.size(), wall_seconds);
  os << buf;
  return os.str();
}

RunReport run(const RunConfig& config, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  const Grid grid = build_grid(config.grid.m, config.grid.n_cells);
  OutputSet out(out_dir);
  Headline h;
  h.add("task", to_string(config.task));
  switch (config.task) {
    case Task::simulate:
      task_simulate(config, grid, out, h);
      break;
    case Task::spectral:
      task_spectral(config, out, h);
      break;
    case Task::rank_n:
      task_rank_n(config, out, h);
      break;
    case Task::generator_eig:
      task_generator(config, grid, out, h);
      break;
    case Task::aeg:
      task_aeg(config, grid, out, h);
      break;
    case Task::report:
      task_report(config, grid, h);
      break;
  }
  CsvWriter w(out.add("report.csv"), {"key", "value"});
  for (const auto& [k, v] : h.rows) w.row(std::vector<std::string>{k, v});
  w.close();

  RunReport report;
  report.task = config.task;
  report.files = out.commit();
  report.headline = h.rows;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

fs::path emit_plot_script(const RunReport& report) {
  if (report.files.empty()) throw ConfigError("plot script: report lists no files");
  for (const auto& f : report.files) {
    if (!fs::exists(f)) throw ConfigError("plot script: missing CSV " + f.string());
  }
  const auto find = [&](const std::string& prefix) -> std::string {
    std::string hit;
    for (const auto& f : report.files) {
      const std::string name = f.filename().string();
      if (name.rfind(prefix, 0) == 0) hit = name;  // keep the last match
    }
    return hit;
  };

  std::ostringstream gp;
  gp << "set datafile separator ','\n"
     << "set key autotitle columnhead\n";
  int stanzas = 0;
  const auto stanza = [&](const std::string& title) {
    gp << "\n# " << title << "\n";
    ++stanzas;
  };

  const std::string observables = find("observables.csv");
  if (!observables.empty()) {
    stanza("total mass vs time");
    gp << "set logscale y\nset xlabel 't'\nset ylabel 'mass'\n"
       << "plot '" << observables << "' using 1:4 with lines title 'total'";
    const std::string second = find("observables_b.csv");
    if (!second.empty()) gp << ", '" << second << "' using 1:4 with lines title 'total (b)'";
    gp << "\npause -1\nunset logscale y\n";
  }
  std::string profile;
  for (const auto& f : report.files) {
    const std::string name = f.filename().string();
    if (name.rfind("profile_", 0) == 0 && name.rfind("profile_b_", 0) != 0) profile = name;
  }
  if (!profile.empty()) {
    stanza("final size profile");
    gp << "set xlabel 's'\nset ylabel 'density'\n"
       << "plot '" << profile << "' using 1:2 with lines title 'u1', '" << profile
       << "' using 1:3 with lines title 'u2'";
    const std::string second = find("profile_b_");
    if (!second.empty()) {
      gp << ", '" << second << "' using 1:2 with lines title 'u1 (b)', '" << second
         << "' using 1:3 with lines title 'u2 (b)'";
    }
    gp << "\npause -1\n";
  }
  const std::string spectral = find("spectral.csv");
  if (!spectral.empty()) {
    stanza("characteristic function");
    gp << "set xlabel 'lambda'\nset ylabel 'K(lambda)'\nset logscale y\n"
       << "plot '" << spectral << "' using 1:2 with linespoints title 'K', 1 with lines title 'K = 1'"
       << "\npause -1\nunset logscale y\n";
  }
  const std::string eigenvector = find("eigenvector.csv");
  if (!eigenvector.empty()) {
    stanza("dominant eigenvector");
    gp << "set xlabel 's'\nset ylabel 'density'\n"
       << "plot '" << eigenvector << "' using 1:2 with lines title 'u1', '" << eigenvector
       << "' using 1:3 with lines title 'u2'\npause -1\n";
  }
  if (stanzas == 0) throw ConfigError("plot script: no plottable CSV in report");

  const fs::path path = report.files.front().parent_path() / "plot.gp";
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << gp.str();
  if (!f) throw ConfigError("cannot write " + path.string());
  return path;
}

}  // namespace sspop
