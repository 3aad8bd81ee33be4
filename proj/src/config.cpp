#include "sspop/config.hpp"

#include "sspop/errors.hpp"
#include "sspop/solver.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace sspop {
namespace {

using json = nlohmann::json;

// Object view that records consumed keys so leftovers can be rejected.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParseError(where() + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    if (!j_.contains(key)) throw ParseError(key_path(key) + ": missing required key");
    seen_.insert(key);
    return j_.at(key);
  }

  const json* find(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  double number(const std::string& key) { return as_number(at(key), key_path(key)); }

  double number_or(const std::string& key, double fallback) {
    const json* v = find(key);
    return v == nullptr ? fallback : as_number(*v, key_path(key));
  }

  int integer_or(const std::string& key, int fallback) {
    const json* v = find(key);
    return v == nullptr ? fallback : as_integer(*v, key_path(key));
  }

  int integer(const std::string& key) { return as_integer(at(key), key_path(key)); }

  std::string string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) throw ParseError(key_path(key) + ": expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) { return as_numbers(at(key), key_path(key)); }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ParseError(key_path(item.key()) + ": unknown key");
    }
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ParseError(path + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ParseError(path + ": number is not finite");
    return x;
  }

  static int as_integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ParseError(path + ": expected an integer");
    return v.get<int>();
  }

  static std::vector<double> as_numbers(const json& v, const std::string& path) {
    if (!v.is_array()) throw ParseError(path + ": expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

 private:
  std::string where() const { return path_.empty() ? "document" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Interpolation parse_interpolation(const std::string& s, const std::string& path) {
  if (s == "linear") return Interpolation::linear;
  if (s == "step") return Interpolation::step;
  throw ParseError(path + ": interpolation must be \"linear\" or \"step\"");
}

// A bare number is shorthand for a constant.
CoefficientFn parse_coefficient(const json& j, const std::string& path, double m) {
  if (j.is_number()) return CoefficientFn::constant(Reader::as_number(j, path), m);
  Reader r(j, path);
  const std::string kind = r.string("form");
  Form f;
  if (kind == "constant") {
    f = form::Constant{r.number("value")};
  } else if (kind == "linear") {
    f = form::Linear{r.number("a"), r.number("b")};
  } else if (kind == "gaussian_bump") {
    f = form::GaussianBump{r.number("center"), r.number("width"), r.number("height")};
  } else if (kind == "table") {
    form::Table t;
    t.knots = r.numbers("knots");
    t.values = r.numbers("values");
    if (r.has("interpolation")) {
      t.interpolation = parse_interpolation(r.string("interpolation"), r.key_path("interpolation"));
    }
    f = std::move(t);
  } else {
    throw ParseError(r.key_path("form") + ": unknown form \"" + kind +
                     "\" (constant, linear, gaussian_bump, table)");
  }
  r.finish();
  try {
    return CoefficientFn::from_form(std::move(f), m);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

BirthKernel parse_kernel(const json& j, const std::string& path, double m) {
  Reader r(j, path);
  const json* sep = r.find("separable");
  const json* gen = r.find("general");
  r.finish();
  if ((sep == nullptr) == (gen == nullptr)) {
    throw ParseError(path + ": exactly one of \"separable\" or \"general\" is required");
  }
  if (sep != nullptr) {
    const std::string spath = path + ".separable";
    if (!sep->is_array() || sep->empty()) throw ParseError(spath + ": expected a non-empty array");
    std::vector<SeparableTerm> terms;
    for (std::size_t k = 0; k < sep->size(); ++k) {
      const std::string tpath = spath + "[" + std::to_string(k) + "]";
      Reader t((*sep)[k], tpath);
      SeparableTerm term{parse_coefficient(t.at("birth"), t.key_path("birth"), m),
                         parse_coefficient(t.at("parent"), t.key_path("parent"), m)};
      t.finish();
      terms.push_back(std::move(term));
    }
    return BirthKernel::separable(std::move(terms));
  }
  const std::string gpath = path + ".general";
  Reader g(*gen, gpath);
  auto s_nodes = g.numbers("s_nodes");
  auto y_nodes = g.numbers("y_nodes");
  const json& rows = g.at("values");
  g.finish();
  if (!rows.is_array() || rows.size() != s_nodes.size()) {
    throw ParseError(gpath + ".values: expected " + std::to_string(s_nodes.size()) + " rows");
  }
  Eigen::MatrixXd values(static_cast<Eigen::Index>(s_nodes.size()),
                         static_cast<Eigen::Index>(y_nodes.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string rpath = gpath + ".values[" + std::to_string(i) + "]";
    const auto row = Reader::as_numbers(rows[i], rpath);
    if (row.size() != y_nodes.size()) {
      throw ParseError(rpath + ": expected " + std::to_string(y_nodes.size()) + " entries");
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
    }
  }
  auto kernel = BirthKernel::general(std::move(s_nodes), std::move(y_nodes), std::move(values));
  if (std::abs(kernel.domain_max() - m) > 1e-12 * std::max(1.0, m)) {
    throw ConfigError(gpath + ": last node must equal m");
  }
  return kernel;
}

InitialSpec parse_initial(const json* j, const std::string& path, double m, InitialSpec fallback) {
  if (j == nullptr) return fallback;
  Reader r(*j, path);
  InitialSpec spec = fallback;
  if (const json* u1 = r.find("u1")) spec.u1 = parse_coefficient(*u1, r.key_path("u1"), m);
  if (const json* u2 = r.find("u2")) spec.u2 = parse_coefficient(*u2, r.key_path("u2"), m);
  r.finish();
  spec.u1.validate(Role::rate, path + ".u1");
  spec.u2.validate(Role::rate, path + ".u2");
  return spec;
}

Task parse_task(const std::string& s) {
  for (Task t : {Task::simulate, Task::spectral, Task::rank_n, Task::generator_eig, Task::aeg,
                 Task::report}) {
    if (s == to_string(t)) return t;
  }
  throw ParseError("task: unknown task \"" + s +
                   "\" (simulate, spectral, rank_n, generator_eig, aeg, report)");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

json render_coefficient(const CoefficientFn& f) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, form::Constant>) {
          return {{"form", "constant"}, {"value", v.value}};
        } else if constexpr (std::is_same_v<T, form::Linear>) {
          return {{"form", "linear"}, {"a", v.a}, {"b", v.b}};
        } else if constexpr (std::is_same_v<T, form::GaussianBump>) {
          return {{"form", "gaussian_bump"}, {"center", v.center}, {"width", v.width}, {"height", v.height}};
        } else {
          return {{"form", "table"},
                  {"knots", v.knots},
                  {"values", v.values},
                  {"interpolation", v.interpolation == Interpolation::step ? "step" : "linear"}};
        }
      },
      f.form());
}

json render_kernel(const BirthKernel& k) {
  if (k.is_separable()) {
    json terms = json::array();
    for (const auto& t : k.terms()) {
      terms.push_back({{"birth", render_coefficient(t.birth)}, {"parent", render_coefficient(t.parent)}});
    }
    return {{"separable", terms}};
  }
  json rows = json::array();
  for (Eigen::Index i = 0; i < k.values().rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < k.values().cols(); ++j) row.push_back(k.values()(i, j));
    rows.push_back(row);
  }
  return {{"general", {{"s_nodes", k.s_nodes()}, {"y_nodes", k.y_nodes()}, {"values", rows}}}};
}

}  // namespace

std::string_view to_string(Task task) {
  switch (task) {
    case Task::simulate:
      return "simulate";
    case Task::spectral:
      return "spectral";
    case Task::rank_n:
      return "rank_n";
    case Task::generator_eig:
      return "generator_eig";
    case Task::aeg:
      return "aeg";
    case Task::report:
      return "report";
  }
  return "unknown";
}

RunConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(col) +
                     ": malformed JSON (" + e.what() + ")");
  }

  Reader root(doc, "");
  RunConfig c;
  c.task = parse_task(root.string("task"));

  {
    Reader g(root.at("grid"), "grid");
    c.grid.m = g.number("m");
    c.grid.n_cells = g.integer("n_cells");
    g.finish();
    try {
      build_grid(c.grid.m, c.grid.n_cells);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("grid: ") + e.what());
    }
  }
  const double m = c.grid.m;

  {
    Reader md(root.at("model"), "model");
    c.model.m = m;
    c.model.gamma1 = parse_coefficient(md.at("gamma1"), "model.gamma1", m);
    c.model.gamma2 = parse_coefficient(md.at("gamma2"), "model.gamma2", m);
    const auto rate = [&](const char* key) {
      const json* v = md.find(key);
      return v == nullptr ? CoefficientFn::constant(0.0, m)
                          : parse_coefficient(*v, std::string("model.") + key, m);
    };
    c.model.mu = rate("mu");
    c.model.c1 = rate("c1");
    c.model.c2 = rate("c2");
    c.model.beta = parse_kernel(md.at("beta"), "model.beta", m);
    md.finish();
    c.model.validate();
  }

  if (const json* t = root.find("time")) {
    Reader tr(*t, "time");
    c.time.t_end = tr.number("t_end");
    const bool has_times = tr.has("output_times");
    const bool has_count = tr.has("output_count");
    if (has_times && has_count) {
      throw ParseError("time: give either output_times or output_count, not both");
    }
    if (has_times) c.time.output_times = tr.numbers("output_times");
    if (has_count) c.time.output_count = tr.integer("output_count");
    tr.finish();
    require(c.time.t_end >= 0.0, "time.t_end must be nonnegative");
    require(c.time.output_count >= 1, "time.output_count must be at least 1");
    for (std::size_t i = 0; i < c.time.output_times.size(); ++i) {
      const double t = c.time.output_times[i];
      require(t > 0.0 && t <= c.time.t_end, "time.output_times must lie in (0, t_end]");
      require(i == 0 || t > c.time.output_times[i - 1],
              "time.output_times must be strictly increasing");
    }
  }

  c.initial = parse_initial(root.find("initial"), "initial", m,
                            {CoefficientFn::constant(1.0, m), CoefficientFn::constant(0.0, m)});
  c.initial_b = parse_initial(root.find("initial_b"), "initial_b", m,
                              {CoefficientFn::constant(0.0, m), CoefficientFn::constant(1.0, m)});

  if (const json* t = root.find("tolerances")) {
    Reader tr(*t, "tolerances");
    c.tolerances.safety = tr.number_or("safety", c.tolerances.safety);
    c.tolerances.tol = tr.number_or("tol", c.tolerances.tol);
    c.tolerances.power_tol = tr.number_or("power_tol", c.tolerances.power_tol);
    c.tolerances.aeg_tol = tr.number_or("aeg_tol", c.tolerances.aeg_tol);
    c.tolerances.window_fraction = tr.number_or("window_fraction", c.tolerances.window_fraction);
    c.tolerances.epsilon = tr.number_or("epsilon", c.tolerances.epsilon);
    tr.finish();
  }
  const auto& tol = c.tolerances;
  require(tol.safety > 0.0 && tol.safety <= 1.0, "tolerances.safety must lie in (0, 1]");
  require(tol.tol > 0.0, "tolerances.tol must be positive");
  require(tol.power_tol > 0.0, "tolerances.power_tol must be positive");
  require(tol.aeg_tol > 0.0, "tolerances.aeg_tol must be positive");
  require(tol.window_fraction > 0.0 && tol.window_fraction <= 1.0,
          "tolerances.window_fraction must lie in (0, 1]");
  require(tol.epsilon > 0.0 && tol.epsilon <= 0.5, "tolerances.epsilon must lie in (0, 0.5]");

  if (const json* s = root.find("sweep")) {
    Reader sr(*s, "sweep");
    c.sweep.lambda_min = sr.number_or("lambda_min", c.sweep.lambda_min);
    c.sweep.lambda_max = sr.number_or("lambda_max", c.sweep.lambda_max);
    c.sweep.points = sr.integer_or("points", c.sweep.points);
    sr.finish();
  }
  require(c.sweep.lambda_max > c.sweep.lambda_min, "sweep.lambda_max must exceed lambda_min");
  require(c.sweep.points >= 2, "sweep.points must be at least 2");

  c.envelope_n = root.integer_or("envelope_n", c.envelope_n);
  require(c.envelope_n >= 1, "envelope_n must be at least 1");

  root.finish();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string render_config(const RunConfig& c) {
  json time = {{"t_end", c.time.t_end}};
  if (c.time.output_times.empty()) {
    time["output_count"] = c.time.output_count;
  } else {
    time["output_times"] = c.time.output_times;
  }
  json doc = {
      {"task", std::string(to_string(c.task))},
      {"grid", {{"m", c.grid.m}, {"n_cells", c.grid.n_cells}}},
      {"model",
       {{"gamma1", render_coefficient(c.model.gamma1)},
        {"gamma2", render_coefficient(c.model.gamma2)},
        {"mu", render_coefficient(c.model.mu)},
        {"c1", render_coefficient(c.model.c1)},
        {"c2", render_coefficient(c.model.c2)},
        {"beta", render_kernel(c.model.beta)}}},
      {"time", time},
      {"initial", {{"u1", render_coefficient(c.initial.u1)}, {"u2", render_coefficient(c.initial.u2)}}},
      {"initial_b",
       {{"u1", render_coefficient(c.initial_b.u1)}, {"u2", render_coefficient(c.initial_b.u2)}}},
      {"tolerances",
       {{"safety", c.tolerances.safety},
        {"tol", c.tolerances.tol},
        {"power_tol", c.tolerances.power_tol},
        {"aeg_tol", c.tolerances.aeg_tol},
        {"window_fraction", c.tolerances.window_fraction},
        {"epsilon", c.tolerances.epsilon}}},
      {"sweep",
       {{"lambda_min", c.sweep.lambda_min},
        {"lambda_max", c.sweep.lambda_max},
        {"points", c.sweep.points}}},
      {"envelope_n", c.envelope_n},
  };
  return doc.dump(2) + "\n";
}

}  // namespace sspop
