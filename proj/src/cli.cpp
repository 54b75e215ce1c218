#include "percol/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

#include "percol/analysis.hpp"
#include "percol/errors.hpp"
#include "percol/models.hpp"
#include "percol/solver.hpp"

namespace percol::cli {

namespace {

// ------------------------------------------------------------------ schema

enum class Kind { Int, Number, String, IntList, Object };

struct Node {
  Kind kind = Kind::Object;
  Json def;
  bool nullable = false;
  std::vector<std::pair<std::string, Node>> children;
};

Node leaf(Kind kind, Json def, bool nullable = false) {
  Node n;
  n.kind = kind;
  n.def = std::move(def);
  n.nullable = nullable;
  return n;
}

Node object(std::vector<std::pair<std::string, Node>> children) {
  Node n;
  n.children = std::move(children);
  return n;
}

Node number(double v) { return leaf(Kind::Number, v); }
Node optional_number() { return leaf(Kind::Number, nullptr, true); }

Node params_schema(const std::string& model) {
  if (model == "quadratic") return object({{"gamma", number(4.0)}});
  if (model == "daphnia")
    return object({{"beta", number(4.0)},
                   {"r", number(1.0)},
                   {"K", number(1.0)},
                   {"gamma_d", number(1.0)},
                   {"a_bar", number(3.0)},
                   {"a_max", number(4.0)}});
  // No defaults for the Plant model: every constant must be given.
  return object({{"tau", optional_number()},
                 {"mu", optional_number()},
                 {"a", optional_number()},
                 {"b", optional_number()},
                 {"r", optional_number()}});
}

Node config_schema(const std::string& model) {
  return object({
      {"model", leaf(Kind::String, model)},
      {"params", params_schema(model)},
      {"grid", object({{"L", leaf(Kind::Int, 20)},
                       {"m", leaf(Kind::Int, 3)},
                       {"abscissae", leaf(Kind::String, "gauss-legendre")}})},
      {"secondary",
       object({{"quadrature", leaf(Kind::String, "clenshaw-curtis")}, {"M", leaf(Kind::Int, nullptr, true)}})},
      {"phase", object({{"kind", leaf(Kind::String, "auto")},
                        {"block", leaf(Kind::String, "x")},
                        {"component", leaf(Kind::Int, 0)},
                        {"target", optional_number()}})},
      {"newton", object({{"max_iters", leaf(Kind::Int, 30)},
                         {"residual_tol", number(1e-10)},
                         {"step_tol", number(1e-12)},
                         {"max_halvings", leaf(Kind::Int, 8)},
                         {"jacobian", leaf(Kind::String, "structured")},
                         {"execution", leaf(Kind::String, "parallel")}})},
      {"initial_guess", object({{"method", leaf(Kind::String, "auto")},
                                {"file", leaf(Kind::String, nullptr, true)},
                                {"omega", optional_number()}})},
      {"continuation", object({{"parameter", leaf(Kind::String, nullptr, true)},
                               {"to", optional_number()},
                               {"initial_step", number(0.05)},
                               {"min_step", number(1e-5)},
                               {"max_step", number(0.2)}})},
      {"study", object({{"Ls", leaf(Kind::IntList, nullptr, true)},
                        {"samples_per_interval", leaf(Kind::Int, 16)},
                        {"reference", object({{"kind", leaf(Kind::String, "auto")},
                                              {"L", leaf(Kind::Int, 500)},
                                              {"m", leaf(Kind::Int, 4)},
                                              {"abscissae", leaf(Kind::String, "chebyshev")}})}})},
      {"output", object({{"directory", leaf(Kind::String, "percol-out")}})},
  });
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

Json merge(const Node& node, const Json* user, const std::string& path) {
  if (node.kind == Kind::Object) {
    if (user && !user->is_object()) throw ConfigError(path + ": expected an object");
    if (user)
      for (const auto& [key, value] : user->items()) {
        (void)value;
        const bool known = std::any_of(node.children.begin(), node.children.end(),
                                       [&](const auto& child) { return child.first == key; });
        if (!known) throw ConfigError("unknown key '" + join(path, key) + "'");
      }
    Json out = Json::object();
    for (const auto& [key, child] : node.children) {
      const Json* sub = nullptr;
      if (user) {
        const auto it = user->find(key);
        if (it != user->end()) sub = &*it;
      }
      out[key] = merge(child, sub, join(path, key));
    }
    return out;
  }
  if (!user) return node.def;
  if (user->is_null()) {
    if (!node.nullable) throw ConfigError(path + ": must not be null");
    return nullptr;
  }
  bool ok = false;
  switch (node.kind) {
    case Kind::Int: ok = user->is_number_integer(); break;
    case Kind::Number: ok = user->is_number() && std::isfinite(user->get<double>()); break;
    case Kind::String: ok = user->is_string(); break;
    case Kind::IntList:
      ok = user->is_array() && std::all_of(user->begin(), user->end(), [](const Json& v) { return v.is_number_integer(); });
      break;
    case Kind::Object: break;
  }
  if (!ok) {
    static const char* names[] = {"an integer", "a finite number", "a string", "a list of integers", "an object"};
    throw ConfigError(path + ": expected " + names[static_cast<int>(node.kind)]);
  }
  return *user;
}

void check(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

template <class F>
auto as_config_error(F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

// --------------------------------------------------------------- readers

std::string model_of(const Json& c) { return c.at("model").get<std::string>(); }

AbscissaeKind abscissae_of(const Json& c) {
  return as_config_error([&] { return parse_abscissae_kind(c.at("grid").at("abscissae").get<std::string>()); });
}

AbscissaeKind reference_abscissae_of(const Json& c) {
  return as_config_error(
      [&] { return parse_abscissae_kind(c.at("study").at("reference").at("abscissae").get<std::string>()); });
}

std::shared_ptr<const CollocationGrid> grid_of(const Json& c) {
  return build_grid(c.at("grid").at("L").get<int>(), make_abscissae(abscissae_of(c), c.at("grid").at("m").get<int>()));
}

QuadratureKind quadrature_kind_of(const Json& c) {
  return as_config_error([&] { return parse_quadrature_kind(c.at("secondary").at("quadrature").get<std::string>()); });
}

int secondary_M(const Json& c, int L) {
  const Json& M = c.at("secondary").at("M");
  return M.is_null() ? default_M_rule(L) : M.get<int>();
}

QuadratureSpec quadrature_of(const Json& c, int L) { return {quadrature_kind_of(c), secondary_M(c, L) + 1}; }

NewtonOptions newton_of(const Json& c) {
  const Json& n = c.at("newton");
  NewtonOptions o;
  o.max_iters = n.at("max_iters").get<int>();
  o.residual_tol = n.at("residual_tol").get<double>();
  o.step_tol = n.at("step_tol").get<double>();
  o.max_halvings = n.at("max_halvings").get<int>();
  const auto jac = n.at("jacobian").get<std::string>();
  check(jac == "structured" || jac == "forward-difference",
        "newton.jacobian: expected 'structured' or 'forward-difference'");
  o.jacobian = jac == "structured" ? JacobianMethod::Structured : JacobianMethod::ForwardDifference;
  const auto exe = n.at("execution").get<std::string>();
  check(exe == "parallel" || exe == "serial", "newton.execution: expected 'parallel' or 'serial'");
  o.execution = exe == "parallel" ? Execution::Parallel : Execution::Serial;
  as_config_error([&] {
    o.validate();
    return 0;
  });
  return o;
}

ContinuationOptions continuation_of(const Json& c) {
  const Json& k = c.at("continuation");
  ContinuationOptions o;
  o.initial_step = k.at("initial_step").get<double>();
  o.min_step = k.at("min_step").get<double>();
  o.max_step = k.at("max_step").get<double>();
  o.newton = newton_of(c);
  return o;
}

DaphniaParams daphnia_params(const Json& p) {
  DaphniaParams d;
  d.beta = p.at("beta").get<double>();
  d.r = p.at("r").get<double>();
  d.K = p.at("K").get<double>();
  d.gamma_d = p.at("gamma_d").get<double>();
  d.a_bar = p.at("a_bar").get<double>();
  d.a_max = p.at("a_max").get<double>();
  return d;
}

PlantParams plant_params(const Json& p) {
  for (const char* key : {"tau", "mu", "a", "b", "r"})
    check(!p.at(key).is_null(), std::string("params.") + key + ": required for the plant model");
  PlantParams q;
  q.tau = p.at("tau").get<double>();
  q.mu = p.at("mu").get<double>();
  q.a = p.at("a").get<double>();
  q.b = p.at("b").get<double>();
  q.r = p.at("r").get<double>();
  return q;
}

CoupledSystem system_of(const std::string& model, const Json& params, QuadratureSpec quad) {
  if (model == "quadratic") return quadratic_system(params.at("gamma").get<double>(), quad);
  if (model == "daphnia") return daphnia_model(daphnia_params(params), quad);
  return plant_model(plant_params(params), quad);
}

std::string guess_method(const Json& c) {
  const auto method = c.at("initial_guess").at("method").get<std::string>();
  if (method != "auto") return method;
  const auto model = model_of(c);
  if (model == "quadratic") return "exact";
  if (model == "daphnia") return "hopf";
  return "simulation";
}

std::string reference_kind(const Json& c) {
  const auto kind = c.at("study").at("reference").at("kind").get<std::string>();
  if (kind != "auto") return kind;
  return model_of(c) == "quadratic" ? "exact" : "fine";
}

// ------------------------------------------------------------ validation

void check_params(const Json& c) {
  const auto model = model_of(c);
  const Json& p = c.at("params");
  as_config_error([&] {
    if (model == "quadratic") {
      check(p.at("gamma").get<double>() > 0.0, "params.gamma: must be positive");
    } else if (model == "daphnia") {
      const DaphniaParams d = daphnia_params(p);
      d.validate();
      check(d.beta > 0.0, "params.beta: must be positive");
    } else {
      const PlantParams q = plant_params(p);
      q.validate();
      find_v0(q.a, q.b);
    }
    return 0;
  });
}

void check_grid(const Json& c) {
  const Json& g = c.at("grid");
  check(g.at("L").get<int>() >= 1, "grid.L: must be at least 1");
  const int m = g.at("m").get<int>();
  check(m >= 1 && static_cast<std::size_t>(m) < kMaxBasisSize,
        "grid.m: must lie in [1, " + std::to_string(kMaxBasisSize - 1) + "]");
  abscissae_of(c);
  quadrature_kind_of(c);
  const Json& M = c.at("secondary").at("M");
  check(M.is_null() || M.get<int>() >= 1, "secondary.M: must be at least 1");
}

void check_guess_and_phase(const Json& c) {
  const auto model = model_of(c);
  const auto method = guess_method(c);
  const Json& g = c.at("initial_guess");
  static const std::vector<std::string> methods = {"exact", "hopf", "ansatz", "simulation", "file"};
  check(std::find(methods.begin(), methods.end(), method) != methods.end(),
        "initial_guess.method: expected one of auto, exact, hopf, ansatz, simulation, file");
  check(method != "exact" || model == "quadratic", "initial_guess.method: 'exact' needs the quadratic model");
  check((method != "hopf" && method != "ansatz") || model == "daphnia",
        "initial_guess.method: '" + method + "' needs the daphnia model");
  check(method != "simulation" || model == "plant", "initial_guess.method: 'simulation' needs the plant model");
  if (method == "file") check(!g.at("file").is_null(), "initial_guess.file: required for method 'file'");
  if (method == "file" || method == "ansatz")
    check(!g.at("omega").is_null() && g.at("omega").get<double>() > 0.0,
          "initial_guess.omega: a positive period guess is required for method '" + method + "'");

  const Json& ph = c.at("phase");
  const auto kind = ph.at("kind").get<std::string>();
  check(kind == "auto" || kind == "anchor" || kind == "integral",
        "phase.kind: expected 'auto', 'anchor' or 'integral'");
  const auto block = ph.at("block").get<std::string>();
  check(block == "x" || block == "y", "phase.block: expected 'x' or 'y'");
  check(ph.at("component").get<int>() == 0, "phase.component: the built-in models have one component per block");
  if (kind == "anchor")
    check(!ph.at("target").is_null() || (model == "quadratic" && block == "x"),
          "phase.target: required for an anchor phase condition");
}

void check_continuation(const Json& c) {
  const Json& k = c.at("continuation");
  check(!k.at("parameter").is_null(), "continuation.parameter: required for 'continue'");
  const auto name = k.at("parameter").get<std::string>();
  check(c.at("params").contains(name), "continuation.parameter: '" + name + "' is not a parameter of the model");
  check(!k.at("to").is_null(), "continuation.to: required for 'continue'");
  const ContinuationOptions o = continuation_of(c);
  check(o.initial_step > 0.0 && o.min_step > 0.0 && o.max_step >= o.min_step,
        "continuation: steps must be positive with min_step <= max_step");
  // The endpoint must itself be a valid parameter set.
  Json at_end = c;
  at_end["params"][name] = k.at("to");
  check_params(at_end);
}

void check_study(const Json& c) {
  const Json& s = c.at("study");
  check(!s.at("Ls").is_null(), "study.Ls: required for 'converge'");
  const auto Ls = s.at("Ls").get<std::vector<int>>();
  check(Ls.size() >= 3, "study.Ls: need at least 3 values");
  for (std::size_t i = 0; i < Ls.size(); ++i) {
    check(Ls[i] >= 1, "study.Ls: values must be positive");
    check(i == 0 || Ls[i] > Ls[i - 1], "study.Ls: values must be strictly increasing");
  }
  check(s.at("samples_per_interval").get<int>() >= 1, "study.samples_per_interval: must be positive");
  const auto kind = reference_kind(c);
  check(kind == "exact" || kind == "fine", "study.reference.kind: expected 'auto', 'exact' or 'fine'");
  check(kind != "exact" || model_of(c) == "quadratic", "study.reference.kind: 'exact' needs the quadratic model");
  if (kind == "fine") {
    const Json& r = s.at("reference");
    const int L_ref = r.at("L").get<int>(), m_ref = r.at("m").get<int>();
    check(m_ref >= 1 && static_cast<std::size_t>(m_ref) < kMaxBasisSize, "study.reference.m: out of range");
    check(L_ref >= 8 * Ls.front(), "study.reference.L: must be at least 8 times the coarsest L");
    reference_abscissae_of(c);
  }
}

// --------------------------------------------------------------- outputs

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string fmt(double v) { return format_double(v); }

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << csv_field(fields[i]);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

void flatten(const Json& j, const std::string& path, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) flatten(value, join(path, key), out);
    return;
  }
  if (j.is_number_float()) {
    out.emplace_back(path, fmt(j.get<double>()));
    return;
  }
  out.emplace_back(path, j.is_string() ? j.get<std::string>() : j.dump());
}

std::filesystem::path output_dir(const Json& c) {
  std::filesystem::path dir = c.at("output").at("directory").get<std::string>();
  std::filesystem::create_directories(dir);
  return dir;
}

void write_effective_config(const std::filesystem::path& dir, const Json& c) {
  std::ofstream out(dir / "effective_config.json", std::ios::binary);
  out << c.dump(2) << '\n';
}

void write_summary(const std::filesystem::path& dir, const Json& c,
                   const std::vector<std::pair<std::string, std::string>>& entries) {
  CsvWriter w(dir / "summary.csv");
  w.row({"key", "value"});
  for (const auto& [k, v] : entries) w.row({k, v});
  std::vector<std::pair<std::string, std::string>> cfg;
  flatten(c, "", cfg);
  for (const auto& [k, v] : cfg) w.row({"config." + k, v});
}

void write_solution(const std::filesystem::path& dir, const DiscreteSolution& sol) {
  CsvWriter w(dir / "solution.csv");
  std::vector<std::string> header{"t"};
  for (std::size_t c = 0; c < sol.dim_x(); ++c) header.push_back("x_" + std::to_string(c + 1));
  for (std::size_t c = 0; c < sol.dim_y(); ++c) header.push_back("y_" + std::to_string(c + 1));
  for (std::size_t c = 0; c < sol.dim_y(); ++c) header.push_back("y_deriv_" + std::to_string(c + 1));
  w.row(header);
  const int n = 16 * sol.grid().intervals();
  for (int k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) / n;
    const PeriodicSample s = eval_periodic(sol, t);
    std::vector<std::string> row{fmt(t)};
    for (double v : s.x) row.push_back(fmt(v));
    for (double v : s.y) row.push_back(fmt(v));
    for (double v : s.y_deriv) row.push_back(fmt(v));
    w.row(row);
  }
}

void add_diagnostics(std::vector<std::pair<std::string, std::string>>& e, const NewtonDiagnostics& d) {
  e.emplace_back("newton_iterations", std::to_string(d.iterations));
  e.emplace_back("final_residual", fmt(d.final_residual));
  e.emplace_back("step_converged", d.step_converged ? "true" : "false");
  std::string history;
  for (double r : d.residual_history) history += (history.empty() ? "" : ";") + fmt(r);
  e.emplace_back("residual_history", history);
}

void add_amplitudes(std::vector<std::string>& row, const DiscreteSolution& sol) {
  for (std::size_t c = 0; c < sol.dim_x(); ++c) row.push_back(fmt(amplitude(sol, Block::X, c)));
  for (std::size_t c = 0; c < sol.dim_y(); ++c) row.push_back(fmt(amplitude(sol, Block::Y, c)));
}

// ------------------------------------------------------- guesses, phases

/// Linear interpolation of a "t,x_1..,y_1.." table onto the grid nodes.
DiscreteSolution guess_from_file(const std::string& path, double omega, std::size_t dx, std::size_t dy,
                                 std::shared_ptr<const CollocationGrid> grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError("initial_guess.file: cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc()) throw ConfigError("initial_guess.file: bad number '" + cell + "'");
      row.push_back(v);
    }
    if (row.size() < 1 + dx + dy) throw ConfigError("initial_guess.file: too few columns");
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw ConfigError("initial_guess.file: need at least two samples");
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i][0] > rows[i - 1][0])) throw ConfigError("initial_guess.file: t must be strictly increasing");
  if (rows.front()[0] > 0.0 || rows.back()[0] < 1.0) throw ConfigError("initial_guess.file: t must cover [0, 1]");
  ReferenceSolution ref;
  ref.dim_x = dx;
  ref.dim_y = dy;
  ref.omega = omega;
  ref.eval = [&rows, dx, dy](double t, std::span<double> x, std::span<double> y) {
    auto it = std::upper_bound(rows.begin(), rows.end(), t, [](double v, const auto& r) { return v < r[0]; });
    const std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - rows.begin()), 1, rows.size() - 1);
    const auto& a = rows[hi - 1];
    const auto& b = rows[hi];
    const double f = (t - a[0]) / (b[0] - a[0]);
    for (std::size_t c = 0; c < dx; ++c) x[c] = a[1 + c] + f * (b[1 + c] - a[1 + c]);
    for (std::size_t c = 0; c < dy; ++c) y[c] = a[1 + dx + c] + f * (b[1 + dx + c] - a[1 + dx + c]);
  };
  return restrict_reference(ref, std::move(grid));
}

struct Start {
  DiscreteSolution guess;
  bool converged = false;  // already a solution at the configured parameters
  std::vector<std::pair<std::string, std::string>> notes;
};

Start initial_guess(const Json& c, std::shared_ptr<const CollocationGrid> grid) {
  const auto method = guess_method(c);
  const Json& p = c.at("params");
  const Json& g = c.at("initial_guess");
  if (method == "exact") return {restrict_reference(quadratic_exact(p.at("gamma").get<double>()), grid), false, {}};
  if (method == "file") {
    const auto sys = system_of(model_of(c), p, quadrature_of(c, grid->intervals()));
    return {guess_from_file(g.at("file").get<std::string>(), g.at("omega").get<double>(), sys.dim_x, sys.dim_y, grid),
            false,
            {}};
  }
  if (method == "ansatz") return {daphnia_ansatz(daphnia_params(p), grid, g.at("omega").get<double>()), false, {}};
  if (method == "simulation") return {plant_simulated_guess(plant_params(p), grid), false, {}};

  const DaphniaParams d = daphnia_params(p);
  ContinuationOptions opts;
  opts.newton = newton_of(c);
  DaphniaStart st = daphnia_initial_orbit(d, grid, quadrature_of(c, grid->intervals()), opts);
  const BranchPoint& last = st.branch.points.back();
  if (st.branch.status != BranchStatus::Completed || last.param_value != d.beta)
    throw NoPeriodicSolution("daphnia start: continuation from the Hopf point stopped early: " + st.branch.message);
  Start s{last.solution, true, {}};
  s.notes.emplace_back("start_beta", fmt(st.beta_start));
  s.notes.emplace_back("start_branch_points", std::to_string(st.branch.points.size()));
  return s;
}

PhaseCondition phase_of(const Json& c, const DiscreteSolution& guess) {
  const Json& ph = c.at("phase");
  auto kind = ph.at("kind").get<std::string>();
  const bool quadratic = model_of(c) == "quadratic";
  if (kind == "auto") kind = quadratic ? "anchor" : "integral";
  if (kind == "integral") return IntegralPhase{std::make_shared<const DiscreteSolution>(guess)};
  AnchorPhase a;
  a.block = ph.at("block").get<std::string>() == "x" ? Block::X : Block::Y;
  a.component = ph.at("component").get<std::size_t>();
  a.target = ph.at("target").is_null() ? quadratic_sigma(c.at("params").at("gamma").get<double>())
                                        : ph.at("target").get<double>();
  return a;
}

struct Solved {
  DiscreteSolution solution;
  NewtonDiagnostics diagnostics;
  std::vector<std::pair<std::string, std::string>> notes;
};

Solved solve_configured(const Json& c, std::shared_ptr<const CollocationGrid> grid) {
  const auto sys = system_of(model_of(c), c.at("params"), quadrature_of(c, grid->intervals()));
  Start start = initial_guess(c, grid);
  const PhaseCondition phase = phase_of(c, start.guess);
  const NewtonResult r = newton_solve(sys, phase, grid, pack(start.guess), newton_of(c));
  return {unpack(r.z, grid, sys.dim_x, sys.dim_y), r.diagnostics, std::move(start.notes)};
}

// -------------------------------------------------------------- commands

void run_solve(const Json& c) {
  Solved s = solve_configured(c, grid_of(c));
  const auto dir = output_dir(c);
  write_solution(dir, s.solution);
  std::vector<std::pair<std::string, std::string>> e{{"command", "solve"}, {"status", "converged"}};
  e.emplace_back("omega", fmt(s.solution.omega));
  add_diagnostics(e, s.diagnostics);
  for (std::size_t k = 0; k < s.solution.dim_x(); ++k)
    e.emplace_back("amplitude_x_" + std::to_string(k + 1), fmt(amplitude(s.solution, Block::X, k)));
  for (std::size_t k = 0; k < s.solution.dim_y(); ++k)
    e.emplace_back("amplitude_y_" + std::to_string(k + 1), fmt(amplitude(s.solution, Block::Y, k)));
  e.insert(e.end(), s.notes.begin(), s.notes.end());
  write_summary(dir, c, e);
  write_effective_config(dir, c);
}

void run_continue(const Json& c) {
  const auto grid = grid_of(c);
  const auto model = model_of(c);
  const auto name = c.at("continuation").at("parameter").get<std::string>();
  const double p0 = c.at("params").at(name).get<double>();
  const double p1 = c.at("continuation").at("to").get<double>();
  const QuadratureSpec quad = quadrature_of(c, grid->intervals());
  const Json base = c.at("params");
  SystemFamily family = [model, base, name, quad](double p) {
    Json q = base;
    q[name] = p;
    return system_of(model, q, quad);
  };
  Start start = initial_guess(c, grid);
  DiscreteSolution initial = start.guess;
  if (!start.converged) {
    const NewtonResult r = newton_solve(family(p0), phase_of(c, start.guess), grid, pack(start.guess), newton_of(c));
    initial = unpack(r.z, grid, start.guess.dim_x(), start.guess.dim_y());
  }
  const BranchResult branch = continue_branch(family, p0, p1, initial, continuation_of(c));

  const auto dir = output_dir(c);
  CsvWriter w(dir / "branch.csv");
  std::vector<std::string> header{"param", "omega"};
  for (std::size_t k = 0; k < initial.dim_x(); ++k) header.push_back("amplitude_x_" + std::to_string(k + 1));
  for (std::size_t k = 0; k < initial.dim_y(); ++k) header.push_back("amplitude_y_" + std::to_string(k + 1));
  header.insert(header.end(), {"iterations", "final_residual", "status"});
  w.row(header);
  const bool completed = branch.status == BranchStatus::Completed;
  for (std::size_t i = 0; i < branch.points.size(); ++i) {
    const BranchPoint& pt = branch.points[i];
    std::vector<std::string> row{fmt(pt.param_value), fmt(pt.solution.omega)};
    add_amplitudes(row, pt.solution);
    row.push_back(std::to_string(pt.diagnostics.iterations));
    row.push_back(fmt(pt.diagnostics.final_residual));
    const bool last = i + 1 == branch.points.size();
    row.push_back(!last ? "accepted" : completed ? "completed" : "stopped_early");
    w.row(row);
  }
  std::vector<std::pair<std::string, std::string>> e{{"command", "continue"},
                                                     {"status", completed ? "completed" : "stopped_early"}};
  e.emplace_back("parameter", name);
  e.emplace_back("points", std::to_string(branch.points.size()));
  e.emplace_back("last_param", fmt(branch.points.back().param_value));
  e.emplace_back("last_omega", fmt(branch.points.back().solution.omega));
  if (!completed) e.emplace_back("message", branch.message);
  e.insert(e.end(), start.notes.begin(), start.notes.end());
  write_summary(dir, c, e);
  write_effective_config(dir, c);
}

void run_converge(const Json& c) {
  const auto model = model_of(c);
  const Json& s = c.at("study");
  const auto Ls = s.at("Ls").get<std::vector<int>>();
  const Json params = c.at("params");
  const QuadratureKind qkind = quadrature_kind_of(c);
  const Json fixed_M = c.at("secondary").at("M");
  const NewtonOptions nopts = newton_of(c);
  const int m = c.at("grid").at("m").get<int>();
  const AbscissaeKind kind = abscissae_of(c);

  SystemForM system = [model, params, qkind](int M) { return system_of(model, params, {qkind, M + 1}); };
  MRule rule = default_M_rule;
  if (!fixed_M.is_null()) rule = [M = fixed_M.get<int>()](int) { return M; };

  std::vector<std::pair<std::string, std::string>> e{{"command", "converge"}};
  ReferenceSolution reference;
  PhaseCondition phase;
  const int L_ref = s.at("reference").at("L").get<int>();
  const int m_ref = s.at("reference").at("m").get<int>();
  if (reference_kind(c) == "exact") {
    const double gamma = params.at("gamma").get<double>();
    reference = quadratic_exact(gamma);
    const DiscreteSolution on_ref_grid =
        restrict_reference(reference, build_grid(L_ref, make_abscissae(AbscissaeKind::GaussLegendre, m_ref)));
    phase = phase_of(c, on_ref_grid);
    e.emplace_back("reference", "exact");
  } else {
    // The fine reference starts from a coarse orbit on a fixed grid, so the
    // start does not depend on the abscissae under study.
    Solved coarse = solve_configured(c, build_grid(20, make_abscissae(AbscissaeKind::ChebyshevExtrema, 4)));
    auto coarse_ptr = std::make_shared<const DiscreteSolution>(std::move(coarse.solution));
    const CoupledSystem ref_system = system_of(model, params, {qkind, rule(L_ref) + 1});
    auto ref = std::make_shared<const DiscreteSolution>(reference_solution(
        ref_system, IntegralPhase{coarse_ptr}, L_ref, m_ref, reference_abscissae_of(c), as_reference(coarse_ptr), nopts));
    reference = as_reference(ref);
    phase = IntegralPhase{ref};
    e.emplace_back("reference", "fine");
    e.emplace_back("reference_omega", fmt(ref->omega));
  }

  StudyOptions so;
  so.samples_per_interval = s.at("samples_per_interval").get<int>();
  so.newton = nopts;
  const ConvergenceTable table = convergence_study(system, phase, reference, m, kind, Ls, rule, so);

  const auto dir = output_dir(c);
  {
    CsvWriter w(dir / "convergence.csv");
    w.row({"L", "m", "abscissae", "M", "h", "err_x", "err_y", "err_omega", "log10_h", "log10_err_x", "log10_err_y",
           "iterations", "runtime_seconds", "status", "failure"});
    for (const auto& r : table.rows) {
      const double h = 1.0 / r.L;
      auto lg = [&](double v) { return r.ok && v > 0.0 ? fmt(std::log10(v)) : std::string(); };
      w.row({std::to_string(r.L), std::to_string(r.m), std::string(to_string(r.kind)), std::to_string(r.M), fmt(h),
             r.ok ? fmt(r.err_x) : "", r.ok ? fmt(r.err_y) : "", r.ok ? fmt(r.err_omega) : "", fmt(std::log10(h)),
             lg(r.err_x), lg(r.err_y), std::to_string(r.iterations), fmt(r.runtime_seconds), r.ok ? "ok" : "failed",
             r.failure});
    }
  }
  {
    CsvWriter w(dir / "orders.csv");
    w.row({"order_x", "order_y", "order_omega"});
    w.row({fmt(table.orders.x), fmt(table.orders.y), fmt(table.orders.omega)});
  }
  e.emplace_back("order_x", fmt(table.orders.x));
  e.emplace_back("order_y", fmt(table.orders.y));
  e.emplace_back("order_omega", fmt(table.orders.omega));
  write_summary(dir, c, e);
  write_effective_config(dir, c);
}

Json error_record(const std::string& kind, const std::string& message) {
  return Json{{"status", "error"}, {"kind", kind}, {"message", message}};
}

}  // namespace

Command parse_command(std::string_view name) {
  if (name == "solve") return Command::Solve;
  if (name == "continue") return Command::Continue;
  if (name == "converge") return Command::Converge;
  throw ConfigError("unknown command '" + std::string(name) + "'");
}

std::string_view to_string(Command command) {
  switch (command) {
    case Command::Solve: return "solve";
    case Command::Continue: return "continue";
    case Command::Converge: return "converge";
  }
  return "unknown";
}

Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
}

void apply_override(Json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) throw ConfigError("override '" + std::string(assignment) + "': expected key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  if (!config.is_object()) config = Json::object();
  Json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override '" + key + "': empty key segment");
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    Json& next = (*node)[part];
    if (next.is_null()) next = Json::object();
    if (!next.is_object()) throw ConfigError("override '" + key + "': '" + part + "' is not an object");
    node = &next;
    start = dot + 1;
  }
}

Json effective_config(Command command, const Json& user) {
  if (!user.is_object()) throw ConfigError("config: expected a JSON object");
  const auto it = user.find("model");
  if (it == user.end() || !it->is_string()) throw ConfigError("model: required string");
  const auto model = it->get<std::string>();
  if (model == "custom")
    throw ConfigError("model: custom systems are defined through the library API (CoupledSystem), not the config file");
  if (model != "quadratic" && model != "daphnia" && model != "plant")
    throw ConfigError("model: expected 'quadratic', 'daphnia' or 'plant'");

  Json c = merge(config_schema(model), &user, "");
  check(!c.at("output").at("directory").get<std::string>().empty(), "output.directory: must not be empty");
  check_grid(c);
  newton_of(c);
  check_params(c);
  check_guess_and_phase(c);
  if (command == Command::Continue) check_continuation(c);
  if (command == Command::Converge) check_study(c);
  return c;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void run(Command command, const Json& effective) {
  switch (command) {
    case Command::Solve: run_solve(effective); break;
    case Command::Continue: run_continue(effective); break;
    case Command::Converge: run_converge(effective); break;
  }
}

int execute(Command command, const Json& user, std::ostream& err) {
  Json c;
  try {
    c = effective_config(command, user);
  } catch (const ConfigError& e) {
    err << error_record("validation", e.what()).dump() << '\n';
    return kExitValidation;
  }
  try {
    run(command, c);
    return kExitSuccess;
  } catch (const ConfigError& e) {
    err << error_record("validation", e.what()).dump() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    const Json record = error_record("numerical", e.what());
    err << record.dump() << '\n';
    try {
      std::ofstream(output_dir(c) / "error.json", std::ios::binary) << record.dump(2) << '\n';
    } catch (const std::exception&) {
    }
    return kExitNumerical;
  }
}

}  // namespace percol::cli
