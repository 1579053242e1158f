#include "stochlin/experiment.hpp"

#include "stochlin/error.hpp"
#include "stochlin/execution.hpp"
#include "stochlin/matrix_market.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace stochlin {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string to_string(Command c) {
  switch (c) {
    case Command::Run: return "run";
    case Command::Diagnose: return "diagnose";
    case Command::Validate: return "validate";
  }
  return "run";
}

std::optional<Command> parse_command(const std::string& name) {
  if (name == "run") return Command::Run;
  if (name == "diagnose") return Command::Diagnose;
  if (name == "validate") return Command::Validate;
  return std::nullopt;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// config parsing

namespace {

// A JSON value together with its pointer path for error messages.
class Field {
 public:
  Field(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_.empty() ? "/" : path_, msg); }

  void require_object(std::initializer_list<const char*> allowed) const {
    if (!j_.is_object()) fail("expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j_.items()) {
      if (!ok.count(k)) Field(v, path_ + "/" + k).fail("unknown field");
    }
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  Field at(const std::string& key) const { return Field(j_.at(key), path_ + "/" + key); }
  Field at(std::size_t i) const { return Field(j_.at(i), path_ + "/" + std::to_string(i)); }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }
  double positive() const {
    const double v = number();
    if (!(v > 0.0)) fail("expected a positive number");
    return v;
  }
  std::uint64_t u64() const {
    if (j_.is_number_unsigned()) return j_.get<std::uint64_t>();
    if (j_.is_number_integer()) {
      const auto v = j_.get<std::int64_t>();
      if (v >= 0) return static_cast<std::uint64_t>(v);
    }
    fail("expected a non-negative integer");
  }
  std::size_t count(std::size_t min = 0) const {
    const auto v = u64();
    if (v < min) fail("expected an integer >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
  }
  bool boolean() const {
    if (!j_.is_boolean()) fail("expected true or false");
    return j_.get<bool>();
  }
  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }
  std::vector<double> numbers() const {
    if (!j_.is_array()) fail("expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j_.size(); ++i) out.push_back(at(i).number());
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

std::string resolve(const std::string& p, const std::string& base) {
  const fs::path path(p);
  if (path.is_absolute() || base.empty()) return p;
  return (fs::path(base) / path).lexically_normal().string();
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ProblemSpec parse_generator(const Field& g, std::uint64_t seed) {
  g.require_object({"kind", "rows", "cols", "rank", "condition", "diagonal", "planted", "seed", "graph",
                    "nodes", "edges", "require_connected"});
  if (!g.has("kind")) g.fail("missing field 'kind'");
  ProblemSpec spec;
  const auto kind = parse_problem_kind(g.at("kind").string());
  if (!kind) g.at("kind").fail("unknown generator kind");
  spec.kind = *kind;
  spec.seed = g.has("seed") ? g.at("seed").u64() : seed;
  if (g.has("rows")) spec.rows = g.at("rows").count(1);
  if (g.has("cols")) spec.cols = g.at("cols").count(1);
  if (g.has("rank")) spec.rank = g.at("rank").count();
  if (g.has("condition")) {
    spec.condition = g.at("condition").number();
    if (spec.condition < 1.0) g.at("condition").fail("condition must be >= 1");
  }
  if (g.has("diagonal")) spec.diagonal = to_vector(g.at("diagonal").numbers());
  if (g.has("planted")) spec.planted = to_vector(g.at("planted").numbers());
  if (g.has("graph")) spec.graph = g.at("graph").string();
  if (g.has("nodes")) spec.nodes = g.at("nodes").count(1);
  if (g.has("edges")) {
    const auto e = g.at("edges");
    if (!e.raw().is_array()) e.fail("expected an array of [u, v] pairs");
    for (std::size_t i = 0; i < e.raw().size(); ++i) {
      const auto pair = e.at(i);
      if (!pair.raw().is_array() || pair.raw().size() != 2) pair.fail("expected [u, v]");
      spec.edges.emplace_back(pair.at(std::size_t{0}).count(), pair.at(std::size_t{1}).count());
    }
  }
  if (g.has("require_connected")) spec.require_connected = g.at("require_connected").boolean();
  return spec;
}

OmegaChoice parse_omega(const Field& f) {
  if (f.raw().is_string()) {
    const auto name = f.string();
    if (name != "parallel-optimal" && !parse_stepsize_kind(name)) f.fail("unknown stepsize policy '" + name + "'");
    return {std::nullopt, name};
  }
  return {f.number(), ""};
}

SolverSpec parse_solver(const Field& s) {
  s.require_object({"method", "label", "omega", "tau", "mu", "gamma", "theory_backed", "tolerance"});
  SolverSpec spec;
  if (!s.has("method")) s.fail("missing field 'method'");
  const auto m = parse_method(s.at("method").string());
  if (!m) s.at("method").fail("unknown method (basic | parallel | accelerated)");
  spec.method = *m;
  spec.label = s.has("label") ? s.at("label").string() : to_string(*m);
  if (spec.label.empty() || spec.label.find_first_of("/\\ ") != std::string::npos) {
    s.at("label").fail("label must be non-empty without spaces or slashes");
  }
  if (s.has("omega")) {
    const auto o = s.at("omega");
    spec.omegas.clear();
    if (o.raw().is_array()) {
      if (o.raw().empty()) o.fail("empty omega grid");
      for (std::size_t i = 0; i < o.raw().size(); ++i) spec.omegas.push_back(parse_omega(o.at(i)));
    } else {
      spec.omegas.push_back(parse_omega(o));
    }
  }
  if (s.has("tau")) {
    const auto t = s.at("tau");
    spec.taus.clear();
    if (t.raw().is_array()) {
      if (t.raw().empty()) t.fail("empty tau grid");
      for (std::size_t i = 0; i < t.raw().size(); ++i) spec.taus.push_back(t.at(i).count(1));
    } else {
      spec.taus.push_back(t.count(1));
    }
  }
  if (s.has("mu")) spec.mu = s.at("mu").positive();
  if (s.has("gamma")) spec.gamma = s.at("gamma").number();
  if (s.has("theory_backed")) spec.theory_backed = s.at("theory_backed").boolean();
  if (s.has("tolerance")) spec.tolerance = s.at("tolerance").positive();
  return spec;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }
  const Field root(doc, "");
  root.require_object({"seed", "output_dir", "problem", "B", "distribution", "support_cap", "mc_samples",
                       "rank_threshold", "x0", "replications", "iterations", "burn_in",
                       "trace_replications", "solvers", "checks", "validation"});
  ExperimentConfig cfg;
  if (!root.has("seed")) throw ConfigError("/seed", "missing mandatory field");
  cfg.seed = root.at("seed").u64();
  if (root.has("output_dir")) cfg.output_dir = root.at("output_dir").string();

  if (!root.has("problem")) throw ConfigError("/problem", "missing field");
  const auto p = root.at("problem");
  p.require_object({"generator", "files"});
  if (p.has("generator") == p.has("files")) p.fail("exactly one of 'generator' or 'files' is required");
  if (p.has("generator")) {
    cfg.generator = parse_generator(p.at("generator"), cfg.seed);
  } else {
    const auto f = p.at("files");
    f.require_object({"A", "b"});
    if (!f.has("A")) f.fail("missing field 'A'");
    if (!f.has("b")) f.fail("missing field 'b'");
    cfg.a_path = resolve(f.at("A").string(), base_dir);
    cfg.b_path = resolve(f.at("b").string(), base_dir);
  }

  if (root.has("B")) {
    const auto b = root.at("B");
    b.require_object({"kind", "values", "path"});
    if (!b.has("kind")) b.fail("missing field 'kind'");
    cfg.B.kind = b.at("kind").string();
    if (cfg.B.kind == "diagonal") {
      if (!b.has("values")) b.fail("diagonal B needs 'values'");
      cfg.B.values = b.at("values").numbers();
    } else if (cfg.B.kind == "file") {
      if (!b.has("path")) b.fail("file B needs 'path'");
      cfg.B.path = resolve(b.at("path").string(), base_dir);
    } else if (cfg.B.kind != "identity" && cfg.B.kind != "A") {
      b.at("kind").fail("expected identity | diagonal | file | A");
    }
  }

  if (root.has("distribution")) {
    const auto d = root.at("distribution");
    d.require_object({"kind", "probabilities", "q", "with_replacement"});
    if (!d.has("kind")) d.fail("missing field 'kind'");
    auto& ds = cfg.distribution;
    ds.kind = d.at("kind").string();
    static const std::set<std::string> kinds = {"kaczmarz", "coordinate",  "block",    "gaussian",
                                                "count-sketch", "count-min", "fixed-identity"};
    if (!kinds.count(ds.kind)) d.at("kind").fail("unknown distribution kind");
    if (d.has("probabilities")) ds.probabilities = d.at("probabilities").numbers();
    if (d.has("q")) ds.q = d.at("q").count(1);
    if (d.has("with_replacement")) ds.with_replacement = d.at("with_replacement").boolean();
  }

  if (root.has("support_cap")) cfg.support_cap = root.at("support_cap").count();
  if (root.has("mc_samples")) cfg.mc_samples = root.at("mc_samples").count(2);
  if (root.has("rank_threshold")) cfg.rank_threshold = root.at("rank_threshold").positive();
  if (root.has("x0")) cfg.x0 = root.at("x0").numbers();
  if (root.has("replications")) cfg.replications = root.at("replications").count(2);
  if (root.has("iterations")) cfg.iterations = root.at("iterations").count(1);
  if (root.has("burn_in")) cfg.burn_in = root.at("burn_in").count();
  if (root.has("trace_replications")) cfg.trace_replications = root.at("trace_replications").count();

  if (root.has("solvers")) {
    const auto s = root.at("solvers");
    if (!s.raw().is_array()) s.fail("expected an array of solver specs");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < s.raw().size(); ++i) {
      cfg.solvers.push_back(parse_solver(s.at(i)));
      if (!labels.insert(cfg.solvers.back().label).second) s.at(i).fail("duplicate label");
    }
  }

  if (root.has("checks")) {
    const auto c = root.at("checks");
    if (!c.raw().is_array()) c.fail("expected an array of check ids");
    const auto& ids = theorem_check_ids();
    for (std::size_t i = 0; i < c.raw().size(); ++i) {
      const auto id = c.at(i).string();
      if (std::find(ids.begin(), ids.end(), id) == ids.end()) c.at(i).fail("unknown check '" + id + "'");
      cfg.checks.push_back(id);
    }
  }

  auto& v = cfg.validation;
  v.replications = cfg.replications;
  v.iterations = cfg.iterations;
  v.burn_in = cfg.burn_in;
  if (root.has("validation")) {
    const auto val = root.at("validation");
    val.require_object({"replications", "iterations", "burn_in", "random_points", "oracle_instances", "omega"});
    if (val.has("replications")) v.replications = val.at("replications").count(2);
    if (val.has("iterations")) v.iterations = val.at("iterations").count(1);
    if (val.has("burn_in")) v.burn_in = val.at("burn_in").count();
    if (val.has("random_points")) v.random_points = val.at("random_points").count(1);
    if (val.has("oracle_instances")) v.oracle_instances = val.at("oracle_instances").count(1);
    if (val.has("omega")) v.omega = val.at("omega").positive();
  }
  if (v.iterations < v.burn_in + 5) {
    throw ConfigError("/validation/iterations", "needs at least burn_in + 5 iterations for rate fits");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), fs::path(path).parent_path().string());
}

// ---------------------------------------------------------------------------
// problem assembly

namespace {

SketchDistribution make_distribution(const DistributionSpec& d, const Matrix& A) {
  const auto m = static_cast<std::size_t>(A.rows());
  const auto check_q = [&] {
    if (d.q > m) throw ConfigError("/distribution/q", "q exceeds the number of rows");
  };
  if (d.kind == "kaczmarz") return kaczmarz_distribution(A);
  if (d.kind == "fixed-identity") return SketchDistribution::fixed_identity(m);
  if (d.kind == "coordinate") {
    if (d.probabilities.empty()) return SketchDistribution::coordinate(std::vector<double>(m, 1.0 / m));
    if (d.probabilities.size() != m) throw ConfigError("/distribution/probabilities", "needs one entry per row");
    return SketchDistribution::coordinate(d.probabilities);
  }
  check_q();
  if (d.kind == "block") return SketchDistribution::block(m, d.q, d.with_replacement);
  if (d.kind == "gaussian") return SketchDistribution::gaussian(m, d.q);
  if (d.kind == "count-sketch") return SketchDistribution::count_sketch(m, d.q);
  return SketchDistribution::count_min(m, d.q);
}

}  // namespace

Experiment build_experiment(const ExperimentConfig& cfg, Execution exec) {
  Matrix A, Bgen;
  Vector b;
  if (cfg.generator) {
    auto gp = generate_problem(*cfg.generator);
    A = std::move(gp.A);
    b = std::move(gp.b);
    Bgen = std::move(gp.B);
  } else {
    A = load_matrix_market(cfg.a_path);
    b = load_vector(cfg.b_path);
  }
  const auto n = A.cols();
  SpdOperator B = SpdOperator::identity(static_cast<std::size_t>(n));
  const auto& bk = cfg.B.kind;
  if (bk == "default") {
    if (Bgen.size() > 0) B = SpdOperator(Bgen);
  } else if (bk == "diagonal") {
    if (static_cast<Eigen::Index>(cfg.B.values.size()) != n) throw ConfigError("/B/values", "needs one entry per column");
    B = SpdOperator::diagonal(to_vector(cfg.B.values));
  } else if (bk == "file") {
    B = SpdOperator(load_matrix_market(cfg.B.path));
  } else if (bk == "A") {
    B = SpdOperator(A);
  }
  LinearSystem sys(A, b, B);
  ReformulationOptions ro;
  ro.support_cap = cfg.support_cap;
  ro.mc_samples = cfg.mc_samples;
  ro.seed = cfg.seed;
  ro.rank_threshold = cfg.rank_threshold;
  ro.execution = exec;
  auto dist = make_distribution(cfg.distribution, A);
  Experiment e;
  e.reformulation = std::make_unique<Reformulation>(std::move(sys), std::move(dist), ro);
  e.x0 = cfg.x0 ? to_vector(*cfg.x0) : Vector::Zero(n);
  if (e.x0.size() != n) throw ConfigError("/x0", "needs one entry per column");
  return e;
}

// ---------------------------------------------------------------------------
// commands

namespace {

std::string timestamp() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ojson number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

ojson numbers(const Vector& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << text;
  if (!out) throw InvalidInput("cannot write " + path.string());
}

void write_json(const fs::path& path, const ojson& j) { write_file(path, j.dump(2) + "\n"); }

ojson header(Command cmd, const ExperimentConfig& cfg) {
  ojson j;
  j["generated_at"] = timestamp();
  j["command"] = to_string(cmd);
  j["seed"] = cfg.seed;
  return j;
}

ojson spectrum_json(const Reformulation& r) {
  const auto& sp = r.spectrum();
  ojson j;
  j["lambdas"] = numbers(sp.lambdas);
  j["raw_lambdas"] = numbers(sp.raw_lambdas);
  j["lambda_max"] = number(sp.lambda_max);
  j["lambda_min_plus"] = number(sp.lambda_min_plus);
  j["zeta"] = number(sp.zeta);
  j["rank"] = sp.rank;
  j["rank_threshold"] = number(sp.rank_threshold);
  return j;
}

ojson diagnostics_json(Command cmd, const ExperimentConfig& cfg, const Reformulation& r) {
  const auto& sp = r.spectrum();
  const auto& ez = r.expected_Z();
  ojson j = header(cmd, cfg);
  j["problem"] = {{"rows", r.system().rows()}, {"cols", r.system().cols()},
                  {"source", cfg.generator ? "generator:" + to_string(cfg.generator->kind) : "files"}};
  ojson dist;
  dist["kind"] = to_string(r.distribution().kind());
  dist["q"] = r.distribution().q();
  const auto size = r.distribution().support_size();
  dist["support_size"] = size ? ojson(*size) : ojson(nullptr);
  j["distribution"] = dist;
  j["spectrum"] = spectrum_json(r);
  j["exactness"] = to_string(check_exactness(r));
  ojson est;
  est["method"] = ez.exact ? "enumeration" : "monte-carlo";
  est["atoms"] = ez.atoms;
  est["samples"] = ez.samples;
  est["standard_error"] = number(ez.standard_error);
  j["estimation"] = est;
  const double ws = stepsize_policy(sp, StepsizeKind::Optimal);
  j["omega_star"] = number(ws);
  j["rho_omega_star"] = number(rho_basic(sp, ws));
  ojson pol;
  for (auto k : {StepsizeKind::Unit, StepsizeKind::InverseLambdaMax, StepsizeKind::Optimal}) {
    pol[to_string(k)] = {{"omega", number(stepsize_policy(sp, k))}, {"rho", number(policy_rate(sp, k))}};
  }
  j["stepsize_policies"] = pol;
  return j;
}

struct RunPoint {
  std::string label;
  Method method;
  SolverConfig solver;
};

std::vector<RunPoint> expand(const ExperimentConfig& cfg, const Spectrum& sp) {
  std::vector<RunPoint> out;
  for (const auto& s : cfg.solvers) {
    const bool grid = s.omegas.size() * s.taus.size() > 1;
    for (const auto& o : s.omegas) {
      for (auto tau : s.taus) {
        SolverConfig sc;
        if (o.value) {
          sc.omega = *o.value;
        } else if (o.policy == "parallel-optimal") {
          sc.omega = 1.0 / theoretical_rates(sp, 1.0, tau).xi;
        } else {
          sc.omega = stepsize_policy(sp, *parse_stepsize_kind(o.policy));
        }
        sc.tau = tau;
        sc.mu = s.mu;
        sc.gamma = s.gamma;
        sc.theory_backed = s.theory_backed;
        sc.tolerance = s.tolerance;
        sc.max_iters = cfg.iterations;
        sc.seed = cfg.seed;
        std::string label = s.label;
        if (grid) {
          label += "_w" + format_double(sc.omega);
          if (s.taus.size() > 1) label += "_t" + std::to_string(tau);
        }
        out.push_back({label, s.method, sc});
      }
    }
  }
  return out;
}

IterationTrace single_run(const Reformulation& r, const Vector& x0, Method m, const SolverConfig& sc) {
  switch (m) {
    case Method::Basic: return run_basic(r, x0, sc);
    case Method::Parallel: return run_parallel(r, x0, sc);
    case Method::Accelerated: return accelerated_run(r, x0, sc);
  }
  return run_basic(r, x0, sc);
}

ojson fit_json(const std::vector<double>& series, std::size_t burn_in) {
  if (series.size() < burn_in + 5) return nullptr;
  const auto fit = fit_rate(series, burn_in);
  return {{"rate", number(fit.rate)}, {"log_residual", number(fit.log_residual)},
          {"points", fit.points}, {"floored", fit.floored}};
}

void append_rows(std::string& csv, const std::string& metric, const std::vector<double>& v,
                 const std::vector<double>* se) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    csv += std::to_string(k) + "," + metric + "," + format_double(v[k]);
    if (se) csv += "," + format_double((*se)[k]);
    csv += "\n";
  }
}

ojson run_solvers(const ExperimentConfig& cfg, const Reformulation& r, const Vector& x0, const fs::path& dir,
                  ojson& summary_runs) {
  const auto& sp = r.spectrum();
  ojson runs = ojson::array();
  for (const auto& pt : expand(cfg, sp)) {
    MonteCarloConfig mc;
    mc.method = pt.method;
    mc.solver = pt.solver;
    mc.replications = cfg.replications;
    mc.iterations = cfg.iterations;
    const auto m = monte_carlo_moments(r, x0, mc, Execution::Parallel);

    std::string trace = "iter,metric,value,replication\n";
    const auto traces = std::min(cfg.trace_replications, cfg.replications);
    for (std::size_t rep = 0; rep < traces; ++rep) {
      SolverConfig sc = pt.solver;
      sc.replication = static_cast<std::uint32_t>(rep);
      sc.record.error_sq = true;
      sc.record.f_values = true;
      const auto t = single_run(r, x0, pt.method, sc);
      for (std::size_t k = 0; k < t.error_sq.size(); ++k) {
        trace += std::to_string(k) + ",error_sq," + format_double(t.error_sq[k]) + "," + std::to_string(rep) + "\n";
      }
      for (std::size_t k = 0; k < t.f_values.size(); ++k) {
        trace += std::to_string(k) + ",f_value," + format_double(t.f_values[k]) + "," + std::to_string(rep) + "\n";
      }
    }
    write_file(dir / ("trace_" + pt.label + ".csv"), trace);

    std::string moments = "iter,metric,value,se\n";
    append_rows(moments, "mean_error_norm_sq", m.mean_error_norm_sq, &m.mean_error_norm_sq_se);
    append_rows(moments, "error_sq", m.error_sq, &m.error_sq_se);
    append_rows(moments, "f_value", m.f_value, &m.f_value_se);
    append_rows(moments, "cesaro_error_sq", m.cesaro_error_sq, &m.cesaro_error_sq_se);
    append_rows(moments, "cesaro_f_value", m.cesaro_f_value, &m.cesaro_f_value_se);
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
      std::vector<double> v, s;
      for (std::size_t k = 0; k < m.mean_transformed.size(); ++k) {
        v.push_back(m.mean_transformed[k](i));
        s.push_back(m.mean_transformed_se[k](i));
      }
      append_rows(moments, "mean_transformed_" + std::to_string(i), v, &s);
    }
    write_file(dir / ("moments_" + pt.label + ".csv"), moments);

    const auto pred = theoretical_rates(sp, pt.solver.omega, pt.solver.tau, pt.solver.mu);
    ojson e;
    e["label"] = pt.label;
    e["method"] = to_string(pt.method);
    e["omega"] = number(pt.solver.omega);
    e["tau"] = pt.solver.tau;
    ojson p;
    p["rho_basic"] = number(pred.rho_basic);
    p["l2_upper"] = number(pred.l2_upper);
    p["l2_lower"] = number(pred.l2_lower);
    p["f_first"] = number(pred.f_first);
    p["f_second"] = number(pred.f_second);
    p["mean_converges"] = pred.mean_converges;
    p["l2_valid"] = pred.l2_valid;
    if (pt.method == Method::Parallel) {
      p["xi"] = number(pred.xi);
      p["rho_parallel"] = number(pred.rho_parallel);
    }
    if (pt.method == Method::Accelerated) {
      const auto ap = acceleration_params(sp, pt.solver);
      e["gamma"] = number(ap.gamma);
      e["mu"] = number(ap.mu);
      const auto ar = theoretical_rates(sp, pt.solver.omega, 1, ap.mu);
      p["accelerated"] = number(ar.accelerated);
      p["accelerated_valid"] = ar.accelerated_valid;
    }
    e["predicted"] = p;
    ojson f;
    f["mean_error_norm_sq"] = fit_json(m.mean_error_norm_sq, cfg.burn_in);
    f["error_sq"] = fit_json(m.error_sq, cfg.burn_in);
    f["f_value"] = fit_json(m.f_value, cfg.burn_in);
    if (r.finite_support()) {
      const auto em = pt.method == Method::Accelerated ? Method::Accelerated : Method::Basic;
      const auto ex = expected_iterates(r, x0, em, pt.solver, cfg.iterations);
      f["exact_mean_error_norm_sq"] = fit_json(ex.mean_error_norm_sq, cfg.burn_in);
    }
    e["fitted"] = f;
    // first k with E||x_k - x*||_B^2 at the rounding floor relative to the start
    ojson converged_at = nullptr;
    for (std::size_t k = 0; k < m.error_sq.size(); ++k) {
      if (m.error_sq[k] <= kRoundoffRelative * std::max(m.error_sq[0], 1e-300)) {
        converged_at = k;
        break;
      }
    }
    e["converged_at"] = converged_at;
    e["final"] = {{"error_sq", number(m.error_sq.back())}, {"f_value", number(m.f_value.back())}};
    runs.push_back(e);
    summary_runs.push_back({{"label", pt.label}, {"converged_at", converged_at}});
  }
  return runs;
}

ojson checks_json(const std::vector<CheckResult>& results) {
  ojson a = ojson::array();
  for (const auto& c : results) {
    ojson v;
    for (const auto& [k, x] : c.values) v[k] = number(x);
    a.push_back({{"id", c.id}, {"status", to_string(c.status)}, {"detail", c.detail}, {"values", v}});
  }
  return a;
}

int execute(Command cmd, const ExperimentConfig& cfg, std::ostream& out) {
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InvalidInput("cannot create output directory " + dir.string());

  const auto exp = build_experiment(cfg);
  const auto& r = *exp.reformulation;
  const auto& sp = r.spectrum();
  write_json(dir / "diagnostics.json", diagnostics_json(cmd, cfg, r));

  ojson summary = header(cmd, cfg);
  summary["spectrum"] = {{"lambda_max", number(sp.lambda_max)}, {"lambda_min_plus", number(sp.lambda_min_plus)},
                         {"zeta", number(sp.zeta)}};
  summary["exactness"] = to_string(check_exactness(r));

  std::vector<CheckResult> results;
  const bool want_checks = cmd == Command::Validate || (cmd == Command::Run && !cfg.checks.empty());
  if (want_checks) {
    ValidationOptions vo = cfg.validation;
    vo.seed = cfg.seed;
    vo.execution = Execution::Parallel;
    vo.enabled = cfg.checks;
    if (cfg.x0) vo.x0 = exp.x0;
    results = run_theorem_suite(r, vo);
    ojson v = header(cmd, cfg);
    v["options"] = {{"replications", vo.replications}, {"iterations", vo.iterations}, {"burn_in", vo.burn_in},
                    {"random_points", vo.random_points}, {"oracle_instances", vo.oracle_instances},
                    {"omega", number(vo.omega)}};
    v["checks"] = checks_json(results);
    write_json(dir / "validation.json", v);
  }

  if (cmd == Command::Run) {
    ojson summary_runs = ojson::array();
    ojson report = header(cmd, cfg);
    report["spectrum"] = spectrum_json(r);
    report["omega_star"] = number(stepsize_policy(sp, StepsizeKind::Optimal));
    report["rho_omega_star"] = number(policy_rate(sp, StepsizeKind::Optimal));
    report["runs"] = run_solvers(cfg, r, exp.x0, dir, summary_runs);
    write_json(dir / "report.json", report);
    summary["runs"] = summary_runs;
  }

  bool failed = false;
  ojson checks = ojson::array();
  for (const auto& c : results) {
    checks.push_back({{"id", c.id}, {"status", to_string(c.status)}});
    if (c.status == CheckStatus::Fail) failed = true;
    out << to_string(c.status) << "  " << c.id << "  " << c.detail << "\n";
  }
  summary["checks"] = checks;
  summary["status"] = failed ? "fail" : "pass";
  write_json(dir / "summary.json", summary);
  out << to_string(cmd) << ": " << (failed ? "fail" : "pass") << " (artifacts in " << dir.string() << ")\n";
  return failed ? 1 : 0;
}

}  // namespace

int run_command(Command cmd, const std::string& config_path, const Overrides& overrides, std::ostream& out,
                std::ostream& err) {
  try {
    auto cfg = load_config(config_path);
    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.output_dir) cfg.output_dir = *overrides.output_dir;
    if (overrides.threads) {
      if (*overrides.threads < 1) throw InvalidInput("--threads must be >= 1");
      set_thread_count(*overrides.threads);
    }
    return execute(cmd, cfg, out);
  } catch (const Inconsistent& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace stochlin
