#include "mflab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

namespace mflab {

std::string to_string(MeasureKind k) {
  switch (k) {
    case MeasureKind::Uniform: return "uniform";
    case MeasureKind::Bernoulli: return "bernoulli";
    case MeasureKind::Cascade: return "cascade";
  }
  return "?";
}

std::optional<std::string> ExperimentConfig::alpha_problem() const {
  if (kind != MeasureKind::Cascade) return std::nullopt;
  if (!params.example_admissible()) return "example requires p0 < p1";
  if (a_midpoint || !a) return std::nullopt;
  const double g1 = frequency_exponent(params.gamma1, params);
  const double g2 = frequency_exponent(params.gamma2, params);
  if (!(g1 < *a && *a <= g2))
    return "a = " + format_double(*a) + " outside (g(gamma1), g(gamma2)] = (" + format_double(g1) + ", " +
           format_double(g2) + "]";
  return std::nullopt;
}

double ExperimentConfig::resolved_a() const {
  if (a) return *a;
  if (!a_midpoint) throw ConfigError("alpha.a", "missing");
  if (kind != MeasureKind::Cascade) throw ConfigError("alpha.a", "\"midpoint\" needs a cascade measure");
  return 0.5 * (frequency_exponent(params.gamma1, params) + frequency_exponent(params.gamma2, params));
}

namespace {

class Reader {
 public:
  explicit Reader(const toml::table& root) : root_(root) {}

  toml::node_view<const toml::node> at(const std::string& path) const { return root_.at_path(path); }
  bool has(const std::string& path) const { return static_cast<bool>(at(path)); }

  double number(const std::string& path, double fallback) const {
    auto v = at(path);
    if (!v) return fallback;
    if (auto d = v.value<double>(); d && (v.is_floating_point() || v.is_integer())) return *d;
    throw ConfigError(path, "expected a number");
  }
  double required_number(const std::string& path) const {
    if (!has(path)) throw ConfigError(path, "missing");
    return number(path, 0.0);
  }
  long long integer(const std::string& path, long long fallback) const {
    auto v = at(path);
    if (!v) return fallback;
    if (!v.is_integer()) throw ConfigError(path, "expected an integer");
    return *v.value<long long>();
  }
  std::string string(const std::string& path, const std::string& fallback) const {
    auto v = at(path);
    if (!v) return fallback;
    if (!v.is_string()) throw ConfigError(path, "expected a string");
    return *v.value<std::string>();
  }
  bool boolean(const std::string& path, bool fallback) const {
    auto v = at(path);
    if (!v) return fallback;
    if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
    return *v.value<bool>();
  }
  std::vector<double> numbers(const std::string& path, std::vector<double> fallback) const {
    auto v = at(path);
    if (!v) return fallback;
    const toml::array* arr = v.as_array();
    if (!arr) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < arr->size(); ++i) {
      auto d = (*arr)[i].value<double>();
      if (!d || !((*arr)[i].is_integer() || (*arr)[i].is_floating_point()))
        throw ConfigError(path + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(*d);
    }
    return out;
  }

  // reject keys outside the schema so typos surface
  void only(const std::string& table, const std::set<std::string>& keys) const {
    const toml::table* t = table.empty() ? &root_ : at(table).as_table();
    if (!t) {
      if (has(table)) throw ConfigError(table, "expected a table");
      return;
    }
    for (auto&& [k, node] : *t) {
      (void)node;
      const std::string key(k.str());
      if (!keys.count(key)) throw ConfigError(table.empty() ? key : table + "." + key, "unknown key");
    }
  }

 private:
  const toml::table& root_;
};

template <class F>
void as_config_error(const std::string& prefix, F&& f) {
  try {
    f();
  } catch (const ParamError& e) {
    const std::string msg = e.what();
    const std::string tail = msg.substr(std::min(msg.size(), e.field.size() + 2));
    throw ConfigError(prefix + e.field, tail);
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError("<syntax>", os.str());
  }
  const Reader r(root);
  ExperimentConfig c;
  c.source = source;

  r.only("", {"schema_version", "measure", "schedule", "kernel", "alpha", "depth", "grids", "tolerances", "run"});
  r.only("measure", {"kind", "p0", "beta1", "gamma1", "beta2", "gamma2", "n0", "horizon"});
  r.only("schedule", {"mode", "breakpoints"});
  r.only("kernel", {"variant", "lambda_c"});
  r.only("alpha", {"a"});
  r.only("depth", {"working", "spectrum_lo", "spectrum_hi"});
  r.only("grids", {"theta", "q", "t", "eta", "p", "k_max", "m_lo", "m_hi"});
  r.only("grids.theta", {"lo", "hi", "step"});
  r.only("grids.t", {"exp_lo", "exp_hi", "per_octave", "vertices"});
  r.only("tolerances", {"residual", "phi", "lambda_at_one", "envelope", "level_bound", "gap_T", "chain", "monotone",
                        "band_levels"});
  r.only("run", {"seed", "random_subsets", "budget", "u_ratio", "strategy", "jobs", "sample_paths"});

  if (!r.has("schema_version")) throw ConfigError("schema_version", "missing");
  c.schema_version = static_cast<int>(r.integer("schema_version", 0));
  if (c.schema_version != kSchemaVersion)
    throw ConfigError("schema_version", "unsupported version " + std::to_string(c.schema_version) + " (expected " +
                                            std::to_string(kSchemaVersion) + ")");

  // measure
  if (!r.has("measure.kind")) throw ConfigError("measure.kind", "missing");
  const std::string kind = r.string("measure.kind", "");
  if (kind == "uniform") c.kind = MeasureKind::Uniform;
  else if (kind == "bernoulli") c.kind = MeasureKind::Bernoulli;
  else if (kind == "cascade") c.kind = MeasureKind::Cascade;
  else throw ConfigError("measure.kind", "expected uniform | bernoulli | cascade, got '" + kind + "'");

  if (c.kind != MeasureKind::Uniform) {
    c.params.p0 = r.required_number("measure.p0");
    c.params.p1 = 1.0 - c.params.p0;
    if (!(c.params.p0 > 0.0 && c.params.p0 < 1.0)) throw ConfigError("measure.p0", "must lie in (0,1)");
  } else if (r.has("measure.p0")) {
    throw ConfigError("measure.p0", "not used by the uniform measure");
  }
  c.params.beta1 = r.number("measure.beta1", c.params.beta1);
  c.params.gamma1 = r.number("measure.gamma1", c.params.gamma1);
  c.params.beta2 = r.number("measure.beta2", c.params.beta2);
  c.params.gamma2 = r.number("measure.gamma2", c.params.gamma2);
  c.params.n0 = static_cast<int>(r.integer("measure.n0", c.params.n0));
  const std::string horizon = r.string("measure.horizon", "strict");
  if (horizon == "strict") c.horizon = HorizonPolicy::Strict;
  else if (horizon == "halve") c.horizon = HorizonPolicy::Halve;
  else throw ConfigError("measure.horizon", "expected strict | halve");
  if (c.kind == MeasureKind::Cascade) as_config_error("measure.", [&] { c.params.validate(); });

  // schedule
  const std::string mode = r.string("schedule.mode", "compressed");
  if (mode == "compressed") c.schedule_mode = ScheduleMode::Compressed;
  else if (mode == "super_exponential") c.schedule_mode = ScheduleMode::SuperExponential;
  else throw ConfigError("schedule.mode", "expected compressed | super_exponential");
  if (r.has("schedule.breakpoints")) {
    c.breakpoints.clear();
    for (double b : r.numbers("schedule.breakpoints", {})) {
      if (b != std::floor(b)) throw ConfigError("schedule.breakpoints", "breakpoints must be integers");
      c.breakpoints.push_back(static_cast<int>(b));
    }
    if (c.schedule_mode == ScheduleMode::SuperExponential)
      throw ConfigError("schedule.breakpoints", "super_exponential mode derives its own breakpoints");
  }
  if (c.kind == MeasureKind::Cascade && c.schedule_mode == ScheduleMode::Compressed)
    as_config_error("schedule.", [&] { (void)Schedule::compressed(c.breakpoints, c.params.n0); });

  // kernel
  as_config_error("kernel.", [&] { c.variant = kernel_variant_from_string(r.string("kernel.variant", "olsen")); });
  c.lambda_c = r.number("kernel.lambda_c", 0.0);
  if (c.variant != KernelVariant::PerturbedProduct && c.lambda_c != 0.0)
    throw ConfigError("kernel.lambda_c", "only the perturbed kernel takes a lambda profile");

  // alpha
  if (!r.has("alpha.a")) throw ConfigError("alpha.a", "missing");
  if (r.at("alpha.a").is_string()) {
    if (r.string("alpha.a", "") != "midpoint") throw ConfigError("alpha.a", "expected a number or \"midpoint\"");
    c.a_midpoint = true;
  } else {
    c.a = r.number("alpha.a", 0.0);
  }

  // depth
  c.working_depth = static_cast<int>(r.integer("depth.working", c.working_depth));
  c.spectrum_lo = static_cast<int>(r.integer("depth.spectrum_lo", c.spectrum_lo));
  c.spectrum_hi = static_cast<int>(r.integer("depth.spectrum_hi", c.spectrum_hi));
  if (c.working_depth < 1 || c.working_depth > 64) throw ConfigError("depth.working", "must lie in [1, 64]");
  if (c.spectrum_lo < 1) throw ConfigError("depth.spectrum_lo", "must be >= 1");
  if (c.spectrum_hi < c.spectrum_lo + 1 || c.spectrum_hi > 64)
    throw ConfigError("depth.spectrum_hi", "must exceed spectrum_lo and be <= 64");

  // grids
  {
    const double lo = r.number("grids.theta.lo", -2.0);
    const double hi = r.number("grids.theta.hi", 16.0);
    const double step = r.number("grids.theta.step", 0.25);
    if (!(step > 0)) throw ConfigError("grids.theta.step", "must be positive");
    if (!(hi > lo)) throw ConfigError("grids.theta.hi", "must exceed grids.theta.lo");
    const long n = std::lround((hi - lo) / step);
    for (long i = 0; i <= n; ++i) c.thetas.push_back(lo + static_cast<double>(i) * step);
  }
  if (r.has("grids.q")) {
    const toml::array* arr = r.at("grids.q").as_array();
    if (!arr || arr->empty()) throw ConfigError("grids.q", "expected a nonempty array");
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const std::string key = "grids.q[" + std::to_string(i) + "]";
      const toml::node& n = (*arr)[i];
      std::vector<double> q;
      if (auto d = n.value<double>(); d && (n.is_integer() || n.is_floating_point())) {
        q.push_back(*d);
      } else if (const toml::array* inner = n.as_array()) {
        for (std::size_t j = 0; j < inner->size(); ++j) {
          auto e = (*inner)[j].value<double>();
          if (!e) throw ConfigError(key, "expected numbers");
          q.push_back(*e);
        }
      } else {
        throw ConfigError(key, "expected a number or an array of numbers");
      }
      c.q_grid.push_back(q);
    }
  } else if (c.variant == KernelVariant::Olsen) {
    c.q_grid = {{1.0}};
  } else {
    c.q_grid = {{1.0, 0.0}, {0.5, 0.5}, {0.0, 1.0}};
  }
  const std::size_t dim = c.variant == KernelVariant::Olsen ? 1 : 2;
  for (std::size_t i = 0; i < c.q_grid.size(); ++i) {
    if (c.q_grid[i].size() != dim)
      throw ConfigError("grids.q[" + std::to_string(i) + "]", "expected " + std::to_string(dim) + " component(s)");
    if (!ParamVector{c.q_grid[i]}.in_admissible_region())
      throw ConfigError("grids.q[" + std::to_string(i) + "]", "outside the admissible region (negative weight)");
  }
  c.t_exp_lo = static_cast<int>(r.integer("grids.t.exp_lo", c.t_exp_lo));
  c.t_exp_hi = static_cast<int>(r.integer("grids.t.exp_hi", c.t_exp_hi));
  c.t_per_octave = static_cast<int>(r.integer("grids.t.per_octave", c.t_per_octave));
  c.t_vertices = r.boolean("grids.t.vertices", c.t_vertices);
  if (c.t_exp_hi < c.t_exp_lo) throw ConfigError("grids.t.exp_hi", "must be >= exp_lo");
  if (c.t_per_octave < 1) throw ConfigError("grids.t.per_octave", "must be >= 1");
  c.etas = r.numbers("grids.eta", c.etas);
  c.ps = r.numbers("grids.p", c.ps);
  if (c.etas.empty()) throw ConfigError("grids.eta", "must be nonempty");
  if (c.ps.empty()) throw ConfigError("grids.p", "must be nonempty");
  for (double e : c.etas)
    if (e < 0) throw ConfigError("grids.eta", "entries must be >= 0");
  for (double p : c.ps)
    if (!(p >= 1) || p != std::floor(p)) throw ConfigError("grids.p", "entries must be positive integers");
  c.k_max = static_cast<int>(r.integer("grids.k_max", c.k_max));
  c.m_lo = static_cast<int>(r.integer("grids.m_lo", c.m_lo));
  c.m_hi = static_cast<int>(r.integer("grids.m_hi", c.m_hi));
  if (c.k_max < 1) throw ConfigError("grids.k_max", "must be >= 1");
  if (c.m_lo < 1) throw ConfigError("grids.m_lo", "must be >= 1");
  if (c.m_hi < c.m_lo) throw ConfigError("grids.m_hi", "must be >= m_lo");

  // tolerances
  Tolerances& t = c.tol;
  t.residual = r.number("tolerances.residual", t.residual);
  t.phi = r.number("tolerances.phi", t.phi);
  t.lambda_at_one = r.number("tolerances.lambda_at_one", t.lambda_at_one);
  t.envelope = r.number("tolerances.envelope", t.envelope);
  t.level_bound = r.number("tolerances.level_bound", t.level_bound);
  t.gap_T = r.number("tolerances.gap_T", t.gap_T);
  t.chain = r.number("tolerances.chain", t.chain);
  t.monotone = r.number("tolerances.monotone", t.monotone);
  t.band_levels = static_cast<int>(r.integer("tolerances.band_levels", t.band_levels));
  if (!(t.phi > 0)) throw ConfigError("tolerances.phi", "must be positive");

  // run
  const long long seed = r.integer("run.seed", 1);
  if (seed < 0) throw ConfigError("run.seed", "must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  c.random_subsets = static_cast<int>(r.integer("run.random_subsets", c.random_subsets));
  if (c.random_subsets < 0) throw ConfigError("run.random_subsets", "must be >= 0");
  const long long budget = r.integer("run.budget", static_cast<long long>(c.budget));
  if (budget < 1) throw ConfigError("run.budget", "must be >= 1");
  c.budget = static_cast<std::size_t>(budget);
  c.u_ratio = r.number("run.u_ratio", c.u_ratio);
  if (!(c.u_ratio > 0 && c.u_ratio <= 1)) throw ConfigError("run.u_ratio", "must lie in (0, 1]");
  const std::string strat = r.string("run.strategy", "structured");
  if (strat == "structured") c.strategy = LStrategy::Structured;
  else if (strat == "exact") c.strategy = LStrategy::Exact;
  else throw ConfigError("run.strategy", "expected structured | exact");
  c.jobs = static_cast<int>(r.integer("run.jobs", c.jobs));
  if (c.jobs < 1) throw ConfigError("run.jobs", "must be >= 1");
  c.sample_paths = static_cast<int>(r.integer("run.sample_paths", c.sample_paths));
  if (c.sample_paths < 0) throw ConfigError("run.sample_paths", "must be >= 0");

  if (c.m_hi > c.working_depth) throw ConfigError("grids.m_hi", "must not exceed depth.working");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str(), path);
}

}  // namespace mflab
