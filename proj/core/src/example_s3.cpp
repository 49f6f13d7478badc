#include "mflab/example_s3.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace mflab {

using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kSurrogateNote =
    "B_hat := Lambda_hat (prepacking spectrum); an upper surrogate for the packing spectrum";
constexpr const char* kCompressedNote =
    "compressed schedule: generation breakpoints are desk-scale stand-ins for the super-exponential schedule";
constexpr const char* kSuperExponentialNote =
    "super-exponential schedule truncated at the working depth; only the first regime is realised";

ojson num(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

std::string csv_num(double x) { return format_double(x); }

ojson words(const std::vector<Word>& ws) {
  ojson a = ojson::array();
  for (const Word& w : ws) a.push_back(w.to_string());
  return a;
}

}  // namespace

bool ExperimentResult::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

Schedule schedule_for(const ExperimentConfig& cfg) {
  if (cfg.schedule_mode == ScheduleMode::SuperExponential) return Schedule::super_exponential(cfg.params.n0, cfg.working_depth);
  return Schedule::compressed(cfg.breakpoints, cfg.params.n0);
}

Experiment build_experiment(const ExperimentConfig& cfg) {
  Experiment e;
  switch (cfg.kind) {
    case MeasureKind::Uniform:
      e.measure = std::make_shared<const CascadeMeasure>(CascadeMeasure::uniform());
      break;
    case MeasureKind::Bernoulli:
      e.measure = std::make_shared<const CascadeMeasure>(CascadeMeasure::bernoulli(cfg.params.p0));
      break;
    case MeasureKind::Cascade: {
      const Schedule s = schedule_for(cfg);
      const int cap = std::max(cfg.working_depth, s.breakpoints().back());
      e.gens = Generations::build(cfg.params, s, std::min(cap, kMaxWordLength));
      e.measure = std::make_shared<const CascadeMeasure>(CascadeMeasure::from_generations(e.gens, cfg.horizon));
      break;
    }
  }
  e.kernel = std::make_shared<const Kernel>(cfg.variant, e.measure, cfg.lambda_c);
  return e;
}

BandSample sample_bands(const CascadeMeasure& mu, const Generations& gens, int depth, int samples, int levels,
                        std::uint64_t seed) {
  const CascadeParams& p = gens.params();
  BandSample b;
  b.depth = std::min(depth, gens.horizon());
  const double slack = static_cast<double>(levels) / b.depth;
  b.in_lo = frequency_exponent(p.beta1, p) - slack;
  b.in_hi = frequency_exponent(p.gamma2, p) + slack;
  b.off_slack = slack;

  std::mt19937_64 rng(seed);
  const auto& deepest = gens.deepest().members;
  for (int i = 0; i < samples; ++i) {
    const Word& w = deepest[static_cast<std::size_t>(rng() % deepest.size())].word;
    b.in_c.push_back(local_dimension_trace(mu, Point(w.prefix(b.depth)), {b.depth}).front().slope);
  }
  const auto& first = gens.families().front().members;
  for (int i = 0; i < samples;) {
    std::uint64_t bits = rng();
    if (b.depth < 64) bits &= (std::uint64_t{1} << b.depth) - 1;
    const Word w = Word::from_bits(bits, b.depth);
    const Word head = w.prefix(p.n0);
    if (std::any_of(first.begin(), first.end(), [&](const Member& m) { return m.word == head; })) continue;
    b.off_c.push_back(local_dimension_trace(mu, Point(w), {b.depth}).front().slope);
    ++i;
  }
  return b;
}

std::vector<LevelSetInstance> level_set_instances(const Kernel& K, const ParamVector& q, const ExperimentConfig& cfg) {
  const CascadeParams& p = cfg.params;
  const double g1 = frequency_exponent(p.gamma1, p), g2 = frequency_exponent(p.gamma2, p);
  std::vector<LevelSetInstance> out;
  for (int i = 1; i <= 10; ++i) {
    LevelSetInstance in;
    in.a = g1 + i / 10.0 * (g2 - g1);
    in.alpha_value = alpha_pair(AlphaForm{in.a}, q);
    TargetSet A;
    for (int j = 1; j < cfg.working_depth; ++j) {
      LevelSetSpec spec{q, AlphaForm{in.a}, 0.0, std::ldexp(1.0, j), cfg.working_depth, true};
      A = level_set(K, spec);
      if (!A.empty()) {
        in.p = spec.p;
        break;
      }
    }
    in.size = A.size();
    if (!A.empty()) {
      LQuery lq;
      lq.q = q;
      lq.k = cfg.k_max;
      lq.m = cfg.m_hi;
      lq.depth_max = cfg.working_depth;
      lq.u.ratio = cfg.u_ratio;
      lq.strategy = cfg.strategy;
      lq.budget = cfg.budget;
      in.L = L_value(A, K, lq).value;
    } else {
      in.L = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(in);
  }
  return out;
}

namespace {

ojson generations_json(const ExperimentConfig& cfg, const Generations& g) {
  ojson j;
  j["schedule"] = {{"mode", to_string(g.schedule().mode())},
                   {"breakpoints", g.schedule().breakpoints()},
                   {"note", cfg.schedule_mode == ScheduleMode::Compressed ? kCompressedNote : kSuperExponentialNote}};
  const CascadeParams& p = g.params();
  j["params"] = {{"p0", p.p0}, {"p1", p.p1},         {"beta1", p.beta1}, {"gamma1", p.gamma1},
                 {"beta2", p.beta2}, {"gamma2", p.gamma2}, {"n0", p.n0}};
  j["exponents"] = {{"g_beta1", frequency_exponent(p.beta1, p)},
                    {"g_gamma1", frequency_exponent(p.gamma1, p)},
                    {"g_beta2", frequency_exponent(p.beta2, p)},
                    {"g_gamma2", frequency_exponent(p.gamma2, p)}};
  j["horizon"] = g.horizon();
  ojson fams = ojson::array();
  for (const auto& f : g.families()) {
    ojson jf;
    jf["k"] = f.k;
    jf["depth"] = f.depth;
    jf["regime"] = f.regime;
    ojson ms = ojson::array();
    for (std::size_t i = 0; i < f.members.size(); ++i) {
      const Member& m = f.members[i];
      ms.push_back({{"word", m.word.to_string()},
                    {"type", to_string(m.type)},
                    {"zeros", m.word.zero_count()},
                    {"lineage", m.lineage},
                    {"father", m.father},
                    {"partner", g.partner(f.k, static_cast<int>(i))},
                    {"type_at_cycle_start", to_string(m.type_at_cycle_start)}});
    }
    jf["members"] = ms;
    fams.push_back(jf);
  }
  j["families"] = fams;
  j["separation_violations"] = check_separation(g.families()).size();
  return j;
}

std::string spectra_csv(const std::vector<SpectrumEstimate>& est, const Kernel& K, bool rational) {
  std::ostringstream os;
  os << "theta,depth,log_sum,slope,residual,closed_form,fitted_slope,dominant_rate";
  if (rational) os << ",log_sum_exact";
  os << "\n";
  const bool exact_kernel = K.variant() != KernelVariant::PerturbedProduct;
  for (const auto& e : est) {
    const bool exact_theta = rational && exact_kernel && e.theta >= 0 && e.theta == std::floor(e.theta);
    for (std::size_t i = 0; i < e.depths.size(); ++i) {
      os << csv_num(e.theta) << "," << e.depths[i] << "," << csv_num(e.log_sums[i]) << "," << csv_num(e.value) << ","
         << csv_num(e.residual) << "," << (e.closed_form ? csv_num(*e.closed_form) : "") << ","
         << csv_num(e.slope) << "," << csv_num(e.dominant);
      if (rational) {
        os << ",";
        if (exact_theta) {
          const auto v = sup_packing_value_exact(TargetSet::whole_space(), K, e.q, 0, e.depths[i], e.depths[i]);
          os << csv_num(log2_rational(v.value));
        }
      }
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  ExperimentResult res;
  ojson report;
  report["schema_version"] = cfg.schema_version;
  report["stage"] = opt.stage == Stage::Measure    ? "measure"
                    : opt.stage == Stage::Spectrum ? "spectrum"
                    : opt.stage == Stage::Bounds   ? "bounds"
                                                   : "reproduce";

  const Experiment ex = build_experiment(cfg);
  const Kernel& K = *ex.kernel;
  const CascadeMeasure& mu = *ex.measure;

  report["measure"] = {{"kind", to_string(cfg.kind)}, {"description", mu.describe()}};
  report["kernel"] = {{"variant", to_string(cfg.variant)}, {"lambda_c", cfg.lambda_c}};
  if (ex.gens) {
    res.generations_json = generations_json(cfg, *ex.gens).dump(2) + "\n";
    report["schedule"] = {{"mode", to_string(cfg.schedule_mode)},
                          {"breakpoints", ex.gens->schedule().breakpoints()},
                          {"note", cfg.schedule_mode == ScheduleMode::Compressed ? kCompressedNote : kSuperExponentialNote}};
  }
  if (auto problem = cfg.alpha_problem()) {
    res.admissible = false;
    res.flags.push_back(*problem);
  }
  report["flags"] = res.flags;

  auto finish = [&] {
    ojson cj = ojson::array();
    for (const auto& c : res.checks) cj.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    report["checks"] = cj;
    res.report_json = report.dump(2) + "\n";
    return res;
  };
  if (opt.stage == Stage::Measure) return finish();

  // spectrum of the whole space
  const TargetSet X = TargetSet::whole_space();
  const int spec_hi = std::min(cfg.spectrum_hi, mu.depth_limit());
  const auto est = spectrum_sweep(X, K, cfg.thetas, cfg.spectrum_lo, spec_hi, cfg.jobs);
  res.spectra_csv = spectra_csv(est, K, opt.rational);
  const SpectrumFunction B = surrogate_from_estimates(est);
  {
    ojson tab = ojson::array();
    for (const auto& e : est)
      tab.push_back({{"theta", e.theta},
                     {"value", num(e.value)},
                     {"fitted_slope", num(e.slope)},
                     {"dominant_rate", num(e.dominant)},
                     {"residual", num(e.residual)},
                     {"fit_from", e.fit_from},
                     {"closed_form", e.closed_form ? num(*e.closed_form) : ojson(nullptr)}});
    report["spectrum"] = {{"depth_lo", cfg.spectrum_lo},
                          {"depth_hi", spec_hi},
                          {"surrogate", kSurrogateNote},
                          {"convexity_defect", num(B.convexity_defect())},
                          {"table", tab}};
  }
  if (opt.stage == Stage::Spectrum) return finish();

  if (!res.admissible) {
    report["status"] = "inadmissible";
    return finish();
  }
  res.a = cfg.resolved_a();
  report["alpha"] = {{"a", res.a}, {"midpoint", cfg.a_midpoint}};
  if (cfg.kind == MeasureKind::Cascade) {
    const double g1 = frequency_exponent(cfg.params.gamma1, cfg.params);
    const double g2 = frequency_exponent(cfg.params.gamma2, cfg.params);
    report["alpha"]["range"] = {g1, g2};
  }

  std::ostringstream bcsv;
  bcsv << "quantity,grid_point,value\n";

  // first-bound side
  const PeyriereResult pey = peyriere_bound(res.a, B);
  res.peyriere = pey.value;
  for (double th : B.thetas())
    if (th >= 0) bcsv << "peyriere_term,theta=" << csv_num(th) << "," << csv_num(res.a * th + B(th)) << "\n";
  report["peyriere"] = {{"value", num(pey.value)}, {"argmin_theta", pey.argmin}};
  if (K.dim() == 2) {
    std::vector<std::pair<ParamVector, double>> grid;
    for (double th : B.thetas())
      for (double s : {-1.0, -0.5, 0.0, 0.5, 1.0}) grid.push_back({ParamVector{{th - s, s}}, B(th)});
    report["peyriere"]["grid_2d"] = num(peyriere_bound_2d(res.a, grid).value);
  }

  // second-bound side, per parameter vector
  TSettings ts;
  ts.etas = cfg.etas;
  ts.ps = cfg.ps;
  ts.working_depth = cfg.working_depth;
  ts.k_max = cfg.k_max;
  ts.m_lo = cfg.m_lo;
  ts.m_hi = cfg.m_hi;
  ts.u.ratio = cfg.u_ratio;
  ts.strategy = cfg.strategy;
  ts.budget = cfg.budget;
  ts.random_subsets = cfg.random_subsets;
  ts.seed = cfg.seed;
  ts.jobs = cfg.jobs;

  res.new_bound = std::numeric_limits<double>::infinity();
  std::size_t best_q = 0;
  ojson per_q = ojson::array();
  bool any_vacuous = false;
  for (std::size_t qi = 0; qi < cfg.q_grid.size(); ++qi) {
    const ParamVector q{cfg.q_grid[qi]};
    const double s = K.weight(q);
    const double A = alpha_pair(AlphaForm{res.a}, q);
    std::vector<double> tgrid = geometric_t_grid(cfg.t_exp_lo, cfg.t_exp_hi, cfg.t_per_octave);
    if (cfg.t_vertices) {
      const auto tv = vertex_t_candidates(s, A, B);
      tgrid.insert(tgrid.end(), tv.begin(), tv.end());
    }
    const PhiInf ph = phi_inf(s, A, B, tgrid, cfg.tol.phi);
    const TTable T = T_estimate(K, q, AlphaForm{res.a}, ts);
    const double value = T.vacuous ? std::numeric_limits<double>::quiet_NaN() : ph.value * T.value;
    any_vacuous = any_vacuous || T.vacuous;

    ojson jq;
    jq["q"] = q.q;
    jq["weight"] = s;
    jq["alpha_value"] = A;
    ojson phis = ojson::array();
    for (std::size_t i = 0; i < ph.ts.size(); ++i) {
      phis.push_back({{"t", ph.ts[i]}, {"kind", to_string(ph.values[i].kind)}, {"value", num(ph.values[i].value)}});
      bcsv << "phi,q=" << q.to_string() << ";t=" << csv_num(ph.ts[i]) << "," << csv_num(ph.values[i].value) << "\n";
    }
    jq["phi"] = {{"inf", num(ph.value)}, {"argmin_t", ph.argmin_t}, {"clipped", ph.clipped}, {"table", phis}};
    ojson tt = ojson::array();
    for (const auto& e : T.entries) {
      tt.push_back({{"eta", e.eta},
                    {"p", e.p},
                    {"level_set_size", e.level_set_size},
                    {"family_size", e.family_size},
                    {"family_value", num(e.family_value)},
                    {"full_value", num(e.full_value)}});
      bcsv << "T_family,q=" << q.to_string() << ";eta=" << csv_num(e.eta) << ";p=" << csv_num(e.p) << ","
           << csv_num(e.family_value) << "\n";
      bcsv << "T_full,q=" << q.to_string() << ";eta=" << csv_num(e.eta) << ";p=" << csv_num(e.p) << ","
           << csv_num(e.full_value) << "\n";
    }
    jq["T"] = {{"value", num(T.value)},
               {"label", "family-restricted"},
               {"full_value", num(T.full_value)},
               {"vacuous", T.vacuous},
               {"nondecreasing_in_p", T.nondecreasing_in_p},
               {"nonincreasing_as_eta_shrinks", T.nonincreasing_as_eta_shrinks},
               {"table", tt}};
    jq["product"] = num(value);
    bcsv << "new_term,q=" << q.to_string() << "," << csv_num(value) << "\n";
    per_q.push_back(jq);
    if (!T.vacuous && value < res.new_bound) {
      res.new_bound = value;
      res.T_hat = T.value;
      res.T_full = T.full_value;
      best_q = qi;
    }
  }
  report["per_q"] = per_q;
  res.vacuous = any_vacuous && !std::isfinite(res.new_bound);
  res.gap = res.vacuous ? std::numeric_limits<double>::quiet_NaN() : res.peyriere - res.new_bound;
  report["new_bound"] = {{"value", num(res.new_bound)},
                         {"argmin_q", ParamVector{cfg.q_grid[best_q]}.to_string()},
                         {"vacuous", res.vacuous}};
  report["peyriere"]["vacuous"] = res.vacuous;
  report["gap"] = num(res.gap);
  report["ties"] = "smallest argument wins";
  bcsv << "peyriere_bound,," << csv_num(res.peyriere) << "\n";
  bcsv << "new_bound,," << csv_num(res.new_bound) << "\n";
  bcsv << "gap,," << csv_num(res.gap) << "\n";
  res.bounds_csv = bcsv.str();

  // the extremal level set in detail: its L tables and the worst packing
  const ParamVector q0{cfg.q_grid[best_q]};
  LevelSetSpec ext;
  ext.q = q0;
  ext.alpha = AlphaForm{res.a};
  ext.eta = *std::min_element(cfg.etas.begin(), cfg.etas.end());
  ext.p = *std::max_element(cfg.ps.begin(), cfg.ps.end());
  ext.working_depth = cfg.working_depth;
  const TargetSet Aext = level_set(K, ext);
  std::optional<LTable> Ltab;
  std::optional<LResult> Lres;
  if (!Aext.empty()) {
    LQuery lq;
    lq.q = q0;
    lq.depth_max = cfg.working_depth;
    lq.u.ratio = cfg.u_ratio;
    lq.strategy = cfg.strategy;
    lq.budget = cfg.budget;
    Ltab = L_limit(Aext, K, lq, cfg.k_max, cfg.m_lo, cfg.m_hi, cfg.tol.monotone);
    lq.k = cfg.k_max;
    lq.m = cfg.m_hi;
    Lres = L_value(Aext, K, lq);
    ojson lj;
    lj["level_set"] = words(Aext.cylinders());
    lj["ks"] = Ltab->ks;
    lj["ms"] = Ltab->ms;
    lj["values"] = Ltab->values;
    lj["nonincreasing_in_k"] = Ltab->nonincreasing_in_k;
    lj["nondecreasing_in_eps"] = Ltab->nondecreasing_in_eps;
    lj["notes"] = Ltab->notes;
    if (Lres->worst) {
      lj["worst_packing"] = {{"packing", words(Lres->worst->packing)},
                             {"replacement", words(Lres->worst->replacement)},
                             {"groups", Lres->worst->groups},
                             {"inner", Lres->worst->inner},
                             {"identity", Lres->worst->identity}};
    }
    lj["dominance_ok"] = Lres->dominance_ok;
    lj["witness_valid"] = Lres->witness_valid;
    lj["strategy"] = to_string(cfg.strategy);
    lj["u_ratio"] = cfg.u_ratio;
    report["L"] = lj;
  }

  if (opt.stage == Stage::Full && cfg.kind == MeasureKind::Cascade) {
    const Tolerances& tol = cfg.tol;
    const CascadeParams& p = cfg.params;
    const double g1 = frequency_exponent(p.gamma1, p);
    auto spec_at = [&](double th) { return lq_spectrum(X, K, vector_for_weight(K, th), cfg.spectrum_lo, spec_hi).value; };

    const double l1 = spec_at(1.0);
    res.checks.push_back({"spectrum_at_one", std::abs(l1) < tol.lambda_at_one, "Lambda_hat(1) = " + format_double(l1)});

    {
      bool ok = true;
      std::string d;
      for (double th : {2.0, 4.0, 8.0}) {
        const double v = spec_at(th), cap = th * std::log2(p.p1) + tol.envelope;
        ok = ok && v <= cap;
        d += "theta=" + format_double(th) + ": " + format_double(v) + " <= " + format_double(cap) + "; ";
      }
      for (double th : {0.0, 0.25, 0.5, 0.75}) {
        const double v = spec_at(th), floor_ = 1.0 - th - tol.envelope;
        ok = ok && v >= floor_;
        d += "theta=" + format_double(th) + ": " + format_double(v) + " >= " + format_double(floor_) + "; ";
      }
      res.checks.push_back({"spectrum_envelope", ok, d});
    }

    {
      const BandSample bs = sample_bands(mu, *ex.gens, cfg.working_depth, cfg.sample_paths, tol.band_levels, cfg.seed);
      const auto [lo, hi] = std::minmax_element(bs.in_c.begin(), bs.in_c.end());
      const bool in_ok = bs.in_c.empty() || (*lo >= bs.in_lo && *hi <= bs.in_hi);
      res.checks.push_back({"bands_in_C", in_ok,
                            bs.in_c.empty() ? "no samples"
                                            : "slopes in [" + format_double(*lo) + ", " + format_double(*hi) +
                                                  "], band [" + format_double(bs.in_lo) + ", " +
                                                  format_double(bs.in_hi) + "]"});
      double worst = 0.0;
      for (double s : bs.off_c) worst = std::max(worst, std::abs(s - 1.0));
      res.checks.push_back({"bands_off_C", worst <= bs.off_slack,
                            "max |slope - 1| = " + format_double(worst) + " <= " + format_double(bs.off_slack)});
      report["bands"] = {{"depth", bs.depth}, {"in_C", bs.in_c}, {"off_C", bs.off_c}};
    }

    {
      const auto inst = level_set_instances(K, q0, cfg);
      bool ok = true;
      ojson pj = ojson::array();
      for (const auto& in : inst) {
        const bool pass = in.size > 0 && in.L <= in.alpha_value + tol.level_bound;
        ok = ok && pass;
        pj.push_back({{"a", in.a}, {"alpha_value", in.alpha_value}, {"p", in.p}, {"size", in.size}, {"L", num(in.L)}});
      }
      report["level_bound"] = pj;
      res.checks.push_back({"L_below_alpha_on_A", ok, std::to_string(inst.size()) + " sets"});
    }

    const double T_cap = g1 + tol.gap_T;
    res.checks.push_back({"T_below_a", !res.vacuous && res.T_full <= T_cap && T_cap < res.a,
                          "T_full = " + format_double(res.T_full) + ", g(gamma1) + tol = " + format_double(T_cap) +
                              ", a = " + format_double(res.a)});
    const double chain_rhs = res.T_hat / res.a * res.peyriere;
    res.checks.push_back({"bound_chain",
                          !res.vacuous && res.new_bound <= chain_rhs * (1.0 + tol.chain) + tol.chain,
                          "new = " + format_double(res.new_bound) + ", (T/a) peyriere = " + format_double(chain_rhs)});
    res.checks.push_back({"gap_positive", !res.vacuous && res.gap > 0, "gap = " + format_double(res.gap)});
    if (Lres)
      res.checks.push_back({"L_witness", Lres->dominance_ok && Lres->witness_valid,
                            "dominance and replacement-family validity on the extremal level set"});
    if (Ltab)
      res.checks.push_back({"L_monotone_in_k", Ltab->nonincreasing_in_k,
                            Ltab->notes.empty() ? "ok" : Ltab->notes.front()});
  }
  return finish();
}

std::vector<std::string> write_bundle(const ExperimentResult& r, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::string& body) {
    if (body.empty()) return;
    const fs::path path = fs::path(dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << body;
    written.push_back(path.string());
  };
  put("report.json", r.report_json);
  put("spectra.csv", r.spectra_csv);
  put("bounds.csv", r.bounds_csv);
  put("generations.json", r.generations_json);
  return written;
}

}  // namespace mflab
