#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <CLI11.hpp>

#include "mflab/example_s3.hpp"
#include "mflab/oracle.hpp"

namespace mflab::cli {

namespace {

struct Flags {
  std::string config;
  std::string out = "mflab_out";
  int jobs = 0;
  int depth = 0;
  long long seed = -1;
  bool rational = false;
  int packing_instances = 200;
  int L_instances = 50;
};

ExperimentConfig load(const Flags& f) {
  ExperimentConfig cfg = load_config(f.config);
  if (f.jobs > 0) cfg.jobs = f.jobs;
  if (f.seed >= 0) cfg.seed = static_cast<std::uint64_t>(f.seed);
  if (f.depth > 0) {
    if (f.depth > 64) throw ConfigError("--depth", "must be <= 64");
    cfg.working_depth = f.depth;
    cfg.spectrum_hi = std::max(cfg.spectrum_lo + 1, std::min(cfg.spectrum_hi, f.depth));
    cfg.m_hi = std::min(cfg.m_hi, f.depth);
    cfg.m_lo = std::min(cfg.m_lo, cfg.m_hi);
  }
  return cfg;
}

int emit(const ExperimentResult& r, const Flags& f, std::ostream& out, std::ostream& err, bool enforce_checks) {
  for (const auto& path : write_bundle(r, f.out)) out << "wrote " << path << "\n";
  for (const auto& flag : r.flags) err << "flag: " << flag << "\n";
  for (const auto& c : r.checks) out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  if (!r.admissible) return kValidation;
  if (enforce_checks && !r.all_pass()) return kAssertion;
  return kOk;
}

int oracle_check(const Flags& f, std::ostream& out) {
  const std::uint64_t seed = f.seed >= 0 ? static_cast<std::uint64_t>(f.seed) : 1;
  const auto a = oracle::packing_equivalence(seed, f.packing_instances);
  const auto b = oracle::L_equivalence(seed, f.L_instances);
  std::filesystem::create_directories(f.out);
  const std::string path = (std::filesystem::path(f.out) / "oracle.tsv").string();
  std::ofstream tsv(path, std::ios::binary);
  tsv << a.table();
  for (std::size_t i = 0; i < b.rows.size(); ++i) {
    const auto& r = b.rows[i];
    tsv << r.kind << "\t" << r.index << "\t" << r.instance << "\t" << r.fast << "\t" << r.brute << "\t"
        << (r.equal ? "yes" : "NO") << "\n";
  }
  auto count = [](const oracle::EquivalenceReport& r) {
    return std::count_if(r.rows.begin(), r.rows.end(), [](const auto& x) { return x.equal; });
  };
  out << "check\tinstances\tequal\n";
  out << "packing\t" << a.rows.size() << "\t" << count(a) << "\n";
  out << "L\t" << b.rows.size() << "\t" << count(b) << "\n";
  out << "wrote " << path << "\n";
  return a.all_equal() && b.all_equal() ? kOk : kAssertion;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mflab: multifractal bound laboratory"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", f.config, "experiment config (TOML)");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", f.out, "output directory")->capture_default_str();
    sub->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--depth", f.depth, "override depth.working")->check(CLI::PositiveNumber);
    sub->add_option("--seed", f.seed, "override run.seed")->check(CLI::NonNegativeNumber);
    sub->add_flag("--rational", f.rational, "add exact rational partition sums to spectra.csv");
  };
  auto* build = app.add_subcommand("build-measure", "construct generations and the measure");
  common(build, true);
  auto* spectrum = app.add_subcommand("spectrum", "L^q spectrum table of the whole space");
  common(spectrum, true);
  auto* compare = app.add_subcommand("bounds-compare", "both dimension bounds for the configured a");
  common(compare, true);
  auto* reproduce = app.add_subcommand("reproduce", "full pipeline with all checks");
  common(reproduce, true);
  auto* oracle_cmd = app.add_subcommand("oracle-check", "fast paths against brute-force enumeration");
  common(oracle_cmd, false);
  oracle_cmd->add_option("--packing-instances", f.packing_instances)->check(CLI::NonNegativeNumber);
  oracle_cmd->add_option("--L-instances", f.L_instances)->check(CLI::NonNegativeNumber);

  // CLI11 consumes arguments from the back, program name excluded
  std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kValidation;
  }

  try {
    if (*oracle_cmd) return oracle_check(f, out);
    const ExperimentConfig cfg = load(f);
    RunOptions opt;
    opt.rational = f.rational;
    if (*build) opt.stage = Stage::Measure;
    if (*spectrum) opt.stage = Stage::Spectrum;
    if (*compare) opt.stage = Stage::Bounds;
    if (*reproduce) opt.stage = Stage::Full;
    const ExperimentResult r = run_experiment(cfg, opt);
    return emit(r, f, out, err, opt.stage == Stage::Full);
  } catch (const ConfigError& e) {
    err << "config error at " << e.key_path << ": " << e.reason << "\n";
    return kValidation;
  } catch (const ParamError& e) {
    err << "parameter error at " << e.field << ": " << e.what() << "\n";
    return kValidation;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
}

}  // namespace mflab::cli
