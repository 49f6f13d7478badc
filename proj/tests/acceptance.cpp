// Acceptance runner: one PASS/FAIL line per criterion.  Tolerances are fixed
// here on purpose and do not follow the config file.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "mflab/example_s3.hpp"
#include "mflab/numeric.hpp"
#include "mflab/oracle.hpp"

using namespace mflab;

namespace {

constexpr double kZeroResidual = 1e-12;
constexpr double kUniformSlope = 1e-12;
constexpr double kUniformSeconds = 1.0;
constexpr double kClosedFormRel = 1e-9;
constexpr double kBernoulliSlope = 1e-3;
constexpr double kAtOne = 1e-9;
constexpr double kMonotone = 1e-12;
constexpr double kProp2 = 0.05;
constexpr double kEnvelope = 0.05;
constexpr int kBandLevels = 3;
constexpr double kGapT = 0.05;
constexpr double kChainRel = 1e-9;
constexpr double kReproduceSeconds = 600.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x) { return format_double(x); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::shared_ptr<const CascadeMeasure> shared(CascadeMeasure m) {
  return std::make_shared<const CascadeMeasure>(std::move(m));
}

std::string config_dir() {
  if (const char* d = std::getenv("MFLAB_CONFIG_DIR")) return d;
  return MFLAB_CONFIG_DIR;
}

ExperimentConfig example_config() { return load_config(config_dir() + "/example.toml"); }

Outcome uniform_spectrum() {
  const auto t0 = std::chrono::steady_clock::now();
  const Kernel K(KernelVariant::Olsen, shared(CascadeMeasure::uniform()));
  double worst = 0, worst_res = 0;
  for (double th : {-1.0, 0.0, 0.5, 1.0, 2.0}) {
    const auto e = lq_spectrum(TargetSet::whole_space(), K, ParamVector{th}, 1, 16);
    worst = std::max(worst, std::abs(e.value - (1 - th)));
    worst_res = std::max(worst_res, e.residual);
  }
  const double secs = seconds_since(t0);
  return {worst <= kUniformSlope && worst_res <= kZeroResidual && secs < kUniformSeconds,
          "max |Lambda_hat - (1-theta)| = " + num(worst) + ", max residual = " + num(worst_res) + ", " +
              num(secs) + " s"};
}

Outcome bernoulli_closed_form() {
  const double p0 = 0.3, p1 = 0.7;
  const Kernel K(KernelVariant::Olsen, shared(CascadeMeasure::bernoulli(p0)));
  const TargetSet X = TargetSet::whole_space();
  double worst = 0, worst_slope = 0;
  for (double th : {-1.0, 0.0, 0.5, 1.0, 2.0}) {
    const double per_level = std::log2(std::pow(p0, th) + std::pow(p1, th));
    for (double t : {-1.0, -0.25, 0.0, 0.5, 1.0}) {
      const auto prof = partition_profile(X, K, ParamVector{th}, t, 1, 16);
      for (int m = 1; m <= 16; ++m) {
        const double want = m * (per_level - t);
        worst = std::max(worst, std::abs(std::exp2(prof[m - 1] - want) - 1));
      }
    }
    worst_slope = std::max(worst_slope, std::abs(lq_spectrum(X, K, ParamVector{th}, 1, 16).value - per_level));
  }
  return {worst < kClosedFormRel && worst_slope < kBernoulliSlope,
          "max relative error = " + num(worst) + " over 5x5 (theta,t), m <= 16; max |Lambda_hat - closed form| = " +
              num(worst_slope)};
}

Outcome spectrum_at_one() {
  const auto cfg = example_config();
  const auto ex = build_experiment(cfg);
  const TargetSet X = TargetSet::whole_space();
  const auto e = lq_spectrum(X, *ex.kernel, ParamVector{1.0}, cfg.spectrum_lo, cfg.spectrum_hi);
  return {std::abs(e.value) < kAtOne, "Lambda_hat(1) = " + num(e.value) + " at depth " +
                                          std::to_string(cfg.spectrum_hi)};
}

Outcome oracle_equivalence() {
  const auto a = oracle::packing_equivalence(1, 200);
  const auto b = oracle::L_equivalence(1, 50);
  auto count = [](const oracle::EquivalenceReport& r) {
    int n = 0;
    for (const auto& x : r.rows) n += x.equal;
    return n;
  };
  return {a.all_equal() && b.all_equal() && a.rows.size() == 200 && b.rows.size() == 50,
          "packing " + std::to_string(count(a)) + "/200 equal, L " + std::to_string(count(b)) + "/50 equal"};
}

// 20 seeded instances: random selected sets at depth <= 4, random target of depth-2 cylinders
Outcome monotone_tables() {
  std::mt19937_64 rng(2024);
  int k_ok = 0, eps_ok = 0;
  std::string first_eps;
  for (int i = 0; i < 20; ++i) {
    std::vector<Word> sel;
    const int n = 1 + static_cast<int>(rng() % 3);
    for (int j = 0; j < n; ++j) {
      const int len = 1 + static_cast<int>(rng() % 4);
      sel.push_back(Word::from_bits(rng() & ((1ull << len) - 1), len));
    }
    const double p0 = 0.1 * (1 + static_cast<int>(rng() % 8));
    const Kernel K(KernelVariant::Olsen, shared(CascadeMeasure::with_selected(p0, sel)));
    std::vector<Word> cyl;
    for (const auto& w : words_of_length(2))
      if (rng() % 2) cyl.push_back(w);
    if (cyl.empty()) cyl.push_back(Word::from_string("00"));
    const TargetSet A(cyl);
    static const double weights[] = {-1.0, 0.5, 1.0, 2.0};
    LQuery base;
    base.q = ParamVector{weights[rng() % 4]};
    base.depth_max = 4;
    base.strategy = LStrategy::Exact;
    const auto t = L_limit(A, K, base, 3, 1, 4, kMonotone);
    k_ok += t.nonincreasing_in_k;
    eps_ok += t.nondecreasing_in_eps;
    if (!t.nondecreasing_in_eps && first_eps.empty()) {
      std::ostringstream os;
      os << "instance " << i << " (p0=" << p0 << " q=" << base.q.to_string() << " A=" << A.to_string() << "): ";
      for (const auto& note : t.notes) os << note << "; ";
      first_eps = os.str();
    }
  }
  std::string d = "nonincreasing in k: " + std::to_string(k_ok) + "/20, nondecreasing in eps: " +
                  std::to_string(eps_ok) + "/20";
  if (!first_eps.empty()) d += "; first eps violation " + first_eps;
  return {k_ok == 20 && eps_ok == 20, d};
}

Outcome level_set_bound() {
  const auto cfg = example_config();
  const auto ex = build_experiment(cfg);
  const auto inst = level_set_instances(*ex.kernel, ParamVector{1.0}, cfg);
  bool ok = inst.size() == 10;
  double worst = -INFINITY;
  for (const auto& i : inst) {
    ok = ok && i.size > 0 && i.L <= i.alpha_value + kProp2;
    worst = std::max(worst, i.L - i.alpha_value);
  }
  return {ok, std::to_string(inst.size()) + " sets, max L_hat - <q,alpha> = " + num(worst)};
}

Outcome envelope() {
  const auto cfg = example_config();
  const auto ex = build_experiment(cfg);
  const double lp1 = std::log2(cfg.params.p1);
  const std::vector<double> ths{0.0, 0.25, 0.5, 0.75, 2.0, 4.0, 8.0};
  const auto est = spectrum_sweep(TargetSet::whole_space(), *ex.kernel, ths, cfg.spectrum_lo, cfg.spectrum_hi, 1);
  bool ok = true;
  std::ostringstream d;
  for (const auto& e : est) {
    const bool large = e.theta > 1;
    const bool pass = large ? e.value <= e.theta * lp1 + kEnvelope : e.value >= 1 - e.theta - kEnvelope;
    ok = ok && pass;
    d << "theta=" << e.theta << ": " << num(e.value) << (large ? " <= " : " >= ")
      << num(large ? e.theta * lp1 + kEnvelope : 1 - e.theta - kEnvelope) << (pass ? "" : " (violated)") << "; ";
  }
  return {ok, d.str()};
}

Outcome bands() {
  const auto cfg = example_config();
  const auto ex = build_experiment(cfg);
  const auto& p = cfg.params;
  const int depth = 48;
  const double slack = static_cast<double>(kBandLevels) / depth;
  const auto bs = sample_bands(*ex.measure, *ex.gens, depth, 100, kBandLevels, cfg.seed);
  const double lo = frequency_exponent(p.beta1, p) - slack;
  const double hi = frequency_exponent(p.gamma2, p) + slack;
  double in_min = INFINITY, in_max = -INFINITY, off = 0;
  for (double s : bs.in_c) in_min = std::min(in_min, s), in_max = std::max(in_max, s);
  for (double s : bs.off_c) off = std::max(off, std::abs(s - 1));
  const bool ok = p.p0 == 0.3 && bs.in_c.size() == 100 && bs.off_c.size() == 100 && in_min >= lo && in_max <= hi &&
                  off <= slack;
  return {ok, "in C: [" + num(in_min) + ", " + num(in_max) + "] within [" + num(lo) + ", " + num(hi) +
                  "]; off C: max |slope - 1| = " + num(off) + " <= " + num(slack)};
}

Outcome gap() {
  const auto cfg = example_config();
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_experiment(cfg);
  const double secs = seconds_since(t0);
  const double g1 = frequency_exponent(cfg.params.gamma1, cfg.params);
  const double g2 = frequency_exponent(cfg.params.gamma2, cfg.params);
  const double a = (g1 + g2) / 2;
  const double chain = r.T_hat / r.a * r.peyriere;
  const bool ok = std::abs(r.a - a) < 1e-15 && !r.vacuous && r.T_full <= g1 + kGapT && g1 + kGapT < a &&
                  r.new_bound <= chain + kChainRel * std::abs(chain) && r.gap > 0 && secs < kReproduceSeconds;
  return {ok, "a = " + num(r.a) + ", T_hat(full) = " + num(r.T_full) + " <= " + num(g1 + kGapT) + ", new = " +
                  num(r.new_bound) + " <= (T_hat/a) peyriere = " + num(chain) + ", gap = " + num(r.gap) + ", " +
                  num(secs) + " s"};
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const auto cfg = example_config();
  const fs::path base = fs::temp_directory_path() / "mflab_acceptance_determinism";
  fs::remove_all(base);
  const auto a = write_bundle(run_experiment(cfg), (base / "a").string());
  const auto b = write_bundle(run_experiment(cfg), (base / "b").string());
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  };
  bool ok = a.size() == b.size() && !a.empty();
  std::string diff;
  for (std::size_t i = 0; ok && i < a.size(); ++i) {
    if (slurp(a[i]) != slurp(b[i])) {
      ok = false;
      diff = fs::path(a[i]).filename().string();
    }
  }
  fs::remove_all(base);
  return {ok, ok ? std::to_string(a.size()) + " files byte-identical" : "differs: " + diff};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"uniform spectrum", uniform_spectrum},
      {"bernoulli closed form", bernoulli_closed_form},
      {"spectrum at weight one", spectrum_at_one},
      {"oracle equivalence", oracle_equivalence},
      {"monotone L tables", monotone_tables},
      {"level-set L bound", level_set_bound},
      {"spectrum envelope", envelope},
      {"Hoelder bands", bands},
      {"bound gap", gap},
      {"determinism", determinism},
  };
  int only = 0;
  if (argc == 3 && std::string(argv[1]) == "--criterion") only = std::atoi(argv[2]);
  if (argc != 1 && (only < 1 || only > static_cast<int>(criteria.size()))) {
    std::cerr << "usage: mflab_acceptance [--criterion N]\n";
    return 64;
  }
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
              << "): " << o.detail << std::endl;
  }
  return failed ? 1 : 0;
}
