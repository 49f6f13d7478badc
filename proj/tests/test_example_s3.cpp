#include <doctest.h>

#include <cmath>

#include "mflab/example_s3.hpp"

using namespace mflab;

namespace {

ExperimentConfig example() { return load_config(std::string(MFLAB_CONFIG_DIR) + "/example.toml"); }

const Check* find(const ExperimentResult& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return &c;
  return nullptr;
}

}  // namespace

TEST_CASE("example pipeline passes its own checks") {
  const auto r = run_experiment(example());
  for (const auto& c : r.checks) {
    CAPTURE(c.name);
    CAPTURE(c.detail);
    CHECK(c.pass);
  }
  CHECK(r.admissible);
  CHECK(r.gap > 0);
  CHECK(r.new_bound <= r.T_hat / r.a * r.peyriere * (1 + 1e-9));
  CHECK(find(r, "bound_chain") != nullptr);
  CHECK(r.report_json.find("\"gap\"") != std::string::npos);
}

TEST_CASE("example stages produce only their artifacts") {
  RunOptions opt;
  opt.stage = Stage::Measure;
  const auto m = run_experiment(example(), opt);
  CHECK_FALSE(m.generations_json.empty());
  CHECK(m.bounds_csv.empty());
  opt.stage = Stage::Spectrum;
  const auto s = run_experiment(example(), opt);
  CHECK_FALSE(s.spectra_csv.empty());
  CHECK(s.bounds_csv.empty());
}

TEST_CASE("in-C samples fall in the Hoelder band") {
  auto cfg = example();
  const auto ex = build_experiment(cfg);
  const auto bs = sample_bands(*ex.measure, *ex.gens, 48, 100, 3, 1);
  CHECK(bs.in_c.size() == 100);
  CHECK(bs.off_c.size() == 100);
  for (double s : bs.in_c) CHECK((s >= bs.in_lo && s <= bs.in_hi));
  for (double s : bs.off_c) CHECK(std::abs(s - 1) <= bs.off_slack);
}

TEST_CASE("level sets on the example sit inside cylinders meeting C") {
  auto cfg = example();
  const auto ex = build_experiment(cfg);
  const LimitSetC C(ex.gens);
  LevelSetSpec s;
  s.q = ParamVector{1.0};
  s.alpha = AlphaForm{cfg.resolved_a()};
  s.p = 2048;
  s.working_depth = 48;
  const auto A = level_set(*ex.kernel, s);
  CHECK_FALSE(A.empty());
  for (const auto& c : A.cylinders()) CHECK(C.meets(c));
}

TEST_CASE("L on constructed level sets stays under the pairing") {
  auto cfg = example();
  const auto ex = build_experiment(cfg);
  const auto inst = level_set_instances(*ex.kernel, ParamVector{1.0}, cfg);
  CHECK(inst.size() == 10);
  for (const auto& i : inst) CHECK(i.L <= i.alpha_value + cfg.tol.level_bound);
}

TEST_CASE("uniform run has no cascade checks") {
  const auto r = run_experiment(load_config(std::string(MFLAB_CONFIG_DIR) + "/uniform.toml"));
  CHECK(r.admissible);
  CHECK(find(r, "bands_in_C") == nullptr);
}
