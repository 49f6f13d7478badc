#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mflab/bounds.hpp"
#include "mflab/config.hpp"

namespace mflab {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

// measure + kernel assembled from a config
struct Experiment {
  std::shared_ptr<const Generations> gens;  // cascade only
  std::shared_ptr<const CascadeMeasure> measure;
  std::shared_ptr<const Kernel> kernel;
};

Experiment build_experiment(const ExperimentConfig& cfg);
Schedule schedule_for(const ExperimentConfig& cfg);

// finite-depth slopes of sampled paths through the deepest generation, and of
// paths leaving the first generation; bands widened by `levels / depth`
struct BandSample {
  std::vector<double> in_c;
  std::vector<double> off_c;
  int depth = 0;
  double in_lo = 0.0, in_hi = 0.0;  // allowed band for in_c
  double off_slack = 0.0;           // |slope - 1| bound for off_c
};
BandSample sample_bands(const CascadeMeasure& mu, const Generations& gens, int depth, int samples, int levels,
                        std::uint64_t seed);

// A^{<q,alpha>} sets on the alpha grid g(gamma1) + i/10 (g(gamma2) - g(gamma1)), i = 1..10
struct LevelSetInstance {
  double a = 0.0;
  double alpha_value = 0.0;  // <q, alpha>
  double p = 0.0;            // first 2^j giving a nonempty set
  std::size_t size = 0;
  double L = 0.0;
};
std::vector<LevelSetInstance> level_set_instances(const Kernel& K, const ParamVector& q, const ExperimentConfig& cfg);

enum class Stage { Measure, Spectrum, Bounds, Full };

struct ExperimentResult {
  // serialized artifacts; empty when the stage did not produce them
  std::string report_json;
  std::string spectra_csv;
  std::string bounds_csv;
  std::string generations_json;

  std::vector<Check> checks;
  std::vector<std::string> flags;
  bool admissible = true;

  double a = 0.0;
  double peyriere = 0.0;
  double new_bound = 0.0;
  double T_hat = 0.0;   // family-restricted, at the minimising q
  double T_full = 0.0;  // full level set, same q
  double gap = 0.0;
  bool vacuous = false;

  bool all_pass() const;
};

struct RunOptions {
  Stage stage = Stage::Full;
  bool rational = false;  // exact partition sums next to the float ones
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});

// writes whichever artifacts are present into dir (created if needed)
std::vector<std::string> write_bundle(const ExperimentResult& r, const std::string& dir);

}  // namespace mflab
