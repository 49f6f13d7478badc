#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mflab/bounds.hpp"
#include "mflab/cascade_measure.hpp"
#include "mflab/kernel.hpp"

namespace mflab {

inline constexpr int kSchemaVersion = 1;

enum class MeasureKind { Uniform, Bernoulli, Cascade };
std::string to_string(MeasureKind k);

struct Tolerances {
  double residual = 1e-12;       // zero-residual fits
  double phi = 1e-6;             // bisection on gamma
  double lambda_at_one = 1e-9;   // spectrum value at weight 1
  double envelope = 0.05;        // large/small weight spectrum envelopes
  double level_bound = 0.05;     // L on A^{<q,alpha>} above <q,alpha>
  double gap_T = 0.05;           // T against g(gamma1)
  double chain = 1e-9;           // relative slack in new <= (T/a) * peyriere
  double monotone = 1e-12;       // table monotonicity
  int band_levels = 3;           // slope band slack in levels (slack = levels / depth)
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;

  MeasureKind kind = MeasureKind::Cascade;
  CascadeParams params;
  HorizonPolicy horizon = HorizonPolicy::Strict;
  ScheduleMode schedule_mode = ScheduleMode::Compressed;
  std::vector<int> breakpoints{6, 12, 24, 48};

  KernelVariant variant = KernelVariant::Olsen;
  double lambda_c = 0.0;

  // alpha.a: a number, or the midpoint of the admissible band when unset here
  std::optional<double> a;
  bool a_midpoint = false;

  int working_depth = 48;
  int spectrum_lo = 8;
  int spectrum_hi = 48;

  std::vector<double> thetas;               // spectrum grid (weights)
  std::vector<std::vector<double>> q_grid;  // parameter vectors for the new bound
  int t_exp_lo = -30;
  int t_exp_hi = 6;
  int t_per_octave = 4;
  bool t_vertices = true;
  std::vector<double> etas{0.01, 0.05};
  std::vector<double> ps{2048.0, 8388608.0};
  int k_max = 3;
  int m_lo = 24;
  int m_hi = 48;

  Tolerances tol;

  std::uint64_t seed = 1;
  int random_subsets = 32;
  std::size_t budget = 1u << 16;
  double u_ratio = 0.5;
  LStrategy strategy = LStrategy::Structured;
  int jobs = 1;
  int sample_paths = 100;

  std::string source;  // path it was read from, for messages

  // g(gamma1) < a <= g(gamma2) check; empty when fine
  std::optional<std::string> alpha_problem() const;
  double resolved_a() const;  // throws ConfigError if unusable
};

// throws ConfigError naming the offending key path
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>");

}  // namespace mflab
