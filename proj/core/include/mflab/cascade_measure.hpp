#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mflab/numeric.hpp"
#include "mflab/symbolic_space.hpp"

namespace mflab {

struct CascadeParams {
  double p0 = 0.3;
  double p1 = 0.7;
  double beta1 = 0.10;
  double gamma1 = 0.30;
  double beta2 = 0.31;
  double gamma2 = 0.39;
  int n0 = 6;

  // structural constraints; throws InvalidArgument naming the field
  void validate() const;
  // the example needs p0 < p1 and a Hoelder exponent below 1 on the T2 band
  bool example_admissible() const;
};

// Maps a zero-frequency x to the local exponent of a fully selected path.
double frequency_exponent(double x, double p0, double p1);
inline double frequency_exponent(double x, const CascadeParams& p) {
  return frequency_exponent(x, p.p0, p.p1);
}

enum class CylinderType { T1, T2, Neither };
std::string to_string(CylinderType t);

CylinderType classify_fraction(int zeros, int length, const CascadeParams& p);
CylinderType classify(const Word& w, const CascadeParams& p);

enum class ScheduleMode { SuperExponential, Compressed };
std::string to_string(ScheduleMode m);

class Schedule {
 public:
  // n0, 2^n0 n0, 2^(n0+1) n0, ... ; breakpoints past depth_limit are dropped
  static Schedule super_exponential(int n0, int depth_limit);
  static Schedule compressed(std::vector<int> breakpoints, int n0);

  ScheduleMode mode() const { return mode_; }
  const std::vector<int>& breakpoints() const { return points_; }

  // 1, 2 or 3: which rule governs the step from a member at `depth`
  int regime_at(int depth) const;
  // index p of the breakpoint equal to depth, or -1
  int breakpoint_index(int depth) const;

 private:
  ScheduleMode mode_ = ScheduleMode::Compressed;
  std::vector<int> points_;
};

struct Member {
  Word word;
  CylinderType type = CylinderType::Neither;
  int father = -1;   // index in the previous family
  int lineage = 0;   // 0: descends from the T1 seed, 1: from the T2 seed
  std::uint64_t branch_path = 0;
  int branch_length = 0;
  CylinderType type_at_cycle_start = CylinderType::Neither;  // type when the current drift cycle opened
};

struct GenerationFamily {
  int k = 0;
  int depth = 0;
  int regime = 1;  // regime of the step that produced this family (G_0: 1)
  std::vector<Member> members;
};

struct SeparationViolation {
  int k = 0;
  int first = 0;
  int second = -1;  // -1 for father-boundary violations
  std::string what;
};

std::vector<SeparationViolation> check_separation(const std::vector<GenerationFamily>& fams);

// Smallest number of appended letters, all equal to `letter`, moving zeros/length
// strictly past `threshold` (below it when letter = 1, above it when letter = 0).
// Returns -1 if unreachable within max_levels.
int drift_levels_needed(int zeros, int length, double threshold, int letter, int max_levels);

class Generations {
 public:
  static std::shared_ptr<const Generations> build(const CascadeParams& params, const Schedule& sched,
                                                  int depth_cap);

  const CascadeParams& params() const { return params_; }
  const Schedule& schedule() const { return schedule_; }
  const std::vector<GenerationFamily>& families() const { return fams_; }
  const GenerationFamily& deepest() const { return fams_.back(); }
  int horizon() const { return fams_.back().depth; }

  // prefix of (or equal to) a deepest-generation member
  bool on_spine(const Word& w) const { return spine_.count(w) != 0; }
  // index in the deepest family of the first member extending (or extended by) w
  std::optional<int> deepest_member_through(const Word& w) const;

  // equal-branch member of the other lineage
  int partner(int k, int i) const;
  // members are related iff they descend from different seeds
  bool related(int k, int i, int j) const;

 private:
  CascadeParams params_;
  Schedule schedule_;
  std::vector<GenerationFamily> fams_;
  std::unordered_set<Word> spine_;
};

class LimitSetC {
 public:
  explicit LimitSetC(std::shared_ptr<const Generations> gens) : gens_(std::move(gens)) {}
  // contains or is contained in a member of every constructed generation
  bool meets(const Word& c) const;

 private:
  std::shared_ptr<const Generations> gens_;
};

// mu = p0^zeros * p1^ones * 2^-halvings
struct MassExponents {
  int zeros = 0;
  int ones = 0;
  int halvings = 0;
  friend bool operator==(const MassExponents&, const MassExponents&) = default;
};

enum class HorizonPolicy { Strict, Halve };

class CascadeMeasure {
 public:
  enum class Selection { None, All, Explicit, Generations };

  static CascadeMeasure uniform();
  static CascadeMeasure bernoulli(double p0);
  // selected cylinders given as words; a cylinder "contains a selected cylinder"
  // iff it is a prefix of one of them
  static CascadeMeasure with_selected(double p0, const std::vector<Word>& selected);
  static CascadeMeasure from_generations(std::shared_ptr<const Generations> gens,
                                         HorizonPolicy policy = HorizonPolicy::Strict);

  CascadeMeasure(const CascadeMeasure& other);
  CascadeMeasure& operator=(const CascadeMeasure&) = delete;

  Selection selection() const { return selection_; }
  double p0() const { return p0_; }
  double p1() const { return p1_; }
  const Rational& p0_exact() const { return p0_exact_; }
  const Rational& p1_exact() const { return p1_exact_; }
  const Generations* generations() const { return gens_.get(); }
  std::shared_ptr<const Generations> generations_ptr() const { return gens_; }

  // deepest cylinder depth whose mass is decidable
  int depth_limit() const;

  bool contains_selected(const Word& c) const;
  bool uniform_below(const Word& c) const { return !contains_selected(c); }

  MassExponents exponents(const Word& c) const;
  MassExponents child_exponents(const Word& parent, const MassExponents& pe, int letter) const;
  double log2_mass(const MassExponents& e) const;
  double log2_mass(const Word& c) const { return log2_mass(exponents(c)); }
  double mass(const Word& c) const;
  Rational exact_mass(const Word& c) const;
  Rational exact_mass(const MassExponents& e) const;

  std::string describe() const;

 private:
  CascadeMeasure() = default;

  Selection selection_ = Selection::None;
  HorizonPolicy policy_ = HorizonPolicy::Strict;
  double p0_ = 0.5, p1_ = 0.5;
  double log2_p0_ = -1.0, log2_p1_ = -1.0;
  Rational p0_exact_{1, 2}, p1_exact_{1, 2};
  std::unordered_set<Word> explicit_spine_;
  std::shared_ptr<const Generations> gens_;

  mutable std::shared_mutex memo_mutex_;
  mutable std::unordered_map<Word, MassExponents> memo_;

  void set_probabilities(double p0);
};

struct SlopeSample {
  int depth = 0;
  double slope = 0.0;
};

// -log2 mu(prefix_m(x)) / m for each requested m
std::vector<SlopeSample> local_dimension_trace(const CascadeMeasure& mu, const Point& x,
                                               const std::vector<int>& depths);

}  // namespace mflab
