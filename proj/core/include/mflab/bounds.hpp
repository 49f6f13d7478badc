#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mflab/cascade_measure.hpp"
#include "mflab/kernel.hpp"
#include "mflab/packing_engine.hpp"

namespace mflab {

struct LevelSetSpec {
  ParamVector q;
  AlphaForm alpha;
  double eta = 0.0;
  double p = 1.0;          // scales r = 2^-m with r < 1/p are constrained
  int working_depth = 8;
  // drop cylinders whose whole subtree has local exponent 1 > <q,alpha>+eta,
  // i.e. points that cannot satisfy the defining inequality at every small scale
  bool limit_condition = true;
};

// first constrained scale exponent: smallest m with 2^-m < 1/p
int first_constrained_scale(double p);

TargetSet level_set(const Kernel& K, const LevelSetSpec& spec);

// replacement radius u = 2^-ceil(ratio * m) for epsilon = 2^-m
struct UEpsilonRule {
  double ratio = 0.5;
  int replacement_exponent(int m) const;
};

enum class LStrategy { Exact, Structured };
std::string to_string(LStrategy s);

struct LQuery {
  ParamVector q;
  int k = 1;
  int m = 1;          // epsilon = 2^-m
  int depth_max = 4;  // finest radius considered, for packings and replacements
  UEpsilonRule u;
  LStrategy strategy = LStrategy::Exact;
  std::size_t budget = 1u << 16;  // cap on packings (exact) or items per packing (structured)
};

struct LPackingRecord {
  std::vector<Word> packing;
  std::vector<Word> replacement;  // index-matched
  std::vector<int> groups;
  double inner = 0.0;     // estimated inf over replacement families
  double identity = 0.0;  // sup of the identity replacement
};

struct LResult {
  double value = -std::numeric_limits<double>::infinity();
  std::size_t packings_examined = 0;
  bool dominance_ok = true;   // inner <= identity for every examined packing
  bool witness_valid = true;  // every reported replacement family passes validate_besicovitch
  std::optional<LPackingRecord> worst;  // the packing attaining the sup
};

LResult L_value(const TargetSet& A, const Kernel& K, const LQuery& query);

// ratio <q, chi(y, delta)> / log r for replacement cylinder y against a packing ball at depth d
double replacement_ratio(const Kernel& K, double weight, const Word& y, int packing_depth);

struct LTable {
  std::vector<int> ks;
  std::vector<int> ms;
  std::vector<std::vector<double>> values;  // [k index][m index]
  double value = 0.0;                       // largest k, smallest epsilon (largest m)
  bool nonincreasing_in_k = true;
  bool nondecreasing_in_eps = true;
  std::vector<std::string> notes;
};

LTable L_limit(const TargetSet& A, const Kernel& K, const LQuery& base, int k_max, int m_lo, int m_hi,
               double tol = 1e-12);

struct PhiValue {
  enum class Kind { Finite, Zero, Infinite, Clipped };
  Kind kind = Kind::Finite;
  double value = 0.0;
};
std::string to_string(PhiValue::Kind k);

// Phi_q(t) = inf{gamma > 0 : t <q,alpha> > B((gamma - t) q)}; B is given along the ray
// through its weight: B((gamma - t) q) = B_hat((gamma - t) * s), s = weight of q.
PhiValue phi(double weight, double alpha_value, double t, const SpectrumFunction& B, double tol = 1e-6);

struct PhiInf {
  double value = std::numeric_limits<double>::infinity();
  double argmin_t = 0.0;
  std::vector<double> ts;
  std::vector<PhiValue> values;
  int clipped = 0;
};

// geometric grid -2^e, e in [e_lo, e_hi], `per_octave` points per power of two
std::vector<double> geometric_t_grid(int e_lo, int e_hi, int per_octave);
// t values at which the threshold ray hits a spectrum vertex
std::vector<double> vertex_t_candidates(double weight, double alpha_value, const SpectrumFunction& B);

PhiInf phi_inf(double weight, double alpha_value, const SpectrumFunction& B, const std::vector<double>& t_grid,
               double tol = 1e-6);

struct PeyriereResult {
  double value = std::numeric_limits<double>::infinity();
  double argmin = 0.0;
};

// min over grid points theta >= 0 of a theta + B(theta); ties go to the smallest theta
PeyriereResult peyriere_bound(double a, const SpectrumFunction& B);
// same on a 2-d grid over E with B evaluated per parameter vector
PeyriereResult peyriere_bound_2d(double a, const std::vector<std::pair<ParamVector, double>>& grid);

// T(alpha, eta, p) over nested level sets
struct TEntry {
  double eta = 0.0;
  double p = 1.0;
  std::size_t level_set_size = 0;
  std::size_t family_size = 0;
  double family_value = -std::numeric_limits<double>::infinity();  // max over the cumulative family
  double full_value = -std::numeric_limits<double>::infinity();    // full level set only
};

struct TTable {
  std::vector<double> etas;  // increasing
  std::vector<double> ps;    // increasing
  std::vector<TEntry> entries;  // row-major [eta][p]
  double value = -std::numeric_limits<double>::infinity();       // family-restricted estimate
  double full_value = -std::numeric_limits<double>::infinity();  // full level set at the extremal entry
  bool vacuous = false;  // extremal level set empty
  bool nondecreasing_in_p = true;
  bool nonincreasing_as_eta_shrinks = true;
};

struct TSettings {
  std::vector<double> etas;
  std::vector<double> ps;
  int working_depth = 48;
  int k_max = 3;
  int m_lo = 24;
  int m_hi = 48;
  UEpsilonRule u;
  LStrategy strategy = LStrategy::Structured;
  std::size_t budget = 1u << 16;
  int random_subsets = 32;
  std::uint64_t seed = 1;
  int jobs = 1;
};

TTable T_estimate(const Kernel& K, const ParamVector& q, const AlphaForm& alpha, const TSettings& s);

}  // namespace mflab
