#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mflab/bounds.hpp"
#include "mflab/packing_engine.hpp"

// Brute-force evaluators for tiny depths.  Slow on purpose: they enumerate
// instead of exploiting tree structure, so they can check the fast paths.
namespace mflab::oracle {

struct Budget {
  std::size_t antichains = 1u << 22;
  std::size_t families = 1u << 22;
};

// every antichain of A-meeting cylinders with depths in [m, depth_max], lexicographic order
std::vector<std::vector<Word>> all_antichains(const TargetSet& A, int m, int depth_max, std::size_t budget);

struct SupPacking {
  Rational value{0};
  std::vector<Word> argmax;  // first maximiser in enumeration order
  std::size_t examined = 0;
};

// exact max of sum r^t mu^q over all centered packings; integer q and t
SupPacking brute_force_sup_packing(const TargetSet& A, const Kernel& K, const ParamVector& q, int t, int m,
                                   int depth_max, const Budget& budget = {});

struct BruteL {
  double value = 0.0;
  std::vector<Word> packing;      // the maximising packing
  std::vector<Word> replacement;  // an optimal family for it
  std::size_t packings = 0;
  std::size_t families = 0;
};

// sup over all nonempty packings of the inf over every multiset of replacement
// cylinders (depths in [u_exponent, depth_max], chain multiplicity <= k),
// matched to the packing by a bottleneck assignment
BruteL brute_force_L(const TargetSet& A, const Kernel& K, const ParamVector& q, int k, int m, int u_exponent,
                     int depth_max, const Budget& budget = {});

}  // namespace mflab::oracle

namespace mflab::oracle {

struct EquivalenceRow {
  std::string kind;  // "packing" or "L"
  int index = 0;
  std::string instance;
  std::string fast;
  std::string brute;
  bool equal = false;
};

struct EquivalenceReport {
  std::vector<EquivalenceRow> rows;
  bool all_equal() const;
  std::string table() const;  // tab-separated, one row per instance
};

// seeded random instances: DP against enumeration, exact rationals
EquivalenceReport packing_equivalence(std::uint64_t seed, int count);
// seeded random instances: exact L against enumeration, |diff| <= 1e-12
EquivalenceReport L_equivalence(std::uint64_t seed, int count);

}  // namespace mflab::oracle
