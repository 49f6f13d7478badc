#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "mflab/errors.hpp"
#include "mflab/kernel.hpp"
#include "mflab/numeric.hpp"

namespace mflab {

// Finite-depth stand-in for a subset A of X: a union of pairwise disjoint cylinders.
class TargetSet {
 public:
  TargetSet() = default;
  explicit TargetSet(std::vector<Word> cylinders);
  static TargetSet whole_space() { return TargetSet({Word{}}); }

  const std::vector<Word>& cylinders() const { return cyl_; }
  bool empty() const { return cyl_.empty(); }
  std::size_t size() const { return cyl_.size(); }

  // c is a prefix of some member (c meets A from above)
  bool touches(const Word& c) const { return prefixes_.count(c) != 0; }
  // some member is a prefix of c
  bool inside(const Word& c) const;
  bool meets(const Word& c) const { return touches(c) || inside(c); }
  int max_depth() const { return max_depth_; }

  std::string to_string() const;

 private:
  std::vector<Word> cyl_;
  std::unordered_set<Word> members_;
  std::unordered_set<Word> prefixes_;
  int max_depth_ = 0;
};

// balls are cylinders; a ball is centered iff its cylinder meets the target
struct CenteredPacking {
  std::vector<Word> balls;
};

struct BesicovitchPacking {
  std::vector<Word> balls;
  std::vector<int> group;  // group index per ball, 0-based
};

struct PackingCheck {
  bool ok = true;
  std::vector<std::string> violations;
};

PackingCheck validate_packing(const CenteredPacking& p, const TargetSet& A, int eps_exponent);
// radii <= u = 2^-u_exponent, at most k groups, disjoint within groups, centers in A
PackingCheck validate_besicovitch(const BesicovitchPacking& p, const TargetSet& A, int k, int u_exponent);

// log2 of r^t e^{<q,chi>} for a ball of the given depth
inline double log2_term(const Kernel& K, double weight, double t, double log2_mass, int depth) {
  return -t * depth + K.chi_at(weight, log2_mass, depth) / std::log(2.0);
}

double packing_sum(const CenteredPacking& P, const Kernel& K, const ParamVector& q, double t);
Rational packing_sum_exact(const CenteredPacking& P, const Kernel& K, const ParamVector& q, int t);

// exact term r^t mu^w for integer w and t
Rational exact_term(const CascadeMeasure& mu, const MassExponents& e, int depth, int weight, int t);

// block of an optimal antichain: every descendant of `root` at `depth`
struct WitnessBlock {
  Word root;
  int depth = 0;
};

template <class V>
struct PackingValue {
  V value{};
  std::vector<WitnessBlock> witness;
};

struct PackingQuery {
  ParamVector q;
  double t = 0.0;
  int m = 1;          // packings use radii <= 2^-m
  int depth_max = 1;  // and >= 2^-depth_max
};

namespace detail {

template <class V>
class AntichainDP {
 public:
  using TermFn = std::function<V(const MassExponents&, int depth)>;

  AntichainDP(const CascadeMeasure& mu, const TargetSet& A, int m, int D, TermFn term)
      : mu_(mu), A_(A), m_(m), D_(D), term_(std::move(term)) {}

  PackingValue<V> run() {
    PackingValue<V> out;
    if (A_.empty()) return out;
    out.value = best(Word{}, MassExponents{}, A_.inside(Word{}), &out.witness);
    return out;
  }

 private:
  const CascadeMeasure& mu_;
  const TargetSet& A_;
  int m_, D_;
  TermFn term_;

  V best(const Word& c, const MassExponents& e, bool inside, std::vector<WitnessBlock>* wit) {
    const int d = c.length();
    if (!inside) {
      if (!A_.touches(c)) return V(0);
      if (A_.inside(c)) inside = true;
    }
    if (d == D_) {
      if (d < m_) return V(0);
      wit->push_back({c, d});
      return term_(e, d);
    }
    if (inside && mu_.uniform_below(c)) return uniform_block(c, e, wit);

    std::vector<WitnessBlock> w0, w1;
    V kids = best(c.child(0), mu_.child_exponents(c, e, 0), inside, &w0) +
             best(c.child(1), mu_.child_exponents(c, e, 1), inside, &w1);
    if (d >= m_) {
      V own = term_(e, d);
      if (!(own < kids)) {
        wit->push_back({c, d});
        return own;
      }
    }
    wit->insert(wit->end(), w0.begin(), w0.end());
    wit->insert(wit->end(), w1.begin(), w1.end());
    return kids;
  }

  // whole subtree inside A with halving masses: all nodes of a level are alike
  V uniform_block(const Word& c, const MassExponents& e, std::vector<WitnessBlock>* wit) {
    const int d = c.length();
    V u = V(0);
    int chosen = D_;
    for (int level = D_; level >= d; --level) {
      MassExponents el = e;
      el.halvings += level - d;
      if (level == D_) {
        u = level >= m_ ? term_(el, level) : V(0);
        continue;
      }
      V kids = u + u;
      if (level >= m_) {
        V own = term_(el, level);
        if (!(own < kids)) {
          u = own;
          chosen = level;
          continue;
        }
      }
      u = kids;
    }
    if (u != V(0)) wit->push_back({c, chosen});
    return u;
  }
};

}  // namespace detail

// sup over centered packings of A with radii in [2^-depth_max, 2^-m] of sum r^t e^{<q,chi>}
PackingValue<double> sup_packing_value(const TargetSet& A, const Kernel& K, const PackingQuery& query);
// exact version; integer weight and t, exact kernels only
PackingValue<Rational> sup_packing_value_exact(const TargetSet& A, const Kernel& K, const ParamVector& q, int t,
                                               int m, int depth_max);

// log2 of the full-antichain sum at each depth in [lo, hi]
std::vector<double> partition_profile(const TargetSet& A, const Kernel& K, const ParamVector& q, double t, int lo,
                                      int hi);

struct SpectrumEstimate {
  ParamVector q;
  double theta = 0.0;  // weight of q (q, or q1+q2)
  std::vector<int> depths;
  std::vector<double> log_sums;  // log2 S_m
  double slope = 0.0;     // least squares over the fit window
  double residual = 0.0;
  double dominant = 0.0;  // max over the fit window of log2(largest single term) / m
  double value = 0.0;     // reported estimate: max(slope, dominant)
  int fit_from = 0;  // first depth used in the fit
  std::optional<double> closed_form;
};

// extreme log2 masses among depth-m cylinders meeting A
struct MassRange {
  double lo = 0.0;
  double hi = 0.0;
  bool empty = true;
};
MassRange extreme_log2_mass(const TargetSet& A, const CascadeMeasure& mu, int m);

SpectrumEstimate lq_spectrum(const TargetSet& A, const Kernel& K, const ParamVector& q, int lo, int hi);

// parameter vector realising weight theta for this kernel: (theta) or (theta, 0)
ParamVector vector_for_weight(const Kernel& K, double theta);

// spectra for a theta grid, evaluated on up to `jobs` threads
std::vector<SpectrumEstimate> spectrum_sweep(const TargetSet& A, const Kernel& K, const std::vector<double>& thetas,
                                             int lo, int hi, int jobs);

struct CriticalExponent {
  double fitted = 0.0;     // slope of the partition profile
  double bisected = 0.0;   // t where the DP value stops growing between the two top depths
  int lower_depth = 0;
  int upper_depth = 0;
};

CriticalExponent critical_exponent(const TargetSet& A, const Kernel& K, const ParamVector& q, int lo, int hi,
                                   double tol = 1e-6);

// Piecewise-linear spectrum on [lo, hi]; outside the domain it is unknown.
class SpectrumFunction {
 public:
  SpectrumFunction() = default;
  SpectrumFunction(std::vector<double> thetas, std::vector<double> values, std::string label);
  static SpectrumFunction from_function(const std::function<double(double)>& f, double lo, double hi, int points,
                                        std::string label);

  bool in_domain(double theta) const;
  double operator()(double theta) const;  // throws SearchIntervalExhausted outside
  double lo() const { return x_.front(); }
  double hi() const { return x_.back(); }
  const std::vector<double>& thetas() const { return x_; }
  const std::vector<double>& values() const { return y_; }
  const std::string& label() const { return label_; }
  SpectrumFunction shifted(double delta) const;
  // largest violation of convexity on the grid (0 when convex)
  double convexity_defect() const;

 private:
  std::vector<double> x_, y_;
  std::string label_;
};

// B surrogate: B_hat := Lambda_hat on the grid, labelled as an upper surrogate
SpectrumFunction surrogate_from_estimates(const std::vector<SpectrumEstimate>& est);

}  // namespace mflab
