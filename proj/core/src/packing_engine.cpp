#include "mflab/packing_engine.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <limits>
#include <sstream>
#include <thread>

namespace mflab {

TargetSet::TargetSet(std::vector<Word> cylinders) {
  std::sort(cylinders.begin(), cylinders.end());
  cylinders.erase(std::unique(cylinders.begin(), cylinders.end()), cylinders.end());
  // sorted lexicographically, a nested pair is always adjacent after sorting by prefix order
  for (std::size_t i = 1; i < cylinders.size(); ++i)
    if (cylinders[i - 1].is_prefix_of(cylinders[i]))
      throw InvalidArgument("target cylinders must be pairwise disjoint: " + cylinders[i - 1].to_string() + " contains " +
                            cylinders[i].to_string());
  cyl_ = std::move(cylinders);
  for (const Word& w : cyl_) {
    members_.insert(w);
    max_depth_ = std::max(max_depth_, w.length());
    for (int d = 0; d <= w.length(); ++d) prefixes_.insert(w.prefix(d));
  }
}

bool TargetSet::inside(const Word& c) const {
  const int top = std::min(c.length(), max_depth_);
  for (int d = 0; d <= top; ++d)
    if (members_.count(c.prefix(d))) return true;
  return false;
}

std::string TargetSet::to_string() const {
  std::string s = "{";
  for (std::size_t i = 0; i < cyl_.size(); ++i) {
    if (i) s += ",";
    s += cyl_[i].to_string();
  }
  return s + "}";
}

PackingCheck validate_packing(const CenteredPacking& p, const TargetSet& A, int eps_exponent) {
  PackingCheck out;
  for (std::size_t i = 0; i < p.balls.size(); ++i) {
    const Word& b = p.balls[i];
    if (b.length() < eps_exponent) out.violations.push_back("ball " + b.to_string() + " larger than epsilon");
    if (!A.meets(b)) out.violations.push_back("ball " + b.to_string() + " has no center in the target");
    for (std::size_t j = i + 1; j < p.balls.size(); ++j)
      if (b.first_mismatch(p.balls[j]) < 0)
        out.violations.push_back("balls " + b.to_string() + " and " + p.balls[j].to_string() + " overlap");
  }
  out.ok = out.violations.empty();
  return out;
}

PackingCheck validate_besicovitch(const BesicovitchPacking& p, const TargetSet& A, int k, int u_exponent) {
  PackingCheck out;
  if (p.group.size() != p.balls.size()) {
    out.ok = false;
    out.violations.push_back("group labels do not match balls");
    return out;
  }
  std::vector<int> used;
  for (int g : p.group) {
    if (g < 0) out.violations.push_back("negative group label");
    if (std::find(used.begin(), used.end(), g) == used.end()) used.push_back(g);
  }
  if (static_cast<int>(used.size()) > k)
    out.violations.push_back(std::to_string(used.size()) + " groups exceed k = " + std::to_string(k));
  for (std::size_t i = 0; i < p.balls.size(); ++i) {
    const Word& b = p.balls[i];
    if (b.length() < u_exponent) out.violations.push_back("ball " + b.to_string() + " larger than u");
    if (!A.meets(b)) out.violations.push_back("ball " + b.to_string() + " has no center in the target");
    for (std::size_t j = i + 1; j < p.balls.size(); ++j)
      if (p.group[i] == p.group[j] && b.first_mismatch(p.balls[j]) < 0)
        out.violations.push_back("balls " + b.to_string() + " and " + p.balls[j].to_string() +
                                 " overlap inside group " + std::to_string(p.group[i]));
  }
  out.ok = out.violations.empty();
  return out;
}

double packing_sum(const CenteredPacking& P, const Kernel& K, const ParamVector& q, double t) {
  const double w = K.weight(q);
  double s = 0.0;
  for (const Word& b : P.balls) s += std::exp2(log2_term(K, w, t, K.measure().log2_mass(b), b.length()));
  return s;
}

Rational exact_term(const CascadeMeasure& mu, const MassExponents& e, int depth, int weight, int t) {
  Rational m = mu.exact_mass(e);
  Rational v(1);
  const int aw = std::abs(weight);
  for (int i = 0; i < aw; ++i) v *= m;
  if (weight < 0) v = Rational(1) / v;
  boost::multiprecision::cpp_int two(1);
  two <<= static_cast<unsigned>(std::abs(t) * depth);
  // r^t = 2^{-t depth}
  return t >= 0 ? v / Rational(two) : v * Rational(two);
}

namespace {
int integral_weight(const Kernel& K, const ParamVector& q) {
  if (K.variant() == KernelVariant::PerturbedProduct)
    throw InvalidArgument("exact arithmetic needs an exact kernel (olsen or product)");
  const double w = K.weight(q);
  if (w != std::floor(w)) throw InvalidArgument("exact arithmetic needs an integer weight");
  return static_cast<int>(w);
}

void check_depths(const CascadeMeasure& mu, int m, int D) {
  if (m < 1) throw InvalidArgument("packing scale exponent must be >= 1");
  if (D < m) throw InvalidArgument("depth_max must be >= m");
  if (D > mu.depth_limit())
    throw DepthExceeded("depth " + std::to_string(D) + " beyond the measure's decidable depth " +
                        std::to_string(mu.depth_limit()));
}
}  // namespace

Rational packing_sum_exact(const CenteredPacking& P, const Kernel& K, const ParamVector& q, int t) {
  const int w = integral_weight(K, q);
  Rational s(0);
  for (const Word& b : P.balls) s += exact_term(K.measure(), K.measure().exponents(b), b.length(), w, t);
  return s;
}

PackingValue<double> sup_packing_value(const TargetSet& A, const Kernel& K, const PackingQuery& query) {
  check_depths(K.measure(), query.m, query.depth_max);
  const double w = K.weight(query.q);
  const CascadeMeasure& mu = K.measure();
  detail::AntichainDP<double> dp(mu, A, query.m, query.depth_max, [&](const MassExponents& e, int depth) {
    return std::exp2(log2_term(K, w, query.t, mu.log2_mass(e), depth));
  });
  return dp.run();
}

PackingValue<Rational> sup_packing_value_exact(const TargetSet& A, const Kernel& K, const ParamVector& q, int t, int m,
                                               int depth_max) {
  check_depths(K.measure(), m, depth_max);
  const int w = integral_weight(K, q);
  const CascadeMeasure& mu = K.measure();
  detail::AntichainDP<Rational> dp(mu, A, m, depth_max, [&](const MassExponents& e, int depth) {
    return exact_term(mu, e, depth, w, t);
  });
  return dp.run();
}

namespace {
struct ProfileWalker {
  const TargetSet& A;
  const Kernel& K;
  const CascadeMeasure& mu;
  double w, t;
  int lo, hi;
  std::vector<Log2Sum>& acc;

  void walk(const Word& c, const MassExponents& e, bool inside) {
    const int d = c.length();
    if (!inside) {
      if (!A.touches(c)) return;
      if (A.inside(c)) inside = true;
    }
    if (inside && mu.uniform_below(c)) {
      // 2^{m-d} equal descendants at each depth m
      for (int m = std::max(d, lo); m <= hi; ++m) {
        MassExponents em = e;
        em.halvings += m - d;
        acc[static_cast<std::size_t>(m - lo)].add(log2_term(K, w, t, mu.log2_mass(em), m) + (m - d));
      }
      return;
    }
    if (d >= lo) acc[static_cast<std::size_t>(d - lo)].add(log2_term(K, w, t, mu.log2_mass(e), d));
    if (d == hi) return;
    walk(c.child(0), mu.child_exponents(c, e, 0), inside);
    walk(c.child(1), mu.child_exponents(c, e, 1), inside);
  }
};
}  // namespace

std::vector<double> partition_profile(const TargetSet& A, const Kernel& K, const ParamVector& q, double t, int lo,
                                      int hi) {
  if (lo < 0 || hi < lo) throw InvalidArgument("bad depth range");
  if (hi > K.measure().depth_limit())
    throw DepthExceeded("depth " + std::to_string(hi) + " beyond the measure's decidable depth");
  std::vector<Log2Sum> acc(static_cast<std::size_t>(hi - lo + 1));
  if (!A.empty()) {
    ProfileWalker wk{A, K, K.measure(), K.weight(q), t, lo, hi, acc};
    wk.walk(Word{}, MassExponents{}, A.inside(Word{}));
  }
  std::vector<double> out;
  for (auto& a : acc) out.push_back(a.value());
  return out;
}

namespace {

void extreme_walk(const TargetSet& A, const CascadeMeasure& mu, int m, const Word& c, const MassExponents& e,
                  bool inside, MassRange& out) {
  if (!inside) {
    if (!A.touches(c)) return;
    inside = A.inside(c);
  }
  const int d = c.length();
  const double l = mu.log2_mass(e);
  auto take = [&](double lo, double hi) {
    if (out.empty) {
      out = {lo, hi, false};
      return;
    }
    out.lo = std::min(out.lo, lo);
    out.hi = std::max(out.hi, hi);
  };
  if (d == m) return take(l, l);
  if (inside && mu.selection() == CascadeMeasure::Selection::All) {
    const double a = std::log2(mu.p0()), b = std::log2(mu.p1());
    return take(l + (m - d) * std::min(a, b), l + (m - d) * std::max(a, b));
  }
  if (inside && mu.uniform_below(c)) return take(l - (m - d), l - (m - d));
  extreme_walk(A, mu, m, c.child(0), mu.child_exponents(c, e, 0), inside, out);
  extreme_walk(A, mu, m, c.child(1), mu.child_exponents(c, e, 1), inside, out);
}

}  // namespace

MassRange extreme_log2_mass(const TargetSet& A, const CascadeMeasure& mu, int m) {
  MassRange out;
  if (A.empty()) return out;
  extreme_walk(A, mu, m, Word{}, MassExponents{}, false, out);
  return out;
}

ParamVector vector_for_weight(const Kernel& K, double theta) {
  return K.dim() == 1 ? ParamVector{theta} : ParamVector{theta, 0.0};
}

SpectrumEstimate lq_spectrum(const TargetSet& A, const Kernel& K, const ParamVector& q, int lo, int hi) {
  if (hi - lo + 1 < 4) throw DegenerateFit("spectrum fit needs at least 4 depths");
  SpectrumEstimate est;
  est.q = q;
  est.theta = K.weight(q);
  est.log_sums = partition_profile(A, K, q, 0.0, lo, hi);
  for (int m = lo; m <= hi; ++m) est.depths.push_back(m);
  bool any = false;
  for (double v : est.log_sums) any = any || std::isfinite(v);
  if (!any) throw DegenerateFit("all partition sums vanish");

  const int count = hi - lo + 1;
  const int used = std::max(4, (count + 1) / 2);
  est.fit_from = hi - used + 1;
  std::vector<double> xs, ys;
  for (int m = est.fit_from; m <= hi; ++m) {
    const double v = est.log_sums[static_cast<std::size_t>(m - lo)];
    if (!std::isfinite(v)) throw DegenerateFit("partition sum vanishes inside the fit window");
    xs.push_back(m);
    ys.push_back(v);
  }
  const LinearFit fit = least_squares(xs, ys);
  est.slope = fit.slope;
  est.residual = fit.residual;
  // S_m is at least its largest term.  At finite depth the bulk of cylinders
  // that left the heavy paths early can still outweigh those paths and pin the
  // fitted slope to the bulk rate; the largest-term rate guards against that.
  est.dominant = -std::numeric_limits<double>::infinity();
  const double w = est.theta;
  for (int m = est.fit_from; m <= hi; ++m) {
    const MassRange r = extreme_log2_mass(A, K.measure(), m);
    if (r.empty) continue;
    const double top = std::max(log2_term(K, w, 0.0, r.lo, m), log2_term(K, w, 0.0, r.hi, m));
    est.dominant = std::max(est.dominant, top / m);
  }
  est.value = std::max(est.slope, est.dominant);

  const bool whole = A.size() == 1 && A.cylinders().front().empty();
  if (whole && K.variant() != KernelVariant::PerturbedProduct) {
    const auto sel = K.measure().selection();
    if (sel == CascadeMeasure::Selection::None) est.closed_form = 1.0 - est.theta;
    if (sel == CascadeMeasure::Selection::All)
      est.closed_form = std::log2(std::pow(K.measure().p0(), est.theta) + std::pow(K.measure().p1(), est.theta));
  }
  return est;
}

std::vector<SpectrumEstimate> spectrum_sweep(const TargetSet& A, const Kernel& K, const std::vector<double>& thetas,
                                             int lo, int hi, int jobs) {
  std::vector<SpectrumEstimate> out(thetas.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < thetas.size();) {
      try {
        out[i] = lq_spectrum(A, K, vector_for_weight(K, thetas[i]), lo, hi);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(thetas.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
  return out;
}

CriticalExponent critical_exponent(const TargetSet& A, const Kernel& K, const ParamVector& q, int lo, int hi,
                                   double tol) {
  const SpectrumEstimate est = lq_spectrum(A, K, q, lo, hi);
  CriticalExponent ce;
  ce.fitted = est.value;
  ce.lower_depth = est.fit_from;
  ce.upper_depth = hi;
  // growth of the finest-scale packing value between the two depths, as a function of t
  auto growth = [&](double t) {
    PackingQuery a{q, t, ce.upper_depth, ce.upper_depth};
    PackingQuery b{q, t, ce.lower_depth, ce.lower_depth};
    return std::log2(sup_packing_value(A, K, a).value) - std::log2(sup_packing_value(A, K, b).value);
  };
  double left = ce.fitted - 1.0, right = ce.fitted + 1.0;
  for (int i = 0; i < 60 && growth(left) <= 0; ++i) left -= 2.0 * (right - left);
  for (int i = 0; i < 60 && growth(right) >= 0; ++i) right += 2.0 * (right - left);
  while (right - left > tol) {
    const double mid = 0.5 * (left + right);
    (growth(mid) > 0 ? left : right) = mid;
  }
  ce.bisected = 0.5 * (left + right);
  return ce;
}

SpectrumFunction::SpectrumFunction(std::vector<double> thetas, std::vector<double> values, std::string label)
    : x_(std::move(thetas)), y_(std::move(values)), label_(std::move(label)) {
  if (x_.size() != y_.size() || x_.size() < 2) throw InvalidArgument("spectrum needs >= 2 grid points");
  for (std::size_t i = 1; i < x_.size(); ++i)
    if (!(x_[i] > x_[i - 1])) throw InvalidArgument("spectrum grid must increase strictly");
}

SpectrumFunction SpectrumFunction::from_function(const std::function<double(double)>& f, double lo, double hi,
                                                 int points, std::string label) {
  std::vector<double> x, y;
  for (int i = 0; i < points; ++i) {
    const double th = lo + (hi - lo) * i / (points - 1);
    x.push_back(th);
    y.push_back(f(th));
  }
  return SpectrumFunction(std::move(x), std::move(y), std::move(label));
}

bool SpectrumFunction::in_domain(double theta) const {
  return !x_.empty() && theta >= x_.front() && theta <= x_.back();
}

double SpectrumFunction::operator()(double theta) const {
  if (!in_domain(theta))
    throw SearchIntervalExhausted("spectrum evaluated outside its grid at " + format_double(theta));
  auto it = std::upper_bound(x_.begin(), x_.end(), theta);
  if (it == x_.end()) return y_.back();
  const std::size_t i = static_cast<std::size_t>(it - x_.begin());
  if (i == 0) return y_.front();
  const double s = (theta - x_[i - 1]) / (x_[i] - x_[i - 1]);
  return y_[i - 1] + s * (y_[i] - y_[i - 1]);
}

SpectrumFunction SpectrumFunction::shifted(double delta) const {
  std::vector<double> y = y_;
  for (double& v : y) v += delta;
  return SpectrumFunction(x_, std::move(y), label_ + "+shift");
}

double SpectrumFunction::convexity_defect() const {
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < x_.size(); ++i) {
    const double s1 = (y_[i] - y_[i - 1]) / (x_[i] - x_[i - 1]);
    const double s2 = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    worst = std::max(worst, s1 - s2);
  }
  return worst;
}

SpectrumFunction surrogate_from_estimates(const std::vector<SpectrumEstimate>& est) {
  std::vector<double> x, y;
  for (const auto& e : est) {
    x.push_back(e.theta);
    y.push_back(e.value);
  }
  return SpectrumFunction(std::move(x), std::move(y), "Lambda-hat (upper surrogate for B)");
}

}  // namespace mflab
