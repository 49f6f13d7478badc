#include "mflab/cascade_measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <tuple>

#include "mflab/errors.hpp"

namespace mflab {

void CascadeParams::validate() const {
  if (!(p0 > 0.0)) throw ParamError("p0", "must be positive");
  if (!(p1 > 0.0)) throw ParamError("p1", "must be positive");
  if (std::abs(p0 + p1 - 1.0) > 1e-12) throw ParamError("p1", "p0 + p1 must equal 1");
  if (p0 > p1) throw ParamError("p0", "p0 <= p1 required");
  if (!(beta1 > 0.0)) throw ParamError("beta1", "must lie in (0,1)");
  if (!(beta1 < gamma1)) throw ParamError("gamma1", "beta1 < gamma1 required");
  if (!(gamma1 < beta2)) throw ParamError("beta2", "gamma1 < beta2 required");
  if (!(beta2 < gamma2)) throw ParamError("gamma2", "beta2 < gamma2 required");
  if (!(gamma2 < 1.0)) throw ParamError("gamma2", "must lie in (0,1)");
  if (n0 <= 0 || n0 % 6 != 0) throw ParamError("n0", "must be a positive multiple of 6");
}

bool CascadeParams::example_admissible() const {
  return p0 < p1 && frequency_exponent(gamma2, p0, p1) < 1.0;
}

double frequency_exponent(double x, double p0, double p1) {
  return -(x * std::log(p0 / p1) + std::log(p1)) / std::log(2.0);
}

std::string to_string(CylinderType t) {
  switch (t) {
    case CylinderType::T1: return "T1";
    case CylinderType::T2: return "T2";
    default: return "Neither";
  }
}

CylinderType classify_fraction(int zeros, int length, const CascadeParams& p) {
  if (length < 1) throw InvalidArgument("classify needs a nonempty word");
  const double f = static_cast<double>(zeros) / static_cast<double>(length);
  if (p.beta1 < f && f < p.gamma1) return CylinderType::T1;
  if (p.beta2 < f && f < p.gamma2) return CylinderType::T2;
  return CylinderType::Neither;
}

CylinderType classify(const Word& w, const CascadeParams& p) {
  return classify_fraction(w.zero_count(), w.length(), p);
}

std::string to_string(ScheduleMode m) { return m == ScheduleMode::SuperExponential ? "super_exponential" : "compressed"; }

Schedule Schedule::super_exponential(int n0, int depth_limit) {
  if (n0 <= 0) throw ParamError("n0", "must be positive");
  Schedule s;
  s.mode_ = ScheduleMode::SuperExponential;
  s.points_.push_back(n0);
  // n_{3i+1} = 2^{n_{3i}} n0 dwarfs any usable depth almost immediately
  while (true) {
    const long long last = s.points_.back();
    long long next;
    const std::size_t idx = s.points_.size();
    if (idx % 3 == 1) {
      if (last >= 40) break;
      next = (1LL << last) * n0;
    } else {
      next = 2 * last;
    }
    if (next > depth_limit) break;
    s.points_.push_back(static_cast<int>(next));
  }
  return s;
}

Schedule Schedule::compressed(std::vector<int> breakpoints, int n0) {
  if (breakpoints.empty()) throw ParamError("breakpoints", "at least one breakpoint required");
  if (breakpoints.front() != n0) throw ParamError("breakpoints", "first breakpoint must equal n0");
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if ((breakpoints[i] - n0) % 6 != 0)
      throw ParamError("breakpoints", "breakpoints must be n0 plus a multiple of 6");
    if (i > 0 && breakpoints[i] <= breakpoints[i - 1])
      throw ParamError("breakpoints", "breakpoints must increase strictly");
  }
  Schedule s;
  s.mode_ = ScheduleMode::Compressed;
  s.points_ = std::move(breakpoints);
  return s;
}

int Schedule::regime_at(int depth) const {
  int p = -1;
  for (std::size_t i = 0; i < points_.size(); ++i)
    if (points_[i] <= depth) p = static_cast<int>(i);
  if (p < 0) return 1;
  return p % 3 + 1;
}

int Schedule::breakpoint_index(int depth) const {
  for (std::size_t i = 0; i < points_.size(); ++i)
    if (points_[i] == depth) return static_cast<int>(i);
  return -1;
}

std::vector<SeparationViolation> check_separation(const std::vector<GenerationFamily>& fams) {
  std::vector<SeparationViolation> out;
  for (std::size_t f = 0; f < fams.size(); ++f) {
    const auto& fam = fams[f];
    const auto& ms = fam.members;
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const int n = ms[i].word.length();
      for (std::size_t j = i + 1; j < ms.size(); ++j) {
        const int split = ms[i].word.first_mismatch(ms[j].word);
        // distance 2^-split must exceed 2^-(n-2)
        if (split < 0 || split > n - 3) {
          std::ostringstream msg;
          msg << "members " << ms[i].word.to_string() << " and " << ms[j].word.to_string()
              << " too close (split at " << split << ", depth " << n << ")";
          out.push_back({fam.k, static_cast<int>(i), static_cast<int>(j), msg.str()});
        }
      }
      if (f == 0 || ms[i].father < 0) continue;
      const auto& prev = fams[f - 1].members;
      if (ms[i].father >= static_cast<int>(prev.size())) {
        out.push_back({fam.k, static_cast<int>(i), -1, "father index out of range"});
        continue;
      }
      const Word& father = prev[static_cast<std::size_t>(ms[i].father)].word;
      if (!father.is_prefix_of(ms[i].word)) {
        out.push_back({fam.k, static_cast<int>(i), -1, "member lies outside its father"});
        continue;
      }
      // nearest point outside the father differs at index depth(father)-1
      const int fd = father.length();
      if (!(fd - 1 < n - 1)) out.push_back({fam.k, static_cast<int>(i), -1, "member touches its father's boundary"});
    }
  }
  return out;
}

int drift_levels_needed(int zeros, int length, double threshold, int letter, int max_levels) {
  for (int d = 1; d <= max_levels; ++d) {
    const double f = static_cast<double>(zeros + (letter == 0 ? d : 0)) / static_cast<double>(length + d);
    if (letter == 1 ? f < threshold : f > threshold) return d;
  }
  return -1;
}

namespace {

constexpr int kBlock = 6;

struct Extension {
  Word letters;
  int zeros = 0;
  double fraction = 0.0;     // of the extended word
  double max_running = 0.0;  // largest zero-fraction seen at intermediate depths
  double spread = 0.0;       // total deviation of running fractions from the final one
};

std::vector<Extension> all_extensions(const Word& base) {
  std::vector<Extension> out;
  const int z0 = base.zero_count();
  const int n = base.length();
  for (std::uint64_t bits = 0; bits < (1u << kBlock); ++bits) {
    Extension e;
    e.letters = Word::from_bits(bits, kBlock);
    e.zeros = e.letters.zero_count();
    e.fraction = static_cast<double>(z0 + e.zeros) / (n + kBlock);
    int z = z0;
    for (int i = 0; i < kBlock; ++i) {
      if (e.letters.letter(i) == 0) ++z;
      const double f = static_cast<double>(z) / (n + i + 1);
      e.max_running = std::max(e.max_running, f);
      e.spread += std::abs(f - e.fraction);
    }
    out.push_back(e);
  }
  return out;
}

double band_lo(CylinderType t, const CascadeParams& p) { return t == CylinderType::T1 ? p.beta1 : p.beta2; }
double band_hi(CylinderType t, const CascadeParams& p) { return t == CylinderType::T1 ? p.gamma1 : p.gamma2; }

// ordering shared by both step modes once the primary key is fixed
auto tie_key(const Extension& e) { return std::make_tuple(e.max_running, e.spread, e.letters); }

// children that keep `target`, nearest to the father's frequency first
std::vector<Extension> keep_candidates(const Member& m, CylinderType target, const CascadeParams& p) {
  const double f = static_cast<double>(m.word.zero_count()) / m.word.length();
  std::vector<Extension> c;
  for (auto& e : all_extensions(m.word))
    if (classify_fraction(m.word.zero_count() + e.zeros, m.word.length() + kBlock, p) == target) c.push_back(e);
  std::stable_sort(c.begin(), c.end(), [&](const Extension& a, const Extension& b) {
    return std::make_tuple(std::abs(a.fraction - f), tie_key(a)) < std::make_tuple(std::abs(b.fraction - f), tie_key(b));
  });
  return c;
}

// children moving toward `target` as fast as the corridor (beta1, gamma2) allows
std::vector<Extension> drift_candidates(const Member& m, CylinderType target, const CascadeParams& p) {
  const double f = static_cast<double>(m.word.zero_count()) / m.word.length();
  const double lo = band_lo(target, p), hi = band_hi(target, p);
  std::vector<Extension> c;
  for (auto& e : all_extensions(m.word))
    if (p.beta1 < e.fraction && e.fraction < p.gamma2) c.push_back(e);
  auto dist = [&](const Extension& e) {
    const int zeros = m.word.zero_count() + e.zeros;
    if (classify_fraction(zeros, m.word.length() + kBlock, p) == target) return 0.0;
    if (e.fraction <= lo) return lo - e.fraction + 1e-15;
    return e.fraction - hi + 1e-15;
  };
  std::stable_sort(c.begin(), c.end(), [&](const Extension& a, const Extension& b) {
    return std::make_tuple(dist(a), std::abs(a.fraction - f), tie_key(a)) <
           std::make_tuple(dist(b), std::abs(b.fraction - f), tie_key(b));
  });
  return c;
}

// zeros spread as late as possible (late = true) or as early as possible
Word spread_word(int zeros, int n, bool late) {
  Word w;
  for (int t = 0; t < n; ++t) {
    const long a = late ? (static_cast<long>(t + 1) * zeros) / n : (static_cast<long>(t + 1) * zeros + n - 1) / n;
    const long b = late ? (static_cast<long>(t) * zeros) / n : (static_cast<long>(t) * zeros + n - 1) / n;
    w = w.child(a > b ? 0 : 1);
  }
  return w;
}

std::vector<Word> seed_candidates(CylinderType t, const CascadeParams& p) {
  const int n = p.n0;
  const double centre = 0.5 * (band_lo(t, p) + band_hi(t, p));
  std::vector<int> zs;
  for (int z = 0; z <= n; ++z)
    if (classify_fraction(z, n, p) == t) zs.push_back(z);
  std::stable_sort(zs.begin(), zs.end(), [&](int a, int b) {
    return std::abs(static_cast<double>(a) / n - centre) < std::abs(static_cast<double>(b) / n - centre);
  });
  std::vector<Word> out;
  for (int z : zs) {
    out.push_back(spread_word(z, n, true));
    Word early = spread_word(z, n, false);
    if (early != out.back()) out.push_back(early);
  }
  return out;
}

Member make_child(const Member& father, int father_index, const Extension& e, const CascadeParams& p) {
  Member c;
  c.word = father.word.concat(e.letters);
  c.type = classify(c.word, p);
  c.father = father_index;
  c.lineage = father.lineage;
  c.branch_path = father.branch_path;
  c.branch_length = father.branch_length;
  c.type_at_cycle_start = father.type_at_cycle_start;
  return c;
}

}  // namespace

std::shared_ptr<const Generations> Generations::build(const CascadeParams& params, const Schedule& sched,
                                                      int depth_cap) {
  params.validate();
  if (params.n0 > kMaxWordLength) throw DepthExceeded("n0 exceeds the 64-letter word limit");
  if (depth_cap < params.n0) throw InvalidArgument("depth_cap must be at least n0");
  if (depth_cap > kMaxWordLength) throw DepthExceeded("depth_cap exceeds 64");

  auto g = std::make_shared<Generations>();
  g->params_ = params;
  g->schedule_ = sched;

  const auto t1 = seed_candidates(CylinderType::T1, params);
  const auto t2 = seed_candidates(CylinderType::T2, params);
  if (t1.empty()) throw InfeasibleDrift("no word of length n0 is of type T1");
  if (t2.empty()) throw InfeasibleDrift("no word of length n0 is of type T2");
  bool seeded = false;
  GenerationFamily g0;
  for (const Word& a : t1) {
    for (const Word& b : t2) {
      const int split = a.first_mismatch(b);
      if (split >= 0 && split <= params.n0 - 3) {
        Member m1, m2;
        m1.word = a;
        m1.type = CylinderType::T1;
        m1.lineage = 0;
        m2.word = b;
        m2.type = CylinderType::T2;
        m2.lineage = 1;
        m1.type_at_cycle_start = m1.type;
        m2.type_at_cycle_start = m2.type;
        g0.members = {m1, m2};
        seeded = true;
        break;
      }
    }
    if (seeded) break;
  }
  if (!seeded) throw SeparationUnsatisfiable("no separated pair of seeds of types T1 and T2");
  g0.k = 0;
  g0.depth = params.n0;
  g0.regime = 1;
  g->fams_.push_back(std::move(g0));

  for (int depth = params.n0; depth + kBlock <= depth_cap; depth += kBlock) {
    const GenerationFamily& cur = g->fams_.back();
    const int regime = sched.regime_at(depth);
    GenerationFamily next;
    next.k = cur.k + 1;
    next.depth = depth + kBlock;
    next.regime = regime;

    for (std::size_t i = 0; i < cur.members.size(); ++i) {
      const Member& m = cur.members[i];
      const int fi = static_cast<int>(i);
      auto fail = [&](const std::string& why) {
        throw InfeasibleDrift("member " + m.word.to_string() + " at depth " + std::to_string(depth) + ": " + why);
      };
      if (regime == 1) {
        if (m.type == CylinderType::Neither) fail("regime 1 needs a typed member");
        const auto cand = keep_candidates(m, m.type, params);
        if (cand.empty()) fail("no same-type child");
        const Extension& first = cand.front();
        const Extension* second = nullptr;
        for (std::size_t c = 1; c < cand.size(); ++c) {
          const int split = first.letters.first_mismatch(cand[c].letters);
          if (split >= 0 && split < 3) {
            second = &cand[c];
            break;
          }
        }
        if (!second)
          throw SeparationUnsatisfiable("member " + m.word.to_string() + ": no second child splitting within 3 letters");
        for (int s = 0; s < 2; ++s) {
          Member c = make_child(m, fi, s == 0 ? first : *second, params);
          if (c.branch_length >= 64) throw DepthExceeded("branch path too long");
          if (s) c.branch_path |= std::uint64_t{1} << c.branch_length;
          ++c.branch_length;
          next.members.push_back(c);
        }
        continue;
      }
      std::vector<Extension> cand;
      if (regime == 2) {
        cand = m.type == CylinderType::T1 ? keep_candidates(m, CylinderType::T1, params)
                                          : drift_candidates(m, CylinderType::T1, params);
      } else if (m.type_at_cycle_start == CylinderType::T1) {
        cand = drift_candidates(m, CylinderType::T2, params);
      } else {
        if (m.type != CylinderType::T1) fail("expected type T1 in regime 3");
        cand = keep_candidates(m, CylinderType::T1, params);
      }
      if (cand.empty()) fail("no admissible child");
      next.members.push_back(make_child(m, fi, cand.front(), params));
    }

    // a new drift cycle opens at n_{3i+1}: remember where each lineage stood
    const int bp = sched.breakpoint_index(next.depth);
    if (bp >= 1 && bp % 3 == 1)
      for (auto& m : next.members) m.type_at_cycle_start = m.type;
    if (bp >= 1 && bp % 3 == 2)
      for (auto& m : next.members)
        if (m.type != CylinderType::T1)
          throw InfeasibleDrift("regime 2 too short: " + m.word.to_string() + " is not T1 at depth " +
                                std::to_string(next.depth));
    if (bp >= 3 && bp % 3 == 0)
      for (auto& m : next.members)
        if (m.type_at_cycle_start == CylinderType::T1 && m.type != CylinderType::T2)
          throw InfeasibleDrift("regime 3 too short: " + m.word.to_string() + " is not T2 at depth " +
                                std::to_string(next.depth));
    for (auto& m : next.members) {
      const double f = static_cast<double>(m.word.zero_count()) / m.word.length();
      if (!(params.beta1 < f && f < params.gamma2))
        throw InfeasibleDrift("member " + m.word.to_string() + " left the corridor");
    }
    g->fams_.push_back(std::move(next));
  }

  for (const Member& m : g->fams_.back().members)
    for (int d = 0; d <= m.word.length(); ++d) g->spine_.insert(m.word.prefix(d));
  return g;
}

std::optional<int> Generations::deepest_member_through(const Word& w) const {
  const auto& ms = fams_.back().members;
  for (std::size_t i = 0; i < ms.size(); ++i)
    if (w.is_prefix_of(ms[i].word) || ms[i].word.is_prefix_of(w)) return static_cast<int>(i);
  return std::nullopt;
}

int Generations::partner(int k, int i) const {
  const auto& ms = fams_.at(static_cast<std::size_t>(k)).members;
  const int n = static_cast<int>(ms.size());
  // lineage blocks are laid out back to back with matching branch order
  return (i + n / 2) % n;
}

bool Generations::related(int k, int i, int j) const {
  const auto& ms = fams_.at(static_cast<std::size_t>(k)).members;
  return ms.at(static_cast<std::size_t>(i)).lineage != ms.at(static_cast<std::size_t>(j)).lineage;
}

bool LimitSetC::meets(const Word& c) const {
  const int h = gens_->horizon();
  if (c.length() <= h) return gens_->on_spine(c);
  return gens_->on_spine(c.prefix(h));
}

CascadeMeasure::CascadeMeasure(const CascadeMeasure& o)
    : selection_(o.selection_),
      policy_(o.policy_),
      p0_(o.p0_),
      p1_(o.p1_),
      log2_p0_(o.log2_p0_),
      log2_p1_(o.log2_p1_),
      p0_exact_(o.p0_exact_),
      p1_exact_(o.p1_exact_),
      explicit_spine_(o.explicit_spine_),
      gens_(o.gens_) {}

void CascadeMeasure::set_probabilities(double p0) {
  if (!(p0 > 0.0 && p0 < 1.0)) throw ParamError("p0", "must lie in (0,1)");
  p0_exact_ = decimal_to_rational(p0);
  p1_exact_ = Rational(1) - p0_exact_;
  p0_ = p0;
  p1_ = static_cast<double>(p1_exact_);
  log2_p0_ = std::log2(p0_);
  log2_p1_ = std::log2(p1_);
}

CascadeMeasure CascadeMeasure::uniform() {
  CascadeMeasure m;
  m.selection_ = Selection::None;
  m.set_probabilities(0.5);
  return m;
}

CascadeMeasure CascadeMeasure::bernoulli(double p0) {
  CascadeMeasure m;
  m.selection_ = Selection::All;
  m.set_probabilities(p0);
  return m;
}

CascadeMeasure CascadeMeasure::with_selected(double p0, const std::vector<Word>& selected) {
  CascadeMeasure m;
  m.selection_ = Selection::Explicit;
  m.set_probabilities(p0);
  for (const Word& w : selected)
    for (int d = 0; d <= w.length(); ++d) m.explicit_spine_.insert(w.prefix(d));
  return m;
}

CascadeMeasure CascadeMeasure::from_generations(std::shared_ptr<const Generations> gens, HorizonPolicy policy) {
  if (!gens) throw InvalidArgument("null generation families");
  CascadeMeasure m;
  m.selection_ = Selection::Generations;
  m.policy_ = policy;
  m.set_probabilities(gens->params().p0);
  m.gens_ = std::move(gens);
  return m;
}

int CascadeMeasure::depth_limit() const {
  if (selection_ == Selection::Generations && policy_ == HorizonPolicy::Strict)
    return std::min(gens_->horizon() + 1, kMaxWordLength);
  return kMaxWordLength;
}

bool CascadeMeasure::contains_selected(const Word& c) const {
  switch (selection_) {
    case Selection::None: return false;
    case Selection::All: return true;
    case Selection::Explicit: return explicit_spine_.count(c) != 0;
    case Selection::Generations:
      if (c.length() <= gens_->horizon()) return gens_->on_spine(c);
      if (policy_ == HorizonPolicy::Halve) return false;
      throw DepthExceeded("cylinder " + c.to_string() + " is below the construction horizon " +
                          std::to_string(gens_->horizon()));
  }
  return false;
}

MassExponents CascadeMeasure::child_exponents(const Word& parent, const MassExponents& pe, int letter) const {
  MassExponents e = pe;
  if (contains_selected(parent)) {
    if (letter == 0)
      ++e.zeros;
    else
      ++e.ones;
  } else {
    ++e.halvings;
  }
  return e;
}

MassExponents CascadeMeasure::exponents(const Word& c) const {
  if (c.length() > depth_limit())
    throw DepthExceeded("cylinder " + c.to_string() + " deeper than the decidable depth " +
                        std::to_string(depth_limit()));
  {
    std::shared_lock lock(memo_mutex_);
    auto it = memo_.find(c);
    if (it != memo_.end()) return it->second;
  }
  MassExponents e;
  for (int i = 0; i < c.length(); ++i) e = child_exponents(c.prefix(i), e, c.letter(i));
  std::unique_lock lock(memo_mutex_);
  memo_.emplace(c, e);
  return e;
}

double CascadeMeasure::log2_mass(const MassExponents& e) const {
  double v = -static_cast<double>(e.halvings);
  if (e.zeros) v += e.zeros * log2_p0_;
  if (e.ones) v += e.ones * log2_p1_;
  return v;
}

double CascadeMeasure::mass(const Word& c) const { return std::exp2(log2_mass(c)); }

Rational CascadeMeasure::exact_mass(const MassExponents& e) const {
  Rational r(1);
  for (int i = 0; i < e.zeros; ++i) r *= p0_exact_;
  for (int i = 0; i < e.ones; ++i) r *= p1_exact_;
  boost::multiprecision::cpp_int den(1);
  den <<= e.halvings;
  return r / Rational(den);
}

Rational CascadeMeasure::exact_mass(const Word& c) const { return exact_mass(exponents(c)); }

std::string CascadeMeasure::describe() const {
  switch (selection_) {
    case Selection::None: return "uniform";
    case Selection::All: return "bernoulli(p0=" + format_double(p0_) + ")";
    case Selection::Explicit: return "selected-set(p0=" + format_double(p0_) + ")";
    case Selection::Generations:
      return "cascade(p0=" + format_double(p0_) + ", horizon=" + std::to_string(gens_->horizon()) + ")";
  }
  return "?";
}

std::vector<SlopeSample> local_dimension_trace(const CascadeMeasure& mu, const Point& x,
                                               const std::vector<int>& depths) {
  std::vector<SlopeSample> out;
  for (int m : depths) {
    const DyadicRadius r(m);
    const Cylinder b = ball_of(x, r);
    out.push_back({m, -mu.log2_mass(b.word()) / m});
  }
  return out;
}

}  // namespace mflab
