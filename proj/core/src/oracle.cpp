#include "mflab/oracle.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace mflab::oracle {

namespace {

std::vector<Word> meeting_cylinders(const TargetSet& A, int lo, int hi) {
  std::vector<Word> out;
  std::function<void(const Word&)> go = [&](const Word& w) {
    if (!A.meets(w)) return;
    if (w.length() >= lo) out.push_back(w);
    if (w.length() < hi) {
      go(w.child(0));
      go(w.child(1));
    }
  };
  go(Word{});
  std::sort(out.begin(), out.end());
  return out;
}

bool comparable(const Word& a, const Word& b) { return a.is_prefix_of(b) || b.is_prefix_of(a); }

// Kuhn matching: can every item be served by a distinct ball with ratio <= lam?
bool perfect_matching(const std::vector<std::vector<double>>& cost, double lam) {
  const std::size_t n = cost.size();
  std::vector<int> owner(n, -1);
  std::function<bool(std::size_t, std::vector<bool>&)> augment = [&](std::size_t i, std::vector<bool>& seen) {
    for (std::size_t j = 0; j < n; ++j) {
      if (cost[i][j] > lam || seen[j]) continue;
      seen[j] = true;
      if (owner[j] < 0 || augment(static_cast<std::size_t>(owner[j]), seen)) {
        owner[j] = static_cast<int>(i);
        return true;
      }
    }
    return false;
  };
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<bool> seen(n, false);
    if (!augment(i, seen)) return false;
  }
  return true;
}

double bottleneck(const std::vector<std::vector<double>>& cost) {
  std::vector<double> vals;
  for (auto& row : cost) vals.insert(vals.end(), row.begin(), row.end());
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  for (double v : vals)
    if (perfect_matching(cost, v)) return v;
  return vals.back();
}

}  // namespace

std::vector<std::vector<Word>> all_antichains(const TargetSet& A, int m, int depth_max, std::size_t budget) {
  const std::vector<Word> nodes = meeting_cylinders(A, m, depth_max);
  std::vector<std::vector<Word>> out;
  std::vector<Word> cur;
  std::function<void(std::size_t)> go = [&](std::size_t i) {
    if (i == nodes.size()) {
      out.push_back(cur);
      if (out.size() > budget) throw BudgetExceeded("oracle antichain budget exhausted");
      return;
    }
    go(i + 1);
    for (const Word& c : cur)
      if (comparable(c, nodes[i])) return;
    cur.push_back(nodes[i]);
    go(i + 1);
    cur.pop_back();
  };
  go(0);
  return out;
}

SupPacking brute_force_sup_packing(const TargetSet& A, const Kernel& K, const ParamVector& q, int t, int m,
                                   int depth_max, const Budget& budget) {
  if (depth_max > 5) throw BudgetExceeded("oracle packing search is limited to depth 5");
  const double wd = K.weight(q);
  const int w = static_cast<int>(wd);
  if (w != wd) throw InvalidArgument("oracle needs an integer weight");
  if (K.variant() == KernelVariant::PerturbedProduct) throw InvalidArgument("oracle needs an exact kernel");
  SupPacking best;
  std::map<Word, Rational> term;
  for (const Word& c : meeting_cylinders(A, m, depth_max))
    term.emplace(c, exact_term(K.measure(), K.measure().exponents(c), c.length(), w, t));
  for (const auto& P : all_antichains(A, m, depth_max, budget.antichains)) {
    Rational s{0};
    for (const Word& c : P) s += term.at(c);
    ++best.examined;
    if (s > best.value) {
      best.value = s;
      best.argmax = P;
    }
  }
  return best;
}

BruteL brute_force_L(const TargetSet& A, const Kernel& K, const ParamVector& q, int k, int m, int u_exponent,
                     int depth_max, const Budget& budget) {
  if (depth_max > 4) throw BudgetExceeded("oracle L search is limited to depth 4");
  if (k < 1 || k > 3) throw InvalidArgument("oracle L needs 1 <= k <= 3");
  if (A.empty()) throw EmptyTarget("oracle L needs a nonempty target");
  const double w = K.weight(q);
  const std::vector<Word> cands = meeting_cylinders(A, u_exponent, depth_max);

  // every multiset of candidates of a given size whose chains hold at most k balls
  std::map<std::size_t, std::vector<std::vector<Word>>> families_of_size;
  auto families = [&](std::size_t n) -> const std::vector<std::vector<Word>>& {
    auto it = families_of_size.find(n);
    if (it != families_of_size.end()) return it->second;
    std::vector<std::vector<Word>> out;
    std::vector<Word> cur;
    auto overlap_ok = [&] {
      for (const Word& x : cur) {
        int c = 0;
        for (const Word& z : cur)
          if (z.is_prefix_of(x)) ++c;
        if (c > k) return false;
      }
      return true;
    };
    std::function<void(std::size_t)> go = [&](std::size_t i) {
      if (cur.size() == n) {
        out.push_back(cur);
        if (out.size() > budget.families) throw BudgetExceeded("oracle family budget exhausted");
        return;
      }
      if (i == cands.size()) return;
      for (int c = 0; c <= k && cur.size() + static_cast<std::size_t>(c) <= n; ++c) {
        for (int j = 0; j < c; ++j) cur.push_back(cands[i]);
        if (overlap_ok()) go(i + 1);
        for (int j = 0; j < c; ++j) cur.pop_back();
      }
    };
    go(0);
    return families_of_size.emplace(n, std::move(out)).first->second;
  };

  BruteL res;
  res.value = -std::numeric_limits<double>::infinity();
  for (const auto& P : all_antichains(A, m, depth_max, budget.antichains)) {
    if (P.empty()) continue;
    ++res.packings;
    double inner = std::numeric_limits<double>::infinity();
    std::vector<Word> arg;
    for (const auto& F : families(P.size())) {
      ++res.families;
      std::vector<std::vector<double>> cost(P.size(), std::vector<double>(F.size()));
      for (std::size_t i = 0; i < P.size(); ++i)
        for (std::size_t j = 0; j < F.size(); ++j) cost[i][j] = replacement_ratio(K, w, F[j], P[i].length());
      const double v = bottleneck(cost);
      if (v < inner) {
        inner = v;
        arg = F;
      }
    }
    if (inner > res.value) {
      res.value = inner;
      res.packing = P;
      res.replacement = arg;
    }
  }
  return res;
}

}  // namespace mflab::oracle

#include <random>
#include <sstream>

namespace mflab::oracle {

bool EquivalenceReport::all_equal() const {
  return std::all_of(rows.begin(), rows.end(), [](const EquivalenceRow& r) { return r.equal; });
}

std::string EquivalenceReport::table() const {
  std::ostringstream os;
  os << "kind\tindex\tinstance\tfast\tbrute\tequal\n";
  for (const auto& r : rows)
    os << r.kind << "\t" << r.index << "\t" << r.instance << "\t" << r.fast << "\t" << r.brute << "\t"
       << (r.equal ? "yes" : "NO") << "\n";
  return os.str();
}

namespace {

using Rng = std::mt19937_64;

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Word random_word(Rng& rng, int len) {
  std::uint64_t bits = len == 0 ? 0 : rng() & ((std::uint64_t{1} << len) - 1);
  return Word::from_bits(bits, len);
}

TargetSet random_target(Rng& rng, int depth) {
  std::vector<Word> picked;
  const int n = uniform_int(rng, 1, 3);
  for (int tries = 0; static_cast<int>(picked.size()) < n && tries < 20; ++tries) {
    const Word w = random_word(rng, uniform_int(rng, 0, depth));
    if (std::none_of(picked.begin(), picked.end(), [&](const Word& o) { return comparable(o, w); }))
      picked.push_back(w);
  }
  return TargetSet(picked);
}

struct RandomMeasure {
  std::shared_ptr<const CascadeMeasure> mu;
  std::string text;
};

RandomMeasure random_measure(Rng& rng, int depth) {
  static const double p0s[] = {0.2, 0.3, 0.4, 0.5};
  const double p0 = p0s[uniform_int(rng, 0, 3)];
  switch (uniform_int(rng, 0, 2)) {
    case 0: return {std::make_shared<const CascadeMeasure>(CascadeMeasure::uniform()), "uniform"};
    case 1:
      return {std::make_shared<const CascadeMeasure>(CascadeMeasure::bernoulli(p0)),
              "bernoulli(" + format_double(p0) + ")"};
    default: {
      std::vector<Word> sel;
      std::string s;
      for (int i = uniform_int(rng, 1, 2); i > 0; --i) {
        sel.push_back(random_word(rng, depth));
        s += (s.empty() ? "" : "+") + (depth == 0 ? std::string("e") : sel.back().to_string());
      }
      return {std::make_shared<const CascadeMeasure>(CascadeMeasure::with_selected(p0, sel)),
              "selected(" + format_double(p0) + ";" + s + ")"};
    }
  }
}

std::size_t count_meeting(const TargetSet& A, int lo, int hi) { return meeting_cylinders(A, lo, hi).size(); }

}  // namespace

EquivalenceReport packing_equivalence(std::uint64_t seed, int count) {
  Rng rng(seed);
  EquivalenceReport rep;
  for (int i = 0; i < count;) {
    const int D = uniform_int(rng, 1, 5);
    const int m = uniform_int(rng, 1, D);
    const TargetSet A = random_target(rng, D);
    if (count_meeting(A, m, D) > 18) continue;
    const RandomMeasure rm = random_measure(rng, D);
    const bool product = uniform_int(rng, 0, 1) == 1;
    const int w = uniform_int(rng, 0, 3);
    const int t = uniform_int(rng, -2, 2);
    const Kernel K(product ? KernelVariant::Product : KernelVariant::Olsen, rm.mu, 0.0);
    const ParamVector q = product ? ParamVector{{static_cast<double>(w - 1), 1.0}}
                                  : ParamVector{{static_cast<double>(w)}};
    const auto fast = sup_packing_value_exact(A, K, q, t, m, D);
    const auto brute = brute_force_sup_packing(A, K, q, t, m, D);
    EquivalenceRow row;
    row.kind = "packing";
    row.index = i;
    std::ostringstream ins;
    ins << rm.text << " " << (product ? "product" : "olsen") << " q=" << q.to_string() << " t=" << t << " m=" << m
        << " D=" << D << " A=" << A.to_string();
    row.instance = ins.str();
    row.fast = rational_to_string(fast.value);
    row.brute = rational_to_string(brute.value);
    row.equal = fast.value == brute.value;
    rep.rows.push_back(row);
    ++i;
  }
  return rep;
}

EquivalenceReport L_equivalence(std::uint64_t seed, int count) {
  Rng rng(seed);
  EquivalenceReport rep;
  static const double weights[] = {-1.0, 0.5, 1.0, 2.0};
  for (int i = 0; i < count;) {
    const int D = uniform_int(rng, 1, 4);
    const int m = uniform_int(rng, 1, D);
    const int k = uniform_int(rng, 1, 3);
    UEpsilonRule u;
    u.ratio = uniform_int(rng, 0, 1) ? 1.0 : 0.5;
    const int du = u.replacement_exponent(m);
    const TargetSet A = random_target(rng, D);
    if (count_meeting(A, du, D) > 10) continue;
    if (all_antichains(A, m, D, 1u << 20).size() > 3000) continue;
    const RandomMeasure rm = random_measure(rng, D);
    const Kernel K(KernelVariant::Olsen, rm.mu, 0.0);
    const ParamVector q{{weights[uniform_int(rng, 0, 3)]}};
    LQuery lq;
    lq.q = q;
    lq.k = k;
    lq.m = m;
    lq.depth_max = D;
    lq.u = u;
    lq.strategy = LStrategy::Exact;
    const LResult fast = L_value(A, K, lq);
    const BruteL brute = brute_force_L(A, K, q, k, m, du, D);
    EquivalenceRow row;
    row.kind = "L";
    row.index = i;
    std::ostringstream ins;
    ins << rm.text << " q=" << q.to_string() << " k=" << k << " m=" << m << " u=" << du << " D=" << D
        << " A=" << A.to_string();
    row.instance = ins.str();
    row.fast = format_double(fast.value);
    row.brute = format_double(brute.value);
    row.equal = std::abs(fast.value - brute.value) <= 1e-12 && fast.witness_valid && fast.dominance_ok;
    rep.rows.push_back(row);
    ++i;
  }
  return rep;
}

}  // namespace mflab::oracle
