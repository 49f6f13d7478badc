#include "mflab/bounds.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <thread>

namespace mflab {

namespace {
constexpr double kLn2 = 0.69314718055994530942;
}

int first_constrained_scale(double p) {
  if (!(p > 0)) throw ParamError("p", "must be positive");
  int m = 1;
  while (std::ldexp(1.0, m) <= p) ++m;
  return m;
}

namespace {

struct LevelWalker {
  const Kernel& K;
  const CascadeMeasure& mu;
  double w;
  double bound;  // <q,alpha> + eta
  int m0, D;
  bool limit;
  std::vector<Word>& out;

  // r^{bound} <= e^{<q,chi>} at r = 2^-depth, in log2 units
  bool scale_ok(const MassExponents& e, int depth) const {
    if (depth < m0) return true;
    const double lhs = K.chi_at(w, mu.log2_mass(e), depth) / kLn2;
    return lhs >= -bound * depth - 1e-12 * std::max(1, depth);
  }

  void walk(const Word& c, const MassExponents& e) {
    const int d = c.length();
    if (!scale_ok(e, d)) return;
    const bool flat = mu.uniform_below(c);
    if (flat) {
      // every point below has local exponent 1, so the ratio tends to the weight
      if (limit && w > bound + 1e-12) return;
      for (int level = d + 1; level <= D; ++level) {
        MassExponents el = e;
        el.halvings += level - d;
        if (!scale_ok(el, level)) return;
      }
      out.push_back(c);
      return;
    }
    if (d == D) {
      out.push_back(c);
      return;
    }
    walk(c.child(0), mu.child_exponents(c, e, 0));
    walk(c.child(1), mu.child_exponents(c, e, 1));
  }
};

}  // namespace

TargetSet level_set(const Kernel& K, const LevelSetSpec& spec) {
  if (spec.eta < 0) throw ParamError("eta", "must be nonnegative");
  const int m0 = first_constrained_scale(spec.p);
  if (spec.working_depth < m0 - 1)
    throw InvalidArgument("working depth below log2(p)");
  if (spec.working_depth > K.measure().depth_limit())
    throw DepthExceeded("working depth beyond the measure's decidable depth");
  std::vector<Word> out;
  LevelWalker wk{K, K.measure(), K.weight(spec.q), alpha_pair(spec.alpha, spec.q) + spec.eta, m0,
                 spec.working_depth, spec.limit_condition, out};
  wk.walk(Word{}, MassExponents{});
  return TargetSet(std::move(out));
}

int UEpsilonRule::replacement_exponent(int m) const {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ParamError("u_ratio", "must lie in (0, 1]");
  const int e = static_cast<int>(std::ceil(ratio * m - 1e-12));
  return std::clamp(e, 1, m);
}

std::string to_string(LStrategy s) { return s == LStrategy::Exact ? "exact" : "structured"; }

double replacement_ratio(const Kernel& K, double weight, const Word& y, int packing_depth) {
  return K.chi_at(weight, K.measure().log2_mass(y), y.length()) / (-packing_depth * kLn2);
}

namespace {

// ---------------------------------------------------------------------------
// Inner infimum.  A ratio depends on the packing ball only through its depth,
// so items of equal depth are interchangeable and, for a threshold lambda, the
// admissible replacement sets are nested across depth classes.  Feasibility is
// then Hall's condition on cumulative counts, decided by a Pareto DP on the
// tree of candidate cylinders with a per-path multiplicity budget k.

using Profile = std::vector<int>;  // cumulative counts per class, capped

struct CandNode {
  Word word;
  int child[2] = {-1, -1};
  bool usable = false;  // depth within [d_u, D]
};

struct CandidateTree {
  std::vector<CandNode> nodes;
  std::vector<int> roots;  // depth-d_u nodes meeting A
};

CandidateTree build_candidates(const TargetSet& A, int du, int D, std::size_t node_budget) {
  CandidateTree t;
  std::vector<Word> frontier{Word{}};
  for (int d = 0; d < du; ++d) {
    std::vector<Word> next;
    for (const Word& w : frontier)
      for (int l = 0; l < 2; ++l) {
        Word c = w.child(l);
        if (A.meets(c)) next.push_back(c);
      }
    frontier.swap(next);
    if (frontier.size() > node_budget) throw BudgetExceeded("candidate tree exceeds the node budget");
  }
  // explicit stack to keep deep spines off the call stack
  auto add = [&](const Word& w) {
    t.nodes.push_back(CandNode{w, {-1, -1}, true});
    return static_cast<int>(t.nodes.size() - 1);
  };
  std::vector<int> stack;
  for (const Word& r : frontier) {
    t.roots.push_back(add(r));
    stack.push_back(t.roots.back());
  }
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const Word w = t.nodes[static_cast<std::size_t>(id)].word;
    if (w.length() >= D) continue;
    for (int l = 0; l < 2; ++l) {
      Word c = w.child(l);
      if (!A.meets(c)) continue;
      const int cid = add(c);
      t.nodes[static_cast<std::size_t>(id)].child[l] = cid;
      stack.push_back(cid);
      if (t.nodes.size() > node_budget) throw BudgetExceeded("candidate tree exceeds the node budget");
    }
  }
  return t;
}

struct InnerSolver {
  const Kernel& K;
  double w;
  const CandidateTree& tree;
  int k;
  std::vector<int> class_depth;  // most demanding first
  std::vector<int> need;         // cumulative item counts per class
  std::vector<double> chi;       // per candidate node, in nats
  double lambda = 0.0;
  std::vector<int> tier;         // per node, class count if useless

  struct Entry {
    Profile prof;
    int copies = 0;
    int left = -1, right = -1;  // entries in children tables
  };
  // table[node][budget] -> pareto entries
  std::vector<std::vector<std::vector<Entry>>> table;

  InnerSolver(const Kernel& K_, double w_, const CandidateTree& t, int k_, const std::map<int, int>& counts)
      : K(K_), w(w_), tree(t), k(k_) {
    for (auto& [d, n] : counts) {
      (void)n;
      class_depth.push_back(d);
    }
    // with a nonnegative weight deeper balls tolerate more; reverse otherwise
    if (w < 0) std::reverse(class_depth.begin(), class_depth.end());
    int acc = 0;
    for (int d : class_depth) {
      acc += counts.at(d);
      need.push_back(acc);
    }
    chi.resize(tree.nodes.size());
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const Word& y = tree.nodes[i].word;
      chi[i] = K.chi_at(w, K.measure().log2_mass(y), y.length());
    }
  }

  double ratio(std::size_t node, int depth) const { return chi[node] / (-depth * kLn2); }

  void assign_tiers() {
    const int L = static_cast<int>(class_depth.size());
    tier.assign(tree.nodes.size(), L);
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      int first = L;
      for (int c = 0; c < L; ++c) {
        const bool ok = ratio(i, class_depth[static_cast<std::size_t>(c)]) <= lambda;
        if (ok && first == L) first = c;
        if (!ok && first < L)
          throw InvalidArgument("replacement sets are not nested across depths for this kernel; exact inner search unsupported");
      }
      tier[i] = first;
    }
  }

  static bool dominates(const Profile& a, const Profile& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] < b[i]) return false;
    return true;
  }

  static void prune(std::vector<Entry>& v) {
    std::vector<Entry> keep;
    for (auto& e : v) {
      bool dom = false;
      for (auto& f : keep)
        if (dominates(f.prof, e.prof)) {
          dom = true;
          break;
        }
      if (dom) continue;
      keep.erase(std::remove_if(keep.begin(), keep.end(), [&](const Entry& f) { return dominates(e.prof, f.prof); }),
                 keep.end());
      keep.push_back(e);
    }
    v.swap(keep);
  }

  Profile add_profiles(const Profile& a, const Profile& b) const {
    Profile r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = std::min(a[i] + b[i], need[i]);
    return r;
  }

  Profile with_copies(Profile p, int t, int copies) const {
    for (std::size_t i = static_cast<std::size_t>(t); i < p.size(); ++i) p[i] = std::min(p[i] + copies, need[i]);
    return p;
  }

  void solve_node(int id) {
    const auto& n = tree.nodes[static_cast<std::size_t>(id)];
    auto& tab = table[static_cast<std::size_t>(id)];
    tab.assign(static_cast<std::size_t>(k + 1), {});
    const Profile zero(need.size(), 0);
    const int L = static_cast<int>(need.size());
    for (int b = 0; b <= k; ++b) {
      std::vector<Entry> out;
      const int tr = tier[static_cast<std::size_t>(id)];
      const int max_copies = (n.usable && tr < L) ? b : 0;
      for (int c = 0; c <= max_copies; ++c) {
        const int rest = b - c;
        std::vector<Entry> lefts{{zero, 0, -1, -1}}, rights{{zero, 0, -1, -1}};
        if (n.child[0] >= 0) lefts = table[static_cast<std::size_t>(n.child[0])][static_cast<std::size_t>(rest)];
        if (n.child[1] >= 0) rights = table[static_cast<std::size_t>(n.child[1])][static_cast<std::size_t>(rest)];
        for (std::size_t i = 0; i < lefts.size(); ++i)
          for (std::size_t j = 0; j < rights.size(); ++j) {
            Entry e;
            e.prof = with_copies(add_profiles(lefts[i].prof, rights[j].prof), tr, c);
            e.copies = c;
            e.left = n.child[0] >= 0 ? static_cast<int>(i) : -1;
            e.right = n.child[1] >= 0 ? static_cast<int>(j) : -1;
            out.push_back(std::move(e));
          }
      }
      prune(out);
      tab[static_cast<std::size_t>(b)] = std::move(out);
    }
  }

  // post-order over the whole forest
  void solve_all() {
    table.assign(tree.nodes.size(), {});
    std::vector<std::pair<int, bool>> st;
    for (int r : tree.roots) st.push_back({r, false});
    while (!st.empty()) {
      auto [id, done] = st.back();
      st.pop_back();
      if (done) {
        solve_node(id);
        continue;
      }
      st.push_back({id, true});
      for (int l = 0; l < 2; ++l) {
        const int c = tree.nodes[static_cast<std::size_t>(id)].child[l];
        if (c >= 0) st.push_back({c, false});
      }
    }
  }

  struct ForestPick {
    Profile prof;
    std::vector<int> entry;  // chosen entry per root
  };

  std::optional<ForestPick> feasible(double lam) {
    lambda = lam;
    assign_tiers();
    solve_all();
    // combine roots (disjoint subtrees, each with its own budget k)
    std::vector<ForestPick> acc{{Profile(need.size(), 0), {}}};
    for (int r : tree.roots) {
      std::vector<ForestPick> next;
      const auto& tab = table[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
      for (auto& a : acc)
        for (std::size_t j = 0; j < tab.size(); ++j) {
          ForestPick p{add_profiles(a.prof, tab[j].prof), a.entry};
          p.entry.push_back(static_cast<int>(j));
          next.push_back(std::move(p));
        }
      // pareto prune
      std::vector<ForestPick> keep;
      for (auto& e : next) {
        bool dom = false;
        for (auto& f : keep)
          if (dominates(f.prof, e.prof)) {
            dom = true;
            break;
          }
        if (dom) continue;
        keep.erase(std::remove_if(keep.begin(), keep.end(),
                                  [&](const ForestPick& f) { return dominates(e.prof, f.prof); }),
                   keep.end());
        keep.push_back(std::move(e));
      }
      acc.swap(keep);
    }
    for (auto& a : acc)
      if (a.prof == need) return a;
    return std::nullopt;
  }

  void collect(int id, int budget, int entry, std::vector<Word>& balls) const {
    const auto& e = table[static_cast<std::size_t>(id)][static_cast<std::size_t>(budget)][static_cast<std::size_t>(entry)];
    const auto& n = tree.nodes[static_cast<std::size_t>(id)];
    for (int c = 0; c < e.copies; ++c) balls.push_back(n.word);
    if (n.child[0] >= 0) collect(n.child[0], budget - e.copies, e.left, balls);
    if (n.child[1] >= 0) collect(n.child[1], budget - e.copies, e.right, balls);
  }
};

struct InnerOutcome {
  double value = 0.0;
  std::vector<Word> replacement;  // index-matched to the items passed in
};

// items: packing balls; returns the exact inf over replacement families
InnerOutcome solve_inner(const Kernel& K, double w, const CandidateTree& tree, int k, const std::vector<Word>& items,
                         bool want_family) {
  std::map<int, int> counts;
  for (const Word& x : items) ++counts[x.length()];
  InnerSolver s(K, w, tree, k, counts);

  std::vector<double> cand;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i)
    for (auto& [d, n] : counts) {
      (void)n;
      cand.push_back(s.ratio(i, d));
    }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  std::size_t lo = 0, hi = cand.size();  // first feasible index in [lo, hi)
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (s.feasible(cand[mid]))
      hi = mid;
    else
      lo = mid + 1;
  }
  if (lo == cand.size()) throw Error("inner search found no admissible replacement family");
  InnerOutcome out;
  out.value = cand[lo];
  if (!want_family) return out;

  auto pick = s.feasible(out.value);
  std::vector<Word> balls;
  for (std::size_t r = 0; r < tree.roots.size(); ++r) s.collect(tree.roots[r], k, pick->entry[r], balls);
  // match: most demanding items take the best balls (Hall on nested sets)
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto rank = [&](int d) {
    return static_cast<int>(std::find(s.class_depth.begin(), s.class_depth.end(), d) - s.class_depth.begin());
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rank(items[a].length()) < rank(items[b].length()); });
  std::vector<bool> used(balls.size(), false);
  out.replacement.assign(items.size(), Word{});
  for (std::size_t idx : order) {
    const int d = items[idx].length();
    // among admissible balls take the one serving the fewest classes
    int best = -1;
    double best_ratio = 0.0;
    for (std::size_t b = 0; b < balls.size(); ++b) {
      if (used[b]) continue;
      const double r = replacement_ratio(K, w, balls[b], d);
      if (r > out.value) continue;
      if (best < 0 || r > best_ratio) {
        best = static_cast<int>(b);
        best_ratio = r;
      }
    }
    if (best < 0) throw Error("replacement matching failed");
    used[static_cast<std::size_t>(best)] = true;
    out.replacement[idx] = balls[static_cast<std::size_t>(best)];
  }
  return out;
}

// chain layering: a ball's group is one past the deepest group among its chosen ancestors
std::vector<int> layer_groups(const std::vector<Word>& balls) {
  std::vector<std::size_t> order(balls.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return balls[a].length() < balls[b].length(); });
  std::vector<int> g(balls.size(), 0);
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t i = order[oi];
    std::vector<int> taken;
    for (std::size_t oj = 0; oj < oi; ++oj) {
      const std::size_t j = order[oj];
      if (balls[j].is_prefix_of(balls[i])) taken.push_back(g[j]);
    }
    int lab = 0;
    while (std::find(taken.begin(), taken.end(), lab) != taken.end()) ++lab;
    g[i] = lab;
  }
  return g;
}

// maximal antichains of the A-meeting cylinders with depths in [m, D]
void maximal_antichains(const TargetSet& A, const Word& c, int D, std::vector<std::vector<Word>>& out,
                        std::size_t budget) {
  std::vector<Word> kids;
  if (c.length() < D)
    for (int l = 0; l < 2; ++l)
      if (A.meets(c.child(l))) kids.push_back(c.child(l));
  out.push_back({c});
  if (kids.empty()) return;
  std::vector<std::vector<Word>> combos{{}};
  for (const Word& kd : kids) {
    std::vector<std::vector<Word>> sub;
    maximal_antichains(A, kd, D, sub, budget);
    std::vector<std::vector<Word>> next;
    for (auto& a : combos)
      for (auto& b : sub) {
        auto v = a;
        v.insert(v.end(), b.begin(), b.end());
        next.push_back(std::move(v));
        if (next.size() > budget) throw BudgetExceeded("too many packings to enumerate exactly");
      }
    combos.swap(next);
  }
  for (auto& v : combos) out.push_back(std::move(v));
  if (out.size() > budget) throw BudgetExceeded("too many packings to enumerate exactly");
}

std::vector<Word> level_nodes(const TargetSet& A, int depth, std::size_t budget) {
  std::vector<Word> frontier{Word{}};
  for (int d = 0; d < depth; ++d) {
    std::vector<Word> next;
    for (const Word& w : frontier)
      for (int l = 0; l < 2; ++l)
        if (A.meets(w.child(l))) next.push_back(w.child(l));
    frontier.swap(next);
    if (frontier.size() > budget) throw BudgetExceeded("uniform-depth packing exceeds the item budget");
  }
  return frontier;
}

}  // namespace

LResult L_value(const TargetSet& A, const Kernel& K, const LQuery& qy) {
  if (A.empty()) throw EmptyTarget("L needs a nonempty target set");
  if (qy.k < 1) throw ParamError("k", "must be >= 1");
  if (qy.m < 1 || qy.depth_max < qy.m) throw InvalidArgument("need 1 <= m <= depth_max");
  if (qy.depth_max > K.measure().depth_limit()) throw DepthExceeded("depth_max beyond the measure's decidable depth");
  const double w = K.weight(qy.q);
  const int du = qy.u.replacement_exponent(qy.m);
  const int D = qy.depth_max;
  const CandidateTree tree = build_candidates(A, du, D, std::max<std::size_t>(qy.budget * 16, 1u << 12));

  std::vector<std::vector<Word>> packings;
  if (qy.strategy == LStrategy::Exact) {
    if (D > 6) throw BudgetExceeded("exact L is limited to depth 6");
    for (const Word& r : level_nodes(A, qy.m, qy.budget)) {
      std::vector<std::vector<Word>> sub;
      maximal_antichains(A, r, D, sub, qy.budget);
      if (packings.empty()) {
        packings = std::move(sub);
        continue;
      }
      std::vector<std::vector<Word>> next;
      for (auto& a : packings)
        for (auto& b : sub) {
          auto v = a;
          v.insert(v.end(), b.begin(), b.end());
          next.push_back(std::move(v));
          if (next.size() > qy.budget) throw BudgetExceeded("too many packings to enumerate exactly");
        }
      packings.swap(next);
    }
  } else {
    for (int d = qy.m; d <= D; ++d) packings.push_back(level_nodes(A, d, qy.budget));
  }

  LResult res;
  std::map<std::map<int, int>, double> memo;  // inner value by depth profile
  std::size_t worst_index = 0;
  for (std::size_t pi = 0; pi < packings.size(); ++pi) {
    const auto& P = packings[pi];
    if (P.empty()) continue;
    std::map<int, int> prof;
    double identity = -std::numeric_limits<double>::infinity();
    for (const Word& x : P) {
      ++prof[x.length()];
      identity = std::max(identity, replacement_ratio(K, w, x, x.length()));
    }
    double inner;
    auto it = memo.find(prof);
    if (it != memo.end()) {
      inner = it->second;
    } else {
      inner = solve_inner(K, w, tree, qy.k, P, false).value;
      memo.emplace(prof, inner);
    }
    ++res.packings_examined;
    if (inner > identity + 1e-12) res.dominance_ok = false;
    if (inner > res.value) {
      res.value = inner;
      worst_index = pi;
    }
  }
  if (res.packings_examined == 0) throw EmptyTarget("no packing meets the target at this scale");

  const auto& P = packings[worst_index];
  const InnerOutcome fam = solve_inner(K, w, tree, qy.k, P, true);
  LPackingRecord rec;
  rec.packing = P;
  rec.replacement = fam.replacement;
  rec.groups = layer_groups(fam.replacement);
  rec.inner = fam.value;
  rec.identity = -std::numeric_limits<double>::infinity();
  for (const Word& x : P) rec.identity = std::max(rec.identity, replacement_ratio(K, w, x, x.length()));
  const auto check = validate_besicovitch({rec.replacement, rec.groups}, A, qy.k, du);
  res.witness_valid = check.ok;
  double achieved = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < P.size(); ++i)
    achieved = std::max(achieved, replacement_ratio(K, w, rec.replacement[i], P[i].length()));
  if (std::abs(achieved - fam.value) > 1e-12) res.witness_valid = false;
  res.worst = std::move(rec);
  return res;
}

LTable L_limit(const TargetSet& A, const Kernel& K, const LQuery& base, int k_max, int m_lo, int m_hi, double tol) {
  if (k_max < 1 || m_lo < 1 || m_hi < m_lo) throw InvalidArgument("bad L table ranges");
  LTable t;
  for (int k = 1; k <= k_max; ++k) t.ks.push_back(k);
  for (int m = m_lo; m <= m_hi; ++m) t.ms.push_back(m);
  t.values.assign(t.ks.size(), std::vector<double>(t.ms.size(), 0.0));
  for (std::size_t ki = 0; ki < t.ks.size(); ++ki)
    for (std::size_t mi = 0; mi < t.ms.size(); ++mi) {
      LQuery q = base;
      q.k = t.ks[ki];
      q.m = t.ms[mi];
      t.values[ki][mi] = L_value(A, K, q).value;
    }
  for (std::size_t ki = 0; ki + 1 < t.ks.size(); ++ki)
    for (std::size_t mi = 0; mi < t.ms.size(); ++mi)
      if (t.values[ki + 1][mi] > t.values[ki][mi] + tol) {
        t.nonincreasing_in_k = false;
        t.notes.push_back("k=" + std::to_string(t.ks[ki + 1]) + " exceeds k=" + std::to_string(t.ks[ki]) +
                          " at m=" + std::to_string(t.ms[mi]));
      }
  // larger m = smaller epsilon: the value should not grow
  for (std::size_t ki = 0; ki < t.ks.size(); ++ki)
    for (std::size_t mi = 0; mi + 1 < t.ms.size(); ++mi)
      if (t.values[ki][mi + 1] > t.values[ki][mi] + tol) {
        t.nondecreasing_in_eps = false;
        t.notes.push_back("k=" + std::to_string(t.ks[ki]) + ": m=" + std::to_string(t.ms[mi + 1]) + " exceeds m=" +
                          std::to_string(t.ms[mi]));
      }
  t.value = t.values.back().back();
  return t;
}

std::string to_string(PhiValue::Kind k) {
  switch (k) {
    case PhiValue::Kind::Finite: return "finite";
    case PhiValue::Kind::Zero: return "zero";
    case PhiValue::Kind::Infinite: return "infinite";
    case PhiValue::Kind::Clipped: return "clipped";
  }
  return "?";
}

PhiValue phi(double s, double A, double t, const SpectrumFunction& B, double tol) {
  if (!(t < 0)) throw InvalidArgument("phi needs t < 0");
  if (s < 0) throw InvalidArgument("parameter outside E (negative weight)");
  auto holds = [&](double gamma) { return t * A > B((gamma - t) * s); };
  PhiValue out;
  if (s == 0) {
    if (!B.in_domain(0.0)) throw SearchIntervalExhausted("spectrum unavailable at 0");
    out.kind = holds(1.0) ? PhiValue::Kind::Zero : PhiValue::Kind::Infinite;
    out.value = out.kind == PhiValue::Kind::Zero ? 0.0 : std::numeric_limits<double>::infinity();
    return out;
  }
  const double g_lo = std::max(0.0, B.lo() / s + t);
  const double g_hi = B.hi() / s + t;
  if (!(g_hi > g_lo)) throw SearchIntervalExhausted("threshold ray leaves the spectrum grid for t = " + format_double(t));

  std::vector<double> gs{g_lo};
  for (double th : B.thetas()) {
    const double g = th / s + t;
    if (g > g_lo && g <= g_hi) gs.push_back(g);
  }
  if (gs.back() < g_hi) gs.push_back(g_hi);

  if (holds(g_lo)) {
    if (g_lo == 0.0) {
      out.kind = PhiValue::Kind::Zero;
      out.value = 0.0;
    } else {
      // grid starts above 0: the clipped end is an upper estimate
      out.value = g_lo;
    }
    return out;
  }
  for (std::size_t i = 1; i < gs.size(); ++i) {
    if (!holds(gs[i])) continue;
    double left = gs[i - 1], right = gs[i];
    // B is linear on this stretch: solve t A = B((gamma - t) s) directly, then confirm by bisection
    const double b0 = B((left - t) * s), b1 = B((right - t) * s);
    double cross = right;
    if (b1 != b0) {
      const double frac = (t * A - b0) / (b1 - b0);
      if (frac >= 0.0 && frac <= 1.0) cross = left + frac * (right - left);
    }
    while (right - left > tol) {
      const double mid = 0.5 * (left + right);
      (holds(mid) ? right : left) = mid;
    }
    out.value = (cross >= left && cross <= right) ? cross : right;
    return out;
  }
  out.kind = PhiValue::Kind::Infinite;
  out.value = std::numeric_limits<double>::infinity();
  return out;
}

std::vector<double> geometric_t_grid(int e_lo, int e_hi, int per_octave) {
  if (per_octave < 1 || e_hi < e_lo) throw InvalidArgument("bad t grid");
  std::vector<double> ts;
  for (int e = e_lo; e <= e_hi; ++e)
    for (int j = 0; j < per_octave; ++j) {
      if (e == e_hi && j > 0) break;
      ts.push_back(-std::exp2(e + static_cast<double>(j) / per_octave));
    }
  std::sort(ts.begin(), ts.end());
  return ts;
}

std::vector<double> vertex_t_candidates(double, double A, const SpectrumFunction& B) {
  std::vector<double> ts;
  if (A == 0) return ts;
  for (std::size_t i = 0; i < B.thetas().size(); ++i) {
    const double t = B.values()[i] / A;
    if (t < 0) ts.push_back(t);
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

PhiInf phi_inf(double s, double A, const SpectrumFunction& B, const std::vector<double>& t_grid, double tol) {
  PhiInf out;
  std::vector<double> ts = t_grid;
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  for (double t : ts) {
    PhiValue v;
    try {
      v = phi(s, A, t, B, tol);
    } catch (const SearchIntervalExhausted&) {
      v.kind = PhiValue::Kind::Clipped;
      v.value = std::numeric_limits<double>::quiet_NaN();
      ++out.clipped;
    }
    out.ts.push_back(t);
    out.values.push_back(v);
    if (v.kind != PhiValue::Kind::Clipped && v.value < out.value) {
      out.value = v.value;
      out.argmin_t = t;
    }
  }
  return out;
}

PeyriereResult peyriere_bound(double a, const SpectrumFunction& B) {
  PeyriereResult r;
  std::vector<double> pts;
  if (B.in_domain(0.0)) pts.push_back(0.0);
  for (double th : B.thetas())
    if (th >= 0) pts.push_back(th);
  std::sort(pts.begin(), pts.end());
  for (double th : pts) {
    const double v = a * th + B(th);
    if (v < r.value) {
      r.value = v;
      r.argmin = th;
    }
  }
  if (pts.empty()) throw SearchIntervalExhausted("spectrum grid has no theta >= 0");
  return r;
}

PeyriereResult peyriere_bound_2d(double a, const std::vector<std::pair<ParamVector, double>>& grid) {
  PeyriereResult r;
  for (const auto& [q, b] : grid) {
    if (!q.in_admissible_region()) continue;
    const double v = a * q.sum() + b;
    if (v < r.value) {
      r.value = v;
      r.argmin = q.sum();
    }
  }
  return r;
}

namespace {

std::string subset_key(const TargetSet& s) { return s.to_string(); }

TargetSet restrict_to(const TargetSet& A, const Word& M) {
  std::vector<Word> out;
  for (const Word& c : A.cylinders()) {
    if (M.is_prefix_of(c)) out.push_back(c);
    else if (c.is_prefix_of(M)) out.push_back(M);
  }
  return TargetSet(std::move(out));
}

}  // namespace

TTable T_estimate(const Kernel& K, const ParamVector& q, const AlphaForm& alpha, const TSettings& s) {
  TTable T;
  T.etas = s.etas;
  T.ps = s.ps;
  std::sort(T.etas.begin(), T.etas.end());
  std::sort(T.ps.begin(), T.ps.end());
  if (T.etas.empty() || T.ps.empty()) throw InvalidArgument("T needs nonempty eta and p grids");

  // subsets discovered so far, keyed canonically; value filled lazily
  std::vector<TargetSet> pool;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<std::size_t>> family_of(T.etas.size() * T.ps.size());
  std::vector<std::size_t> full_of(T.etas.size() * T.ps.size(), SIZE_MAX);
  std::vector<std::size_t> sizes(T.etas.size() * T.ps.size(), 0);

  const Generations* gens = K.measure().generations();
  auto remember = [&](const TargetSet& t) {
    const std::string key = subset_key(t);
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    pool.push_back(t);
    index.emplace(key, pool.size() - 1);
    return pool.size() - 1;
  };

  for (std::size_t ei = 0; ei < T.etas.size(); ++ei)
    for (std::size_t pi = 0; pi < T.ps.size(); ++pi) {
      const std::size_t cell = ei * T.ps.size() + pi;
      LevelSetSpec spec;
      spec.q = q;
      spec.alpha = alpha;
      spec.eta = T.etas[ei];
      spec.p = T.ps[pi];
      spec.working_depth = s.working_depth;
      const TargetSet A = level_set(K, spec);
      sizes[cell] = A.size();
      std::vector<std::size_t> fam;
      if (!A.empty()) {
        const std::size_t full = remember(A);
        full_of[cell] = full;
        fam.push_back(full);
        if (gens)
          for (const auto& g : gens->families())
            for (const auto& mb : g.members) {
              TargetSet r = restrict_to(A, mb.word);
              if (!r.empty()) fam.push_back(remember(r));
            }
        std::mt19937_64 rng(s.seed + 0x9E3779B97F4A7C15ull * (cell + 1));
        for (int i = 0; i < s.random_subsets; ++i) {
          std::vector<Word> pick;
          for (const Word& c : A.cylinders())
            if (rng() & 1u) pick.push_back(c);
          if (pick.empty()) pick.push_back(A.cylinders()[static_cast<std::size_t>(rng() % A.size())]);
          fam.push_back(remember(TargetSet(std::move(pick))));
        }
      }
      // subsets of smaller level sets are subsets of this one too
      for (std::size_t e2 = 0; e2 <= ei; ++e2)
        for (std::size_t p2 = 0; p2 <= pi; ++p2) {
          const auto& f = family_of[e2 * T.ps.size() + p2];
          fam.insert(fam.end(), f.begin(), f.end());
        }
      std::sort(fam.begin(), fam.end());
      fam.erase(std::unique(fam.begin(), fam.end()), fam.end());
      family_of[cell] = std::move(fam);
    }

  // evaluate every distinct subset once
  std::vector<double> val(pool.size(), -std::numeric_limits<double>::infinity());
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < pool.size();) {
      try {
        LQuery lq;
        lq.q = q;
        lq.k = s.k_max;
        lq.m = s.m_hi;
        lq.depth_max = s.working_depth;
        lq.u = s.u;
        lq.strategy = s.strategy;
        lq.budget = s.budget;
        val[i] = L_value(pool[i], K, lq).value;
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(s.jobs, static_cast<int>(pool.size())));
  std::vector<std::thread> threads;
  for (int i = 1; i < n; ++i) threads.emplace_back(worker);
  worker();
  for (auto& th : threads) th.join();
  if (err) std::rethrow_exception(err);

  for (std::size_t ei = 0; ei < T.etas.size(); ++ei)
    for (std::size_t pi = 0; pi < T.ps.size(); ++pi) {
      const std::size_t cell = ei * T.ps.size() + pi;
      TEntry e;
      e.eta = T.etas[ei];
      e.p = T.ps[pi];
      e.level_set_size = sizes[cell];
      e.family_size = family_of[cell].size();
      for (std::size_t id : family_of[cell]) e.family_value = std::max(e.family_value, val[id]);
      if (full_of[cell] != SIZE_MAX) e.full_value = val[full_of[cell]];
      T.entries.push_back(e);
    }
  for (std::size_t ei = 0; ei < T.etas.size(); ++ei)
    for (std::size_t pi = 0; pi + 1 < T.ps.size(); ++pi)
      if (T.entries[ei * T.ps.size() + pi + 1].family_value < T.entries[ei * T.ps.size() + pi].family_value)
        T.nondecreasing_in_p = false;
  for (std::size_t ei = 0; ei + 1 < T.etas.size(); ++ei)
    for (std::size_t pi = 0; pi < T.ps.size(); ++pi)
      if (T.entries[ei * T.ps.size() + pi].family_value > T.entries[(ei + 1) * T.ps.size() + pi].family_value)
        T.nonincreasing_as_eta_shrinks = false;

  const TEntry& ext = T.entries[T.ps.size() - 1];  // smallest eta, largest p
  T.vacuous = ext.level_set_size == 0;
  T.value = ext.family_value;
  T.full_value = ext.full_value;
  return T;
}

}  // namespace mflab
