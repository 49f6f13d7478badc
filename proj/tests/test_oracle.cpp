#include <doctest.h>

#include "mflab/oracle.hpp"

using namespace mflab;

namespace {

std::shared_ptr<const CascadeMeasure> shared(CascadeMeasure m) {
  return std::make_shared<const CascadeMeasure>(std::move(m));
}

}  // namespace

TEST_CASE("brute-force packings on trivial kernels") {
  const TargetSet X = TargetSet::whole_space();
  const Kernel zero(KernelVariant::Product, shared(CascadeMeasure::uniform()));
  CHECK(oracle::brute_force_sup_packing(X, zero, ParamVector{0.0, 0.0}, 0, 1, 2).value == Rational(4));

  const Kernel olsen(KernelVariant::Olsen, shared(CascadeMeasure::uniform()));
  CHECK(oracle::brute_force_sup_packing(X, olsen, ParamVector{1.0}, 0, 1, 3).value == Rational(1));
  for (const auto& P : oracle::all_antichains(X, 1, 3, 1u << 20)) {
    bool maximal = true;
    for (const auto& w : words_of_length(3)) {
      bool hit = false;
      for (const auto& b : P) hit = hit || b.is_prefix_of(w);
      maximal = maximal && hit;
    }
    if (maximal) CHECK(packing_sum_exact({P}, olsen, ParamVector{1.0}, 0) == Rational(1));
  }
}

TEST_CASE("brute-force packings agree with the DP on bernoulli") {
  const Kernel K(KernelVariant::Olsen, shared(CascadeMeasure::bernoulli(0.3)));
  const TargetSet X = TargetSet::whole_space();
  for (int t = -2; t <= 2; ++t) {
    for (int q = 0; q <= 3; ++q) {
      const auto brute = oracle::brute_force_sup_packing(X, K, ParamVector{double(q)}, t, 1, 3);
      const auto dp = sup_packing_value_exact(X, K, ParamVector{double(q)}, t, 1, 3);
      CHECK(brute.value == dp.value);
    }
  }
}

TEST_CASE("brute-force L basics") {
  const TargetSet X = TargetSet::whole_space();
  const Kernel olsen(KernelVariant::Olsen, shared(CascadeMeasure::uniform()));
  CHECK(oracle::brute_force_L(X, olsen, ParamVector{1.0}, 1, 2, 2, 3).value == doctest::Approx(1.0));

  // k = 1, u = eps: the identity family is optimal on a measure with one heavy branch
  const Kernel K(KernelVariant::Olsen, shared(CascadeMeasure::with_selected(0.3, {Word::from_string("00")})));
  const TargetSet A({Word::from_string("0")});
  const auto r = oracle::brute_force_L(A, K, ParamVector{1.0}, 1, 2, 2, 2);
  double ident = -INFINITY;
  for (const auto& b : r.packing) ident = std::max(ident, replacement_ratio(K, 1.0, b, b.length()));
  CHECK(r.value == doctest::Approx(ident));

  // more groups never raise the value
  const Kernel K2(KernelVariant::Olsen,
                  shared(CascadeMeasure::with_selected(0.4, {Word::from_string("011"), Word::from_string("10")})));
  for (double q : {-1.0, 2.0}) {
    const double one = oracle::brute_force_L(X, K2, ParamVector{q}, 1, 2, 1, 3).value;
    const double two = oracle::brute_force_L(X, K2, ParamVector{q}, 2, 2, 1, 3).value;
    CHECK(two <= one + 1e-12);
  }
}

TEST_CASE("equivalence reports are seeded and complete") {
  const auto a = oracle::packing_equivalence(3, 10);
  CHECK(a.rows.size() == 10);
  CHECK(a.all_equal());
  CHECK(a.table() == oracle::packing_equivalence(3, 10).table());
  const auto b = oracle::L_equivalence(3, 5);
  CHECK(b.rows.size() == 5);
  CHECK(b.all_equal());
}
