#include <doctest.h>

#include <cmath>

#include "mflab/packing_engine.hpp"

using namespace mflab;

namespace {

std::shared_ptr<const CascadeMeasure> shared(CascadeMeasure m) {
  return std::make_shared<const CascadeMeasure>(std::move(m));
}

CenteredPacking full_level(int m) { return {words_of_length(m)}; }

}  // namespace

TEST_CASE("packing sums") {
  auto uni = shared(CascadeMeasure::uniform());
  const Kernel zero(KernelVariant::Product, uni);
  CHECK(packing_sum(full_level(3), zero, ParamVector{0.0, 0.0}, 0.0) == doctest::Approx(8.0));

  const Kernel olsen(KernelVariant::Olsen, uni);
  CHECK(packing_sum(full_level(6), olsen, ParamVector{1.0}, 0.0) == doctest::Approx(1.0));
  CHECK(packing_sum_exact(full_level(6), olsen, ParamVector{1.0}, 0) == Rational(1));
}

TEST_CASE("bernoulli full-level sum matches the binomial identity") {
  auto mu = shared(CascadeMeasure::bernoulli(0.3));
  const Kernel K(KernelVariant::Olsen, mu);
  for (int m = 1; m <= 12; ++m) {
    for (double theta : {-1.0, 0.5, 2.0}) {
      for (double t : {-0.5, 0.0, 1.0}) {
        const double want = std::pow(std::pow(0.3, theta) + std::pow(0.7, theta), m) * std::pow(2.0, -m * t);
        const double got = packing_sum(full_level(m), K, ParamVector{theta}, t);
        CHECK(got == doctest::Approx(want).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("sup over packings, trivial kernels") {
  auto uni = shared(CascadeMeasure::uniform());
  const Kernel zero(KernelVariant::Product, uni);
  const TargetSet X = TargetSet::whole_space();

  PackingQuery q1{ParamVector{0.0, 0.0}, 1.0, 1, 6};
  CHECK(sup_packing_value(X, zero, q1).value == doctest::Approx(1.0));

  for (int D = 1; D <= 8; ++D) {
    PackingQuery q0{ParamVector{0.0, 0.0}, 0.0, 1, D};
    CHECK(sup_packing_value(X, zero, q0).value == doctest::Approx(std::ldexp(1.0, D)));
  }

  const Kernel olsen(KernelVariant::Olsen, uni);
  CHECK(sup_packing_value_exact(X, olsen, ParamVector{1.0}, 0, 1, 3).value == Rational(1));
}

TEST_CASE("sup witness is a valid packing attaining the value") {
  auto mu = shared(CascadeMeasure::with_selected(0.3, {Word::from_string("0110"), Word::from_string("11")}));
  const Kernel K(KernelVariant::Olsen, mu);
  const TargetSet A({Word::from_string("01"), Word::from_string("11")});
  const auto r = sup_packing_value_exact(A, K, ParamVector{2.0}, -1, 1, 5);
  CenteredPacking P;
  for (const auto& b : r.witness) {
    for (const auto& w : words_of_length(b.depth - b.root.length())) P.balls.push_back(b.root.concat(w));
  }
  CHECK(validate_packing(P, A, 1).ok);
  CHECK(packing_sum_exact(P, K, ParamVector{2.0}, -1) == r.value);
}

TEST_CASE("sup is nonincreasing as epsilon shrinks") {
  auto mu = shared(CascadeMeasure::with_selected(0.3, {Word::from_string("010101")}));
  const Kernel K(KernelVariant::Olsen, mu);
  const TargetSet X = TargetSet::whole_space();
  for (double t : {-1.0, 0.0, 0.7}) {
    double prev = INFINITY;
    for (int m = 1; m <= 8; ++m) {
      const double v = sup_packing_value(X, K, PackingQuery{ParamVector{1.5}, t, m, 8}).value;
      CHECK(v <= prev * (1 + 1e-12));
      prev = v;
    }
  }
}

TEST_CASE("spectrum estimates") {
  const TargetSet X = TargetSet::whole_space();
  SUBCASE("uniform: exact line, zero residual") {
    const Kernel K(KernelVariant::Olsen, shared(CascadeMeasure::uniform()));
    for (double th : {-1.0, 0.0, 0.5, 1.0, 2.0}) {
      const auto e = lq_spectrum(X, K, ParamVector{th}, 4, 16);
      CHECK(e.value == doctest::Approx(1 - th).epsilon(1e-12));
      CHECK(e.residual < 1e-12);
    }
  }
  SUBCASE("bernoulli") {
    const Kernel K(KernelVariant::Olsen, shared(CascadeMeasure::bernoulli(0.3)));
    CHECK(lq_spectrum(X, K, ParamVector{1.0}, 4, 16).value == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(lq_spectrum(X, K, ParamVector{0.0}, 4, 16).value == doctest::Approx(1.0));
    const auto e = lq_spectrum(X, K, ParamVector{2.0}, 4, 16);
    CHECK(e.value == doctest::Approx(std::log2(0.09 + 0.49)).epsilon(1e-9));
    // the largest-term guard sits below the bulk rate here
    CHECK(e.dominant <= e.slope + 1e-12);
  }
}

TEST_CASE("critical exponents") {
  const TargetSet X = TargetSet::whole_space();
  const Kernel flat(KernelVariant::Product, shared(CascadeMeasure::uniform()));
  CHECK(critical_exponent(X, flat, ParamVector{0.0, 0.0}, 4, 16).fitted == doctest::Approx(1.0));

  const Kernel K(KernelVariant::Olsen, shared(CascadeMeasure::bernoulli(0.3)));
  CHECK(critical_exponent(X, K, ParamVector{1.0}, 4, 16).fitted == doctest::Approx(0.0).epsilon(1e-9));
  const auto c = critical_exponent(X, K, ParamVector{2.0}, 4, 16);
  CHECK(c.fitted == doctest::Approx(std::log2(0.58)).epsilon(1e-6));
  CHECK(c.bisected == doctest::Approx(std::log2(0.58)).epsilon(1e-5));
}

TEST_CASE("extreme masses") {
  const auto mu = CascadeMeasure::bernoulli(0.3);
  const auto r = extreme_log2_mass(TargetSet::whole_space(), mu, 10);
  CHECK(r.hi == doctest::Approx(10 * std::log2(0.7)));
  CHECK(r.lo == doctest::Approx(10 * std::log2(0.3)));
  CHECK(extreme_log2_mass(TargetSet{}, mu, 3).empty);
}

TEST_CASE("spectrum function") {
  SpectrumFunction f({0.0, 1.0, 2.0}, {1.0, 0.0, -0.5}, "test");
  CHECK(f(0.5) == doctest::Approx(0.5));
  CHECK_FALSE(f.in_domain(2.5));
  CHECK(f.shifted(0.1)(1.0) == doctest::Approx(0.1));
  CHECK(f.convexity_defect() == 0.0);
  SpectrumFunction g({0.0, 1.0, 2.0}, {0.0, 1.0, 0.0}, "bent");
  CHECK(g.convexity_defect() > 0.0);
}
