#include <doctest.h>

#include <cmath>

#include "mflab/cascade_measure.hpp"
#include "mflab/errors.hpp"

using namespace mflab;

namespace {

CascadeParams narrow_params() {
  CascadeParams p;
  p.beta1 = 0.35;
  p.gamma1 = 0.40;
  p.beta2 = 0.42;
  p.gamma2 = 0.47;
  return p;
}

}  // namespace

TEST_CASE("unselected cylinders halve") {
  const auto mu = CascadeMeasure::uniform();
  CHECK(mu.mass(Word::from_string("0110")) == doctest::Approx(1.0 / 16));
  CHECK(mu.exact_mass(Word::from_string("01101")) == Rational(1, 32));
}

TEST_CASE("single selected cylinder") {
  const auto mu = CascadeMeasure::with_selected(0.3, {Word::from_string("0")});
  CHECK(mu.exact_mass(Word::from_string("0")) == Rational(3, 10));
  CHECK(mu.exact_mass(Word::from_string("1")) == Rational(7, 10));
  CHECK(mu.exact_mass(Word::from_string("10")) == Rational(7, 20));
}

TEST_CASE("masses along a fully selected path") {
  const auto mu = CascadeMeasure::bernoulli(0.3);
  const Word w = Word::from_string("0100101");
  const Rational expect = Rational(81, 10000) * Rational(343, 1000);
  CHECK(mu.exact_mass(w) == expect);
}

TEST_CASE("classification against the bands") {
  const auto p = narrow_params();
  CHECK(classify_fraction(38, 100, p) == CylinderType::T1);
  CHECK(classify_fraction(45, 100, p) == CylinderType::T2);
  CHECK(classify_fraction(50, 100, p) == CylinderType::Neither);
}

TEST_CASE("frequency exponent") {
  CHECK(frequency_exponent(0.3, 0.5, 0.5) == doctest::Approx(1.0));
  CHECK(frequency_exponent(0.9, 0.5, 0.5) == doctest::Approx(1.0));
  CHECK(frequency_exponent(1.0, 0.3, 0.7) == doctest::Approx(std::log2(1 / 0.3)));
  CHECK(frequency_exponent(0.0, 0.3, 0.7) == doctest::Approx(std::log2(1 / 0.7)));
}

TEST_CASE("narrow bands have no 6-letter T1 word") {
  // k/6 never lands in (0.35, 0.40)
  CHECK_THROWS_AS(Generations::build(narrow_params(), Schedule::compressed({6, 12, 24, 48}, 6), 12), InfeasibleDrift);
}

TEST_CASE("generations on the compressed schedule") {
  const CascadeParams p;
  const auto sched = Schedule::compressed({6, 12, 24, 48}, 6);

  SUBCASE("cap at n0 leaves only the seeds") {
    const auto g = Generations::build(p, sched, 6);
    REQUIRE(g->families().size() == 1);
    CHECK(g->families()[0].members.size() == 2);
  }
  SUBCASE("two levels, disjoint and typed") {
    const auto g = Generations::build(p, sched, 12);
    REQUIRE(g->families().size() == 2);
    CHECK(g->families()[0].members.size() == 2);
    CHECK(g->families()[1].members.size() == 4);
    CHECK(check_separation(g->families()).empty());
    for (const auto& fam : g->families())
      for (const auto& m : fam.members) CHECK(classify(m.word, p) == m.type);
  }
}

TEST_CASE("default generations pass separation and stay typed") {
  const CascadeParams p;
  const auto g = Generations::build(p, Schedule::compressed({6, 12, 24, 48}, 6), 48);
  CHECK(g->horizon() == 48);
  CHECK(check_separation(g->families()).empty());
  for (const auto& fam : g->families()) {
    for (std::size_t i = 0; i < fam.members.size(); ++i) {
      for (std::size_t j = i + 1; j < fam.members.size(); ++j) {
        const auto& a = fam.members[i].word;
        const auto& b = fam.members[j].word;
        CHECK_FALSE((a.is_prefix_of(b) || b.is_prefix_of(a)));
      }
    }
  }
}

TEST_CASE("separation reports near siblings") {
  GenerationFamily f0{0, 6, 1, {{Word::from_string("000000"), CylinderType::T1}}};
  GenerationFamily f1{1, 12, 1,
                      {{Word::from_string("000000000000"), CylinderType::T1, 0},
                       {Word::from_string("000000000001"), CylinderType::T1, 0}}};
  CHECK_FALSE(check_separation({f0, f1}).empty());
  CHECK(check_separation({f0}).empty());
}

TEST_CASE("drift arithmetic") {
  // 45 zeros out of 100 needs 100*(0.45/0.40 - 1) = 12.5 ones to fall under 0.40
  CHECK(drift_levels_needed(45, 100, 0.40, 1, 100) == 13);
  CHECK(drift_levels_needed(45, 100, 0.40, 1, 12) == -1);
  // brute force at tiny n
  for (int n = 4; n <= 12; ++n) {
    for (int z = 0; z <= n; ++z) {
      const double thr = 0.25;
      int want = -1;
      for (int d = 1; d <= 40; ++d) {
        if (static_cast<double>(z) / (n + d) < thr) {
          want = d;
          break;
        }
      }
      CHECK(drift_levels_needed(z, n, thr, 1, 40) == want);
    }
  }
}

TEST_CASE("local dimension traces") {
  const auto mu = CascadeMeasure::uniform();
  for (const auto& s : local_dimension_trace(mu, Point::from_string("0110"), {4, 8, 16}))
    CHECK(s.slope == doctest::Approx(1.0));
}

TEST_CASE("parameter validation names the field") {
  CascadeParams p;
  p.beta1 = 0.5;
  try {
    p.validate();
    FAIL("expected rejection");
  } catch (const ParamError& e) {
    CHECK_FALSE(e.field.empty());
  }
}

TEST_CASE("strict horizon refuses undecidable depths") {
  const CascadeParams p;
  const auto g = Generations::build(p, Schedule::compressed({6, 12, 24, 48}, 6), 48);
  const auto mu = CascadeMeasure::from_generations(g);
  // one level past the deepest generation is still decidable
  CHECK(mu.depth_limit() == 49);
  const Word deep = g->deepest().members.front().word.concat(Word::from_string("01"));
  CHECK_THROWS_AS(mu.mass(deep), DepthExceeded);
}
