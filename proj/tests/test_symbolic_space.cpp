#include <doctest.h>

#include "mflab/packing_engine.hpp"
#include "mflab/symbolic_space.hpp"

using namespace mflab;

TEST_CASE("ball_of extracts the radius prefix") {
  CHECK(ball_of(Point::from_string("010111"), DyadicRadius(3)).to_string() == "010");
  CHECK(ball_of(Point::from_string("1"), DyadicRadius(1)).to_string() == "1");
  CHECK(ball_of(Point::from_string("0", TailRule::RepeatZero), DyadicRadius(5)).to_string() == "00000");
}

TEST_CASE("distance is 2^-first mismatch") {
  CHECK(distance(Point::from_string("010"), Point::from_string("011")) == doctest::Approx(0.25));
  CHECK(distance(Point::from_string("0101"), Point::from_string("0101")) == 0.0);
  CHECK(distance(Point::from_string("1"), Point::from_string("0")) == 1.0);
}

TEST_CASE("cylinder relations") {
  auto nested = cylinder_relation(Cylinder::from_string("01"), Cylinder::from_string("0110"));
  CHECK(nested.kind == CylinderRelation::Kind::Nested);

  auto a = cylinder_relation(Cylinder::from_string("010"), Cylinder::from_string("011"));
  CHECK(a.kind == CylinderRelation::Kind::Disjoint);
  CHECK(a.gap == doctest::Approx(0.25));

  auto b = cylinder_relation(Cylinder::from_string("000110"), Cylinder::from_string("001110"));
  CHECK(b.kind == CylinderRelation::Kind::Disjoint);
  CHECK(b.split_depth == 2);
  CHECK(b.gap == doctest::Approx(0.25));
}

TEST_CASE("zero counts") {
  CHECK(zero_count(Word::from_string("0100101")) == 4);
  CHECK(zero_count(Word{}) == 0);
  CHECK(zero_count(Word::from_string("111111")) == 0);
}

TEST_CASE("word basics") {
  const Word w = Word::from_string("0110");
  CHECK(w.length() == 4);
  CHECK(w.prefix(2).to_string() == "01");
  CHECK(w.prefix(2).is_prefix_of(w));
  CHECK_FALSE(w.is_prefix_of(w.prefix(2)));
  CHECK(w.child(1).to_string() == "01101");
  CHECK(Word::from_string("01").concat(Word::from_string("10")) == w);
  CHECK(words_of_length(3).size() == 8);
  CHECK(Cylinder(w).diameter() == doctest::Approx(1.0 / 16));
  CHECK(Cylinder::from_string("01").contains(Point::from_string("0111")));
}

TEST_CASE("besicovitch validation") {
  const TargetSet X = TargetSet::whole_space();
  SUBCASE("a packing is a one-group packing for every k") {
    BesicovitchPacking p{{Word::from_string("00"), Word::from_string("01"), Word::from_string("1")}, {0, 0, 0}};
    for (int k = 1; k <= 3; ++k) CHECK(validate_besicovitch(p, X, k, 1).ok);
  }
  SUBCASE("overlap inside a group is rejected") {
    BesicovitchPacking p{{Word::from_string("0"), Word::from_string("01")}, {0, 0}};
    CHECK_FALSE(validate_besicovitch(p, X, 2, 1).ok);
  }
  SUBCASE("overlap across groups is fine") {
    BesicovitchPacking p{{Word::from_string("0"), Word::from_string("01")}, {0, 1}};
    CHECK(validate_besicovitch(p, X, 2, 1).ok);
    CHECK_FALSE(validate_besicovitch(p, X, 1, 1).ok);
  }
  SUBCASE("radius above u is rejected") {
    BesicovitchPacking p{{Word::from_string("0")}, {0}};
    CHECK_FALSE(validate_besicovitch(p, X, 1, 2).ok);
  }
  SUBCASE("centers must lie in the target") {
    const TargetSet A({Word::from_string("00")});
    BesicovitchPacking p{{Word::from_string("11")}, {0}};
    CHECK_FALSE(validate_besicovitch(p, A, 1, 1).ok);
  }
}

TEST_CASE("validate_packing") {
  const TargetSet X = TargetSet::whole_space();
  CHECK(validate_packing({{Word::from_string("0"), Word::from_string("10")}}, X, 1).ok);
  CHECK_FALSE(validate_packing({{Word::from_string("0"), Word::from_string("01")}}, X, 1).ok);
  CHECK_FALSE(validate_packing({{Word{}}}, X, 1).ok);
}
