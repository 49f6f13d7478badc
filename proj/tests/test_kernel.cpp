#include <doctest.h>

#include <cmath>

#include "mflab/cascade_measure.hpp"
#include "mflab/kernel.hpp"

using namespace mflab;

TEST_CASE("olsen kernel on the uniform measure") {
  auto mu = std::make_shared<const CascadeMeasure>(CascadeMeasure::uniform());
  const Kernel K(KernelVariant::Olsen, mu);
  for (int m : {1, 5, 20})
    CHECK(K.chi_pair(ParamVector{1.0}, Point::from_string("0101"), DyadicRadius(m)) ==
          doctest::Approx(-m * std::log(2.0)));
}

TEST_CASE("product kernel") {
  auto mu = std::make_shared<const CascadeMeasure>(CascadeMeasure::bernoulli(0.3));
  const Kernel K(KernelVariant::Product, mu);
  CHECK(K.chi_cylinder(ParamVector{3.0, -3.0}, Word::from_string("0101")) == 0.0);
  CHECK(K.chi_cylinder(ParamVector{0.5, 0.5}, Word::from_string("001")) ==
        doctest::Approx(std::log(0.3 * 0.3 * 0.7)));
  CHECK(K.weight(ParamVector{0.25, 0.5}) == doctest::Approx(0.75));
  CHECK(K.lambda_at(7) == 0.0);
}

TEST_CASE("perturbed product stays inside its sandwich") {
  auto mu = std::make_shared<const CascadeMeasure>(CascadeMeasure::bernoulli(0.3));
  const Kernel exact(KernelVariant::Product, mu);
  const Kernel pert(KernelVariant::PerturbedProduct, mu, 0.5);
  const ParamVector q{1.0, 0.5};
  for (const auto& w : words_of_length(6)) {
    const double d = pert.chi_cylinder(q, w) - exact.chi_cylinder(q, w);
    CHECK(std::abs(d) <= 0.5 + 1e-12);
  }
}

TEST_CASE("alpha pairing") {
  CHECK(alpha_pair(AlphaForm{0.9}, ParamVector{1.0, 0.0}) == doctest::Approx(0.9));
  CHECK(alpha_pair(AlphaForm{0.9}, ParamVector{2.0, -2.0}) == 0.0);
  const CascadeParams p;
  const double a = frequency_exponent(p.gamma2, p);
  CHECK(alpha_pair(AlphaForm{a}, ParamVector{0.75, 0.5}) == doctest::Approx(a * 1.25));
}

TEST_CASE("admissible region") {
  CHECK(ParamVector{1.0, -1.0}.in_admissible_region());
  CHECK_FALSE(ParamVector{-1.0, 0.5}.in_admissible_region());
}
