#include <doctest.h>

#include <string>

#include "mflab/config.hpp"
#include "mflab/errors.hpp"

using namespace mflab;

namespace {

const std::string kMinimal = R"(
schema_version = 1
[measure]
kind = "uniform"
[alpha]
a = 1.0
)";

std::string key_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key_path;
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config parses with defaults") {
  const auto c = parse_config(kMinimal);
  CHECK(c.kind == MeasureKind::Uniform);
  CHECK(c.resolved_a() == 1.0);
  CHECK_FALSE(c.alpha_problem().has_value());
}

TEST_CASE("config errors name the key") {
  CHECK(key_of("schema_version = 1\n[measure]\nkind = \"uniform\"\n") == "alpha.a");
  CHECK(key_of("[measure]\nkind = \"uniform\"\n[alpha]\na = 1.0\n") == "schema_version");
  CHECK(key_of("schema_version = 2\n[measure]\nkind = \"uniform\"\n[alpha]\na = 1.0\n") == "schema_version");
  CHECK(key_of(kMinimal + "[run]\nseeds = 3\n") == "run.seeds");
  CHECK(key_of(kMinimal + "[depth]\nworking = 99\n") == "depth.working");
  CHECK(key_of(kMinimal + "[grids]\ntheta = { lo = 1.0, hi = 0.0, step = 0.5 }\n") == "grids.theta.hi");
  CHECK(key_of("schema_version = 1\n[measure]\nkind = \"nope\"\n[alpha]\na = 1.0\n") == "measure.kind");
  CHECK(key_of("schema_version = 1\n[measure]\nkind = \"cascade\"\np0 = 0.3\nbeta1 = -0.1\n[alpha]\na = 1.0\n") ==
        "measure.beta1");
  CHECK(key_of("schema_version = 1\n[measure\n") == "<syntax>");
}

TEST_CASE("midpoint alpha on the cascade") {
  const auto c = parse_config("schema_version = 1\n[measure]\nkind = \"cascade\"\np0 = 0.3\n[alpha]\na = \"midpoint\"\n");
  const double lo = frequency_exponent(c.params.gamma1, c.params);
  const double hi = frequency_exponent(c.params.gamma2, c.params);
  CHECK(c.resolved_a() == doctest::Approx((lo + hi) / 2));
}

TEST_CASE("degenerate probabilities are flagged") {
  const auto c =
      parse_config("schema_version = 1\n[measure]\nkind = \"cascade\"\np0 = 0.5\n[alpha]\na = 0.9\n");
  REQUIRE(c.alpha_problem().has_value());
  CHECK(c.alpha_problem()->find("p0 < p1") != std::string::npos);
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"example.toml", "uniform.toml", "bernoulli.toml"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_config(std::string(MFLAB_CONFIG_DIR) + "/" + name));
  }
}
