#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  args.insert(args.begin(), "mflab");
  const int code = mflab::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mflab_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const std::string kConfigs = MFLAB_CONFIG_DIR;

}  // namespace

TEST_CASE("spectrum on the uniform config") {
  const auto dir = scratch("spectrum");
  const auto r = run({"spectrum", "--config", kConfigs + "/uniform.toml", "--out", dir.string()});
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(dir / "spectra.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line.rfind("theta,depth,log_sum,slope", 0) == 0);
  int rows = 0;
  while (std::getline(csv, line)) {
    std::istringstream f(line);
    std::string theta, depth, log_sum, slope;
    std::getline(f, theta, ',');
    std::getline(f, depth, ',');
    std::getline(f, log_sum, ',');
    std::getline(f, slope, ',');
    CHECK(std::stod(slope) == doctest::Approx(1 - std::stod(theta)).epsilon(1e-12));
    ++rows;
  }
  CHECK(rows > 0);
}

TEST_CASE("missing alpha.a exits 1 naming the key") {
  const auto dir = scratch("missing");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "bad.toml");
    f << "schema_version = 1\n[measure]\nkind = \"uniform\"\n";
  }
  const auto r = run({"spectrum", "--config", (dir / "bad.toml").string(), "--out", (dir / "o").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("alpha.a") != std::string::npos);
}

TEST_CASE("missing --config is a usage error") {
  const auto r = run({"spectrum"});
  CHECK(r.code != 0);
}

TEST_CASE("oracle-check prints the table and exits 0") {
  const auto dir = scratch("oracle");
  const auto r = run({"oracle-check", "--packing-instances", "20", "--L-instances", "5", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("packing\t20\t20") != std::string::npos);
  CHECK(r.out.find("L\t5\t5") != std::string::npos);
  CHECK(fs::exists(dir / "oracle.tsv"));
}

TEST_CASE("degenerate example reports and exits 1") {
  const auto dir = scratch("degenerate");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "flat.toml");
    f << "schema_version = 1\n[measure]\nkind = \"cascade\"\np0 = 0.5\n[alpha]\na = 0.9\n"
         "[depth]\nworking = 12\nspectrum_lo = 4\nspectrum_hi = 12\n[grids]\nm_lo = 6\nm_hi = 12\n";
  }
  const auto r = run({"reproduce", "--config", (dir / "flat.toml").string(), "--out", (dir / "o").string()});
  CHECK(r.code == 1);
  CHECK(slurp(dir / "o" / "report.json").find("example requires p0 < p1") != std::string::npos);
}

TEST_CASE("build-measure writes the generations") {
  const auto dir = scratch("measure");
  const auto r = run({"build-measure", "--config", kConfigs + "/example.toml", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "generations.json"));
}
