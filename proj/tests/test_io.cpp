#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "specgraph/errors.hpp"
#include "specgraph/io.hpp"
#include "specgraph/version.hpp"

using namespace specgraph;

namespace {

std::filesystem::path scratch_dir() {
  const auto p = std::filesystem::temp_directory_path() / "specgraph_io_test";
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("graph JSON round trip is bit exact") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  std::vector<double> l(6);
  for (auto& x : l) x = u(rng);
  const GraphSpec spec = complete_spec(4, l);
  const auto path = scratch_dir() / "k4.json";
  write_graph(path, spec);
  const GraphSpec back = read_graph(path);
  REQUIRE(back.bonds.size() == spec.bonds.size());
  CHECK(back.vertex_count == 4);
  for (std::size_t i = 0; i < spec.bonds.size(); ++i) {
    CHECK(back.bonds[i].a == spec.bonds[i].a);
    CHECK(back.bonds[i].b == spec.bonds[i].b);
    CHECK(back.bonds[i].length == spec.bonds[i].length);
  }
}

TEST_CASE("malformed graph input") {
  const auto dir = scratch_dir();
  std::ofstream(dir / "bad.json") << "{\"vertices\": 2, \"bonds\": [[0, 1, 1.0]";
  CHECK_THROWS_AS(read_graph(dir / "bad.json"), ParseError);
  CHECK_THROWS_AS(graph_from_json(Json::parse(R"({"vertices": 2, "bonds": [[0, 1]]})")), ParseError);
  CHECK_THROWS_AS(graph_from_json(Json::parse(R"({"bonds": []})")), ParseError);
  CHECK_THROWS_AS(read_graph(dir / "missing.json"), ParseError);
}

TEST_CASE("polynomial JSON round trip") {
  const MetricGraph g = build_graph(star_spec({0.41, 0.57, 0.73}));
  const ExponentialPolynomial p = collapse(secular_multipoly(g, bond_scattering_matrix(g, kirchhoff_scattering(g))));
  const Json j = polynomial_to_json(p);
  const ExponentialPolynomial q = polynomial_from_json(Json::parse(j.dump()));
  REQUIRE(q.size() == p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(q.terms()[i].amplitude == p.terms()[i].amplitude);
    CHECK(q.terms()[i].length == p.terms()[i].length);
    if (i > 0) CHECK(j[i]["L"].get<double>() >= j[i - 1]["L"].get<double>());
  }
}

TEST_CASE("hash and stamped outputs") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  const RunStamp a = RunStamp::from_config({{"seed", 1}, {"graph", "x"}});
  const RunStamp b = RunStamp::from_config({{"graph", "x"}, {"seed", 1}});
  const RunStamp c = RunStamp::from_config({{"graph", "x"}, {"seed", 2}});
  CHECK(a.config_hash == b.config_hash);
  CHECK(a.config_hash != c.config_hash);

  CHECK(std::stod(format_double(0.1)) == 0.1);
  CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");

  std::ostringstream out;
  CsvWriter w(out, a, std::vector<std::string>{"x", "y"});
  w << 1.5 << 2L;
  w.end_row();
  CHECK(out.str() == "# specgraph " + std::string(kVersion) + " config " + a.config_hash + "\nx,y\n1.5,2\n");

  const auto path = scratch_dir() / "meta.json";
  write_json(path, a, {{"value", 3}});
  const Json back = Json::parse(slurp(path));
  CHECK(back["meta"]["config_hash"] == a.config_hash);
  CHECK(back["meta"]["version"] == kVersion);
  CHECK(back["value"] == 3);
}
