#include <cmath>
#include <random>

#include "doctest.h"
#include "specgraph/errors.hpp"
#include "specgraph/graph.hpp"

using namespace specgraph;

TEST_CASE("interval has two directed bonds and unit length") {
  const MetricGraph g = build_graph(interval_spec(1.0));
  CHECK(g.directed_count() == 2);
  CHECK(g.total_length() == doctest::Approx(1.0));
  CHECK(MetricGraph::reverse(0) == 1);
  CHECK(g.directed(0).tail == 0);
  CHECK(g.directed(1).tail == 1);
}

TEST_CASE("complete four-vertex graph counts") {
  const MetricGraph g = build_graph(complete_spec(4, {1, 2, 3, 4, 5, 6}));
  CHECK(g.bond_count() == 6);
  CHECK(g.directed_count() == 12);
  for (int v = 0; v < 4; ++v) CHECK(g.degree(v) == 3);
}

TEST_CASE("three-star frequency basis") {
  const MetricGraph g = build_graph(star_spec({0.41, 0.57, 0.73}));
  CHECK(g.total_length() == doctest::Approx(1.71).epsilon(1e-14));
  const auto& om = g.frequency_basis();
  CHECK(om[0] == doctest::Approx(0.41 / 1.71));
  CHECK(om[1] == doctest::Approx(0.57 / 1.71));
  CHECK(om[2] == doctest::Approx(0.73 / 1.71));
  CHECK(om[0] + om[1] + om[2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(build_graph({2, {{0, 0, 1.0}}}), SelfLoop);
  CHECK_THROWS_AS(build_graph({2, {{0, 1, 0.0}}}), NonPositiveLength);
  CHECK_THROWS_AS(build_graph({2, {{0, 1, -1.0}}}), NonPositiveLength);
  CHECK_THROWS_AS(build_graph({4, {{0, 1, 1.0}, {2, 3, 1.0}}}), DisconnectedGraph);
}

TEST_CASE("directed ordering is deterministic") {
  const GraphSpec s = complete_spec(4, {0.3, 0.9, 1.1, 0.7, 0.5, 1.3});
  const MetricGraph a = build_graph(s);
  const MetricGraph b = build_graph(s);
  for (int d = 0; d < a.directed_count(); ++d) {
    CHECK(a.directed(d).tail == b.directed(d).tail);
    CHECK(a.directed(d).head == b.directed(d).head);
    CHECK(a.directed(MetricGraph::reverse(d)).head == a.directed(d).tail);
  }
}

TEST_CASE("kirchhoff vertex amplitudes") {
  const MetricGraph g = build_graph({4, {{0, 1, 1.0}, {1, 2, 1.0}, {1, 3, 2.0}, {2, 3, 0.5}, {0, 2, 0.7}}});
  // vertex 3 has degree 2, vertex 1 degree 3
  const VertexScattering vs = kirchhoff_scattering(g);
  const CMatrix& s3 = vs.sigma[3];
  const auto& in3 = g.incoming(3);
  const auto& out3 = g.outgoing(3);
  for (std::size_t i = 0; i < out3.size(); ++i)
    for (std::size_t j = 0; j < in3.size(); ++j) {
      const double expect = out3[i] == MetricGraph::reverse(in3[j]) ? 0.0 : 1.0;
      CHECK(std::abs(s3(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - expect) < 1e-15);
    }
  const CMatrix& s1 = vs.sigma[1];
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      const bool refl = g.outgoing(1)[static_cast<std::size_t>(i)] == MetricGraph::reverse(g.incoming(1)[static_cast<std::size_t>(j)]);
      CHECK(s1(i, j).real() == doctest::Approx(refl ? -1.0 / 3.0 : 2.0 / 3.0));
    }
  const MetricGraph star = build_graph(star_spec({1.0, 2.0}));
  CHECK(kirchhoff_scattering(star).sigma[1](0, 0).real() == doctest::Approx(1.0));
}

TEST_CASE("interval bond matrix is the swap") {
  const MetricGraph g = build_graph(interval_spec());
  const CMatrix s = bond_scattering_matrix(g, kirchhoff_scattering(g));
  CHECK(std::abs(s(0, 0)) == 0.0);
  CHECK(std::abs(s(1, 1)) == 0.0);
  CHECK(std::abs(s(0, 1) - 1.0) < 1e-15);
  CHECK(std::abs(s(1, 0) - 1.0) < 1e-15);
}

TEST_CASE("bond matrices are unitary") {
  const MetricGraph star = build_graph(star_spec({0.41, 0.57, 0.73}));
  const CMatrix s = bond_scattering_matrix(star, kirchhoff_scattering(star));
  CHECK(s.rows() == 6);
  for (Eigen::Index r = 0; r < 6; ++r) CHECK(s.row(r).squaredNorm() == doctest::Approx(1.0).epsilon(1e-14));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::vector<double> l(6);
  for (auto& x : l) x = u(rng);
  const MetricGraph k4 = build_graph(complete_spec(4, l));
  const CMatrix sk = bond_scattering_matrix(k4, kirchhoff_scattering(k4));
  // oracle: explicit product with the adjoint
  CMatrix p = CMatrix::Zero(12, 12);
  for (Eigen::Index i = 0; i < 12; ++i)
    for (Eigen::Index j = 0; j < 12; ++j)
      for (Eigen::Index k = 0; k < 12; ++k) p(i, j) += sk(i, k) * std::conj(sk(j, k));
  double res = 0.0;
  for (Eigen::Index i = 0; i < 12; ++i)
    for (Eigen::Index j = 0; j < 12; ++j) res = std::max(res, std::abs(p(i, j) - (i == j ? 1.0 : 0.0)));
  CHECK(res < 1e-12);
  // entries vanish unless the bonds are adjacent
  for (int d = 0; d < 12; ++d)
    for (int e = 0; e < 12; ++e)
      if (k4.directed(d).head != k4.directed(e).tail) CHECK(std::abs(sk(e, d)) == 0.0);
}

TEST_CASE("user scattering is validated") {
  const MetricGraph g = build_graph(interval_spec());
  VertexScattering vs = kirchhoff_scattering(g);
  vs.sigma[0](0, 0) = 0.5;
  CHECK_THROWS_AS(bond_scattering_matrix(g, vs), NonUnitary);
  vs.sigma.pop_back();
  CHECK_THROWS_AS(bond_scattering_matrix(g, vs), DimensionMismatch);
  VertexScattering dirichlet = kirchhoff_scattering(g);
  dirichlet.sigma[0](0, 0) = -1.0;
  dirichlet.sigma[1](0, 0) = -1.0;
  CHECK_NOTHROW(bond_scattering_matrix(g, dirichlet));
}

TEST_CASE("commensurability diagnostic flags small rationals") {
  const MetricGraph rational = build_graph(star_spec({0.5, 0.75, std::sqrt(2.0)}));
  const auto w = commensurability_diagnostic(rational);
  REQUIRE(w.size() == 1);
  CHECK(w[0].p == 2);
  CHECK(w[0].q == 3);
  const MetricGraph generic = build_graph(star_spec({std::sqrt(2.0) - 1.0, 0.5772156649015329, std::sqrt(3.0) - 1.0}));
  CHECK(commensurability_diagnostic(generic).empty());
}
