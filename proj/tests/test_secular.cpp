#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "specgraph/errors.hpp"
#include "specgraph/secular.hpp"

using namespace specgraph;

namespace {

std::vector<double> directed_lengths(const MetricGraph& g) {
  std::vector<double> l;
  for (const auto& d : g.directed_bonds()) l.push_back(d.length);
  return l;
}

ExponentialPolynomial star_delta() {
  const MetricGraph g = build_graph(star_spec({0.41, 0.57, 0.73}));
  const CMatrix s = bond_scattering_matrix(g, kirchhoff_scattering(g));
  return determinant_expand(s, directed_lengths(g));
}

}  // namespace

TEST_CASE("interval determinant is 1 - exp(2ik)") {
  const MetricGraph g = build_graph(interval_spec());
  const CMatrix s = bond_scattering_matrix(g, kirchhoff_scattering(g));
  const ExponentialPolynomial p = determinant_expand(s, directed_lengths(g));
  REQUIRE(p.size() == 2);
  CHECK(p.terms()[0].length == 0.0);
  CHECK(std::abs(p.terms()[0].amplitude - 1.0) < 1e-15);
  CHECK(p.terms()[1].length == doctest::Approx(2.0));
  CHECK(std::abs(p.terms()[1].amplitude + 1.0) < 1e-15);
}

TEST_CASE("three-star expansion matches the dense determinant") {
  const MetricGraph g = build_graph(star_spec({0.41, 0.57, 0.73}));
  const CMatrix s = bond_scattering_matrix(g, kirchhoff_scattering(g));
  const auto l = directed_lengths(g);
  const ExponentialPolynomial p = determinant_expand(s, l);
  // terms: 1, -1/3 or +1/3 at the six partial combinations, -1 at 2*L0
  CHECK(p.size() == 8);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::uniform_real_distribution<double> v(-0.5, 0.5);
  double err = 0.0;
  for (int i = 0; i < 100; ++i) {
    const cplx k{u(rng), i % 2 ? v(rng) : 0.0};
    err = std::max(err, std::abs(evaluate(p, k) - numeric_determinant(s, l, k)));
  }
  CHECK(err < 1e-10);
  CHECK(std::abs(std::abs(p.terms().back().amplitude) - 1.0) < 1e-12);
  CHECK(p.max_length() == doctest::Approx(2 * 1.71));
}

TEST_CASE("moduli are palindromic for unitary scattering") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.3, 1.7);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> l(6);
    for (auto& x : l) x = u(rng);
    const MetricGraph g = build_graph(complete_spec(4, l));
    const CMatrix s = bond_scattering_matrix(g, kirchhoff_scattering(g));
    const ExponentialPolynomial p = determinant_expand(s, directed_lengths(g));
    const double lam = p.max_length();
    CHECK(std::abs(std::abs(p.terms().back().amplitude) - 1.0) < 1e-12);
    for (const auto& t : p.terms()) {
      const cplx mirror = p.amplitude_at(lam - t.length, 1e-11);
      CHECK(std::abs(std::abs(mirror) - std::abs(t.amplitude)) < 1e-9);
    }
  }
}

TEST_CASE("expansion limits") {
  CMatrix big = CMatrix::Identity(18, 18);
  std::vector<double> l(18, 1.0);
  CHECK_THROWS_AS(determinant_expand(big, l), TooLarge);
  CMatrix bad = CMatrix::Identity(2, 2) * 0.5;
  std::vector<double> l2(2, 1.0);
  CHECK_THROWS_AS(determinant_expand(bad, l2), NonUnitary);
}

TEST_CASE("derivative and evaluation") {
  const ExponentialPolynomial d({{1.0, 0.0}, {-1.0, 2.0}});
  const ExponentialPolynomial d1 = derivative(d, 1);
  REQUIRE(d1.size() == 1);
  CHECK(d1.terms()[0].length == 2.0);
  CHECK(std::abs(d1.terms()[0].amplitude - cplx(0.0, -2.0)) < 1e-15);
  const ExponentialPolynomial d0 = derivative(d, 0);
  CHECK(d0.size() == 2);
  CHECK(std::abs(evaluate(d, std::numbers::pi / 2) - 2.0) < 1e-15);
  CHECK(std::abs(evaluate(d, 0.0)) < 1e-15);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> len(0.0, 3.0);
  std::vector<ExpTerm> t;
  for (int i = 0; i < 12; ++i) t.push_back({{u(rng), u(rng)}, len(rng)});
  const ExponentialPolynomial p(t);
  cplx sum0{0.0, 0.0};
  for (const auto& term : p.terms()) sum0 += term.amplitude;
  CHECK(std::abs(evaluate(p, 0.0) - sum0) < 1e-14);

  // independent summation: split into cos/sin parts by hand
  for (double k : {0.3, 7.1, -12.5}) {
    double re = 0.0;
    double im = 0.0;
    for (const auto& term : p.terms()) {
      re += term.amplitude.real() * std::cos(k * term.length) - term.amplitude.imag() * std::sin(k * term.length);
      im += term.amplitude.real() * std::sin(k * term.length) + term.amplitude.imag() * std::cos(k * term.length);
    }
    CHECK(std::abs(evaluate(p, k) - cplx(re, im)) < 1e-14);
  }

  const double h = 1e-5;
  for (double k : {0.7, 3.3, 9.9}) {
    const cplx fd2 = (evaluate(p, k + h) - 2.0 * evaluate(p, k) + evaluate(p, k - h)) / (h * h);
    const cplx an2 = evaluate(derivative(p, 2), k);
    CHECK(std::abs(fd2 - an2) / std::abs(an2) < 1e-5);
    const cplx fd1 = (evaluate(p, k + h) - evaluate(p, k - h)) / (2 * h);
    const cplx an1 = evaluate(derivative(p, 1), k);
    CHECK(std::abs(fd1 - an1) / std::abs(an1) < 1e-6);
    const double h3 = 1e-3;
    const cplx fd3 = (evaluate(p, k + 2 * h3) - 2.0 * evaluate(p, k + h3) + 2.0 * evaluate(p, k - h3) -
                      evaluate(p, k - 2 * h3)) / (2 * h3 * h3 * h3);
    const cplx an3 = evaluate(derivative(p, 3), k);
    CHECK(std::abs(fd3 - an3) / std::abs(an3) < 1e-5);
  }
}

TEST_CASE("regularity index") {
  const ExponentialPolynomial p({{1.0, 0.0}, {0.8, 0.5}, {0.6, 0.9}, {1.0, 1.0}});
  const RegularityReport r = regularity_index(p);
  CHECK(r.status == RegularityStatus::Finite);
  CHECK(r.r == 1);
  REQUIRE(r.criterion_values.size() == 2);
  CHECK(r.criterion_values[0] == doctest::Approx(1.4));
  CHECK(r.criterion_values[1] == doctest::Approx(0.94));

  const ExponentialPolynomial interval({{1.0, 0.0}, {-1.0, 2.0}});
  const RegularityReport ri = regularity_index(interval);
  CHECK(ri.status == RegularityStatus::Marginal);
  CHECK(ri.baseline_bootstrapped);

  // three-star: literal sum at r = 1 is exactly 1, centered sum at r = 0 is exactly 1
  const RegularityReport rs = regularity_index(star_delta());
  CHECK(rs.status == RegularityStatus::Finite);
  CHECK(rs.r == 2);
  CHECK(rs.criterion_values[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rs.centered_values[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rs.baseline_bootstrapped);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::vector<double> l(6);
  for (auto& x : l) x = u(rng);
  const MetricGraph g = build_graph(complete_spec(4, l));
  const CMatrix s = bond_scattering_matrix(g, kirchhoff_scattering(g));
  const RegularityReport rk = regularity_index(collapse(secular_multipoly(g, s)));
  CHECK(rk.status == RegularityStatus::Finite);
  for (std::size_t i = 1; i < rk.criterion_values.size(); ++i)
    CHECK(rk.criterion_values[i] <= rk.criterion_values[i - 1]);
}

TEST_CASE("centered form is real on the real axis") {
  const ExponentialPolynomial d = star_delta();
  const CenteredForm cf = realify(d);
  CHECK(cf.shift == doctest::Approx(1.71));
  for (int j = 0; j < 4; ++j) {
    const ExponentialPolynomial z = derivative(cf.poly, j);
    for (double k : {0.1, 2.5, 17.3, 101.0}) CHECK(std::abs(evaluate(z, k).imag()) < 1e-12 * z.l1_norm());
  }
  // zeros coincide: Z = exp(-ikc - i psi) Delta
  for (double k : {0.4, 3.0, 8.8}) {
    const cplx lhs = evaluate(cf.poly, k);
    const cplx rhs = std::exp(cplx(0.0, -k * cf.shift - cf.phase)) * evaluate(d, k);
    CHECK(std::abs(lhs - rhs) < 1e-13);
  }
  CHECK_FALSE(try_realify(ExponentialPolynomial({{1.0, 0.0}, {-0.5, 1.0}})).has_value());
}

TEST_CASE("level generator is the normalised shifted derivative") {
  const MetricGraph g = build_graph(star_spec({0.41, 0.57, 0.73}));
  const CMatrix s = bond_scattering_matrix(g, kirchhoff_scattering(g));
  const MultiPolynomial mp = secular_multipoly(g, s);
  const ExponentialPolynomial d = collapse(mp);
  for (int j = 0; j < 3; ++j) {
    const ExponentialPolynomial gj = collapse(level_generator(mp, j));
    const ExponentialPolynomial z = derivative(realify(d).poly, j);
    const cplx c0 = z.terms().front().amplitude;
    for (double k : {0.5, 4.2, 13.0}) {
      const cplx expect = std::exp(cplx(0.0, k * 1.71)) * evaluate(z, k) / c0;
      CHECK(std::abs(evaluate(gj, k) - expect) < 1e-12);
    }
    CHECK(std::abs(gj.terms().front().amplitude - 1.0) < 1e-14);
  }
}
