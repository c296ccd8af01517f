#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "specgraph/errors.hpp"
#include "specgraph/parallel.hpp"
#include "specgraph/stats.hpp"

using namespace specgraph;

namespace {

constexpr double kPi = std::numbers::pi;

// Harmonic -c cos(m . y + phase) in a dim-bond basis; the last bond carries no winding.
HarmonicTerm harmonic(double c, std::vector<int> winding, double phase = 0.0) {
  HarmonicTerm h;
  h.amplitude = c;
  h.phase = phase;
  h.exponents = std::move(winding);
  h.exponents.push_back(0);
  h.degree = 1;
  return h;
}

std::vector<int> unit(std::size_t dim, std::size_t b, int k = 1) {
  std::vector<int> v(dim, 0);
  v[b] = k;
  return v;
}

double arcsine_cdf(double c, double y) {
  if (y <= -c) return 0.0;
  if (y >= c) return 1.0;
  return 0.5 + std::asin(y / c) / kPi;
}

double max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("single harmonic follows the arcsine law") {
  HarmonicSeries s;
  const double c = 0.7;
  s.terms.push_back(harmonic(c, {1}));
  const std::size_t n = 100000;
  const DistributionEstimate e = empirical_distribution(s, n, 11);
  REQUIRE(e.sample_count == n);
  const double h = e.step();
  double l1 = 0.0;
  for (std::size_t i = 0; i < e.grid.size(); ++i) {
    const double p = arcsine_cdf(c, e.grid[i] + 0.5 * h) - arcsine_cdf(c, e.grid[i] - 0.5 * h);
    l1 += std::abs(e.density[i] * h - p);
  }
  CHECK(l1 < 0.05);
  CHECK(e.integral() == doctest::Approx(1.0).epsilon(0.02));

  double mean = 0.0;
  for (double v : e.samples) mean += v;
  mean /= static_cast<double>(n);
  CHECK(std::abs(mean) < 3.0 * c / std::sqrt(2.0 * static_cast<double>(n)));

  const DistributionEstimate mc = exact_distribution_mc(s, 50000, 3);
  REQUIRE(!mc.char_fn.empty());
  CHECK(std::abs(mc.char_fn[0] - 1.0) < 1e-12);
  double worst = 0.0;
  for (std::size_t k = 0; k < mc.t_grid.size(); ++k)
    worst = std::max(worst, std::abs(mc.char_fn[k] - std::cyl_bessel_j(0.0, c * mc.t_grid[k])));
  CHECK(worst < 5.0 / std::sqrt(50000.0));
}

TEST_CASE("empty series is a point mass") {
  HarmonicSeries s;
  s.mean = 0.25;
  for (const DistributionEstimate& d :
       {empirical_distribution(s, 1000, 1), exact_distribution_mc(s, 1000, 1), bessel_distribution(s)}) {
    REQUIRE(d.grid.size() == 3);
    CHECK(d.grid[1] == 0.25);
    CHECK(d.integral() == doctest::Approx(1.0));
  }
  CHECK(gaussian_reference(s).variance == 0.0);
}

TEST_CASE("torus reduction") {
  HarmonicSeries s;
  s.terms.push_back(harmonic(0.3, {1, 0}));
  s.terms.push_back(harmonic(0.4, {0, 1}));
  CHECK(gaussian_reference(s).variance == doctest::Approx(0.125));

  // opposite windings merge; a zero winding with odd parity becomes the parity term
  HarmonicSeries t;
  t.terms.push_back(harmonic(0.2, {1, -1}));
  t.terms.push_back(harmonic(0.2, {-1, 1}));
  HarmonicTerm odd = harmonic(0.5, {0, 0});
  odd.exponents = {1, 1, 1};
  t.terms.push_back(odd);
  const TorusSeries ts = to_torus(t);
  REQUIRE(ts.terms.size() == 1);
  CHECK(ts.terms[0].mt == std::vector<int>{1, -1});
  CHECK(std::abs(ts.terms[0].z) == doctest::Approx(0.4));
  CHECK(ts.parity == doctest::Approx(0.5));
  CHECK(ts.max_share() == doctest::Approx(0.25 / (0.25 + 0.08)));
}

TEST_CASE("independent harmonics: exact, empirical and Bessel agree") {
  HarmonicSeries s;
  s.terms.push_back(harmonic(0.5, unit(2, 0)));
  s.terms.push_back(harmonic(0.3, unit(2, 1), 0.4));
  const DistributionEstimate mc = exact_distribution_mc(s, 100000, 5);
  const DistributionEstimate emp = empirical_distribution(s, 100000, 6);
  const DistributionEstimate bes = bessel_distribution(s);
  CHECK(distribution_metrics(mc, emp).l1 < 0.05);
  CHECK(distribution_metrics(mc, bes).l1 < 0.05);
  const DistributionEstimate simple = simple_orbit_distribution(s);
  CHECK(max_abs_diff(simple.char_fn, bes.char_fn) < 1e-12);
}

TEST_CASE("one resonant class: simple-orbit matches the exact law") {
  HarmonicSeries s;
  s.terms.push_back(harmonic(0.5, {1, 1}));
  s.terms.push_back(harmonic(0.4, {2, 2}, 0.3));
  const DistributionEstimate mc = exact_distribution_mc(s, 200000, 8);
  const DistributionEstimate simple = simple_orbit_distribution(s);
  const DistributionEstimate bes = bessel_distribution(s);
  CHECK(simple.quadrature >= 64);
  CHECK(std::abs(simple.char_fn[0] - 1.0) < 1e-12);
  // the t grids share their step; compare on the common prefix
  const std::size_t common = std::min(mc.t_grid.size(), simple.t_grid.size());
  REQUIRE(common > 10);
  CHECK(mc.t_grid[common - 1] == doctest::Approx(simple.t_grid[common - 1]));
  double err_simple = 0.0;
  double err_bessel = 0.0;
  for (std::size_t k = 0; k < common; ++k) {
    err_simple = std::max(err_simple, std::abs(simple.char_fn[k] - mc.char_fn[k]));
    err_bessel = std::max(err_bessel, std::abs(bes.char_fn[k] - mc.char_fn[k]));
  }
  CHECK(err_simple < 5.0 / std::sqrt(200000.0));
  CHECK(err_bessel > 0.05);
}

TEST_CASE("many small terms approach the Gaussian") {
  HarmonicSeries s;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.05, 0.1);
  const std::size_t dim = 60;
  for (std::size_t b = 0; b < dim; ++b) s.terms.push_back(harmonic(u(rng), unit(dim, b)));
  const GaussianReference g = gaussian_reference(s);
  const DistributionEstimate bes = bessel_distribution(s);
  const DistributionEstimate gau = gaussian_distribution(g);
  CHECK(distribution_metrics(bes, gau).ks < 0.02);
  const DistributionEstimate emp = empirical_distribution(s, 20000, 2);
  CHECK(ks_to_gaussian(emp.samples, g) < 0.03);
  CHECK(std::abs(skewness(emp.samples)) < 0.1);
}

TEST_CASE("distribution metrics") {
  GaussianReference g{0.0, 1.0};
  const DistributionEstimate a = gaussian_distribution(g);
  const Metrics same = distribution_metrics(a, a);
  CHECK(same.l1 == 0.0);
  CHECK(same.ks == 0.0);

  const DistributionEstimate shifted = gaussian_distribution({0.1, 1.0});
  CHECK(distribution_metrics(a, shifted).ks == doctest::Approx(0.0399).epsilon(0.01));

  DistributionEstimate d0;
  d0.grid = {-0.01, 0.0, 0.01};
  d0.density = {0.0, 100.0, 0.0};
  DistributionEstimate d1 = d0;
  for (double& x : d1.grid) x += 1.0;
  const Metrics far = distribution_metrics(d0, d1);
  CHECK(far.l1 == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(far.ks == doctest::Approx(1.0).epsilon(1e-9));

  DistributionEstimate bad;
  bad.grid = {0.0};
  bad.density = {1.0};
  CHECK_THROWS_AS(distribution_metrics(a, bad), GridMismatch);
}

TEST_CASE("inverse transform rejects ringing") {
  std::vector<double> t(101);
  std::vector<cplx> phi(101, cplx(1.0, 0.0));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.1 * static_cast<double>(i);
  std::vector<double> x(201);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = -5.0 + 0.05 * static_cast<double>(i);
  CHECK_THROWS_AS(inverse_fourier(t, phi, 0.0, x, 0.0), FourierArtifact);
  CHECK_NOTHROW(inverse_fourier(t, phi, 0.0, x, 1.0));
}

TEST_CASE("form factor") {
  const double l0 = 2.5;
  const double sigma = 0.3;
  std::vector<double> tau{0.0, 0.5, 1.0, 2.0, 4.0};
  std::vector<std::function<cplx(double)>> gauss{[&](double x) { return cplx(std::exp(-0.5 * sigma * sigma * x * x), 0.0); }};
  const FormFactor g = form_factor(gauss, l0, tau);
  for (std::size_t i = 0; i < tau.size(); ++i)
    CHECK(std::abs(g.values[i]) == doctest::Approx(kPi / l0 * std::exp(-0.5 * sigma * sigma * tau[i] * tau[i])));

  // rigid spectrum: peaks at tau = 2 L0 j
  const int m_max = 12;
  std::vector<std::function<cplx(double)>> rigid(m_max, [](double) { return cplx(1.0, 0.0); });
  std::vector<double> grid;
  for (int i = 0; i <= 400; ++i) grid.push_back(0.025 * i * l0);
  const FormFactor r = form_factor(rigid, l0, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    cplx direct{0.0, 0.0};
    for (int m = 1; m <= m_max; ++m) direct += std::exp(cplx(0.0, -kPi * m * grid[i] / l0));
    CHECK(std::abs(r.values[i] - kPi / l0 * direct) < 1e-12);
  }
  CHECK(std::abs(r.values[80]) == doctest::Approx(kPi / l0 * m_max));  // tau = 2 L0
  CHECK(std::abs(r.values[40]) < 1e-9 * m_max);                         // tau = L0, m_max even
  CHECK(r.tail == doctest::Approx(kPi / l0));

  const auto f = sample_char_fn({1.0, 3.0}, 2.0);
  CHECK(std::abs(f(kPi / 2.0)) < 1e-15);
}

TEST_CASE("pair correlation of a star spectrum tends to one") {
  const MetricGraph g = build_graph(star_spec({std::sqrt(2.0) - 1.0, 0.5772156649015329, std::sqrt(3.0) - 1.0}));
  const MultiPolynomial mp = secular_multipoly(g, bond_scattering_matrix(g, kirchhoff_scattering(g)));
  const double l0 = g.total_length();
  const double unit_gap = kPi / l0;
  const auto z = real_zeros(collapse(mp), 0.5, 2000.0 * unit_gap);
  const int m_max = 24;
  const double step = 0.25 * unit_gap;
  const std::size_t count = static_cast<std::size_t>(std::ceil((m_max + 4) * unit_gap / step));
  std::vector<DistributionEstimate> dens;
  for (int m = 1; m <= m_max; ++m) {
    std::vector<double> s;
    for (std::size_t i = 0; i + static_cast<std::size_t>(m) < z.size(); ++i) s.push_back(z[i + m] - z[i]);
    dens.push_back(binned_density(s, 0.0, step, count));
  }
  const auto r2 = r2_correlation(dens, l0);
  double avg = 0.0;
  int used = 0;
  for (std::size_t i = 0; i < count; ++i)
    if (dens[0].grid[i] > 6.0 * unit_gap && dens[0].grid[i] < 16.0 * unit_gap) {
      avg += r2[i];
      ++used;
    }
  avg /= used;
  CHECK(std::abs(avg - 1.0) < 0.1);

  dens.back().grid[0] += 1e-3;
  CHECK_THROWS_AS(r2_correlation(dens, l0), GridMismatch);
}

TEST_CASE("propagation from a flat upper level reproduces the regular law") {
  std::vector<OrbitTerm> terms;
  const double om[3] = {1.3, 2.1, 0.7};
  const cplx amp[3] = {cplx(-0.3, 0.1), cplx(0.2, 0.0), cplx(0.0, 0.15)};
  for (int b = 0; b < 3; ++b) {
    OrbitTerm t;
    t.amplitude = amp[b];
    t.omega = om[b];
    t.length = om[b];
    t.degree = 1;
    t.exponents = {0, 0, 0, 0};
    t.exponents[static_cast<std::size_t>(b)] = 1;
    terms.push_back(t);
  }
  const double l0 = 2.0;
  const HierarchyTransition tr(terms, l0, 0.5, 0, TransitionForm::Exact);
  const std::vector<double> flat{0.5};
  const DistributionEstimate p = propagate_hierarchy(flat, tr, 100000, 7);
  const DistributionEstimate e = empirical_distribution(delta_series(terms, 5, l0, 0.5), 100000, 8);
  CHECK(distribution_metrics(p, e).l1 < 0.05);
  CHECK(p.method == DistributionMethod::Propagated);

  const DistributionEstimate ps = propagate_hierarchy(flat, tr, 100000, 7, Observable::Spacing);
  const DistributionEstimate es = empirical_distribution(spacing_series(terms, 1, 5, l0, 0.5), 100000, 8);
  CHECK(distribution_metrics(ps, es).l1 < 0.05);
  CHECK_THROWS_AS(propagate_hierarchy(std::vector<double>{}, tr, 10, 1), MissingLevelData);
}

TEST_CASE("chain propagation") {
  std::vector<OrbitTerm> terms;
  const double om[3] = {1.3, 2.1, 0.7};
  for (int b = 0; b < 3; ++b) {
    OrbitTerm t;
    t.amplitude = cplx(0.2, 0.05 * b);
    t.omega = om[b];
    t.length = om[b];
    t.degree = 1;
    t.exponents = {0, 0, 0, 0};
    t.exponents[static_cast<std::size_t>(b)] = 1;
    terms.push_back(t);
  }
  const double l0 = 2.0;
  const std::vector<HierarchyTransition> one{HierarchyTransition(terms, l0, 0.5, 0)};
  const DistributionEstimate e = empirical_distribution(delta_series(terms, 5, l0, 0.5), 100000, 8);
  for (auto mode : {PropagationMode::Independent, PropagationMode::Coherent}) {
    const ChainResult r = propagate_chain(one, 0.5, 100000, 3, mode);
    REQUIRE(r.delta.size() == 1);
    CHECK(distribution_metrics(r.delta[0], e).l1 < 0.05);
  }

  // two levels: the coherent chain evaluates level 0 with exact neighbours
  const std::vector<HierarchyTransition> two{HierarchyTransition(terms, l0, 0.0, 1),
                                             HierarchyTransition(terms, l0, -0.5, 0)};
  set_thread_count(1);
  const ChainResult a = propagate_chain(two, 0.0, 20000, 5, PropagationMode::Coherent);
  set_thread_count(3);
  const ChainResult b = propagate_chain(two, 0.0, 20000, 5, PropagationMode::Coherent);
  const ChainResult c = propagate_chain(two, 0.0, 20000, 5, PropagationMode::Independent);
  set_thread_count(1);
  const ChainResult d = propagate_chain(two, 0.0, 20000, 5, PropagationMode::Independent);
  set_thread_count(0);
  CHECK(a.delta[0].samples == b.delta[0].samples);
  CHECK(a.spacing[1].samples == b.spacing[1].samples);
  CHECK(c.delta[0].samples == d.delta[0].samples);
  double mean = 0.0;
  for (double v : a.delta[0].samples) mean += v;
  mean /= static_cast<double>(a.delta[0].samples.size());
  CHECK(mean == doctest::Approx(-1.0).epsilon(0.02));

  const std::vector<HierarchyTransition> wrong{HierarchyTransition(terms, l0, 0.5, 0),
                                               HierarchyTransition(terms, l0, 0.5, 1)};
  CHECK_THROWS_AS(propagate_chain(wrong, 0.5, 10, 1), std::invalid_argument);
}

TEST_CASE("sampled estimates do not depend on the thread count") {
  HarmonicSeries s;
  s.terms.push_back(harmonic(0.5, unit(3, 0)));
  s.terms.push_back(harmonic(0.2, {1, 2, 0}, 0.1));
  s.terms.push_back(harmonic(0.3, unit(3, 2, 3)));
  set_thread_count(1);
  const DistributionEstimate a = empirical_distribution(s, 30000, 99);
  const DistributionEstimate am = exact_distribution_mc(s, 30000, 99);
  set_thread_count(4);
  const DistributionEstimate b = empirical_distribution(s, 30000, 99);
  const DistributionEstimate bm = exact_distribution_mc(s, 30000, 99);
  set_thread_count(0);
  CHECK(a.samples == b.samples);
  CHECK(a.density == b.density);
  CHECK(am.density == bm.density);
  const DistributionEstimate c = empirical_distribution(s, 30000, 100);
  CHECK(c.samples != a.samples);
}
