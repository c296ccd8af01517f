#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specgraph/series.hpp"

namespace specgraph {

enum class DistributionMethod { Empirical, ExactMc, SimpleOrbit, Bessel, Gaussian, Propagated };

std::string to_string(DistributionMethod m);

struct DistributionEstimate {
  std::vector<double> grid;     // uniform, increasing
  std::vector<double> density;  // >= 0, integrates to 1
  DistributionMethod method = DistributionMethod::Empirical;
  std::vector<double> t_grid;   // characteristic function samples, when computed
  std::vector<cplx> char_fn;    // Phi(t) = <exp(i t (f - mean))>
  std::vector<double> samples;  // raw values for sampled estimates
  std::size_t sample_count = 0;
  std::size_t quadrature = 0;
  std::uint64_t seed = 0;

  double step() const { return grid.size() > 1 ? grid[1] - grid[0] : 0.0; }
  double integral() const;
};

struct GaussianReference {
  double mean = 0.0;
  double variance = 0.0;

  double pdf(double x) const;
  double cdf(double x) const;
};

// Harmonic series in torus coordinates: the phases omega_p n become
// mt . x + pi s m_N with x uniform on [0, 2pi)^(N_B - 1) and parity s in {0, 1}.
// Terms sharing (mt, m_N mod 2) are merged into one complex coefficient z, and
// mt is made lexicographically positive by conjugation:
//   f(x, s) = mean - sum_q (-1)^{s p_q} Re(z_q e^{i mt_q . x}) - (-1)^s parity.
struct TorusTerm {
  std::vector<int> mt;
  int parity = 0;
  cplx z;
};

struct TorusSeries {
  double mean = 0.0;
  double parity = 0.0;  // coefficient of the pure parity term
  std::size_t dim = 0;
  std::vector<TorusTerm> terms;

  double variance() const;  // 1/2 sum |z|^2 + parity^2
  double max_share() const; // largest single contribution to the variance, as a fraction
};

TorusSeries to_torus(const HarmonicSeries& s);

GaussianReference gaussian_reference(const HarmonicSeries& s);

struct GridOptions {
  double window_fraction = 1.0 / 40.0;  // Gaussian smoothing width in units of sigma
  double half_width = 6.0;              // density grid half width in units of sigma
  std::size_t points = 241;
};

// Histogram of series values at uniform torus samples, Freedman-Diaconis bins.
DistributionEstimate empirical_distribution(const HarmonicSeries& s, std::size_t sample_count, std::uint64_t seed);

// Histogram of given values with Freedman-Diaconis bins and one empty bin on each side.
DistributionEstimate histogram(std::vector<double> values, DistributionMethod method = DistributionMethod::Empirical);

// Density of values binned on the uniform grid of bin centres lo + i step, i < count.
// Values outside the grid are dropped from the counts but not from the normalisation.
DistributionEstimate binned_density(std::span<const double> values, double lo, double step, std::size_t count,
                                    DistributionMethod method = DistributionMethod::Empirical);

// Phi(t) by torus Monte Carlo, density by inverse Fourier transform.
DistributionEstimate exact_distribution_mc(const HarmonicSeries& s, std::size_t sample_count, std::uint64_t seed,
                                           const GridOptions& grid = {});

// Resonances kept only within classes of collinear torus vectors.
DistributionEstimate simple_orbit_distribution(const HarmonicSeries& s, std::size_t min_quadrature = 64,
                                               const GridOptions& grid = {});

// Every term independent: Phi(t) = prod J0(t |z|).
DistributionEstimate bessel_distribution(const HarmonicSeries& s, const GridOptions& grid = {});

DistributionEstimate gaussian_distribution(const GaussianReference& g, const GridOptions& grid = {});

// Density from Phi on a uniform t grid starting at 0. Negative values down to
// -1e-3 max are clipped; larger ones throw FourierArtifact.
std::vector<double> inverse_fourier(std::span<const double> t_grid, std::span<const cplx> phi, double mean,
                                    std::span<const double> x_grid, double window_sigma);

struct Metrics {
  double l1 = 0.0;
  double ks = 0.0;
};

// L1 and Kolmogorov-Smirnov distances after linear interpolation onto a common grid.
Metrics distribution_metrics(const DistributionEstimate& a, const DistributionEstimate& b);

// KS distance between raw samples and a Gaussian.
double ks_to_gaussian(std::vector<double> samples, const GaussianReference& g);

double skewness(std::span<const double> values);

struct FormFactor {
  std::vector<double> tau;
  std::vector<cplx> values;
  int m_max = 0;
  double tail = 0.0;  // largest modulus of the last included term
};

// K2(tau) = (pi/L0) sum_{m=1}^{m_max} e^{-i pi m tau / L0} F_m(tau), with
// F_m(tau) = <exp(-i (s_m - pi m / L0) tau)>.
FormFactor form_factor(std::span<const std::function<cplx(double)>> centered_char_fns, double total_length,
                       std::span<const double> tau);

// Characteristic function <exp(-i (v - mean) tau)> of a sample.
std::function<cplx(double)> sample_char_fn(std::vector<double> values, double mean);

// R2(x) = (pi/L0) sum_m P_{s_m}(x); densities must share one grid.
std::vector<double> r2_correlation(std::span<const DistributionEstimate> spacing_densities, double total_length);

// Monte Carlo over one level transition: draw upper-level fluctuations from
// `upper`, torus phases uniformly, and evaluate the lower-level observable.
// delta_n and delta_{n-1} (and delta_{n+1} for spacings) are drawn independently.
// Observable::Delta gives delta^(j-1); Observable::Spacing gives s^(j-1)_{n,1}.
DistributionEstimate propagate_hierarchy(std::span<const double> upper, const HierarchyTransition& transition,
                                         std::size_t sample_count, std::uint64_t seed,
                                         Observable observable = Observable::Delta);

enum class PropagationMode {
  Independent,  // neighbouring upper fluctuations resampled independently at every level
  Coherent,     // every level evaluated at one torus point, neighbours by shifting n
};

std::string to_string(PropagationMode m);

// Distributions of delta^(j) and s^(j)_{n,1}, indexed by level j.
struct ChainResult {
  std::vector<DistributionEstimate> delta;
  std::vector<DistributionEstimate> spacing;
};

// Runs a chain of transitions ordered from the top (chain[0] maps the constant
// baseline `top_value` to level r) down to level 0.
ChainResult propagate_chain(std::span<const HierarchyTransition> chain, double top_value, std::size_t sample_count,
                            std::uint64_t seed, PropagationMode mode = PropagationMode::Independent);

}  // namespace specgraph
