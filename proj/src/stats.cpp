#include "specgraph/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "specgraph/errors.hpp"
#include "specgraph/parallel.hpp"

namespace specgraph {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kBlock = 4096;
constexpr double kClip = 1e-3;

bool lex_negative(const std::vector<int>& v) {
  for (int x : v)
    if (x != 0) return x < 0;
  return false;
}

// Phase table e^{i k x_b} for |k| <= reach_b.
class PhaseTable {
 public:
  explicit PhaseTable(std::vector<int> reach) : reach_(std::move(reach)) {
    offset_.resize(reach_.size());
    std::size_t total = 0;
    for (std::size_t b = 0; b < reach_.size(); ++b) {
      offset_[b] = total + static_cast<std::size_t>(reach_[b]);
      total += 2 * static_cast<std::size_t>(reach_[b]) + 1;
    }
    table_.resize(total);
  }

  void fill(std::span<const double> x) {
    for (std::size_t b = 0; b < reach_.size(); ++b) {
      const cplx step = std::polar(1.0, x[b]);
      cplx* row = table_.data() + offset_[b];
      row[0] = 1.0;
      cplx p = 1.0;
      for (int k = 1; k <= reach_[b]; ++k) {
        // resynchronise periodically to keep rounding from accumulating
        p = (k % 32 == 0) ? std::polar(1.0, k * x[b]) : p * step;
        row[k] = p;
        row[-k] = std::conj(p);
      }
    }
  }

  cplx phase(const std::vector<int>& m) const {
    cplx z{1.0, 0.0};
    for (std::size_t b = 0; b < m.size(); ++b)
      if (m[b] != 0) z *= table_[static_cast<std::size_t>(static_cast<long>(offset_[b]) + m[b])];
    return z;
  }

 private:
  std::vector<int> reach_;
  std::vector<std::size_t> offset_;
  std::vector<cplx> table_;
};

std::vector<int> reach_of(const std::vector<std::vector<int>>& vectors, std::size_t dim) {
  std::vector<int> r(dim, 0);
  for (const auto& v : vectors)
    for (std::size_t b = 0; b < dim; ++b) r[b] = std::max(r[b], std::abs(v[b]));
  return r;
}

struct TorusDraw {
  std::vector<double> x;
  int s = 0;
};

void draw_torus(std::mt19937_64& rng, TorusDraw& d) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  for (double& v : d.x) v = u(rng);
  d.s = static_cast<int>(rng() >> 63);
}

// Values of a torus series at independent uniform samples, in fixed blocks.
std::vector<double> torus_values(const TorusSeries& ts, std::size_t count, std::uint64_t seed, StreamKey key) {
  std::vector<std::vector<int>> vecs;
  vecs.reserve(ts.terms.size());
  for (const auto& t : ts.terms) vecs.push_back(t.mt);
  const std::vector<int> reach = reach_of(vecs, ts.dim);
  std::vector<double> out(count);
  const std::size_t blocks = (count + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t blk) {
    auto rng = make_stream(seed, key, blk);
    PhaseTable table(reach);
    TorusDraw d{std::vector<double>(ts.dim), 0};
    const std::size_t hi = std::min(count, (blk + 1) * kBlock);
    for (std::size_t i = blk * kBlock; i < hi; ++i) {
      draw_torus(rng, d);
      table.fill(d.x);
      double v = ts.mean - (d.s ? -ts.parity : ts.parity);
      for (const auto& t : ts.terms) {
        const double re = (t.z * table.phase(t.mt)).real();
        v -= (d.s && t.parity) ? -re : re;
      }
      out[i] = v;
    }
  });
  return out;
}

struct FourierSetup {
  double mean = 0.0;
  double sigma = 0.0;
  double window = 0.0;
  std::vector<double> t;
  std::vector<double> x;
};

FourierSetup fourier_setup(double mean, double sigma, const GridOptions& g, double window_fraction) {
  FourierSetup f;
  f.mean = mean;
  f.sigma = sigma;
  f.window = window_fraction * sigma;
  const double t_max = 8.0 / f.window;
  const double dt = kPi / (12.0 * sigma);
  const std::size_t nt = static_cast<std::size_t>(std::ceil(t_max / dt)) + 1;
  f.t.resize(nt);
  for (std::size_t i = 0; i < nt; ++i) f.t[i] = static_cast<double>(i) * dt;
  const std::size_t nx = std::max<std::size_t>(g.points, 3);
  f.x.resize(nx);
  const double lo = mean - g.half_width * sigma;
  const double dx = 2.0 * g.half_width * sigma / static_cast<double>(nx - 1);
  for (std::size_t i = 0; i < nx; ++i) f.x[i] = lo + static_cast<double>(i) * dx;
  return f;
}

DistributionEstimate point_mass(double mean, DistributionMethod method) {
  DistributionEstimate d;
  d.method = method;
  const double w = 1e-6 * std::max(1.0, std::abs(mean));
  d.grid = {mean - w, mean, mean + w};
  d.density = {0.0, 1.0 / w, 0.0};
  return d;
}

double trapezoid(std::span<const double> y, double h) {
  if (y.size() < 2) return 0.0;
  double s = 0.5 * (y.front() + y.back());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
  return s * h;
}

DistributionEstimate from_char_fn(const FourierSetup& f, std::vector<cplx> phi, DistributionMethod method) {
  DistributionEstimate d;
  d.method = method;
  d.grid = f.x;
  d.density = inverse_fourier(f.t, phi, f.mean, f.x, f.window);
  d.t_grid = f.t;
  d.char_fn = std::move(phi);
  return d;
}

double validated_step(const DistributionEstimate& d) {
  if (d.grid.size() < 2 || d.grid.size() != d.density.size())
    throw GridMismatch("density grid and values are inconsistent");
  const double h = d.grid[1] - d.grid[0];
  if (!(h > 0.0)) throw GridMismatch("density grid must be increasing");
  return h;
}

double interpolate(const DistributionEstimate& d, double h, double x) {
  const double u = (x - d.grid.front()) / h;
  if (u < 0.0 || u > static_cast<double>(d.grid.size() - 1)) return 0.0;
  const std::size_t i = std::min(static_cast<std::size_t>(u), d.grid.size() - 2);
  const double w = u - static_cast<double>(i);
  return (1.0 - w) * d.density[i] + w * d.density[i + 1];
}

}  // namespace

std::string to_string(DistributionMethod m) {
  switch (m) {
    case DistributionMethod::Empirical: return "empirical";
    case DistributionMethod::ExactMc: return "exact_mc";
    case DistributionMethod::SimpleOrbit: return "simple_orbit";
    case DistributionMethod::Bessel: return "bessel";
    case DistributionMethod::Gaussian: return "gaussian";
    case DistributionMethod::Propagated: return "propagated";
  }
  return "unknown";
}

double DistributionEstimate::integral() const { return trapezoid(density, step()); }

double GaussianReference::pdf(double x) const {
  const double z = (x - mean) / std::sqrt(variance);
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi * variance);
}

double GaussianReference::cdf(double x) const {
  if (variance <= 0.0) return x < mean ? 0.0 : 1.0;
  return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
}

double TorusSeries::variance() const {
  double v = parity * parity;
  for (const auto& t : terms) v += 0.5 * std::norm(t.z);
  return v;
}

double TorusSeries::max_share() const {
  const double total = variance();
  if (total <= 0.0) return 0.0;
  double top = parity * parity;
  for (const auto& t : terms) top = std::max(top, 0.5 * std::norm(t.z));
  return top / total;
}

TorusSeries to_torus(const HarmonicSeries& s) {
  TorusSeries ts;
  ts.mean = s.mean;
  std::size_t nb = 0;
  for (const auto& t : s.terms) nb = std::max(nb, t.exponents.size());
  if (nb == 0 && !s.terms.empty()) throw DimensionMismatch("series terms carry no traversal vectors");
  ts.dim = nb == 0 ? 0 : nb - 1;
  std::map<std::pair<std::vector<int>, int>, cplx> acc;
  for (const auto& t : s.terms) {
    if (t.exponents.size() != nb) throw DimensionMismatch("traversal vectors differ in length");
    std::vector<int> mt(ts.dim);
    const int last = t.exponents[nb - 1];
    for (std::size_t b = 0; b < ts.dim; ++b) mt[b] = t.exponents[b] - last;
    cplx z = std::polar(t.amplitude, t.phase);
    if (lex_negative(mt)) {
      for (int& v : mt) v = -v;
      z = std::conj(z);
    }
    acc[{std::move(mt), ((last % 2) + 2) % 2}] += z;
  }
  for (auto& [key, z] : acc) {
    const bool zero = std::all_of(key.first.begin(), key.first.end(), [](int v) { return v == 0; });
    if (zero) {
      if (key.second == 0)
        ts.mean -= z.real();
      else
        ts.parity += z.real();
      continue;
    }
    ts.terms.push_back({key.first, key.second, z});
  }
  return ts;
}

GaussianReference gaussian_reference(const HarmonicSeries& s) {
  const TorusSeries ts = to_torus(s);
  return {ts.mean, ts.variance()};
}

DistributionEstimate histogram(std::vector<double> values, DistributionMethod method) {
  if (values.empty()) throw std::invalid_argument("histogram needs at least one value");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  const std::size_t n = sorted.size();
  DistributionEstimate d;
  if (hi - lo <= 1e-12 * std::max(1.0, std::abs(lo))) {
    d = point_mass(0.5 * (lo + hi), method);
    d.samples = std::move(values);
    d.sample_count = n;
    return d;
  }
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double w = pos - static_cast<double>(i);
    return i + 1 < n ? (1.0 - w) * sorted[i] + w * sorted[i + 1] : sorted[i];
  };
  double h = 2.0 * (quantile(0.75) - quantile(0.25)) / std::cbrt(static_cast<double>(n));
  if (!(h > 0.0)) h = (hi - lo) / std::sqrt(static_cast<double>(n));
  const std::size_t bins = std::min<std::size_t>(100000, std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi - lo) / h))));
  h = (hi - lo) / static_cast<double>(bins);
  std::vector<double> counts(bins + 2, 0.0);
  for (double v : sorted) {
    const std::size_t i = std::min(bins - 1, static_cast<std::size_t>((v - lo) / h));
    counts[i + 1] += 1.0;
  }
  d.method = method;
  d.grid.resize(bins + 2);
  d.density.resize(bins + 2);
  for (std::size_t i = 0; i < bins + 2; ++i) {
    d.grid[i] = lo + (static_cast<double>(i) - 0.5) * h;
    d.density[i] = counts[i] / (static_cast<double>(n) * h);
  }
  d.samples = std::move(values);
  d.sample_count = n;
  return d;
}

DistributionEstimate binned_density(std::span<const double> values, double lo, double step, std::size_t count,
                                    DistributionMethod method) {
  if (!(step > 0.0) || count < 2) throw GridMismatch("binning grid needs a positive step and two points");
  DistributionEstimate d;
  d.method = method;
  d.grid.resize(count);
  d.density.assign(count, 0.0);
  for (std::size_t i = 0; i < count; ++i) d.grid[i] = lo + static_cast<double>(i) * step;
  for (double v : values) {
    const double u = std::floor((v - lo) / step + 0.5);
    if (u >= 0.0 && u < static_cast<double>(count)) d.density[static_cast<std::size_t>(u)] += 1.0;
  }
  if (!values.empty())
    for (double& v : d.density) v /= static_cast<double>(values.size()) * step;
  d.sample_count = values.size();
  return d;
}

DistributionEstimate empirical_distribution(const HarmonicSeries& s, std::size_t sample_count, std::uint64_t seed) {
  const TorusSeries ts = to_torus(s);
  DistributionEstimate d = histogram(torus_values(ts, sample_count, seed, StreamKey::kEmpirical));
  d.seed = seed;
  return d;
}

std::vector<double> inverse_fourier(std::span<const double> t_grid, std::span<const cplx> phi, double mean,
                                    std::span<const double> x_grid, double window_sigma) {
  if (t_grid.size() != phi.size() || t_grid.size() < 2) throw GridMismatch("t grid and characteristic function differ");
  const double dt = t_grid[1] - t_grid[0];
  std::vector<cplx> weighted(phi.size());
  for (std::size_t k = 0; k < phi.size(); ++k) {
    const double w = std::exp(-0.5 * std::pow(t_grid[k] * window_sigma, 2));
    const double edge = (k == 0 || k + 1 == phi.size()) ? 0.5 : 1.0;
    weighted[k] = edge * w * phi[k];
  }
  std::vector<double> p(x_grid.size());
  parallel_for(x_grid.size(), [&](std::size_t i) {
    double acc = 0.0;
    const double y = x_grid[i] - mean;
    for (std::size_t k = 0; k < weighted.size(); ++k) acc += (weighted[k] * std::polar(1.0, -t_grid[k] * y)).real();
    p[i] = acc * dt / kPi;
  });
  const double top = *std::max_element(p.begin(), p.end());
  const double low = *std::min_element(p.begin(), p.end());
  if (low < -kClip * top)
    throw FourierArtifact("density dips to " + std::to_string(low / top) + " of its maximum; t grid too short");
  for (double& v : p) v = std::max(v, 0.0);
  const double h = x_grid.size() > 1 ? x_grid[1] - x_grid[0] : 1.0;
  const double mass = trapezoid(p, h);
  if (mass > 0.0)
    for (double& v : p) v /= mass;
  return p;
}

DistributionEstimate exact_distribution_mc(const HarmonicSeries& s, std::size_t sample_count, std::uint64_t seed,
                                           const GridOptions& grid) {
  const TorusSeries ts = to_torus(s);
  const double var = ts.variance();
  if (var <= 0.0) return point_mass(ts.mean, DistributionMethod::ExactMc);
  const double sigma = std::sqrt(var);
  // kernel no narrower than the sample supports
  const double fraction = std::max(grid.window_fraction, 0.9 * std::pow(static_cast<double>(sample_count), -0.2));
  const FourierSetup f = fourier_setup(ts.mean, sigma, grid, fraction);
  const std::vector<double> v = torus_values(ts, sample_count, seed, StreamKey::kExactMc);
  const std::size_t blocks = (sample_count + kBlock - 1) / kBlock;
  std::vector<std::vector<cplx>> partial(blocks, std::vector<cplx>(f.t.size()));
  parallel_for(blocks, [&](std::size_t blk) {
    auto& acc = partial[blk];
    const std::size_t hi = std::min(sample_count, (blk + 1) * kBlock);
    for (std::size_t i = blk * kBlock; i < hi; ++i) {
      const double y = v[i] - ts.mean;
      const cplx step = std::polar(1.0, y * (f.t[1] - f.t[0]));
      cplx z{1.0, 0.0};
      for (std::size_t k = 0; k < f.t.size(); ++k) {
        if (k % 64 == 0) z = std::polar(1.0, y * f.t[k]);
        acc[k] += z;
        z *= step;
      }
    }
  });
  std::vector<cplx> phi(f.t.size(), cplx(0.0, 0.0));
  for (const auto& p : partial)
    for (std::size_t k = 0; k < phi.size(); ++k) phi[k] += p[k];
  for (auto& z : phi) z /= static_cast<double>(sample_count);
  DistributionEstimate d = from_char_fn(f, std::move(phi), DistributionMethod::ExactMc);
  d.sample_count = sample_count;
  d.seed = seed;
  return d;
}

DistributionEstimate simple_orbit_distribution(const HarmonicSeries& s, std::size_t min_quadrature,
                                               const GridOptions& grid) {
  const TorusSeries ts = to_torus(s);
  const double var = ts.variance();
  if (var <= 0.0) return point_mass(ts.mean, DistributionMethod::SimpleOrbit);
  const FourierSetup f = fourier_setup(ts.mean, std::sqrt(var), grid, grid.window_fraction);

  struct Member {
    int nu;
    int parity;
    cplx z;
  };
  std::map<std::vector<int>, std::vector<Member>> classes;
  for (const auto& t : ts.terms) {
    int g = 0;
    for (int v : t.mt) g = std::gcd(g, v);
    std::vector<int> prim(t.mt);
    for (int& v : prim) v /= g;
    classes[prim].push_back({g, t.parity, t.z});
  }
  std::vector<std::vector<Member>> list;
  for (auto& [k, v] : classes) list.push_back(std::move(v));

  // per class and parity: factor Q(t; s) on the t grid
  const double t_max = f.t.back();
  std::vector<std::array<std::vector<cplx>, 2>> q(list.size());
  std::size_t max_nodes = 0;
  std::vector<std::size_t> nodes(list.size(), 0);
  parallel_for(list.size(), [&](std::size_t c) {
    const auto& mem = list[c];
    for (int s_par = 0; s_par < 2; ++s_par) q[c][static_cast<std::size_t>(s_par)].assign(f.t.size(), cplx(0.0, 0.0));
    if (mem.size() == 1) {
      const double a = std::abs(mem[0].z);
      for (std::size_t k = 0; k < f.t.size(); ++k) {
        const double j0 = std::cyl_bessel_j(0.0, f.t[k] * a);
        q[c][0][k] = j0;
        q[c][1][k] = j0;
      }
      return;
    }
    int nu_max = 0;
    double amp = 0.0;
    for (const auto& m : mem) {
      nu_max = std::max(nu_max, m.nu);
      amp += std::abs(m.z);
    }
    const std::size_t kq = std::max<std::size_t>(
        min_quadrature, 2 * static_cast<std::size_t>(nu_max) * static_cast<std::size_t>(std::ceil(t_max * amp + 8.0)));
    nodes[c] = kq;
    for (int s_par = 0; s_par < 2; ++s_par) {
      std::vector<double> fx(kq);
      for (std::size_t i = 0; i < kq; ++i) {
        const double x = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(kq);
        double v = 0.0;
        for (const auto& m : mem) {
          const double re = (m.z * std::polar(1.0, m.nu * x)).real();
          v -= (s_par && m.parity) ? -re : re;
        }
        fx[i] = v;
      }
      auto& out = q[c][static_cast<std::size_t>(s_par)];
      for (std::size_t k = 0; k < f.t.size(); ++k) {
        cplx acc{0.0, 0.0};
        for (double v : fx) acc += std::polar(1.0, f.t[k] * v);
        out[k] = acc / static_cast<double>(kq);
      }
    }
  });
  for (std::size_t n : nodes) max_nodes = std::max(max_nodes, n);

  std::vector<cplx> phi(f.t.size());
  for (std::size_t k = 0; k < f.t.size(); ++k) {
    cplx total{0.0, 0.0};
    for (int s_par = 0; s_par < 2; ++s_par) {
      cplx prod = std::polar(1.0, -f.t[k] * (s_par ? -ts.parity : ts.parity));
      for (const auto& qc : q) prod *= qc[static_cast<std::size_t>(s_par)][k];
      total += prod;
    }
    phi[k] = 0.5 * total;
  }
  DistributionEstimate d = from_char_fn(f, std::move(phi), DistributionMethod::SimpleOrbit);
  d.quadrature = std::max(max_nodes, min_quadrature);
  return d;
}

DistributionEstimate bessel_distribution(const HarmonicSeries& s, const GridOptions& grid) {
  const TorusSeries ts = to_torus(s);
  const double var = ts.variance();
  if (var <= 0.0) return point_mass(ts.mean, DistributionMethod::Bessel);
  const FourierSetup f = fourier_setup(ts.mean, std::sqrt(var), grid, grid.window_fraction);
  std::vector<cplx> phi(f.t.size());
  parallel_for(f.t.size(), [&](std::size_t k) {
    double prod = std::cos(f.t[k] * ts.parity);
    for (const auto& t : ts.terms) prod *= std::cyl_bessel_j(0.0, f.t[k] * std::abs(t.z));
    phi[k] = prod;
  });
  return from_char_fn(f, std::move(phi), DistributionMethod::Bessel);
}

DistributionEstimate gaussian_distribution(const GaussianReference& g, const GridOptions& grid) {
  if (g.variance <= 0.0) return point_mass(g.mean, DistributionMethod::Gaussian);
  const FourierSetup f = fourier_setup(g.mean, std::sqrt(g.variance), grid, grid.window_fraction);
  DistributionEstimate d;
  d.method = DistributionMethod::Gaussian;
  d.grid = f.x;
  d.density.resize(f.x.size());
  for (std::size_t i = 0; i < f.x.size(); ++i) d.density[i] = g.pdf(f.x[i]);
  return d;
}

Metrics distribution_metrics(const DistributionEstimate& a, const DistributionEstimate& b) {
  const double ha = validated_step(a);
  const double hb = validated_step(b);
  const double lo = std::min(a.grid.front(), b.grid.front());
  const double hi = std::max(a.grid.back(), b.grid.back());
  const double h = std::min(ha, hb);
  const double count = std::ceil((hi - lo) / h) + 1.0;
  if (count > 8e6) throw GridMismatch("grids are too dissimilar to compare");
  const std::size_t n = static_cast<std::size_t>(count);
  Metrics m;
  double ca = 0.0;
  double cb = 0.0;
  double pa_prev = 0.0;
  double pb_prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lo + static_cast<double>(i) * h;
    const double pa = interpolate(a, ha, x);
    const double pb = interpolate(b, hb, x);
    if (i > 0) {
      // exact integral of |pa - pb| for piecewise-linear densities
      const double d0 = pa_prev - pb_prev;
      const double d1 = pa - pb;
      if (d0 * d1 >= 0.0)
        m.l1 += 0.5 * h * (std::abs(d0) + std::abs(d1));
      else
        m.l1 += 0.5 * h * (d0 * d0 + d1 * d1) / (std::abs(d0) + std::abs(d1));
      ca += 0.5 * h * (pa_prev + pa);
      cb += 0.5 * h * (pb_prev + pb);
      m.ks = std::max(m.ks, std::abs(ca - cb));
    }
    pa_prev = pa;
    pb_prev = pb;
  }
  return m;
}

double ks_to_gaussian(std::vector<double> samples, const GaussianReference& g) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double c = g.cdf(samples[i]);
    d = std::max({d, std::abs(c - static_cast<double>(i) / n), std::abs(c - static_cast<double>(i + 1) / n)});
  }
  return d;
}

double skewness(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  if (values.size() < 3) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double m2 = 0.0;
  double m3 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  return m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
}

FormFactor form_factor(std::span<const std::function<cplx(double)>> centered_char_fns, double total_length,
                       std::span<const double> tau) {
  FormFactor ff;
  ff.tau.assign(tau.begin(), tau.end());
  ff.values.assign(tau.size(), cplx(0.0, 0.0));
  ff.m_max = static_cast<int>(centered_char_fns.size());
  const double unit = kPi / total_length;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    cplx acc{0.0, 0.0};
    for (std::size_t m = 0; m < centered_char_fns.size(); ++m) {
      const cplx term = std::polar(1.0, -unit * static_cast<double>(m + 1) * tau[i]) * centered_char_fns[m](tau[i]);
      acc += term;
      if (m + 1 == centered_char_fns.size()) ff.tail = std::max(ff.tail, unit * std::abs(term));
    }
    ff.values[i] = unit * acc;
  }
  return ff;
}

std::function<cplx(double)> sample_char_fn(std::vector<double> values, double mean) {
  return [v = std::move(values), mean](double tau) {
    cplx acc{0.0, 0.0};
    for (double x : v) acc += std::polar(1.0, -(x - mean) * tau);
    return v.empty() ? cplx(1.0, 0.0) : acc / static_cast<double>(v.size());
  };
}

std::vector<double> r2_correlation(std::span<const DistributionEstimate> spacing_densities, double total_length) {
  if (spacing_densities.empty()) return {};
  const auto& ref = spacing_densities.front().grid;
  std::vector<double> out(ref.size(), 0.0);
  for (const auto& d : spacing_densities) {
    if (d.grid.size() != ref.size() || d.density.size() != ref.size())
      throw GridMismatch("spacing densities must share one grid");
    for (std::size_t i = 0; i < ref.size(); ++i) {
      if (std::abs(d.grid[i] - ref[i]) > 1e-12 * std::max(1.0, std::abs(ref[i])))
        throw GridMismatch("spacing densities must share one grid");
      out[i] += d.density[i];
    }
  }
  for (double& v : out) v *= kPi / total_length;
  return out;
}

namespace {

// Torus windings of transition terms: phase omega n -> mt . x + pi s m_N.
struct Windings {
  std::size_t dim = 0;
  std::vector<std::vector<int>> mt;
  std::vector<int> odd;
};

Windings windings_of(const std::vector<OrbitTerm>& terms) {
  Windings w;
  std::size_t nb = 0;
  for (const auto& t : terms) nb = std::max(nb, t.exponents.size());
  w.dim = nb == 0 ? 0 : nb - 1;
  w.mt.assign(terms.size(), std::vector<int>(w.dim));
  w.odd.assign(terms.size(), 0);
  for (std::size_t p = 0; p < terms.size(); ++p) {
    if (terms[p].exponents.size() != nb) throw DimensionMismatch("transition terms differ in bond count");
    const int last = terms[p].exponents[nb - 1];
    for (std::size_t b = 0; b < w.dim; ++b) w.mt[p][b] = terms[p].exponents[b] - last;
    w.odd[p] = last % 2 != 0;
  }
  return w;
}

void torus_phases(const Windings& w, const PhaseTable& table, int s, std::vector<cplx>& out) {
  out.resize(w.mt.size());
  for (std::size_t p = 0; p < w.mt.size(); ++p) {
    const cplx z = table.phase(w.mt[p]);
    out[p] = (s && w.odd[p]) ? -z : z;
  }
}

// delta^(j-1) at n + offset given the upper pair (d1, d2) and torus phases of omega n.
double transition_value(const HierarchyTransition& tr, std::span<const cplx> base, double d1, double d2,
                        double offset) {
  double v = tr.mean_term(d1, d2);
  const double shift = 0.5 * (d1 + d2 - 1.0) + offset;
  const auto& terms = tr.terms();
  for (std::size_t p = 0; p < terms.size(); ++p)
    v -= (tr.coefficient(p, d1, d2) * base[p] * std::polar(1.0, terms[p].omega * shift)).imag();
  return v;
}

constexpr std::uint64_t kLevelStride = std::uint64_t{1} << 32;

DistributionEstimate propagate_level(std::span<const double> upper, const HierarchyTransition& transition,
                                     std::size_t sample_count, std::uint64_t seed, Observable observable,
                                     std::uint64_t stream_base) {
  if (upper.empty()) throw MissingLevelData("no upper-level fluctuations to draw from");
  const Windings w = windings_of(transition.terms());
  const std::vector<int> reach = reach_of(w.mt, w.dim);
  const double unit = kPi / transition.total_length();

  std::vector<double> out(sample_count);
  const std::size_t blocks = (sample_count + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t blk) {
    auto torus_rng = make_stream(seed, StreamKey::kPropagateTorus, stream_base + blk);
    auto level_rng = make_stream(seed, StreamKey::kPropagateLevel, stream_base + blk);
    std::uniform_int_distribution<std::size_t> pick(0, upper.size() - 1);
    PhaseTable table(reach);
    TorusDraw d{std::vector<double>(w.dim), 0};
    std::vector<cplx> base;
    const std::size_t hi = std::min(sample_count, (blk + 1) * kBlock);
    for (std::size_t i = blk * kBlock; i < hi; ++i) {
      draw_torus(torus_rng, d);
      table.fill(d.x);
      torus_phases(w, table, d.s, base);
      const double d1 = upper[pick(level_rng)];
      const double d2 = upper[pick(level_rng)];
      if (observable == Observable::Delta) {
        out[i] = transition_value(transition, base, d1, d2, 0.0);
      } else {
        const double d0 = upper[pick(level_rng)];
        out[i] = unit * (1.0 + transition_value(transition, base, d0, d1, 1.0) -
                         transition_value(transition, base, d1, d2, 0.0));
      }
    }
  });
  DistributionEstimate est = histogram(std::move(out), DistributionMethod::Propagated);
  est.seed = seed;
  return est;
}

ChainResult coherent_chain(std::span<const HierarchyTransition> chain, double top_value, std::size_t sample_count,
                           std::uint64_t seed) {
  const std::size_t levels = chain.size();
  const int depth = static_cast<int>(levels);
  std::vector<Windings> w;
  std::vector<std::vector<int>> all;
  for (const auto& tr : chain) {
    w.push_back(windings_of(tr.terms()));
    all.insert(all.end(), w.back().mt.begin(), w.back().mt.end());
    if (w.back().dim != w.front().dim) throw DimensionMismatch("chain levels differ in bond count");
  }
  const std::size_t dim = w.empty() ? 0 : w.front().dim;
  const std::vector<int> reach = reach_of(all, dim);
  const double unit = kPi / chain.front().total_length();

  // offsets -depth..1 around n are needed at the top; one fewer on the left per level
  const std::size_t width = static_cast<std::size_t>(depth) + 2;
  std::vector<std::vector<double>> delta(levels, std::vector<double>(sample_count));
  std::vector<std::vector<double>> spacing(levels, std::vector<double>(sample_count));
  const std::size_t blocks = (sample_count + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t blk) {
    auto rng = make_stream(seed, StreamKey::kPropagateTorus, blk);
    PhaseTable table(reach);
    TorusDraw d{std::vector<double>(dim), 0};
    std::vector<cplx> base;
    std::vector<double> v(width);
    std::vector<double> next(width);
    const std::size_t hi = std::min(sample_count, (blk + 1) * kBlock);
    for (std::size_t i = blk * kBlock; i < hi; ++i) {
      draw_torus(rng, d);
      table.fill(d.x);
      std::fill(v.begin(), v.end(), top_value);
      for (std::size_t k = 0; k < levels; ++k) {
        torus_phases(w[k], table, d.s, base);
        // slot q holds offset q - depth
        for (std::size_t q = k + 1; q < width; ++q)
          next[q] = transition_value(chain[k], base, v[q], v[q - 1], static_cast<double>(q) - depth);
        std::swap(v, next);
        const std::size_t level = static_cast<std::size_t>(chain[k].lower_level());
        delta[level][i] = v[width - 2];
        spacing[level][i] = unit * (1.0 + v[width - 1] - v[width - 2]);
      }
    }
  });
  ChainResult r;
  for (std::size_t j = 0; j < levels; ++j) {
    r.delta.push_back(histogram(std::move(delta[j]), DistributionMethod::Propagated));
    r.spacing.push_back(histogram(std::move(spacing[j]), DistributionMethod::Propagated));
    r.delta.back().seed = seed;
    r.spacing.back().seed = seed;
  }
  return r;
}

}  // namespace

std::string to_string(PropagationMode m) { return m == PropagationMode::Independent ? "independent" : "coherent"; }

DistributionEstimate propagate_hierarchy(std::span<const double> upper, const HierarchyTransition& transition,
                                         std::size_t sample_count, std::uint64_t seed, Observable observable) {
  return propagate_level(upper, transition, sample_count, seed, observable, 0);
}

ChainResult propagate_chain(std::span<const HierarchyTransition> chain, double top_value, std::size_t sample_count,
                            std::uint64_t seed, PropagationMode mode) {
  if (chain.empty()) return {};
  for (std::size_t k = 0; k < chain.size(); ++k)
    if (chain[k].lower_level() != static_cast<int>(chain.size() - 1 - k))
      throw std::invalid_argument("chain must run from the top level down to level 0");
  if (mode == PropagationMode::Coherent) return coherent_chain(chain, top_value, sample_count, seed);

  ChainResult r;
  r.delta.resize(chain.size());
  r.spacing.resize(chain.size());
  std::vector<double> upper{top_value};
  for (std::size_t k = 0; k < chain.size(); ++k) {
    const std::size_t level = static_cast<std::size_t>(chain[k].lower_level());
    const std::uint64_t base = 2 * (k + 1) * kLevelStride;
    r.spacing[level] = propagate_level(upper, chain[k], sample_count, seed, Observable::Spacing, base + kLevelStride);
    r.delta[level] = propagate_level(upper, chain[k], sample_count, seed, Observable::Delta, base);
    upper = r.delta[level].samples;
  }
  return r;
}

}  // namespace specgraph
