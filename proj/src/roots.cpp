#include "specgraph/roots.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "specgraph/errors.hpp"
#include "specgraph/parallel.hpp"

namespace specgraph {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kChunk = 4096;
constexpr std::size_t kResync = 64;

// R(k) = b0 + 2 Re sum_{x>0} b_x exp(i k x), the real-valued centered function.
struct RealForm {
  double b0 = 0.0;
  std::vector<double> x;
  std::vector<cplx> b;
  double scale = 0.0;

  explicit RealForm(const ExponentialPolynomial& centered) {
    scale = centered.l1_norm();
    for (const auto& t : centered.terms()) {
      if (std::abs(t.length) <= 1e-14 * std::max(1.0, centered.span())) {
        b0 += t.amplitude.real();
      } else if (t.length > 0.0) {
        x.push_back(t.length);
        b.push_back(t.amplitude);
      }
    }
  }

  double value(double k) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double ph = k * x[i];
      s += b[i].real() * std::cos(ph) - b[i].imag() * std::sin(ph);
    }
    return b0 + 2.0 * s;
  }

  double slope(double k) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double ph = k * x[i];
      // Re(i x b e^{i k x})
      s -= x[i] * (b[i].real() * std::sin(ph) + b[i].imag() * std::cos(ph));
    }
    return 2.0 * s;
  }

  // Values on k_i = a + i h, i < n, by phase recurrence resynchronised every kResync steps.
  void grid(double a, double h, std::size_t first, std::size_t n, double* out) const {
    std::vector<cplx> w(x.size());
    std::vector<cplx> step(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) step[t] = std::polar(1.0, h * x[t]);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t gi = first + i;
      if (i % kResync == 0) {
        const double k = a + static_cast<double>(gi) * h;
        for (std::size_t t = 0; t < x.size(); ++t) w[t] = b[t] * std::polar(1.0, k * x[t]);
      }
      double s = 0.0;
      for (std::size_t t = 0; t < x.size(); ++t) {
        s += w[t].real();
        w[t] *= step[t];
      }
      out[i] = b0 + 2.0 * s;
    }
  }
};

// Complex values of poly on k_i + i y, same recurrence.
void complex_line(const ExponentialPolynomial& poly, double a, double h, double y, std::size_t first,
                  std::size_t n, cplx* out) {
  const auto& terms = poly.terms();
  std::vector<cplx> w(terms.size());
  std::vector<cplx> step(terms.size());
  for (std::size_t t = 0; t < terms.size(); ++t) step[t] = std::polar(1.0, h * terms[t].length);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t gi = first + i;
    if (i % kResync == 0) {
      const double k = a + static_cast<double>(gi) * h;
      for (std::size_t t = 0; t < terms.size(); ++t)
        w[t] = terms[t].amplitude * std::exp(-y * terms[t].length) * std::polar(1.0, k * terms[t].length);
    }
    cplx s{0.0, 0.0};
    for (std::size_t t = 0; t < terms.size(); ++t) {
      s += w[t];
      w[t] *= step[t];
    }
    out[i] = s;
  }
}

template <class F>
void chunked(std::size_t n, F&& fill) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t first = c * kChunk;
    fill(first, std::min(kChunk, n - first));
  });
}

// Phase change of poly from z0 to z1, bisecting until each piece turns less than pi/4.
double phase_increment(const ExponentialPolynomial& poly, cplx z0, cplx f0, cplx z1, cplx f1, int depth) {
  const double d = std::arg(f1 / f0);
  if (std::abs(d) < kPi / 4.0 || depth <= 0) return d;
  const cplx zm = 0.5 * (z0 + z1);
  const cplx fm = evaluate(poly, zm);
  return phase_increment(poly, z0, f0, zm, fm, depth - 1) + phase_increment(poly, zm, fm, z1, f1, depth - 1);
}

double polyline_phase(const ExponentialPolynomial& poly, const std::vector<cplx>& z, const std::vector<cplx>& f) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < z.size(); ++i) total += phase_increment(poly, z[i], f[i], z[i + 1], f[i + 1], 40);
  return total;
}

int winding_from_edges(const ExponentialPolynomial& poly, double a, double b, double hgt,
                       const cplx* bottom, const cplx* top, std::size_t npts, int vertical_pts) {
  // bottom[i], top[i]: values at a + i*(b-a)/(npts-1) -+ i*hgt
  std::vector<cplx> z;
  std::vector<cplx> f;
  const double dx = (b - a) / static_cast<double>(npts - 1);
  for (std::size_t i = 0; i < npts; ++i) {
    z.emplace_back(a + static_cast<double>(i) * dx, -hgt);
    f.push_back(bottom[i]);
  }
  for (int i = 1; i < vertical_pts; ++i) {
    const cplx zz{b, -hgt + 2.0 * hgt * i / vertical_pts};
    z.push_back(zz);
    f.push_back(evaluate(poly, zz));
  }
  for (std::size_t i = npts; i-- > 0;) {
    z.emplace_back(a + static_cast<double>(i) * dx, hgt);
    f.push_back(top[i]);
  }
  for (int i = 1; i < vertical_pts; ++i) {
    const cplx zz{a, hgt - 2.0 * hgt * i / vertical_pts};
    z.push_back(zz);
    f.push_back(evaluate(poly, zz));
  }
  z.push_back(z.front());
  f.push_back(f.front());
  return static_cast<int>(std::lround(polyline_phase(poly, z, f) / (2.0 * kPi)));
}

cplx complex_newton(const ExponentialPolynomial& poly, cplx z, int iters = 60) {
  for (int it = 0; it < iters; ++it) {
    const cplx f = evaluate(poly, z);
    const cplx d = evaluate_derivative(poly, 1, z);
    if (std::abs(d) == 0.0) break;
    const cplx step = f / d;
    z -= step;
    if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(z))) break;
  }
  return z;
}

[[noreturn]] void throw_non_real(cplx z) {
  std::ostringstream os;
  os.precision(17);
  os << "zero off the real axis at k = " << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
  throw NonRealZero(os.str(), z.real(), z.imag());
}

double refine_bracket(const RealForm& f, double a, double fa, double b, double fb, double res_tol) {
  double x = a - fa * (b - a) / (fb - fa);
  if (!(x > a && x < b)) x = 0.5 * (a + b);
  for (int it = 0; it < 200; ++it) {
    const double fx = f.value(x);
    if (fx == 0.0) return x;
    if ((fx < 0.0) == (fa < 0.0)) {
      a = x;
      fa = fx;
    } else {
      b = x;
      fb = fx;
    }
    const double d = f.slope(x);
    double xn = (d != 0.0) ? x - fx / d : 0.5 * (a + b);
    if (!(xn > a && xn < b)) xn = 0.5 * (a + b);
    const double step = std::abs(xn - x);
    x = xn;
    const double width_tol = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x));
    if ((step <= width_tol || b - a <= width_tol) && std::abs(fx) <= res_tol * 1e3) return x;
    if (b - a <= width_tol) return x;
  }
  return x;
}

// Extremum of f in [a, b] given a sign change of the slope.
double refine_extremum(const RealForm& f, double a, double b) {
  double sa = f.slope(a);
  for (int it = 0; it < 200 && b - a > 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(a)); ++it) {
    const double m = 0.5 * (a + b);
    const double sm = f.slope(m);
    if ((sm < 0.0) == (sa < 0.0)) {
      a = m;
      sa = sm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

// Left end of the scanned region: one mean spacing before the window, kept
// clear of k = 0 where symmetric secular functions have high-order zeros.
double scan_start(double k_min, double w) {
  if (k_min > w) return k_min - w;
  if (k_min > 0.0) return 0.5 * k_min;
  return -0.437 * w;
}

struct BlockResult {
  std::vector<double> zeros;
  std::vector<std::pair<double, int>> multiple;
  bool certified = false;
};

RootReport zeros_realifiable(const CenteredForm& cf, double k_min, double k_max, const RootOptions& opt) {
  RootReport rep;
  const ExponentialPolynomial& cp = cf.poly;
  const RealForm f(cp);
  if (f.x.empty()) return rep;  // constant: no isolated zeros
  const double w = 2.0 * kPi / cp.span();
  const auto m = static_cast<std::size_t>(std::max(4L, std::lround(1.0 / opt.scan_fraction)));
  const double h = w / static_cast<double>(m);
  const double hgt = opt.certify_height * w;
  const double lower = scan_start(k_min, w);
  const std::size_t npts = static_cast<std::size_t>(std::ceil((k_max + w - lower) / h)) + 1;
  const double res_tol = opt.residual_tol * f.scale;

  std::vector<double> r(npts);
  chunked(npts, [&](std::size_t first, std::size_t n) { f.grid(lower, h, first, n, r.data() + first); });
  std::vector<cplx> top;
  std::vector<cplx> bottom;
  if (opt.certify) {
    top.resize(npts);
    bottom.resize(npts);
    chunked(npts, [&](std::size_t first, std::size_t n) {
      complex_line(cp, lower, h, hgt, first, n, top.data() + first);
      complex_line(cp, lower, h, -hgt, first, n, bottom.data() + first);
    });
  }

  // block boundaries at the largest |R| near each nominal multiple of m
  std::vector<std::size_t> bnd;
  const std::size_t q = m / 4;
  for (std::size_t nom = 0; nom < npts; nom += m) {
    const std::size_t lo = nom > q ? nom - q : 0;
    const std::size_t hi = std::min(npts - 1, nom + q);
    std::size_t best = lo;
    for (std::size_t i = lo; i <= hi; ++i)
      if (std::abs(r[i]) > std::abs(r[best])) best = i;
    if (bnd.empty() || best > bnd.back()) bnd.push_back(best);
  }
  if (bnd.size() < 2) return rep;

  const std::size_t nblocks = bnd.size() - 1;
  std::vector<BlockResult> res(nblocks);
  parallel_for(nblocks, [&](std::size_t blk) {
    BlockResult& out = res[blk];
    const std::size_t i0 = bnd[blk];
    const std::size_t i1 = bnd[blk + 1];
    const double a = lower + static_cast<double>(i0) * h;
    const double b = lower + static_cast<double>(i1) * h;
    std::vector<std::pair<double, double>> brackets;
    std::vector<double> exact;
    for (std::size_t i = i0; i < i1; ++i) {
      if (r[i] == 0.0 && i > i0) exact.push_back(lower + static_cast<double>(i) * h);
      if (r[i] * r[i + 1] < 0.0)
        brackets.emplace_back(lower + static_cast<double>(i) * h, lower + static_cast<double>(i + 1) * h);
    }
    auto refine_all = [&](const std::vector<std::pair<double, double>>& br) {
      for (const auto& [x0, x1] : br) out.zeros.push_back(refine_bracket(f, x0, f.value(x0), x1, f.value(x1), res_tol));
      for (double e : exact) out.zeros.push_back(e);
    };
    if (!opt.certify) {
      refine_all(brackets);
      return;
    }
    int wnd = winding_from_edges(cp, a, b, hgt, bottom.data() + i0, top.data() + i0, i1 - i0 + 1, 8);
    int found = static_cast<int>(brackets.size() + exact.size());
    if (found > wnd) {
      // recount with a finer contour before giving up
      const std::size_t fine = (i1 - i0) * 8 + 1;
      std::vector<cplx> bt(fine);
      std::vector<cplx> tp(fine);
      const double fh = (b - a) / static_cast<double>(fine - 1);
      for (std::size_t i = 0; i < fine; ++i) {
        bt[i] = evaluate(cp, cplx{a + static_cast<double>(i) * fh, -hgt});
        tp[i] = evaluate(cp, cplx{a + static_cast<double>(i) * fh, hgt});
      }
      wnd = winding_from_edges(cp, a, b, hgt, bt.data(), tp.data(), fine, 64);
      if (found > wnd) {
        std::ostringstream os;
        os << "zero count certification failed on [" << a << ", " << b << "]: " << found << " sign changes, winding " << wnd;
        throw CloseZeros(os.str());
      }
    }
    if (found == wnd) {
      refine_all(brackets);
      out.certified = true;
      return;
    }
    // fewer sign changes than zeros: rescan finely
    const std::size_t fine = (i1 - i0) * 128;
    const double fh = (b - a) / static_cast<double>(fine);
    std::vector<double> fv(fine + 1);
    std::vector<double> sv(fine + 1);
    for (std::size_t i = 0; i <= fine; ++i) {
      const double k = a + static_cast<double>(i) * fh;
      fv[i] = f.value(k);
      sv[i] = f.slope(k);
    }
    std::vector<std::pair<double, double>> fine_br;
    exact.clear();
    for (std::size_t i = 0; i < fine; ++i) {
      if (fv[i] == 0.0 && i > 0) exact.push_back(a + static_cast<double>(i) * fh);
      if (fv[i] * fv[i + 1] < 0.0)
        fine_br.emplace_back(a + static_cast<double>(i) * fh, a + static_cast<double>(i + 1) * fh);
    }
    found = static_cast<int>(fine_br.size() + exact.size());
    if (found == wnd) {
      refine_all(fine_br);
      out.certified = true;
      return;
    }
    // touching extrema are multiple zeros
    std::vector<double> touching;
    double best_x = 0.5 * (a + b);
    double best_v = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < fine; ++i) {
      if (sv[i] * sv[i + 1] < 0.0) {
        const double xe = refine_extremum(f, a + static_cast<double>(i) * fh, a + static_cast<double>(i + 1) * fh);
        const double ve = std::abs(f.value(xe));
        if (ve <= res_tol) touching.push_back(xe);
        if (ve < best_v) {
          best_v = ve;
          best_x = xe;
        }
      }
    }
    // a single touching point absorbs the whole deficit (even order >= 2)
    const int deficit = wnd - found;
    const bool single = touching.size() == 1 && deficit >= 2 && deficit % 2 == 0;
    if (single || (!touching.empty() && deficit == 2 * static_cast<int>(touching.size()))) {
      if (opt.strict && !touching.empty()) {
        std::ostringstream os;
        os.precision(17);
        os << "multiple zero at k = " << touching.front();
        throw CloseZeros(os.str());
      }
      refine_all(fine_br);
      const int mult = single ? deficit : 2;
      for (double t : touching) {
        for (int i = 0; i < mult; ++i) out.zeros.push_back(t);
        out.multiple.emplace_back(t, mult);
      }
      out.certified = true;
      return;
    }
    const cplx z = complex_newton(cp, cplx{best_x, 0.5 * hgt});
    if (z.real() >= k_min && z.real() <= k_max) throw_non_real(z);
    // outside the requested window: keep what the scan found, uncertified
    refine_all(fine_br);
  });

  for (auto& br : res) {
    rep.zeros.insert(rep.zeros.end(), br.zeros.begin(), br.zeros.end());
    rep.multiple_zeros.insert(rep.multiple_zeros.end(), br.multiple.begin(), br.multiple.end());
    if (br.certified) ++rep.certified_blocks;
  }
  rep.blocks = nblocks;
  return rep;
}

struct Window {
  double lo;
  double hi;
};

void locate_complex(const ExponentialPolynomial& poly, double a, double b, double hgt, int wnd, double min_width,
                    const RootOptions& opt, const Window& win, BlockResult& out, int depth) {
  if (wnd <= 0) return;
  if (wnd == 1 || b - a < min_width || depth > 60) {
    cplx z = complex_newton(poly, cplx{0.5 * (a + b), 0.0});
    if (!(z.real() >= a - (b - a) && z.real() <= b + (b - a)) || std::abs(z.imag()) > 2.0 * hgt)
      z = complex_newton(poly, cplx{0.5 * (a + b), 0.5 * hgt});
    if (z.real() < win.lo || z.real() > win.hi) return;
    if (std::abs(z.imag()) > opt.imag_tol) throw_non_real(z);
    if (wnd > 1) {
      if (opt.strict) throw CloseZeros("unresolved zero cluster near k = " + std::to_string(z.real()));
      out.multiple.emplace_back(z.real(), wnd);
    }
    for (int i = 0; i < wnd; ++i) out.zeros.push_back(z.real());
    return;
  }
  double mid = 0.5 * (a + b);
  // keep the split line away from zeros
  double best = std::abs(evaluate(poly, mid));
  for (int s = 1; s <= 4; ++s) {
    for (double sgn : {-1.0, 1.0}) {
      const double x = 0.5 * (a + b) + sgn * s * (b - a) / 20.0;
      const double v = std::abs(evaluate(poly, x));
      if (v > best) {
        best = v;
        mid = x;
      }
    }
  }
  const int wl = winding_count(poly, a, mid, hgt);
  const int wr = wnd - wl;
  locate_complex(poly, a, mid, hgt, wl, min_width, opt, win, out, depth + 1);
  locate_complex(poly, mid, b, hgt, wr, min_width, opt, win, out, depth + 1);
}

RootReport zeros_general(const ExponentialPolynomial& poly, double k_min, double k_max, const RootOptions& opt) {
  RootReport rep;
  if (poly.size() < 2) return rep;
  const double w = 2.0 * kPi / poly.span();
  const double hgt = opt.certify_height * w;
  const double lower = scan_start(k_min, w);
  const auto nblocks = static_cast<std::size_t>(std::ceil((k_max + w - lower) / w));
  std::vector<BlockResult> res(nblocks);
  parallel_for(nblocks, [&](std::size_t blk) {
    const double a = lower + static_cast<double>(blk) * w;
    const double b = a + w;
    const int wnd = winding_count(poly, a, b, hgt);
    locate_complex(poly, a, b, hgt, wnd, 1e-9 * w, opt, Window{k_min, k_max}, res[blk], 0);
    std::sort(res[blk].zeros.begin(), res[blk].zeros.end());
    res[blk].certified = true;
  });
  for (auto& br : res) {
    rep.zeros.insert(rep.zeros.end(), br.zeros.begin(), br.zeros.end());
    rep.multiple_zeros.insert(rep.multiple_zeros.end(), br.multiple.begin(), br.multiple.end());
    ++rep.certified_blocks;
  }
  rep.blocks = nblocks;
  return rep;
}

RootReport zeros_any_window(const ExponentialPolynomial& poly, double k_min, double k_max, const RootOptions& opt) {
  RootReport rep;
  if (auto cf = try_realify(poly)) {
    rep = zeros_realifiable(*cf, k_min, k_max, opt);
  } else {
    rep = zeros_general(poly, k_min, k_max, opt);
  }
  std::sort(rep.zeros.begin(), rep.zeros.end());
  std::erase_if(rep.zeros, [&](double z) { return z < k_min || z > k_max; });
  std::erase_if(rep.multiple_zeros, [&](const auto& p) { return p.first < k_min || p.first > k_max; });
  return rep;
}

}  // namespace

int winding_count(const ExponentialPolynomial& poly, double a, double b, double h) {
  const double w = 2.0 * kPi / std::max(poly.span(), 1e-300);
  const auto n = static_cast<std::size_t>(std::max(16.0, std::ceil(64.0 * (b - a) / w))) + 1;
  std::vector<cplx> bt(n);
  std::vector<cplx> tp(n);
  const double dx = (b - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    bt[i] = evaluate(poly, cplx{a + static_cast<double>(i) * dx, -h});
    tp[i] = evaluate(poly, cplx{a + static_cast<double>(i) * dx, h});
  }
  return winding_from_edges(poly, a, b, h, bt.data(), tp.data(), n, 16);
}

RootReport real_zeros_report(const ExponentialPolynomial& poly, double k_min, double k_max, const RootOptions& opt) {
  if (!(k_max > k_min) || k_min < 0.0) throw std::invalid_argument("window must satisfy k_max > k_min >= 0");
  return zeros_any_window(poly, k_min, k_max, opt);
}

std::vector<double> real_zeros(const ExponentialPolynomial& poly, double k_min, double k_max, const RootOptions& opt) {
  return real_zeros_report(poly, k_min, k_max, opt).zeros;
}

double SeparatorSequence::reconstruct(std::size_t i) const {
  return kPi / total_length * (static_cast<double>(labels.at(i)) + fluctuations.at(i));
}

SeparatorSequence make_sequence(int level, double total_length, std::vector<double> zeros, long first_label) {
  std::vector<long> labels(zeros.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = first_label + static_cast<long>(i);
  return make_sequence(level, total_length, std::move(zeros), std::move(labels));
}

SeparatorSequence make_sequence(int level, double total_length, std::vector<double> zeros, std::vector<long> labels) {
  if (zeros.size() != labels.size()) throw DimensionMismatch("one label per zero is required");
  SeparatorSequence s;
  s.level = level;
  s.total_length = total_length;
  s.zeros = std::move(zeros);
  s.labels = std::move(labels);
  s.fluctuations.resize(s.zeros.size());
  for (std::size_t i = 0; i < s.zeros.size(); ++i)
    s.fluctuations[i] = total_length / kPi * s.zeros[i] - static_cast<double>(s.labels[i]);
  return s;
}

double baseline_offset(const ExponentialPolynomial& delta, int r) {
  const CenteredForm cf = realify(delta);
  const cplx top = cf.poly.terms().back().amplitude;
  const double v = -0.5 * r - std::arg(top) / kPi;
  return v - std::floor(v);
}

SeparatorSequence baseline_sequence(double total_length, double beta, int level, double k_min, double k_max) {
  const long n0 = static_cast<long>(std::ceil(k_min * total_length / kPi - beta));
  const long n1 = static_cast<long>(std::floor(k_max * total_length / kPi - beta));
  SeparatorSequence s;
  s.level = level;
  s.total_length = total_length;
  for (long n = n0; n <= n1; ++n) {
    s.zeros.push_back(kPi / total_length * (static_cast<double>(n) + beta));
    s.labels.push_back(n);
    s.fluctuations.push_back(beta);
  }
  return s;
}

BootstrapReport verify_bootstrap(const std::vector<double>& inner, const std::vector<double>& outer) {
  BootstrapReport rep;
  if (inner.size() < 2 || outer.empty()) return rep;
  // gap g is (inner[g], inner[g+1])
  auto gap_of = [&](double x) -> long {
    return static_cast<long>(std::upper_bound(inner.begin(), inner.end(), x) - inner.begin()) - 1;
  };
  const long last_gap = static_cast<long>(inner.size()) - 2;
  std::vector<int> counts(inner.size() - 1, 0);
  long first = -1;
  long last = -1;
  for (double x : outer) {
    const long g = gap_of(x);
    if (g < 0 || g > last_gap) continue;
    if (x == inner[static_cast<std::size_t>(g)]) {
      rep.violations.push_back({g, 0});  // coincides with a separator
      rep.pass = false;
      continue;
    }
    ++counts[static_cast<std::size_t>(g)];
    ++rep.outer_checked;
    if (first < 0) first = g;
    last = g;
  }
  if (first < 0) return rep;
  rep.first_gap = first;
  rep.last_gap = last;
  for (long g = first; g <= last; ++g) {
    const int c = counts[static_cast<std::size_t>(g)];
    if (c != 1) {
      rep.pass = false;
      rep.violations.push_back({g, c});
    }
  }
  std::sort(rep.violations.begin(), rep.violations.end(),
            [](const InterlaceViolation& x, const InterlaceViolation& y) { return x.gap < y.gap; });
  return rep;
}

BootstrapReport verify_bootstrap(const SeparatorSequence& inner, const SeparatorSequence& outer) {
  return verify_bootstrap(inner.zeros, outer.zeros);
}

bool Hierarchy::all_bootstrapped() const {
  return std::all_of(reports.begin(), reports.end(), [](const BootstrapReport& r) { return r.pass; });
}

Hierarchy separator_hierarchy(const ExponentialPolynomial& delta, int r, double k_min, double k_max,
                              const RootOptions& opt) {
  if (r < 0) throw std::invalid_argument("hierarchy depth must be nonnegative");
  if (!(k_max > k_min) || k_min <= 0.0) throw std::invalid_argument("window must satisfy k_max > k_min > 0");
  Hierarchy h;
  h.r = r;
  h.k_min = k_min;
  h.k_max = k_max;
  const CenteredForm cf = realify(delta);
  const double l0 = 0.5 * cf.poly.span();
  h.total_length = l0;
  h.beta = baseline_offset(delta, r);
  const double w = kPi / l0;
  auto pad = [&](int j) { return 2.0 * static_cast<double>(j + 1) * w; };
  // lower ends shrink towards k = 0 geometrically instead of crossing it
  auto lower = [&](int j) { return k_min - pad(j) > 0.0 ? k_min - pad(j) : k_min * std::pow(0.5, j + 1); };

  std::vector<SeparatorSequence> full(static_cast<std::size_t>(r + 2));
  full[static_cast<std::size_t>(r + 1)] =
      baseline_sequence(l0, h.beta, r + 1, lower(r + 1), k_max + pad(r + 1));
  h.unlabeled.assign(static_cast<std::size_t>(r + 2), 0);
  h.reports.resize(static_cast<std::size_t>(r + 1));
  for (int j = r; j >= 0; --j) {
    const ExponentialPolynomial fj = derivative(cf.poly, j);
    const RootReport rr = zeros_any_window(fj, lower(j), k_max + pad(j), opt);
    const SeparatorSequence& up = full[static_cast<std::size_t>(j + 1)];
    std::vector<double> z;
    std::vector<long> lab;
    for (double x : rr.zeros) {
      const auto pos = static_cast<std::size_t>(std::upper_bound(up.zeros.begin(), up.zeros.end(), x) - up.zeros.begin());
      if (pos == 0 || pos >= up.zeros.size()) {
        ++h.unlabeled[static_cast<std::size_t>(j)];
        continue;
      }
      z.push_back(x);
      lab.push_back(up.labels[pos]);
    }
    full[static_cast<std::size_t>(j)] = make_sequence(j, l0, std::move(z), std::move(lab));
    h.reports[static_cast<std::size_t>(j)] = verify_bootstrap(up, full[static_cast<std::size_t>(j)]);
  }
  for (auto& s : full) {
    SeparatorSequence t;
    t.level = s.level;
    t.total_length = l0;
    for (std::size_t i = 0; i < s.zeros.size(); ++i) {
      if (s.zeros[i] < k_min || s.zeros[i] > k_max) continue;
      t.zeros.push_back(s.zeros[i]);
      t.labels.push_back(s.labels[i]);
      t.fluctuations.push_back(s.fluctuations[i]);
    }
    h.levels.push_back(std::move(t));
  }
  return h;
}

StaircaseModel weyl_fit(const SeparatorSequence& seq, std::size_t min_zeros) {
  const std::size_t n = seq.zeros.size();
  if (n < std::max<std::size_t>(min_zeros, 2)) throw TooFewZeros("weyl_fit needs at least " + std::to_string(min_zeros) + " zeros");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += seq.zeros[i];
    my += static_cast<double>(seq.labels[i]) - 0.5;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = seq.zeros[i] - mx;
    sxy += dx * (static_cast<double>(seq.labels[i]) - 0.5 - my);
    sxx += dx * dx;
  }
  StaircaseModel m;
  m.slope = sxy / sxx;
  m.intercept = my - m.slope * mx;
  m.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    m.residuals[i] = static_cast<double>(seq.labels[i]) - 0.5 - m(seq.zeros[i]);
  return m;
}

std::vector<std::pair<long, double>> extract_level(const std::function<double(double)>& f,
                                                   const SeparatorSequence& cells,
                                                   const SeparatorSequence& lower) {
  std::vector<std::pair<long, double>> out;
  for (std::size_t i = 1; i < cells.zeros.size(); ++i) {
    const double a = cells.zeros[i - 1];
    const double b = cells.zeros[i];
    auto lo = std::upper_bound(lower.zeros.begin(), lower.zeros.end(), a);
    auto hi = std::lower_bound(lower.zeros.begin(), lower.zeros.end(), b);
    const auto count = hi - lo;
    if (count != 1)
      throw BootstrapViolation("cell " + std::to_string(cells.labels[i]) + " holds " + std::to_string(count) + " points");
    out.emplace_back(cells.labels[i], f(*lo));
  }
  return out;
}

std::size_t count_zeros(const std::vector<double>& zeros, double k) {
  return static_cast<std::size_t>(std::upper_bound(zeros.begin(), zeros.end(), k) - zeros.begin());
}

ExponentialPolynomial normalized_generator(const ExponentialPolynomial& poly) {
  const double l = poly.min_length();
  const cplx a0 = poly.terms().front().amplitude;
  std::vector<ExpTerm> t;
  for (const auto& term : poly.terms()) t.push_back({term.amplitude / a0, term.length - l});
  return ExponentialPolynomial(std::move(t), 0.0);
}

double im_log_continued(const ExponentialPolynomial& g, double k) {
  double lpos = 0.0;
  double mass = 0.0;
  for (const auto& t : g.terms()) {
    if (t.length > 0.0) {
      if (lpos == 0.0) lpos = t.length;
      mass += std::abs(t.amplitude);
    }
  }
  if (lpos == 0.0) return std::arg(g.terms().front().amplitude);
  double y = std::max(0.0, std::log(4.0 * mass) / lpos);
  cplx fprev = evaluate(g, cplx{k, y});
  double phase = std::arg(fprev);  // |g - 1| < 1/4 so the principal branch is the continued one
  double step = 0.02 * 2.0 * kPi / g.max_length();
  while (y > 0.0) {
    double dy = std::min(step, y);
    for (;;) {
      const double yn = y - dy;
      const cplx fn = evaluate(g, cplx{k, yn});
      const double d = std::arg(fn / fprev);
      if (std::abs(d) < 0.3 || dy < 1e-14) {
        phase += d;
        fprev = fn;
        y = yn;
        break;
      }
      dy *= 0.5;
    }
  }
  return phase;
}

double exact_intercept(const ExponentialPolynomial& delta, double total_length, double k_ref,
                       std::size_t zeros_in_window) {
  const ExponentialPolynomial g = normalized_generator(delta);
  return static_cast<double>(zeros_in_window) + im_log_continued(g, k_ref) / kPi - total_length / kPi * k_ref;
}

double level_intercept(const ExponentialPolynomial& level_fn, const SeparatorSequence& seq) {
  if (seq.zeros.size() < 2) throw TooFewZeros("level_intercept needs two zeros");
  const ExponentialPolynomial g = normalized_generator(level_fn);
  const std::size_t i = seq.zeros.size() / 2;
  const double k = 0.5 * (seq.zeros[i - 1] + seq.zeros[i]);
  const double u = seq.total_length / kPi * k;
  return static_cast<double>(seq.labels[i - 1]) - u + im_log_continued(g, k) / kPi;
}

}  // namespace specgraph
