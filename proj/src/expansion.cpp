#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

#include "specgraph/errors.hpp"
#include "specgraph/orbits.hpp"
#include "specgraph/parallel.hpp"

namespace specgraph {

namespace {

// Ranks weak compositions of a degree into n parts through the combinatorial
// number system on the bar positions c_i = m_1 + ... + m_i + i - 1.
class CompositionIndex {
 public:
  CompositionIndex(int parts, int max_degree) : n_(parts) {
    const int top = max_degree + parts;
    binom_.assign(static_cast<std::size_t>(top + 1), std::vector<std::uint64_t>(static_cast<std::size_t>(parts + 1), 0));
    for (int a = 0; a <= top; ++a) {
      binom_[static_cast<std::size_t>(a)][0] = 1;
      for (int b = 1; b <= std::min(a, parts); ++b)
        binom_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
            binom_[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(b - 1)] +
            (b <= a - 1 ? binom_[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(b)] : 0);
    }
    offset_.assign(static_cast<std::size_t>(max_degree + 2), 0);
    for (int d = 0; d <= max_degree; ++d) offset_[static_cast<std::size_t>(d + 1)] = offset_[static_cast<std::size_t>(d)] + count(d);
  }

  std::uint64_t count(int degree) const { return c(degree + n_ - 1, n_ - 1); }
  std::uint64_t total() const { return offset_.back(); }
  std::uint64_t offset(int degree) const { return offset_[static_cast<std::size_t>(degree)]; }

  std::uint64_t index(const int* m, int degree) const {
    std::uint64_t r = 0;
    int partial = 0;
    for (int i = 1; i < n_; ++i) {
      partial += m[i - 1];
      r += c(partial + i - 1, i);
    }
    return offset_[static_cast<std::size_t>(degree)] + r;
  }

  void unrank(std::uint64_t r, int degree, int* m) const {
    std::vector<int> bars(static_cast<std::size_t>(n_), 0);
    int hi = degree + n_ - 2;
    for (int i = n_ - 1; i >= 1; --i) {
      int x = hi;
      while (c(x, i) > r) --x;
      bars[static_cast<std::size_t>(i)] = x;
      r -= c(x, i);
      hi = x - 1;
    }
    int prev = 0;
    for (int i = 1; i < n_; ++i) {
      const int partial = bars[static_cast<std::size_t>(i)] - (i - 1);
      m[i - 1] = partial - prev;
      prev = partial;
    }
    m[n_ - 1] = degree - prev;
  }

 private:
  std::uint64_t c(int a, int b) const {
    if (b < 0 || a < b) return 0;
    return binom_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
  }

  int n_;
  std::vector<std::vector<std::uint64_t>> binom_;
  std::vector<std::uint64_t> offset_;
};

constexpr std::uint64_t kMaxCoefficients = 60'000'000;

}  // namespace

std::vector<OrbitTerm> log_expansion(const MultiPolynomial& g, int max_degree, double total_length) {
  const int n = static_cast<int>(g.lengths.size());
  if (n == 0 || max_degree < 1) return {};
  const CompositionIndex idx(n, max_degree);
  if (idx.total() > kMaxCoefficients)
    throw Explosion("log expansion to degree " + std::to_string(max_degree) + " needs " +
                    std::to_string(idx.total()) + " coefficients");

  struct Factor {
    std::vector<int> v;
    int degree;
    cplx amp;
  };
  std::vector<Factor> factors;
  std::unordered_map<std::uint64_t, cplx> gcoef;
  bool has_one = false;
  for (const auto& t : g.terms) {
    if (static_cast<int>(t.exponents.size()) != n) throw DimensionMismatch("monomial exponent count mismatch");
    int deg = 0;
    for (int e : t.exponents) {
      if (e < 0) throw std::invalid_argument("log expansion needs non-negative exponents");
      deg += e;
    }
    if (deg == 0) {
      if (std::abs(t.amplitude - 1.0) > 1e-12) throw std::invalid_argument("generator constant term must be 1");
      has_one = true;
      continue;
    }
    if (deg > max_degree) continue;
    factors.push_back({t.exponents, deg, t.amplitude});
    gcoef[idx.index(t.exponents.data(), deg)] += t.amplitude;
  }
  if (!has_one) throw std::invalid_argument("generator constant term must be 1");

  std::vector<cplx> h(idx.total(), cplx(0.0, 0.0));
  constexpr std::uint64_t kChunk = 4096;
  for (int d = 1; d <= max_degree; ++d) {
    const std::uint64_t cnt = idx.count(d);
    const std::uint64_t chunks = (cnt + kChunk - 1) / kChunk;
    parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t ci) {
      std::vector<int> m(static_cast<std::size_t>(n));
      std::vector<int> diff(static_cast<std::size_t>(n));
      const std::uint64_t lo = ci * kChunk;
      const std::uint64_t hi = std::min(cnt, lo + kChunk);
      for (std::uint64_t r = lo; r < hi; ++r) {
        idx.unrank(r, d, m.data());
        const std::uint64_t self = idx.offset(d) + r;
        cplx s{0.0, 0.0};
        if (auto it = gcoef.find(self); it != gcoef.end()) s = static_cast<double>(d) * it->second;
        for (const auto& f : factors) {
          if (f.degree >= d) continue;
          bool fits = true;
          for (int b = 0; b < n && fits; ++b) {
            diff[static_cast<std::size_t>(b)] = m[static_cast<std::size_t>(b)] - f.v[static_cast<std::size_t>(b)];
            fits = diff[static_cast<std::size_t>(b)] >= 0;
          }
          if (!fits) continue;
          const int dd = d - f.degree;
          s -= static_cast<double>(dd) * h[idx.index(diff.data(), dd)] * f.amp;
        }
        h[self] = s / static_cast<double>(d);
      }
    });
  }

  std::vector<OrbitTerm> out;
  std::vector<int> m(static_cast<std::size_t>(n));
  for (int d = 1; d <= max_degree; ++d) {
    for (std::uint64_t r = 0; r < idx.count(d); ++r) {
      const cplx a = -h[idx.offset(d) + r];
      if (std::abs(a) < 1e-18) continue;
      idx.unrank(r, d, m.data());
      OrbitTerm t;
      t.exponents = m;
      t.amplitude = a;
      t.length = g.length_of(m);
      t.omega = std::numbers::pi * t.length / total_length;
      t.degree = d;
      out.push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace specgraph
