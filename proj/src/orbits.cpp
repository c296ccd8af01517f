#include "specgraph/orbits.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "specgraph/errors.hpp"
#include "specgraph/parallel.hpp"

namespace specgraph {

namespace {

constexpr double kPi = std::numbers::pi;

int smallest_period(std::span<const int> c) {
  const int n = static_cast<int>(c.size());
  for (int p = 1; p < n; ++p) {
    if (n % p != 0) continue;
    bool ok = true;
    for (int i = p; i < n && ok; ++i) ok = c[static_cast<std::size_t>(i)] == c[static_cast<std::size_t>(i - p)];
    if (ok) return p;
  }
  return n;
}

bool is_canonical(std::span<const int> c) {
  const std::size_t n = c.size();
  for (std::size_t r = 1; r < n; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const int a = c[(i + r) % n];
      const int b = c[i];
      if (a < b) return false;
      if (a > b) break;
    }
  }
  return true;
}

Eigen::MatrixXd pattern(const CMatrix& s) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(s.rows(), s.cols());
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 0; j < s.cols(); ++j)
      if (s(i, j) != cplx(0.0, 0.0)) a(i, j) = 1.0;
  return a;
}

PeriodicOrbit make_orbit(const MetricGraph& graph, const CMatrix& s, std::vector<int> cycle) {
  PeriodicOrbit o;
  const std::size_t n = cycle.size();
  o.scatter_count = static_cast<int>(n);
  o.repetition = static_cast<int>(n) / smallest_period(cycle);
  o.traversal.assign(static_cast<std::size_t>(graph.bond_count()), 0);
  cplx amp{1.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const int d = cycle[i];
    const int next = cycle[(i + 1) % n];
    amp *= s(next, d);
    ++o.traversal[static_cast<std::size_t>(graph.directed(d).bond)];
    o.length += graph.directed(d).length;
  }
  o.amplitude = amp / static_cast<double>(o.repetition);
  o.omega = kPi * o.length / graph.total_length();
  const std::size_t nb = o.traversal.size();
  o.reduced.resize(nb - 1);
  int g = 0;
  for (std::size_t b = 0; b + 1 < nb; ++b) {
    o.reduced[b] = o.traversal[b] - o.traversal[nb - 1];
    g = std::gcd(g, o.reduced[b]);
  }
  o.simple = g == 1;
  o.cycle = std::move(cycle);
  return o;
}

}  // namespace

std::vector<int> canonical_rotation(std::span<const int> cycle) {
  std::vector<int> best(cycle.begin(), cycle.end());
  const std::size_t n = cycle.size();
  std::vector<int> cand(n);
  for (std::size_t r = 1; r < n; ++r) {
    for (std::size_t i = 0; i < n; ++i) cand[i] = cycle[(i + r) % n];
    if (cand < best) best = cand;
  }
  return best;
}

double orbit_count_estimate(const CMatrix& s, int max_n) {
  const Eigen::MatrixXd a = pattern(s);
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  double total = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    p = p * a;
    total += p.trace() / n;
  }
  return total;
}

double adjacency_growth_rate(const CMatrix& s) {
  const Eigen::MatrixXd a = pattern(s);
  const Eigen::VectorXcd ev = a.eigenvalues();
  double rho = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) rho = std::max(rho, std::abs(ev(i)));
  return rho;
}

std::vector<PeriodicOrbit> enumerate_orbits(const MetricGraph& graph, const CMatrix& s, int max_scatterings,
                                            std::size_t cap) {
  const int nd = graph.directed_count();
  if (s.rows() != nd || s.cols() != nd) throw DimensionMismatch("scattering matrix does not match the graph");
  if (max_scatterings < 1) return {};
  if (orbit_count_estimate(s, max_scatterings) > static_cast<double>(cap))
    throw Explosion("orbit enumeration up to " + std::to_string(max_scatterings) +
                    " scatterings exceeds the cap of " + std::to_string(cap));

  std::vector<std::vector<int>> succ(static_cast<std::size_t>(nd));
  for (int d = 0; d < nd; ++d)
    for (int e = 0; e < nd; ++e)
      if (s(e, d) != cplx(0.0, 0.0)) succ[static_cast<std::size_t>(d)].push_back(e);

  std::atomic<std::size_t> found{0};
  std::vector<std::vector<PeriodicOrbit>> per_start(static_cast<std::size_t>(nd));
  parallel_for(static_cast<std::size_t>(nd), [&](std::size_t si) {
    const int start = static_cast<int>(si);
    std::vector<int> path{start};
    std::vector<std::size_t> next_idx{0};
    auto& out = per_start[si];
    while (!path.empty()) {
      const int cur = path.back();
      const auto& nb = succ[static_cast<std::size_t>(cur)];
      std::size_t& idx = next_idx.back();
      if (idx >= nb.size()) {
        path.pop_back();
        next_idx.pop_back();
        continue;
      }
      const int e = nb[idx++];
      if (e == start) {
        if (is_canonical(path)) {
          out.push_back(make_orbit(graph, s, path));
          if (found.fetch_add(1) + 1 > cap) throw Explosion("orbit enumeration exceeded the cap");
        }
      }
      if (e < start || static_cast<int>(path.size()) >= max_scatterings) continue;
      path.push_back(e);
      next_idx.push_back(0);
    }
  });

  std::vector<PeriodicOrbit> all;
  all.reserve(found.load());
  for (auto& v : per_start)
    for (auto& o : v) all.push_back(std::move(o));
  std::sort(all.begin(), all.end(), [](const PeriodicOrbit& a, const PeriodicOrbit& b) {
    if (a.scatter_count != b.scatter_count) return a.scatter_count < b.scatter_count;
    return a.cycle < b.cycle;
  });
  return all;
}

std::vector<OrbitTerm> aggregate_orbits(std::span<const PeriodicOrbit> orbits) {
  std::map<std::vector<int>, OrbitTerm> acc;
  for (const auto& o : orbits) {
    auto [it, fresh] = acc.try_emplace(o.traversal);
    OrbitTerm& t = it->second;
    if (fresh) {
      t.exponents = o.traversal;
      t.amplitude = {0.0, 0.0};
      t.length = o.length;
      t.omega = o.omega;
      t.degree = o.scatter_count;
    }
    t.amplitude += o.amplitude;
  }
  std::vector<OrbitTerm> out;
  out.reserve(acc.size());
  for (auto& [k, t] : acc) out.push_back(std::move(t));
  std::stable_sort(out.begin(), out.end(), [](const OrbitTerm& a, const OrbitTerm& b) { return a.degree < b.degree; });
  return out;
}

double staircase_orbit_sum(std::span<const PeriodicOrbit> orbits, const StaircaseModel& weyl, double k) {
  double osc = 0.0;
  for (const auto& o : orbits) osc += (o.amplitude * std::exp(cplx(0.0, o.length * k))).imag();
  return weyl(k) + osc / kPi;
}

double staircase_orbit_sum(std::span<const OrbitTerm> terms, const StaircaseModel& weyl, double k) {
  double osc = 0.0;
  for (const auto& t : terms) osc += (t.amplitude * std::exp(cplx(0.0, t.length * k))).imag();
  return weyl(k) + osc / kPi;
}

cplx truncated_log_det(const CMatrix& s, std::span<const double> directed_lengths, double k, int order) {
  const Eigen::Index n = s.rows();
  if (static_cast<Eigen::Index>(directed_lengths.size()) != n)
    throw DimensionMismatch("length count does not match the scattering matrix");
  CMatrix b(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    b.row(i) = std::exp(cplx(0.0, k * directed_lengths[static_cast<std::size_t>(i)])) * s.row(i);
  CMatrix p = CMatrix::Identity(n, n);
  cplx sum{0.0, 0.0};
  for (int m = 1; m <= order; ++m) {
    p = p * b;
    sum -= p.trace() / static_cast<double>(m);
  }
  return sum;
}

double staircase_trace_sum(const MetricGraph& graph, const CMatrix& s, const StaircaseModel& weyl, double k,
                           int order) {
  std::vector<double> l;
  l.reserve(static_cast<std::size_t>(graph.directed_count()));
  for (const auto& d : graph.directed_bonds()) l.push_back(d.length);
  return weyl(k) - truncated_log_det(s, l, k, order).imag() / kPi;
}

StaircaseModel exact_weyl(const ExponentialPolynomial& delta, double total_length, double k_min) {
  const double spacing = kPi / total_length;
  const double hi = std::max(k_min, 0.0) + 8.0 * spacing;
  const std::vector<double> z = real_zeros(delta, 1e-6, hi);
  // reference point midway in the widest gap near the window start
  double kref = 0.5 * hi;
  double best = -1.0;
  for (std::size_t i = 1; i < z.size(); ++i)
    if (z[i] - z[i - 1] > best) {
      best = z[i] - z[i - 1];
      kref = 0.5 * (z[i] + z[i - 1]);
    }
  StaircaseModel m;
  m.slope = total_length / kPi;
  m.intercept = exact_intercept(delta, total_length, kref, count_zeros(z, kref));
  return m;
}

Classification classify_simple(std::vector<PeriodicOrbit>& orbits) {
  Classification out;
  std::map<std::vector<int>, std::size_t> index;
  for (std::size_t i = 0; i < orbits.size(); ++i) {
    auto& o = orbits[i];
    int g = 0;
    for (int x : o.reduced) g = std::gcd(g, x);
    if (g == 0) {
      out.degenerate.push_back(i);
      o.class_id = -1;
      continue;
    }
    std::vector<int> prim(o.reduced);
    for (int& x : prim) x /= g;
    auto [it, fresh] = index.try_emplace(prim, out.classes.size());
    if (fresh) out.classes.push_back({prim, {}});
    out.classes[it->second].members.emplace_back(i, g);
    o.class_id = static_cast<int>(it->second);
  }
  return out;
}

}  // namespace specgraph
