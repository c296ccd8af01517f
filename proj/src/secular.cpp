#include "specgraph/secular.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "specgraph/errors.hpp"

namespace specgraph {

namespace {
constexpr int kMaxDeterminantDimension = 16;
// sums that equal 1 analytically must not pass the strict inequality through rounding
constexpr double kStrictMargin = 1e-10;
}

ExponentialPolynomial::ExponentialPolynomial(std::vector<ExpTerm> terms, double merge_tol) {
  std::stable_sort(terms.begin(), terms.end(),
                   [](const ExpTerm& x, const ExpTerm& y) { return x.length < y.length; });
  double scale = 0.0;
  for (const auto& t : terms) scale = std::max(scale, std::abs(t.length));
  const double tol = merge_tol * std::max(scale, 1e-300);
  double group_start = 0.0;
  for (const auto& t : terms) {
    if (!terms_.empty() && t.length - group_start <= tol) {
      terms_.back().amplitude += t.amplitude;
    } else {
      terms_.push_back(t);
      group_start = t.length;
    }
  }
  double amax = 0.0;
  for (const auto& t : terms_) amax = std::max(amax, std::abs(t.amplitude));
  std::erase_if(terms_, [&](const ExpTerm& t) { return std::abs(t.amplitude) <= 1e-14 * amax; });
}

double ExponentialPolynomial::min_length() const {
  if (terms_.empty()) throw std::logic_error("empty exponential polynomial");
  return terms_.front().length;
}

double ExponentialPolynomial::max_length() const {
  if (terms_.empty()) throw std::logic_error("empty exponential polynomial");
  return terms_.back().length;
}

double ExponentialPolynomial::l1_norm() const {
  double s = 0.0;
  for (const auto& t : terms_) s += std::abs(t.amplitude);
  return s;
}

cplx ExponentialPolynomial::amplitude_at(double length, double tol) const {
  for (const auto& t : terms_)
    if (std::abs(t.length - length) <= tol * std::max(1.0, std::abs(length))) return t.amplitude;
  return {0.0, 0.0};
}

double MultiPolynomial::length_of(const std::vector<int>& exponents) const {
  double l = 0.0;
  for (std::size_t b = 0; b < exponents.size(); ++b) l += exponents[b] * lengths[b];
  return l;
}

MultiPolynomial expand_determinant(const CMatrix& s, std::span<const int> variable_of_row,
                                   std::span<const double> variable_lengths) {
  const auto n = static_cast<int>(s.rows());
  if (s.rows() != s.cols()) throw DimensionMismatch("scattering matrix is not square");
  if (static_cast<int>(variable_of_row.size()) != n)
    throw DimensionMismatch("one variable per directed bond is required");
  if (n > kMaxDeterminantDimension)
    throw TooLarge("determinant expansion limited to dimension " + std::to_string(kMaxDeterminantDimension));
  if (unitarity_residual(s) > 1e-9) throw NonUnitary("bond scattering matrix is not unitary");

  const std::size_t nvar = variable_lengths.size();
  std::map<std::vector<int>, cplx> acc;
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(n));
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    idx.clear();
    for (int i = 0; i < n; ++i)
      if ((mask >> i) & 1u) idx.push_back(i);
    cplx minor{1.0, 0.0};
    if (!idx.empty()) {
      const auto m = static_cast<Eigen::Index>(idx.size());
      CMatrix sub(m, m);
      for (Eigen::Index r = 0; r < m; ++r)
        for (Eigen::Index c = 0; c < m; ++c) sub(r, c) = s(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
      minor = sub.partialPivLu().determinant();
      if (std::abs(minor) < 1e-15) continue;
    }
    std::vector<int> exps(nvar, 0);
    for (int i : idx) ++exps[static_cast<std::size_t>(variable_of_row[static_cast<std::size_t>(i)])];
    acc[exps] += (idx.size() % 2 == 0 ? 1.0 : -1.0) * minor;
  }

  MultiPolynomial mp;
  mp.lengths.assign(variable_lengths.begin(), variable_lengths.end());
  for (auto& [e, a] : acc)
    if (std::abs(a) > 1e-13) mp.terms.push_back({e, a});
  std::stable_sort(mp.terms.begin(), mp.terms.end(), [&](const MonomialTerm& x, const MonomialTerm& y) {
    return mp.length_of(x.exponents) < mp.length_of(y.exponents);
  });
  const cplx c0 = mp.terms.empty() ? cplx{0.0, 0.0} : mp.terms.front().amplitude;
  const bool zero_first = !mp.terms.empty() &&
                          std::all_of(mp.terms.front().exponents.begin(), mp.terms.front().exponents.end(),
                                      [](int e) { return e == 0; });
  if (!zero_first || std::abs(c0 - 1.0) > 1e-12)
    throw std::logic_error("constant term of det(I - DS) differs from 1");
  return mp;
}

MultiPolynomial secular_multipoly(const MetricGraph& graph, const CMatrix& s) {
  std::vector<int> var;
  for (const auto& d : graph.directed_bonds()) var.push_back(d.bond);
  return expand_determinant(s, var, graph.bond_lengths());
}

ExponentialPolynomial collapse(const MultiPolynomial& mp) {
  std::vector<ExpTerm> t;
  t.reserve(mp.terms.size());
  for (const auto& m : mp.terms) t.push_back({m.amplitude, mp.length_of(m.exponents)});
  return ExponentialPolynomial(std::move(t));
}

ExponentialPolynomial determinant_expand(const CMatrix& s, std::span<const double> lengths) {
  std::vector<int> var(lengths.size());
  for (std::size_t i = 0; i < var.size(); ++i) var[i] = static_cast<int>(i);
  return collapse(expand_determinant(s, var, lengths));
}

cplx numeric_determinant(const CMatrix& s, std::span<const double> lengths, cplx k) {
  const auto n = s.rows();
  if (static_cast<Eigen::Index>(lengths.size()) != n) throw DimensionMismatch("length count mismatch");
  CMatrix m = CMatrix::Identity(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const cplx ph = std::exp(cplx{0.0, 1.0} * k * lengths[static_cast<std::size_t>(r)]);
    m.row(r) -= ph * s.row(r);
  }
  return m.partialPivLu().determinant();
}

ExponentialPolynomial derivative(const ExponentialPolynomial& poly, int j) {
  if (j < 0) throw std::invalid_argument("derivative order must be nonnegative");
  if (j == 0) return poly;
  std::vector<ExpTerm> t;
  for (const auto& term : poly.terms())
    t.push_back({term.amplitude * std::pow(cplx{0.0, term.length}, j), term.length});
  return ExponentialPolynomial(std::move(t), 0.0);
}

cplx evaluate(const ExponentialPolynomial& poly, cplx k) {
  const cplx ik = cplx{0.0, 1.0} * k;
  cplx s{0.0, 0.0};
  for (const auto& t : poly.terms()) s += t.amplitude * std::exp(ik * t.length);
  return s;
}

cplx evaluate_derivative(const ExponentialPolynomial& poly, int j, cplx k) {
  const cplx ik = cplx{0.0, 1.0} * k;
  cplx s{0.0, 0.0};
  for (const auto& t : poly.terms()) s += t.amplitude * std::pow(cplx{0.0, t.length}, j) * std::exp(ik * t.length);
  return s;
}

std::optional<CenteredForm> try_realify(const ExponentialPolynomial& poly, double tol) {
  if (poly.empty()) return std::nullopt;
  const double lmin = poly.min_length();
  const double lmax = poly.max_length();
  const double c = 0.5 * (lmin + lmax);
  const double scale = poly.l1_norm();
  const cplx amin = poly.terms().front().amplitude;
  const cplx amax = poly.terms().back().amplitude;
  if (std::abs(std::abs(amin) - std::abs(amax)) > tol * scale) return std::nullopt;
  const double psi = 0.5 * std::arg(amin / std::conj(amax));
  const cplx rot = std::exp(cplx{0.0, -psi});

  std::vector<ExpTerm> centered;
  for (const auto& t : poly.terms()) centered.push_back({t.amplitude * rot, t.length - c});
  const double ltol = 1e-9 * std::max(1.0, std::abs(lmax - lmin));
  const std::size_t n = centered.size();
  std::vector<ExpTerm> sym(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ExpTerm& a = centered[i];
    const ExpTerm& b = centered[n - 1 - i];
    if (std::abs(a.length + b.length) > ltol) return std::nullopt;
    if (std::abs(a.amplitude - std::conj(b.amplitude)) > tol * scale) return std::nullopt;
    const double x = 0.5 * (a.length - b.length);
    sym[i] = {0.5 * (a.amplitude + std::conj(b.amplitude)), x};
  }
  return CenteredForm{ExponentialPolynomial(std::move(sym), 0.0), c, psi};
}

CenteredForm realify(const ExponentialPolynomial& poly) {
  auto f = try_realify(poly);
  if (!f) throw std::invalid_argument("polynomial coefficients are not conjugate-palindromic");
  return *std::move(f);
}

ExponentialPolynomial level_function(const ExponentialPolynomial& delta, int j) {
  return derivative(realify(delta).poly, j);
}

MultiPolynomial level_generator(const MultiPolynomial& delta, int j) {
  if (delta.terms.empty()) throw std::invalid_argument("empty multivariate polynomial");
  double lmin = 1e300;
  double lmax = -1e300;
  for (const auto& t : delta.terms) {
    const double l = delta.length_of(t.exponents);
    lmin = std::min(lmin, l);
    lmax = std::max(lmax, l);
  }
  const double c = 0.5 * (lmin + lmax);
  MultiPolynomial g;
  g.lengths = delta.lengths;
  cplx c0{0.0, 0.0};
  for (const auto& t : delta.terms) {
    const double l = delta.length_of(t.exponents);
    const cplx a = t.amplitude * std::pow(cplx{0.0, l - c}, j);
    g.terms.push_back({t.exponents, a});
    if (std::abs(l - lmin) <= 1e-12 * std::max(1.0, lmax)) c0 += a;
  }
  for (auto& t : g.terms) t.amplitude /= c0;
  return g;
}

RegularityReport regularity_index(const ExponentialPolynomial& poly, int r_cap) {
  RegularityReport rep;
  rep.note =
      "criterion sums over terms with 0 < L < Lambda using L/Lambda; endpoint terms excluded";
  if (poly.empty()) throw std::invalid_argument("empty polynomial");
  const double lam = poly.max_length();
  const double tol = 1e-10 * lam;
  std::vector<std::pair<double, double>> interior;  // |a|, L/Lambda
  for (const auto& t : poly.terms())
    if (t.length > tol && t.length < lam - tol) interior.emplace_back(std::abs(t.amplitude), t.length / lam);

  double c0 = 0.0;
  for (const auto& [m, x] : interior) c0 += 0.5 * m;
  rep.baseline_bootstrapped = c0 <= 1.0 + 1e-9;

  if (interior.empty()) {
    rep.status = RegularityStatus::Marginal;
    rep.criterion_values.push_back(0.0);
    rep.centered_values.push_back(0.0);
    rep.centered_r = 0;
    return rep;
  }
  for (int r = 0; r <= r_cap; ++r) {
    double lit = 0.0;
    double cen = 0.0;
    for (const auto& [m, x] : interior) {
      lit += m * std::pow(x, r);
      cen += 0.5 * m * std::pow(std::abs(2.0 * x - 1.0), r);
    }
    rep.criterion_values.push_back(lit);
    rep.centered_values.push_back(cen);
    if (rep.centered_r < 0 && cen < 1.0 - kStrictMargin) rep.centered_r = r;
    if (lit < 1.0 - kStrictMargin) {
      rep.status = RegularityStatus::Finite;
      rep.r = r;
      return rep;
    }
  }
  rep.status = RegularityStatus::NotFound;
  return rep;
}

std::string to_string(RegularityStatus s) {
  switch (s) {
    case RegularityStatus::Finite: return "finite";
    case RegularityStatus::Marginal: return "marginal";
    case RegularityStatus::NotFound: return "not_found";
  }
  return "unknown";
}

}  // namespace specgraph
