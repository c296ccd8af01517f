#pragma once

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specgraph/graph.hpp"

namespace specgraph {

struct ExpTerm {
  cplx amplitude;
  double length = 0.0;
};

// Finite sum  sum_i a_i exp(i k L_i), terms sorted by length. Lengths may be
// negative for centered (realified) forms.
class ExponentialPolynomial {
 public:
  ExponentialPolynomial() = default;
  // Sorts and merges terms whose lengths agree within merge_tol * max|L|.
  explicit ExponentialPolynomial(std::vector<ExpTerm> terms, double merge_tol = 1e-10);

  const std::vector<ExpTerm>& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }
  double min_length() const;
  double max_length() const;
  double span() const { return max_length() - min_length(); }
  double l1_norm() const;
  // Amplitude of the term at exactly this length (within tolerance), else 0.
  cplx amplitude_at(double length, double tol = 1e-9) const;

 private:
  std::vector<ExpTerm> terms_;
};

// Multivariate form  sum_v c_v prod_b z_b^{v_b}  with z_b = exp(i k l_b).
struct MonomialTerm {
  std::vector<int> exponents;
  cplx amplitude;
};

struct MultiPolynomial {
  std::vector<double> lengths;  // one per variable
  std::vector<MonomialTerm> terms;

  double length_of(const std::vector<int>& exponents) const;
};

// Principal-minor expansion of det(I - D(k) S) with D = diag(z_{var(d)}).
// variable_of_row maps each directed bond to its variable index.
MultiPolynomial expand_determinant(const CMatrix& s, std::span<const int> variable_of_row,
                                   std::span<const double> variable_lengths);

// Secular determinant in the bond variables of the graph.
MultiPolynomial secular_multipoly(const MetricGraph& graph, const CMatrix& s);

// Collapses monomials into an exponential polynomial in k.
ExponentialPolynomial collapse(const MultiPolynomial& mp);

// det(I - D(k) S) with one length per directed bond.
ExponentialPolynomial determinant_expand(const CMatrix& s, std::span<const double> lengths);

// Dense numeric det(I - D(k) S) for comparison.
cplx numeric_determinant(const CMatrix& s, std::span<const double> lengths, cplx k);

// a_i -> a_i (i L_i)^j.
ExponentialPolynomial derivative(const ExponentialPolynomial& poly, int j);

cplx evaluate(const ExponentialPolynomial& poly, cplx k);
// Derivative of order j without building a new polynomial.
cplx evaluate_derivative(const ExponentialPolynomial& poly, int j, cplx k);

// exp(-i k c) exp(-i psi) f(k) is real on the real axis.
struct CenteredForm {
  ExponentialPolynomial poly;  // self-conjugate: b(-L) = conj(b(L))
  double shift = 0.0;          // c
  double phase = 0.0;          // psi
};

// Returns the centered form when the coefficients are conjugate-palindromic.
std::optional<CenteredForm> try_realify(const ExponentialPolynomial& poly, double tol = 1e-9);
CenteredForm realify(const ExponentialPolynomial& poly);

// Function whose real zeros form hierarchy level j: the j-th derivative of
// the centered secular function.
ExponentialPolynomial level_function(const ExponentialPolynomial& delta, int j);

// Multivariate generator of level j, normalised so the constant term is 1:
// coefficients c_v (i(L_v - L0))^j / (c_0 (-i L0)^j).
MultiPolynomial level_generator(const MultiPolynomial& delta, int j);

enum class RegularityStatus { Finite, Marginal, NotFound };

struct RegularityReport {
  RegularityStatus status = RegularityStatus::NotFound;
  int r = -1;
  std::vector<double> criterion_values;  // sum |a| (L/Lambda)^r over interior terms
  std::vector<double> centered_values;   // 1/2 sum |a| |2L/Lambda - 1|^r
  int centered_r = -1;                   // first r with centered value < 1
  bool baseline_bootstrapped = false;    // centered value at r = 0 is <= 1
  std::string note;
};

RegularityReport regularity_index(const ExponentialPolynomial& poly, int r_cap = 64);

std::string to_string(RegularityStatus s);

}  // namespace specgraph
