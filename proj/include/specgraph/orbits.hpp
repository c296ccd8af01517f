#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "specgraph/roots.hpp"
#include "specgraph/secular.hpp"

namespace specgraph {

struct PeriodicOrbit {
  std::vector<int> cycle;       // directed bonds, lexicographically minimal rotation
  int scatter_count = 0;        // |m_p|
  int repetition = 1;
  std::vector<int> traversal;   // m_{p,i} per bond
  std::vector<int> reduced;     // m_{p,i} - m_{p,N}, i < N
  double length = 0.0;
  cplx amplitude;               // product of amplitudes / repetition
  double omega = 0.0;           // pi L_p / L0
  bool simple = false;          // gcd of the nonzero reduced entries is 1
  int class_id = -1;
};

// Orbit-like term of a logarithmic expansion, keyed by its traversal vector.
struct OrbitTerm {
  std::vector<int> exponents;
  cplx amplitude;
  double length = 0.0;
  double omega = 0.0;
  int degree = 0;
};

std::vector<int> canonical_rotation(std::span<const int> cycle);

// All closed directed-bond cycles with at most max_scatterings steps, one per
// rotation class, ordered by (scatter_count, cycle).
std::vector<PeriodicOrbit> enumerate_orbits(const MetricGraph& graph, const CMatrix& s, int max_scatterings,
                                            std::size_t cap = 10'000'000);

// Sum over n <= max_n of tr(A^n)/n for the 0/1 adjacency pattern of s; the
// number of rotation classes of closed walks up to that length, counted
// with weight 1/repetition.
double orbit_count_estimate(const CMatrix& s, int max_n);

// Spectral radius of the 0/1 adjacency pattern of s.
double adjacency_growth_rate(const CMatrix& s);

// Orbits grouped by traversal vector.
std::vector<OrbitTerm> aggregate_orbits(std::span<const PeriodicOrbit> orbits);

// Coefficients A_m of  log g = -sum_m A_m z^m  for |m| <= max_degree, where g
// has constant term 1. At level 0 this reproduces the aggregated orbit sum.
std::vector<OrbitTerm> log_expansion(const MultiPolynomial& g, int max_degree, double total_length);

// N(k) = Nbar(k) + (1/pi) Im sum_p A_p exp(i L_p k).
double staircase_orbit_sum(std::span<const PeriodicOrbit> orbits, const StaircaseModel& weyl, double k);
double staircase_orbit_sum(std::span<const OrbitTerm> terms, const StaircaseModel& weyl, double k);

// -sum_{n <= order} tr((D(k) S)^n) / n, the truncated log det(I - D S).
cplx truncated_log_det(const CMatrix& s, std::span<const double> directed_lengths, double k, int order);

// Same staircase evaluated through matrix powers, for orders too high to enumerate.
double staircase_trace_sum(const MetricGraph& graph, const CMatrix& s, const StaircaseModel& weyl, double k,
                           int order);

// Exact Weyl line N(k) = (L0/pi) k + c from the continued log determinant.
StaircaseModel exact_weyl(const ExponentialPolynomial& delta, double total_length, double k_min);

struct OrbitClass {
  std::vector<int> primitive;
  std::vector<std::pair<std::size_t, int>> members;  // orbit index, multiple nu >= 1
};

struct Classification {
  std::vector<OrbitClass> classes;
  std::vector<std::size_t> degenerate;  // orbits with zero reduced vector
};

// Groups orbits whose reduced vectors are positive multiples of one primitive vector.
Classification classify_simple(std::vector<PeriodicOrbit>& orbits);

}  // namespace specgraph
