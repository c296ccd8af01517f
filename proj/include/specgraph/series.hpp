#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "specgraph/orbits.hpp"

namespace specgraph {

enum class Observable { Delta, Spacing };

std::string to_string(Observable o);

struct HarmonicTerm {
  double amplitude = 0.0;     // C_p >= 0 in the cosine normal form
  double omega = 0.0;         // pi L_p / L0
  double phase = 0.0;         // phi_p
  std::size_t id = 0;         // index of the source term
  std::vector<int> exponents; // traversal vector of the source term
  int degree = 0;
};

// f_n = mean - sum_p C_p cos(omega_p n + phi_p). Sine-form expansions are
// stored with phi shifted by -pi/2.
struct HarmonicSeries {
  double mean = 0.0;
  std::vector<HarmonicTerm> terms;
  int level = 0;
  Observable observable = Observable::Delta;
  int m = 0;                  // spacing order for Observable::Spacing
  double total_length = 0.0;  // L0
  int truncation = 0;         // largest |m_p| included

  double variance() const;    // 1/2 sum C_p^2 over raw terms; to_torus() merges coinciding frequencies
};

// Level-0 fluctuations delta_n = (L0/pi) k_n - n about the baseline
// k_n = (pi/L0)(n + beta):
//   delta_n = (beta - 1/2) - Im sum_p (2/pi)(A_p/omega_p) sin(omega_p/2) e^{i omega_p (n - 1/2 + beta)}.
HarmonicSeries delta_series(std::span<const OrbitTerm> terms, int truncation, double total_length,
                            double beta = 0.5);

// s_{n,m} = k_{n+m} - k_n = pi m / L0 - Re sum_p D_{p,m} e^{i omega_p (n + m/2 + beta - 1/2)},
// D_{p,m} = (4/L0)(A_p/omega_p) sin(omega_p/2) sin(omega_p m/2).
HarmonicSeries spacing_series(std::span<const OrbitTerm> terms, int m, int truncation, double total_length,
                              double beta = 0.5);

double evaluate_series(const HarmonicSeries& s, double n);
std::vector<double> evaluate_series(const HarmonicSeries& s, std::span<const long> ns);

// Value with omega_p n replaced by the torus phase exponents . y.
double evaluate_on_torus(const HarmonicSeries& s, std::span<const double> y);

// Largest-amplitude terms covering the given fraction of the variance, at most max_terms.
HarmonicSeries prune_series(const HarmonicSeries& s, double coverage = 1.0 - 1e-4, std::size_t max_terms = 20000);

// Variance carried by the two highest included degrees; a proxy for the truncation tail.
double truncation_tail(const HarmonicSeries& s);

enum class TransitionForm {
  Exact,    // integral of k dN evaluated without approximation
  Printed,  // mean and amplitudes in their linearised published form
};

enum class SpacingReading {
  AsWritten,      // cos(omega (n - (m/2) phi))
  AdditivePhase,  // cos(omega (n - m/2) + phi)
};

// Fluctuations delta_n^(j) of the upper level, looked up by label.
class LevelData {
 public:
  LevelData() = default;
  explicit LevelData(const SeparatorSequence& seq);
  LevelData(std::vector<long> labels, std::vector<double> fluctuations);
  bool has(long n) const;
  double at(long n) const;  // throws MissingLevelData
  long first() const { return first_; }
  long last() const { return first_ + static_cast<long>(values_.size()) - 1; }

 private:
  long first_ = 0;
  std::vector<double> values_;
  std::vector<bool> present_;
};

// Level j -> j-1 transition. Level j-1 staircase:
//   N(k) = (L0/pi) k + c + (1/pi) Im sum_p A_p e^{i L_p k},  c = -1/2 - (mu_j - 1/2),
// where mu_j is the mean level-j fluctuation.
class HierarchyTransition {
 public:
  HierarchyTransition(std::vector<OrbitTerm> lower_terms, double total_length, double mu_upper, int lower_level,
                      TransitionForm form = TransitionForm::Exact);

  // Series for delta_n^(j-1) with coefficients frozen at (delta_n^(j), delta_{n-1}^(j)) = (d1, d2).
  HarmonicSeries delta_series(double d1, double d2) const;
  HarmonicSeries delta_series(const LevelData& upper, long n) const;
  double delta(const LevelData& upper, long n) const;

  // Spacing s_{n,m}^(j-1). The exact form differences two delta series; the
  // printed form uses the published zeroth term with upper-level spacings.
  double spacing(const LevelData& upper, long n, int m, SpacingReading reading = SpacingReading::AsWritten) const;

  // Complex coefficient K_p of term p in  delta = f - Im sum_p K_p e^{i omega_p (n + (d1 + d2 - 1)/2)}.
  cplx coefficient(std::size_t p, double d1, double d2) const;

  // Exact mean term f(d1, d2) = mu - 1/2 + mu (d1 - d2) - ((d1)^2 - (d2)^2)/2, or the printed one.
  double mean_term(double d1, double d2) const;

  const std::vector<OrbitTerm>& terms() const noexcept { return terms_; }
  double total_length() const noexcept { return total_length_; }
  double mu_upper() const noexcept { return mu_; }
  int lower_level() const noexcept { return level_; }
  TransitionForm form() const noexcept { return form_; }

 private:
  std::vector<OrbitTerm> terms_;
  double total_length_;
  double mu_;
  int level_;
  TransitionForm form_;
};

// Estimated star discrepancy of the points (n alpha_1, ..., n alpha_d) mod 1,
// n = 1..count, over boxes anchored at the origin with corners at the points.
double equidistribution_discrepancy(std::span<const double> alphas, std::size_t count);

}  // namespace specgraph
