#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "specgraph/secular.hpp"

namespace specgraph {

struct RootOptions {
  double scan_fraction = 1.0 / 16.0;  // scan step in units of the mean spacing 2*pi/span
  double certify_height = 0.05;       // rectangle half-height in units of the mean spacing
  double residual_tol = 1e-10;        // relative to the l1 norm of the coefficients
  double imag_tol = 1e-8;             // |Im k| above this is reported as non-real
  bool certify = true;
  bool strict = false;                // reject multiple zeros instead of repeating them
};

struct RootReport {
  std::vector<double> zeros;                          // sorted, multiple zeros repeated
  std::vector<std::pair<double, int>> multiple_zeros; // location, multiplicity
  std::size_t blocks = 0;
  std::size_t certified_blocks = 0;
};

// Real zeros in [k_min, k_max].
std::vector<double> real_zeros(const ExponentialPolynomial& poly, double k_min, double k_max,
                               const RootOptions& opt = {});
RootReport real_zeros_report(const ExponentialPolynomial& poly, double k_min, double k_max,
                             const RootOptions& opt = {});

// Number of zeros in the open rectangle (a, b) x (-h, h), by the argument principle.
int winding_count(const ExponentialPolynomial& poly, double a, double b, double h);

struct SeparatorSequence {
  int level = 0;
  double total_length = 0.0;       // L0
  std::vector<double> zeros;
  std::vector<long> labels;        // n in k = (pi/L0)(n + delta)
  std::vector<double> fluctuations;

  std::size_t size() const noexcept { return zeros.size(); }
  long index_offset() const { return labels.empty() ? 0 : labels.front(); }
  double reconstruct(std::size_t i) const;
};

// Labels the zeros first_label, first_label + 1, ...
SeparatorSequence make_sequence(int level, double total_length, std::vector<double> zeros, long first_label = 1);
SeparatorSequence make_sequence(int level, double total_length, std::vector<double> zeros, std::vector<long> labels);

// Offset beta of the explicit top level k_n = (pi/L0)(n + beta) for a given r.
double baseline_offset(const ExponentialPolynomial& delta, int r);
SeparatorSequence baseline_sequence(double total_length, double beta, int level, double k_min, double k_max);

struct InterlaceViolation {
  long gap = 0;    // positional gap index of the inner sequence
  int count = 0;   // outer points found in that gap
};

struct BootstrapReport {
  bool pass = true;
  std::vector<InterlaceViolation> violations;
  long first_gap = 0;
  long last_gap = -1;
  std::size_t outer_checked = 0;
};

// Checks that every inner gap in the common range holds exactly one outer point.
BootstrapReport verify_bootstrap(const std::vector<double>& inner, const std::vector<double>& outer);
BootstrapReport verify_bootstrap(const SeparatorSequence& inner, const SeparatorSequence& outer);

struct Hierarchy {
  int r = 0;
  double beta = 0.5;
  double total_length = 0.0;
  double k_min = 0.0;
  double k_max = 0.0;
  std::vector<SeparatorSequence> levels;   // index j = 0..r+1, r+1 is the baseline
  std::vector<BootstrapReport> reports;    // reports[j] compares level j+1 with level j
  std::vector<std::size_t> unlabeled;      // zeros per level with no enclosing cell
  bool all_bootstrapped() const;
};

// Levels 0..r from the centered secular function, plus the explicit baseline.
// Labels follow the cell structure: a level j-1 zero between the level j
// points labelled n-1 and n receives label n.
Hierarchy separator_hierarchy(const ExponentialPolynomial& delta, int r, double k_min, double k_max,
                              const RootOptions& opt = {});

struct StaircaseModel {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> residuals;

  double operator()(double k) const { return slope * k + intercept; }
};

// Least squares through (k_n, label_n - 1/2), the midpoint of each step.
StaircaseModel weyl_fit(const SeparatorSequence& seq, std::size_t min_zeros = 100);

// Value of f at the single lower-level point inside each cell of `cells`.
std::vector<std::pair<long, double>> extract_level(const std::function<double(double)>& f,
                                                   const SeparatorSequence& cells,
                                                   const SeparatorSequence& lower);

// Number of zeros <= k in a sorted list.
std::size_t count_zeros(const std::vector<double>& zeros, double k);

// Im log g(k + i0) continued from k + i*infinity, where g has its smallest
// length at 0 with amplitude 1. k must not be a zero.
double im_log_continued(const ExponentialPolynomial& g, double k);

// Rewrites a polynomial so that its smallest length is 0 with amplitude 1.
ExponentialPolynomial normalized_generator(const ExponentialPolynomial& poly);

// Exact constant c in N(k) = (L0/pi) k + c - (1/pi) Im log g(k + i0), where N
// counts zeros in (0, k].
double exact_intercept(const ExponentialPolynomial& delta, double total_length, double k_ref,
                       std::size_t zeros_in_window);

// Same constant in the label convention of a hierarchy level: N(u) equals the
// label of the last zero at or below u = (L0/pi) k.
double level_intercept(const ExponentialPolynomial& level_fn, const SeparatorSequence& seq);

}  // namespace specgraph
