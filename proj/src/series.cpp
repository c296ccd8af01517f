#include "specgraph/series.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "specgraph/errors.hpp"
#include "specgraph/parallel.hpp"

namespace specgraph {

namespace {

constexpr double kPi = std::numbers::pi;

// -Im(K e^{i theta}) in the normal form -C cos(theta + phi).
HarmonicTerm sine_term(const OrbitTerm& t, std::size_t id, cplx k, double phase_offset) {
  HarmonicTerm h;
  h.amplitude = std::abs(k);
  h.omega = t.omega;
  h.phase = phase_offset + (h.amplitude > 0.0 ? std::arg(k) : 0.0) - 0.5 * kPi;
  h.id = id;
  h.exponents = t.exponents;
  h.degree = t.degree;
  return h;
}

// -Re(K e^{i theta}) in the normal form -C cos(theta + phi).
HarmonicTerm cosine_term(const OrbitTerm& t, std::size_t id, cplx k, double phase_offset) {
  HarmonicTerm h = sine_term(t, id, k, phase_offset);
  h.phase += 0.5 * kPi;
  return h;
}

}  // namespace

std::string to_string(Observable o) { return o == Observable::Delta ? "delta" : "spacing"; }

double HarmonicSeries::variance() const {
  double v = 0.0;
  for (const auto& t : terms) v += t.amplitude * t.amplitude;
  return 0.5 * v;
}

HarmonicSeries delta_series(std::span<const OrbitTerm> terms, int truncation, double total_length, double beta) {
  HarmonicSeries s;
  s.mean = beta - 0.5;
  s.observable = Observable::Delta;
  s.total_length = total_length;
  s.truncation = truncation;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const OrbitTerm& t = terms[i];
    if (t.degree > truncation) continue;
    const cplx k = (2.0 / kPi) * t.amplitude / t.omega * std::sin(0.5 * t.omega);
    s.terms.push_back(sine_term(t, i, k, t.omega * (beta - 0.5)));
  }
  return s;
}

HarmonicSeries spacing_series(std::span<const OrbitTerm> terms, int m, int truncation, double total_length,
                              double beta) {
  if (m < 1) throw std::invalid_argument("spacing order must be positive");
  HarmonicSeries s;
  s.mean = kPi * m / total_length;
  s.observable = Observable::Spacing;
  s.m = m;
  s.total_length = total_length;
  s.truncation = truncation;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const OrbitTerm& t = terms[i];
    if (t.degree > truncation) continue;
    const cplx d = (4.0 / total_length) * t.amplitude / t.omega * std::sin(0.5 * t.omega) * std::sin(0.5 * t.omega * m);
    s.terms.push_back(cosine_term(t, i, d, t.omega * (0.5 * m + beta - 0.5)));
  }
  return s;
}

double evaluate_series(const HarmonicSeries& s, double n) {
  double v = s.mean;
  for (const auto& t : s.terms) v -= t.amplitude * std::cos(t.omega * n + t.phase);
  return v;
}

std::vector<double> evaluate_series(const HarmonicSeries& s, std::span<const long> ns) {
  std::vector<double> out(ns.size());
  constexpr std::size_t kChunk = 256;
  parallel_for((ns.size() + kChunk - 1) / kChunk, [&](std::size_t c) {
    const std::size_t hi = std::min(ns.size(), (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < hi; ++i) out[i] = evaluate_series(s, static_cast<double>(ns[i]));
  });
  return out;
}

double evaluate_on_torus(const HarmonicSeries& s, std::span<const double> y) {
  double v = s.mean;
  for (const auto& t : s.terms) {
    double theta = t.phase;
    for (std::size_t b = 0; b < t.exponents.size(); ++b) theta += t.exponents[b] * y[b];
    v -= t.amplitude * std::cos(theta);
  }
  return v;
}

HarmonicSeries prune_series(const HarmonicSeries& s, double coverage, std::size_t max_terms) {
  std::vector<std::size_t> order(s.terms.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s.terms[a].amplitude > s.terms[b].amplitude; });
  const double total = 2.0 * s.variance();
  std::vector<std::size_t> keep;
  double acc = 0.0;
  for (std::size_t i : order) {
    if (keep.size() >= max_terms || (total > 0.0 && acc >= coverage * total)) break;
    keep.push_back(i);
    acc += s.terms[i].amplitude * s.terms[i].amplitude;
  }
  std::sort(keep.begin(), keep.end());
  HarmonicSeries out = s;
  out.terms.clear();
  for (std::size_t i : keep) out.terms.push_back(s.terms[i]);
  return out;
}

double truncation_tail(const HarmonicSeries& s) {
  double v = 0.0;
  for (const auto& t : s.terms)
    if (t.degree >= s.truncation - 1) v += 0.5 * t.amplitude * t.amplitude;
  return v;
}

LevelData::LevelData(const SeparatorSequence& seq) : LevelData(seq.labels, seq.fluctuations) {}

LevelData::LevelData(std::vector<long> labels, std::vector<double> fluctuations) {
  if (labels.size() != fluctuations.size()) throw DimensionMismatch("labels and fluctuations differ in length");
  if (labels.empty()) return;
  const auto [lo, hi] = std::minmax_element(labels.begin(), labels.end());
  first_ = *lo;
  const std::size_t n = static_cast<std::size_t>(*hi - *lo + 1);
  values_.assign(n, 0.0);
  present_.assign(n, false);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto k = static_cast<std::size_t>(labels[i] - first_);
    values_[k] = fluctuations[i];
    present_[k] = true;
  }
}

bool LevelData::has(long n) const {
  if (n < first_ || n > last()) return false;
  return present_[static_cast<std::size_t>(n - first_)];
}

double LevelData::at(long n) const {
  if (!has(n)) throw MissingLevelData("no upper-level fluctuation for label " + std::to_string(n));
  return values_[static_cast<std::size_t>(n - first_)];
}

HierarchyTransition::HierarchyTransition(std::vector<OrbitTerm> lower_terms, double total_length, double mu_upper,
                                         int lower_level, TransitionForm form)
    : terms_(std::move(lower_terms)), total_length_(total_length), mu_(mu_upper), level_(lower_level), form_(form) {}

double HierarchyTransition::mean_term(double d1, double d2) const {
  const double dd = d1 - d2;
  const double quad = 0.5 * (d1 * d1 - d2 * d2);
  if (form_ == TransitionForm::Printed) return 0.5 * dd - quad;
  return mu_ - 0.5 + mu_ * dd - quad;
}

cplx HierarchyTransition::coefficient(std::size_t p, double d1, double d2) const {
  const OrbitTerm& t = terms_[p];
  const double dd = d1 - d2;
  if (form_ == TransitionForm::Printed)
    return (2.0 / total_length_) * t.amplitude / t.omega * std::sin(0.5 * t.omega) * (dd + 1.0);
  return (2.0 / kPi) * t.amplitude / t.omega * std::sin(0.5 * t.omega * (1.0 + dd));
}

HarmonicSeries HierarchyTransition::delta_series(double d1, double d2) const {
  HarmonicSeries s;
  s.mean = mean_term(d1, d2);
  s.level = level_;
  s.observable = Observable::Delta;
  s.total_length = total_length_;
  const double shift = 0.5 * (d1 + d2 - 1.0);
  int top = 0;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const OrbitTerm& t = terms_[i];
    top = std::max(top, t.degree);
    s.terms.push_back(sine_term(t, i, coefficient(i, d1, d2), t.omega * shift));
  }
  s.truncation = top;
  return s;
}

HarmonicSeries HierarchyTransition::delta_series(const LevelData& upper, long n) const {
  return delta_series(upper.at(n), upper.at(n - 1));
}

double HierarchyTransition::delta(const LevelData& upper, long n) const {
  return evaluate_series(delta_series(upper, n), static_cast<double>(n));
}

double HierarchyTransition::spacing(const LevelData& upper, long n, int m, SpacingReading reading) const {
  if (m < 1) throw std::invalid_argument("spacing order must be positive");
  const double unit = kPi / total_length_;
  if (form_ == TransitionForm::Exact) return unit * (m + delta(upper, n + m) - delta(upper, n));

  auto s_up = [&](long i, int mm) { return mm == 0 ? 0.0 : unit * (mm + upper.at(i + mm) - upper.at(i)); };
  const double snm = s_up(n, m);
  const double xi = 0.5 * (upper.at(n) + upper.at(n - 1));
  const double fs = snm + (snm - s_up(n, m - 1)) * (unit * m - 0.5 * (snm + s_up(n - 1, m))) - xi * (snm - s_up(n - 1, m));
  const double d1 = upper.at(n);
  const double d2 = upper.at(n - 1);
  double osc = 0.0;
  for (const auto& t : terms_) {
    const cplx d = (4.0 / total_length_) * t.amplitude / t.omega * std::sin(0.5 * t.omega) * std::sin(0.5 * t.omega * m);
    const double phi = 0.5 * t.omega * (d1 + d2 - 1.0);
    const double arg = reading == SpacingReading::AsWritten ? t.omega * (static_cast<double>(n) - 0.5 * m * phi)
                                                            : t.omega * (static_cast<double>(n) - 0.5 * m) + phi;
    osc += (d * std::exp(cplx(0.0, arg))).real();
  }
  return fs + (2.0 / total_length_) * osc;
}

double equidistribution_discrepancy(std::span<const double> alphas, std::size_t count) {
  const std::size_t d = alphas.size();
  std::vector<double> pts(count * d);
  for (std::size_t n = 0; n < count; ++n)
    for (std::size_t b = 0; b < d; ++b) {
      const double v = static_cast<double>(n + 1) * alphas[b];
      pts[n * d + b] = v - std::floor(v);
    }
  std::vector<double> worst(count, 0.0);
  parallel_for(count, [&](std::size_t c) {
    const double* corner = &pts[c * d];
    double volume = 1.0;
    for (std::size_t b = 0; b < d; ++b) volume *= corner[b];
    std::size_t open = 0;
    std::size_t closed = 0;
    for (std::size_t n = 0; n < count; ++n) {
      bool in_open = true;
      bool in_closed = true;
      for (std::size_t b = 0; b < d && in_closed; ++b) {
        const double x = pts[n * d + b];
        in_open = in_open && x < corner[b];
        in_closed = x <= corner[b];
      }
      open += in_open ? 1 : 0;
      closed += in_closed ? 1 : 0;
    }
    const double nn = static_cast<double>(count);
    worst[c] = std::max(std::abs(static_cast<double>(open) / nn - volume), std::abs(static_cast<double>(closed) / nn - volume));
  });
  return *std::max_element(worst.begin(), worst.end());
}

}  // namespace specgraph
