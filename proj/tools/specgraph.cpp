// specgraph command-line front end.
//
// Exit codes: 0 success, 1 usage or input error, 2 interlacing violation,
// 3 non-real zero, 4 Fourier artifact, 5 any other library failure.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "specgraph/errors.hpp"
#include "specgraph/io.hpp"
#include "specgraph/parallel.hpp"
#include "specgraph/roots.hpp"
#include "specgraph/stats.hpp"
#include "specgraph/version.hpp"

namespace fs = std::filesystem;
using namespace specgraph;

namespace {

constexpr double kPi = std::numbers::pi;

enum Exit { kOk = 0, kUsage = 1, kBootstrap = 2, kNonReal = 3, kFourier = 4, kFailure = 5 };

struct Options {
  std::string graph;
  double kmin = 0.5;
  std::optional<double> kmax;
  std::size_t zeros = 1000;
  std::optional<int> max_scatter;
  std::size_t samples = 100000;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string observable = "delta";
  int m = 1;
  std::optional<int> level;
  std::string mode = "both";
  std::string form = "exact";
  int form_terms = 8;
  bool strict = false;
};

struct Model {
  GraphSpec spec;
  MetricGraph graph;
  CMatrix s;
  MultiPolynomial mp;
  ExponentialPolynomial delta;
  RegularityReport reg;
  double l0;

  explicit Model(GraphSpec g)
      : spec(std::move(g)),
        graph(build_graph(spec)),
        s(bond_scattering_matrix(graph, kirchhoff_scattering(graph))),
        mp(secular_multipoly(graph, s)),
        delta(collapse(mp)),
        reg(regularity_index(delta)),
        l0(graph.total_length()) {}
};

Model load(const Options& o) {
  Model m(read_graph(o.graph));
  for (const auto& w : commensurability_diagnostic(m.graph))
    std::cerr << "warning: bonds " << w.bond_i << " and " << w.bond_j << " have length ratio " << w.p << "/" << w.q
              << "\n";
  // no interior terms: the spectrum is its own baseline
  if (m.reg.status == RegularityStatus::Marginal) m.reg.r = 0;
  if (m.reg.r < 0)
    throw Error("regularity index not found (" + to_string(m.reg.status) + ")");
  return m;
}

double window_end(const Options& o, const Model& m) {
  const double end = o.kmax ? *o.kmax : o.kmin + static_cast<double>(o.zeros + 2) * kPi / m.l0;
  if (!(o.kmin > 0.0) || !(end > o.kmin)) throw CLI::ValidationError("window", "need 0 < kmin < kmax");
  return end;
}

RunStamp stamp(const std::string& command, const Options& o, const Model& m, int truncation) {
  Json cfg{{"command", command}, {"graph", graph_to_json(m.spec)}, {"kmin", o.kmin}, {"zeros", o.zeros}};
  if (o.kmax) cfg["kmax"] = *o.kmax;
  if (truncation > 0) cfg["max_scatter"] = truncation;
  if (o.seed) cfg["seed"] = *o.seed;
  if (command == "stats" || command == "hierarchy") cfg["samples"] = o.samples;
  if (command == "series" || command == "stats") {
    cfg["observable"] = o.observable;
    cfg["m"] = o.m;
    cfg["form_terms"] = o.form_terms;
  }
  if (command == "hierarchy") {
    cfg["mode"] = o.mode;
    cfg["form"] = o.form;
  }
  cfg["strict"] = o.strict;
  return RunStamp::from_config(std::move(cfg));
}

Json regularity_json(const Model& m) {
  return {{"status", to_string(m.reg.status)},        {"r", m.reg.r},
          {"criterion_values", m.reg.criterion_values}, {"centered_values", m.reg.centered_values},
          {"centered_r", m.reg.centered_r},           {"baseline_bootstrapped", m.reg.baseline_bootstrapped},
          {"note", m.reg.note},                       {"total_length", m.l0}};
}

Hierarchy hierarchy_of(const Options& o, const Model& m) {
  RootOptions ro;
  ro.strict = o.strict;
  return separator_hierarchy(m.delta, m.reg.r, o.kmin, window_end(o, m), ro);
}

int cmd_spectrum(const Options& o) {
  const Model m = load(o);
  const Hierarchy h = hierarchy_of(o, m);
  const RunStamp st = stamp("spectrum", o, m, 0);
  const fs::path out(o.out);

  write_levels_csv(out / "zeros.csv", st, h.levels);
  write_json(out / "regularity.json", st, regularity_json(m));
  write_json(out / "polynomial.json", st, {{"terms", polynomial_to_json(m.delta)}});

  Json levels = Json::array();
  for (std::size_t j = 0; j < h.reports.size(); ++j) {
    const auto& rep = h.reports[j];
    Json v = Json::array();
    for (const auto& x : rep.violations) v.push_back({{"gap", x.gap}, {"count", x.count}});
    levels.push_back({{"inner_level", j + 1}, {"outer_level", j}, {"pass", rep.pass}, {"checked", rep.outer_checked},
                      {"violations", v}, {"unlabeled", j < h.unlabeled.size() ? h.unlabeled[j] : 0}});
  }
  write_json(out / "bootstrap.json", st, {{"all_pass", h.all_bootstrapped()}, {"levels", levels}});

  Json weyl = Json::array();
  for (const auto& seq : h.levels) {
    Json entry{{"level", seq.level}, {"zeros", seq.size()}};
    if (seq.size() >= 100) {
      const StaircaseModel fit = weyl_fit(seq);
      entry["slope"] = fit.slope;
      entry["intercept"] = fit.intercept;
    }
    weyl.push_back(entry);
  }
  const double k_ref = h.levels.front().zeros.empty() ? o.kmin : h.levels.front().zeros.back() + 0.5 * kPi / m.l0;
  write_json(out / "weyl.json", st,
             {{"total_length", m.l0},
              {"expected_slope", m.l0 / kPi},
              {"beta", h.beta},
              {"exact_intercept", exact_intercept(m.delta, m.l0, k_ref, count_zeros(h.levels.front().zeros, k_ref))},
              {"levels", weyl}});

  std::cout << "r = " << m.reg.r << ", " << h.levels.front().size() << " zeros at level 0, interlacing "
            << (h.all_bootstrapped() ? "holds" : "violated") << "\n";
  return h.all_bootstrapped() ? kOk : kBootstrap;
}

int cmd_orbits(const Options& o) {
  const Model m = load(o);
  const int max_scatter = o.max_scatter.value_or(8);
  auto orbits = enumerate_orbits(m.graph, m.s, max_scatter);
  const Classification c = classify_simple(orbits);
  const RunStamp st = stamp("orbits", o, m, max_scatter);
  const fs::path out(o.out);
  write_orbit_csv(out / "orbits.csv", st, orbits);
  std::vector<std::size_t> per_length(static_cast<std::size_t>(max_scatter) + 1, 0);
  for (const auto& p : orbits) ++per_length[static_cast<std::size_t>(p.scatter_count)];
  write_json(out / "orbits.json", st,
             {{"count", orbits.size()},
              {"per_length", per_length},
              {"growth_rate", adjacency_growth_rate(m.s)},
              {"classes", c.classes.size()},
              {"degenerate", c.degenerate.size()}});
  std::cout << orbits.size() << " orbits up to " << max_scatter << " scatterings\n";
  return kOk;
}

Observable observable_of(const Options& o) { return o.observable == "spacing" ? Observable::Spacing : Observable::Delta; }

// Regular-form series of the level-j generator, with the level above frozen at
// its mean beta - (r - j)/2. Exact in form at j = r.
HarmonicSeries regular_series(const Options& o, const Model& m, int truncation, int order) {
  const int level = o.level.value_or(m.reg.r);
  if (level < 0 || level > m.reg.r)
    throw CLI::ValidationError("--level", "level must lie in 0.." + std::to_string(m.reg.r));
  const auto terms = log_expansion(level_generator(m.mp, level), truncation, m.l0);
  const double beta = baseline_offset(m.delta, m.reg.r) - 0.5 * (m.reg.r - level);
  HarmonicSeries s = observable_of(o) == Observable::Delta ? delta_series(terms, truncation, m.l0, beta)
                                                           : spacing_series(terms, order, truncation, m.l0, beta);
  s.level = level;
  return s;
}

int cmd_series(const Options& o) {
  const Model m = load(o);
  const int truncation = o.max_scatter.value_or(20);
  const HarmonicSeries s = regular_series(o, m, truncation, o.m);
  const RunStamp st = stamp("series", o, m, truncation);
  const fs::path out(o.out);
  write_series_csv(out / "series.csv", st, s);
  std::vector<long> ns(o.zeros);
  for (std::size_t i = 0; i < ns.size(); ++i) ns[i] = static_cast<long>(i + 1);
  write_evaluations_csv(out / "evaluations.csv", st, ns, evaluate_series(s, ns));
  write_json(out / "series.json", st,
             {{"level", s.level},
              {"observable", to_string(s.observable)},
              {"m", s.m},
              {"mean", s.mean},
              {"terms", s.terms.size()},
              {"variance", to_torus(s).variance()},
              {"truncation_tail", truncation_tail(s)}});
  std::cout << s.terms.size() << " terms, variance " << to_torus(s).variance() << "\n";
  return kOk;
}

void write_estimate(const fs::path& out, const std::string& name, const RunStamp& st, const DistributionEstimate& d) {
  write_density_csv(out / ("density_" + name + ".csv"), st, d);
  if (!d.char_fn.empty()) write_char_fn_csv(out / ("charfn_" + name + ".csv"), st, d);
}

int cmd_stats(const Options& o) {
  const Model m = load(o);
  const int truncation = o.max_scatter.value_or(12);
  const std::uint64_t seed = *o.seed;
  const HarmonicSeries s = regular_series(o, m, truncation, o.m);
  const RunStamp st = stamp("stats", o, m, truncation);
  const fs::path out(o.out);

  const GaussianReference g = gaussian_reference(s);
  const DistributionEstimate emp = empirical_distribution(s, o.samples, seed);
  const std::vector<std::pair<std::string, DistributionEstimate>> est{
      {"exact", exact_distribution_mc(s, o.samples, seed)},
      {"simple", simple_orbit_distribution(s)},
      {"bessel", bessel_distribution(s)},
      {"gaussian", gaussian_distribution(g)},
  };
  write_estimate(out, "empirical", st, emp);
  Json methods = Json::object();
  for (const auto& [name, d] : est) {
    write_estimate(out, name, st, d);
    const Metrics mt = distribution_metrics(d, emp);
    Json meta = estimate_metadata(d);
    meta["l1_to_empirical"] = mt.l1;
    meta["ks_to_empirical"] = mt.ks;
    methods[name] = meta;
  }
  const TorusSeries ts = to_torus(s);

  // form factor and pair correlation from spacing series of orders 1..form_terms
  const int m_max = std::max(1, o.form_terms);
  const auto terms = log_expansion(level_generator(m.mp, s.level), truncation, m.l0);
  const double beta = baseline_offset(m.delta, m.reg.r) - 0.5 * (m.reg.r - s.level);
  const double unit = kPi / m.l0;
  const double step = unit / 8.0;
  const std::size_t bins = static_cast<std::size_t>(std::ceil((m_max + 2) * unit / step));
  std::vector<std::function<cplx(double)>> chars;
  std::vector<DistributionEstimate> spacing_dens;
  const std::size_t spacing_samples = std::max<std::size_t>(1000, o.samples / static_cast<std::size_t>(m_max));
  for (int mm = 1; mm <= m_max; ++mm) {
    const HarmonicSeries sp = spacing_series(terms, mm, truncation, m.l0, beta);
    const DistributionEstimate e = empirical_distribution(sp, spacing_samples, seed);
    spacing_dens.push_back(binned_density(e.samples, 0.0, step, bins));
    chars.push_back(sample_char_fn(e.samples, sp.mean));
  }
  std::vector<double> tau(201);
  for (std::size_t i = 0; i < tau.size(); ++i) tau[i] = 4.0 * m.l0 * static_cast<double>(i) / 200.0;
  const FormFactor ff = form_factor(chars, m.l0, tau);
  {
    std::ofstream f(out / "form_factor.csv");
    CsvWriter w(f, st, std::vector<std::string>{"tau", "re_K2", "im_K2", "abs_K2"});
    for (std::size_t i = 0; i < tau.size(); ++i) {
      w << tau[i] << ff.values[i].real() << ff.values[i].imag() << std::abs(ff.values[i]);
      w.end_row();
    }
  }
  const std::vector<double> r2 = r2_correlation(spacing_dens, m.l0);
  {
    std::ofstream f(out / "r2.csv");
    CsvWriter w(f, st, std::vector<std::string>{"x", "R2"});
    for (std::size_t i = 0; i < r2.size(); ++i) {
      w << spacing_dens.front().grid[i] << r2[i];
      w.end_row();
    }
  }

  write_json(out / "metrics.json", st,
             {{"level", s.level},
              {"observable", to_string(s.observable)},
              {"m", s.m},
              {"seed", seed},
              {"terms", s.terms.size()},
              {"torus_terms", ts.terms.size()},
              {"max_variance_share", ts.max_share()},
              {"mean", g.mean},
              {"variance", g.variance},
              {"truncation_tail", truncation_tail(s)},
              {"empirical", estimate_metadata(emp)},
              {"ks_empirical_gaussian", ks_to_gaussian(emp.samples, g)},
              {"skewness_empirical", skewness(emp.samples)},
              {"methods", methods},
              {"form_factor", {{"m_max", ff.m_max}, {"tail", ff.tail}, {"samples_per_order", spacing_samples}}}});
  std::cout << "KS(empirical, gaussian) = " << ks_to_gaussian(emp.samples, g) << "\n";
  return kOk;
}

int cmd_hierarchy(const Options& o) {
  const Model m = load(o);
  const int truncation = o.max_scatter.value_or(8);
  const std::uint64_t seed = *o.seed;
  const Hierarchy h = hierarchy_of(o, m);
  const RunStamp st = stamp("hierarchy", o, m, truncation);
  const fs::path out(o.out);
  const TransitionForm form = o.form == "printed" ? TransitionForm::Printed : TransitionForm::Exact;

  std::vector<HierarchyTransition> chain;
  for (int j = m.reg.r + 1; j >= 1; --j) {
    const double mu = h.beta - 0.5 * (m.reg.r + 1 - j);
    chain.emplace_back(log_expansion(level_generator(m.mp, j - 1), truncation, m.l0), m.l0, mu, j - 1, form);
  }

  std::vector<PropagationMode> modes;
  if (o.mode != "coherent") modes.push_back(PropagationMode::Independent);
  if (o.mode != "independent") modes.push_back(PropagationMode::Coherent);

  std::vector<DistributionEstimate> direct;
  std::vector<DistributionEstimate> direct_spacing;
  std::vector<std::vector<double>> spacings(chain.size());
  for (std::size_t j = 0; j < chain.size(); ++j) {
    const auto& seq = h.levels[j];
    direct.push_back(histogram(seq.fluctuations));
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) spacings[j].push_back(seq.zeros[i + 1] - seq.zeros[i]);
    direct_spacing.push_back(histogram(spacings[j]));
    write_density_csv(out / ("direct_delta_level" + std::to_string(j) + ".csv"), st, direct.back());
    write_density_csv(out / ("direct_spacing_level" + std::to_string(j) + ".csv"), st, direct_spacing.back());
  }

  Json result = Json::object();
  for (const PropagationMode mode : modes) {
    const ChainResult r = propagate_chain(chain, h.beta, o.samples, seed, mode);
    const std::string name = to_string(mode);
    Json levels = Json::array();
    for (std::size_t j = 0; j < chain.size(); ++j) {
      write_density_csv(out / ("propagated_" + name + "_delta_level" + std::to_string(j) + ".csv"), st, r.delta[j]);
      write_density_csv(out / ("propagated_" + name + "_spacing_level" + std::to_string(j) + ".csv"), st,
                        r.spacing[j]);
      const Metrics d = distribution_metrics(r.delta[j], direct[j]);
      const Metrics sp = distribution_metrics(r.spacing[j], direct_spacing[j]);
      levels.push_back({{"level", j},
                        {"delta_l1", d.l1},
                        {"delta_ks", d.ks},
                        {"spacing_l1", sp.l1},
                        {"spacing_ks", sp.ks},
                        {"spacing_skewness", skewness(r.spacing[j].samples)},
                        {"direct_spacing_skewness", skewness(spacings[j])},
                        {"direct_zeros", h.levels[j].size()}});
    }
    result[name] = levels;
    std::cout << name << ": L1(level 0) = " << levels[0]["delta_l1"].get<double>() << "\n";
  }
  write_json(out / "hierarchy.json", st,
             {{"r", m.reg.r},
              {"beta", h.beta},
              {"form", o.form},
              {"seed", seed},
              {"samples", o.samples},
              {"interlacing", h.all_bootstrapped()},
              {"modes", result}});
  return h.all_bootstrapped() ? kOk : kBootstrap;
}

int exit_code(const std::exception& e) {
  auto is = [&](auto* tag) { return dynamic_cast<const std::remove_pointer_t<decltype(tag)>*>(&e) != nullptr; };
  if (is(static_cast<CLI::ValidationError*>(nullptr)) || is(static_cast<ParseError*>(nullptr)) ||
      is(static_cast<InvalidGraph*>(nullptr)) || is(static_cast<DisconnectedGraph*>(nullptr)) ||
      is(static_cast<NonPositiveLength*>(nullptr)) || is(static_cast<SelfLoop*>(nullptr)))
    return kUsage;
  if (is(static_cast<BootstrapViolation*>(nullptr))) return kBootstrap;
  if (const auto* nr = dynamic_cast<const NonRealZero*>(&e)) {
    std::cerr << "  at k = " << nr->real_part() << " + " << nr->imag_part() << "i\n";
    return kNonReal;
  }
  if (is(static_cast<FourierArtifact*>(nullptr))) return kFourier;
  return kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectra, periodic orbits and spectral statistics of quantum graphs"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--graph", o.graph, "graph JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--kmin", o.kmin, "lower end of the k window (> 0)");
    sub->add_option("--kmax", o.kmax, "upper end of the k window");
    sub->add_option("--zeros", o.zeros, "window size in mean spacings when --kmax is absent; series evaluations")
        ->check(CLI::PositiveNumber);
    sub->add_option("--max-scatter", o.max_scatter, "orbit length or series truncation M")->check(CLI::PositiveNumber);
    sub->add_flag("--strict", o.strict, "reject multiple zeros");
  };
  auto stochastic = [&](CLI::App* sub) {
    sub->add_option("--samples", o.samples, "Monte Carlo sample count")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "random seed")->required();
  };
  auto series_opts = [&](CLI::App* sub) {
    sub->add_option("--observable", o.observable, "delta or spacing")->check(CLI::IsMember({"delta", "spacing"}));
    sub->add_option("--m", o.m, "spacing order")->check(CLI::PositiveNumber);
    sub->add_option("--level", o.level, "hierarchy level, default the regular level r");
  };

  auto* spectrum = app.add_subcommand("spectrum", "zeros, separator hierarchy and interlacing checks");
  common(spectrum);
  auto* orbits = app.add_subcommand("orbits", "periodic orbit table");
  common(orbits);
  auto* series = app.add_subcommand("series", "harmonic series of one hierarchy level");
  common(series);
  series_opts(series);
  auto* stats = app.add_subcommand("stats", "distributions, form factor and pair correlation");
  common(stats);
  series_opts(stats);
  stochastic(stats);
  stats->add_option("--form-terms", o.form_terms, "spacing orders in the form factor")->check(CLI::PositiveNumber);
  auto* hierarchy = app.add_subcommand("hierarchy", "propagate distributions down the separator hierarchy");
  common(hierarchy);
  stochastic(hierarchy);
  hierarchy->add_option("--mode", o.mode, "independent, coherent or both")
      ->check(CLI::IsMember({"independent", "coherent", "both"}));
  hierarchy->add_option("--form", o.form, "exact or printed transition")->check(CLI::IsMember({"exact", "printed"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (spectrum->parsed()) return cmd_spectrum(o);
    if (orbits->parsed()) return cmd_orbits(o);
    if (series->parsed()) return cmd_series(o);
    if (stats->parsed()) return cmd_stats(o);
    if (hierarchy->parsed()) return cmd_hierarchy(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  }
  return kUsage;
}
