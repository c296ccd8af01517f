#include "specgraph/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "specgraph/errors.hpp"
#include "specgraph/version.hpp"

namespace specgraph {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

const std::vector<std::string> kLevelHeader{"level", "n", "k", "delta"};
const std::vector<std::string> kOrbitHeader{"cycle", "length", "scatter_count", "re_A", "im_A", "omega", "class_id"};
const std::vector<std::string> kSeriesHeader{"orbit_id", "amplitude", "omega", "phase"};
const std::vector<std::string> kEvalHeader{"n", "value"};
const std::vector<std::string> kDensityHeader{"x", "density"};
const std::vector<std::string> kCharHeader{"t", "re_phi", "im_phi"};

}  // namespace

GraphSpec graph_from_json(const Json& j) {
  try {
    GraphSpec spec;
    spec.vertex_count = j.at("vertices").get<int>();
    for (const auto& b : j.at("bonds")) {
      if (!b.is_array() || b.size() != 3) throw ParseError("each bond must be [a, b, length]");
      spec.bonds.push_back({b[0].get<int>(), b[1].get<int>(), b[2].get<double>()});
    }
    return spec;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("graph JSON: ") + e.what());
  }
}

Json graph_to_json(const GraphSpec& spec) {
  Json bonds = Json::array();
  for (const auto& b : spec.bonds) bonds.push_back(Json::array({b.a, b.b, b.length}));
  return Json{{"vertices", spec.vertex_count}, {"bonds", bonds}};
}

GraphSpec read_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open graph file " + path.string());
  try {
    return graph_from_json(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_graph(const std::filesystem::path& path, const GraphSpec& spec) {
  auto out = open_output(path);
  out << "{\n  \"vertices\": " << spec.vertex_count << ",\n  \"bonds\": [";
  for (std::size_t i = 0; i < spec.bonds.size(); ++i) {
    const auto& b = spec.bonds[i];
    out << (i ? ",\n    " : "\n    ") << Json::array({b.a, b.b, b.length}).dump();
  }
  out << "\n  ]\n}\n";
}

Json polynomial_to_json(const ExponentialPolynomial& p) {
  Json arr = Json::array();
  for (const auto& t : p.terms()) arr.push_back({{"re", t.amplitude.real()}, {"im", t.amplitude.imag()}, {"L", t.length}});
  return arr;
}

ExponentialPolynomial polynomial_from_json(const Json& j) {
  try {
    std::vector<ExpTerm> terms;
    for (const auto& t : j) terms.push_back({cplx(t.at("re").get<double>(), t.at("im").get<double>()), t.at("L").get<double>()});
    // terms were merged when written; keep them apart on the way back
    return ExponentialPolynomial(std::move(terms), 0.0);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("polynomial JSON: ") + e.what());
  }
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunStamp RunStamp::from_config(Json config) {
  RunStamp s;
  s.version = kVersion;
  // nlohmann objects are key-sorted, so dump() is canonical
  s.config_hash = fnv1a_hex(config.dump());
  s.config = std::move(config);
  return s;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::ostream& out, const RunStamp& stamp, std::span<const std::string> header) : out_(out) {
  out_ << "# specgraph " << stamp.version << " config " << stamp.config_hash << '\n';
  for (const auto& h : header) {
    separator();
    out_ << h;
  }
  end_row();
}

void CsvWriter::separator() {
  if (!first_) out_ << ',';
  first_ = false;
}

CsvWriter& CsvWriter::operator<<(double v) {
  separator();
  out_ << format_double(v);
  return *this;
}

CsvWriter& CsvWriter::operator<<(long v) {
  separator();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& v) {
  separator();
  out_ << v;
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
}

void write_json(const std::filesystem::path& path, const RunStamp& stamp, Json body) {
  body["meta"] = {{"version", stamp.version}, {"config_hash", stamp.config_hash}, {"config", stamp.config}};
  auto out = open_output(path);
  out << body.dump(2) << '\n';
}

void write_levels_csv(const std::filesystem::path& path, const RunStamp& stamp,
                      std::span<const SeparatorSequence> levels) {
  auto out = open_output(path);
  CsvWriter w(out, stamp, kLevelHeader);
  for (const auto& seq : levels)
    for (std::size_t i = 0; i < seq.size(); ++i) {
      w << seq.level << seq.labels[i] << seq.zeros[i] << seq.fluctuations[i];
      w.end_row();
    }
}

void write_orbit_csv(const std::filesystem::path& path, const RunStamp& stamp, std::span<const PeriodicOrbit> orbits) {
  auto out = open_output(path);
  CsvWriter w(out, stamp, kOrbitHeader);
  for (const auto& o : orbits) {
    std::string cycle;
    for (std::size_t i = 0; i < o.cycle.size(); ++i) cycle += (i ? " " : "") + std::to_string(o.cycle[i]);
    w << cycle << o.length << o.scatter_count << o.amplitude.real() << o.amplitude.imag() << o.omega << o.class_id;
    w.end_row();
  }
}

void write_series_csv(const std::filesystem::path& path, const RunStamp& stamp, const HarmonicSeries& s) {
  auto out = open_output(path);
  CsvWriter w(out, stamp, kSeriesHeader);
  for (const auto& t : s.terms) {
    w << t.id << t.amplitude << t.omega << t.phase;
    w.end_row();
  }
}

void write_evaluations_csv(const std::filesystem::path& path, const RunStamp& stamp, std::span<const long> ns,
                           std::span<const double> values) {
  if (ns.size() != values.size()) throw DimensionMismatch("labels and values differ in length");
  auto out = open_output(path);
  CsvWriter w(out, stamp, kEvalHeader);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    w << ns[i] << values[i];
    w.end_row();
  }
}

void write_density_csv(const std::filesystem::path& path, const RunStamp& stamp, const DistributionEstimate& d) {
  auto out = open_output(path);
  CsvWriter w(out, stamp, kDensityHeader);
  for (std::size_t i = 0; i < d.grid.size(); ++i) {
    w << d.grid[i] << d.density[i];
    w.end_row();
  }
}

void write_char_fn_csv(const std::filesystem::path& path, const RunStamp& stamp, const DistributionEstimate& d) {
  auto out = open_output(path);
  CsvWriter w(out, stamp, kCharHeader);
  for (std::size_t i = 0; i < d.t_grid.size(); ++i) {
    w << d.t_grid[i] << d.char_fn[i].real() << d.char_fn[i].imag();
    w.end_row();
  }
}

Json estimate_metadata(const DistributionEstimate& d) {
  return {{"method", to_string(d.method)},
          {"seed", d.seed},
          {"sample_count", d.sample_count},
          {"quadrature", d.quadrature},
          {"grid_points", d.grid.size()},
          {"t_points", d.t_grid.size()}};
}

}  // namespace specgraph
