#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "specgraph/orbits.hpp"
#include "specgraph/series.hpp"
#include "specgraph/stats.hpp"

namespace specgraph {

using Json = nlohmann::json;

// {"vertices": n, "bonds": [[a, b, length], ...]}
GraphSpec graph_from_json(const Json& j);
Json graph_to_json(const GraphSpec& spec);
GraphSpec read_graph(const std::filesystem::path& path);  // throws ParseError
void write_graph(const std::filesystem::path& path, const GraphSpec& spec);

// [{"re": .., "im": .., "L": ..}, ...] sorted by L
Json polynomial_to_json(const ExponentialPolynomial& p);
ExponentialPolynomial polynomial_from_json(const Json& j);

// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

// Identifies one run: library version plus the hash of its canonical configuration.
struct RunStamp {
  std::string version;
  std::string config_hash;
  Json config;

  static RunStamp from_config(Json config);
};

// Shortest text that reads back to the same double (up to 17 significant digits).
std::string format_double(double v);

// CSV with a "# specgraph <version> config <hash>" preamble.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const RunStamp& stamp, std::span<const std::string> header);
  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(long v);
  CsvWriter& operator<<(int v) { return *this << static_cast<long>(v); }
  CsvWriter& operator<<(std::size_t v) { return *this << static_cast<long>(v); }
  CsvWriter& operator<<(const std::string& v);
  void end_row();

 private:
  void separator();
  std::ostream& out_;
  bool first_ = true;
};

// Writers below create the file, embed the stamp, and overwrite existing content.
void write_json(const std::filesystem::path& path, const RunStamp& stamp, Json body);
void write_levels_csv(const std::filesystem::path& path, const RunStamp& stamp,
                      std::span<const SeparatorSequence> levels);
void write_orbit_csv(const std::filesystem::path& path, const RunStamp& stamp, std::span<const PeriodicOrbit> orbits);
void write_series_csv(const std::filesystem::path& path, const RunStamp& stamp, const HarmonicSeries& s);
void write_evaluations_csv(const std::filesystem::path& path, const RunStamp& stamp, std::span<const long> ns,
                           std::span<const double> values);
void write_density_csv(const std::filesystem::path& path, const RunStamp& stamp, const DistributionEstimate& d);
void write_char_fn_csv(const std::filesystem::path& path, const RunStamp& stamp, const DistributionEstimate& d);

// Metadata of an estimate without its arrays.
Json estimate_metadata(const DistributionEstimate& d);

}  // namespace specgraph
