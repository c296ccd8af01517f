#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace specgraph {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

struct Bond {
  int a = 0;
  int b = 0;
  double length = 0.0;
};

struct GraphSpec {
  int vertex_count = 0;
  std::vector<Bond> bonds;
};

// Directed copy of a bond. Index 2*bond is a->b, 2*bond+1 is b->a.
struct DirectedBond {
  int tail = 0;
  int head = 0;
  int bond = 0;
  double length = 0.0;
};

class MetricGraph {
 public:
  explicit MetricGraph(GraphSpec spec);

  const GraphSpec& spec() const noexcept { return spec_; }
  int vertex_count() const noexcept { return spec_.vertex_count; }
  int bond_count() const noexcept { return static_cast<int>(spec_.bonds.size()); }
  int directed_count() const noexcept { return static_cast<int>(directed_.size()); }

  const std::vector<DirectedBond>& directed_bonds() const noexcept { return directed_; }
  const DirectedBond& directed(int d) const { return directed_.at(static_cast<std::size_t>(d)); }
  static constexpr int reverse(int d) noexcept { return d ^ 1; }

  double total_length() const noexcept { return total_length_; }
  const std::vector<double>& bond_lengths() const noexcept { return lengths_; }
  // Omega_i = l_i / L0.
  const std::vector<double>& frequency_basis() const noexcept { return omega_; }
  int degree(int v) const { return degree_.at(static_cast<std::size_t>(v)); }

  // Directed bonds entering / leaving v, in index order.
  const std::vector<int>& incoming(int v) const { return in_.at(static_cast<std::size_t>(v)); }
  const std::vector<int>& outgoing(int v) const { return out_.at(static_cast<std::size_t>(v)); }

 private:
  GraphSpec spec_;
  std::vector<DirectedBond> directed_;
  std::vector<double> lengths_;
  std::vector<double> omega_;
  std::vector<int> degree_;
  std::vector<std::vector<int>> in_;
  std::vector<std::vector<int>> out_;
  double total_length_ = 0.0;
};

// Validates the graph description and builds the directed-bond basis.
MetricGraph build_graph(const GraphSpec& spec);

// Per-vertex scattering matrices. sigma[v](i, j) is the amplitude from
// incoming(v)[j] to outgoing(v)[i].
struct VertexScattering {
  std::vector<CMatrix> sigma;
};

VertexScattering kirchhoff_scattering(const MetricGraph& graph);

// Checks shapes against the graph and unitarity of every block.
void validate_scattering(const MetricGraph& graph, const VertexScattering& vs, double tol = 1e-12);

// Global matrix over directed bonds: S(d', d) is nonzero only if head(d) == tail(d').
CMatrix bond_scattering_matrix(const MetricGraph& graph, const VertexScattering& vs);

// Spectral-norm-free unitarity residual max |(S S^dagger - I)_{ij}|.
double unitarity_residual(const CMatrix& s);

// Pairs of bonds whose length ratio is close to p/q with small q.
struct CommensurabilityWarning {
  int bond_i = 0;
  int bond_j = 0;
  long p = 0;
  long q = 0;
  double ratio = 0.0;
};

std::vector<CommensurabilityWarning> commensurability_diagnostic(const MetricGraph& graph,
                                                                 long max_denominator = 64,
                                                                 double tol = 1e-9);

// Common test graphs.
GraphSpec interval_spec(double length = 1.0);
GraphSpec star_spec(const std::vector<double>& lengths);
GraphSpec complete_spec(int vertices, const std::vector<double>& lengths);

}  // namespace specgraph
