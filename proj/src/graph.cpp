#include "specgraph/graph.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "specgraph/errors.hpp"

namespace specgraph {

MetricGraph::MetricGraph(GraphSpec spec) : spec_(std::move(spec)) {
  const int nv = spec_.vertex_count;
  if (nv < 1) throw InvalidGraph("graph needs at least one vertex");
  if (spec_.bonds.empty()) throw InvalidGraph("graph needs at least one bond");

  degree_.assign(static_cast<std::size_t>(nv), 0);
  in_.assign(static_cast<std::size_t>(nv), {});
  out_.assign(static_cast<std::size_t>(nv), {});

  for (std::size_t b = 0; b < spec_.bonds.size(); ++b) {
    const Bond& bond = spec_.bonds[b];
    if (bond.a < 0 || bond.a >= nv || bond.b < 0 || bond.b >= nv)
      throw InvalidGraph("bond " + std::to_string(b) + " references a missing vertex");
    if (bond.a == bond.b) throw SelfLoop("bond " + std::to_string(b) + " is a self-loop");
    if (!(bond.length > 0.0) || !std::isfinite(bond.length))
      throw NonPositiveLength("bond " + std::to_string(b) + " has non-positive length");
    const int bi = static_cast<int>(b);
    directed_.push_back({bond.a, bond.b, bi, bond.length});
    directed_.push_back({bond.b, bond.a, bi, bond.length});
    lengths_.push_back(bond.length);
    ++degree_[static_cast<std::size_t>(bond.a)];
    ++degree_[static_cast<std::size_t>(bond.b)];
  }
  for (int d = 0; d < directed_count(); ++d) {
    const auto& db = directed_[static_cast<std::size_t>(d)];
    out_[static_cast<std::size_t>(db.tail)].push_back(d);
    in_[static_cast<std::size_t>(db.head)].push_back(d);
  }

  // connectivity by union-find
  std::vector<int> parent(static_cast<std::size_t>(nv));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (const Bond& bond : spec_.bonds) parent[static_cast<std::size_t>(find(bond.a))] = find(bond.b);
  for (int v = 0; v < nv; ++v)
    if (find(v) != find(0)) throw DisconnectedGraph("vertex " + std::to_string(v) + " is not reachable");

  total_length_ = std::accumulate(lengths_.begin(), lengths_.end(), 0.0);
  for (double l : lengths_) omega_.push_back(l / total_length_);
}

MetricGraph build_graph(const GraphSpec& spec) { return MetricGraph(spec); }

VertexScattering kirchhoff_scattering(const MetricGraph& graph) {
  VertexScattering vs;
  for (int v = 0; v < graph.vertex_count(); ++v) {
    const auto& in = graph.incoming(v);
    const auto& out = graph.outgoing(v);
    const double t = 2.0 / static_cast<double>(graph.degree(v));
    CMatrix m(static_cast<Eigen::Index>(out.size()), static_cast<Eigen::Index>(in.size()));
    for (std::size_t i = 0; i < out.size(); ++i)
      for (std::size_t j = 0; j < in.size(); ++j)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            t - (out[i] == MetricGraph::reverse(in[j]) ? 1.0 : 0.0);
    vs.sigma.push_back(std::move(m));
  }
  return vs;
}

double unitarity_residual(const CMatrix& s) {
  const CMatrix r = s * s.adjoint() - CMatrix::Identity(s.rows(), s.cols());
  return r.cwiseAbs().maxCoeff();
}

void validate_scattering(const MetricGraph& graph, const VertexScattering& vs, double tol) {
  if (static_cast<int>(vs.sigma.size()) != graph.vertex_count())
    throw DimensionMismatch("scattering data has " + std::to_string(vs.sigma.size()) +
                            " vertex blocks, graph has " + std::to_string(graph.vertex_count()));
  for (int v = 0; v < graph.vertex_count(); ++v) {
    const CMatrix& m = vs.sigma[static_cast<std::size_t>(v)];
    const auto deg = static_cast<Eigen::Index>(graph.degree(v));
    if (m.rows() != deg || m.cols() != deg)
      throw DimensionMismatch("vertex " + std::to_string(v) + " block has wrong shape");
    if (unitarity_residual(m) > tol)
      throw NonUnitary("vertex " + std::to_string(v) + " scattering block is not unitary");
  }
}

CMatrix bond_scattering_matrix(const MetricGraph& graph, const VertexScattering& vs) {
  validate_scattering(graph, vs, 1e-10);
  const auto n = static_cast<Eigen::Index>(graph.directed_count());
  CMatrix s = CMatrix::Zero(n, n);
  for (int v = 0; v < graph.vertex_count(); ++v) {
    const auto& in = graph.incoming(v);
    const auto& out = graph.outgoing(v);
    const CMatrix& m = vs.sigma[static_cast<std::size_t>(v)];
    for (std::size_t i = 0; i < out.size(); ++i)
      for (std::size_t j = 0; j < in.size(); ++j)
        s(out[i], in[j]) = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  return s;
}

std::vector<CommensurabilityWarning> commensurability_diagnostic(const MetricGraph& graph,
                                                                 long max_denominator, double tol) {
  std::vector<CommensurabilityWarning> out;
  const auto& l = graph.bond_lengths();
  for (std::size_t i = 0; i < l.size(); ++i) {
    for (std::size_t j = i + 1; j < l.size(); ++j) {
      const double ratio = l[i] / l[j];
      for (long q = 1; q <= max_denominator; ++q) {
        const long p = std::lround(ratio * static_cast<double>(q));
        if (p > 0 && std::abs(ratio - static_cast<double>(p) / static_cast<double>(q)) <= tol * ratio) {
          out.push_back({static_cast<int>(i), static_cast<int>(j), p, q, ratio});
          break;
        }
      }
    }
  }
  return out;
}

GraphSpec interval_spec(double length) { return {2, {{0, 1, length}}}; }

GraphSpec star_spec(const std::vector<double>& lengths) {
  GraphSpec g{static_cast<int>(lengths.size()) + 1, {}};
  for (std::size_t i = 0; i < lengths.size(); ++i) g.bonds.push_back({0, static_cast<int>(i) + 1, lengths[i]});
  return g;
}

GraphSpec complete_spec(int vertices, const std::vector<double>& lengths) {
  GraphSpec g{vertices, {}};
  std::size_t k = 0;
  for (int a = 0; a < vertices; ++a)
    for (int b = a + 1; b < vertices; ++b) {
      if (k >= lengths.size()) throw DimensionMismatch("not enough lengths for complete graph");
      g.bonds.push_back({a, b, lengths[k++]});
    }
  if (k != lengths.size()) throw DimensionMismatch("too many lengths for complete graph");
  return g;
}

}  // namespace specgraph
