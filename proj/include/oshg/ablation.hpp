#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oshg/error.hpp"
#include "oshg/hgconv.hpp"
#include "oshg/hypergraph.hpp"
#include "oshg/matrix.hpp"

namespace oshg {

// Adapter kernels compared in the ablation: neighbourhood pooling, a pairwise
// (GCN-style) graph and the hypergraph convolution itself.
enum class KernelKind { avg_pool, max_pool, pairwise_graph, hypergraph };

inline std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::avg_pool: return "avg_pool";
    case KernelKind::max_pool: return "max_pool";
    case KernelKind::pairwise_graph: return "pairwise_graph";
    case KernelKind::hypergraph: return "hypergraph";
  }
  return "hypergraph";
}

inline KernelKind parse_kernel(const std::string& s) {
  if (s == "avg_pool" || s == "avg") return KernelKind::avg_pool;
  if (s == "max_pool" || s == "max") return KernelKind::max_pool;
  if (s == "pairwise_graph" || s == "gcn") return KernelKind::pairwise_graph;
  if (s == "hypergraph") return KernelKind::hypergraph;
  throw DomainError("unknown kernel '" + s + "'");
}

/// Self-inclusive KNN neighbourhoods by cosine, ties to the lower index.
inline std::vector<std::vector<std::size_t>> knn_neighborhoods(const Matrix& f, std::size_t k) {
  const std::size_t n = f.rows();
  if (n > 0 && k > n - 1) {
    throw DomainError("knn: k=" + std::to_string(k) + " exceeds n-1=" + std::to_string(n - 1));
  }
  std::vector<std::vector<std::size_t>> out(n);
  const Matrix unit = k > 0 ? normalize_rows(f) : Matrix();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = k > 0 ? top_k_neighbors(unit, i, k) : std::vector<std::size_t>{};
    out[i].insert(out[i].begin(), i);
  }
  return out;
}

/// Element-wise mean or max of each vertex with its k neighbours.
inline Matrix neighborhood_pool(const Matrix& f, std::size_t k, bool use_max) {
  const auto hoods = knn_neighborhoods(f, k);
  Matrix out(f.rows(), f.cols());
  for (std::size_t i = 0; i < f.rows(); ++i) {
    auto o = out.row(i);
    std::copy(f.row(i).begin(), f.row(i).end(), o.begin());
    for (std::size_t t = 1; t < hoods[i].size(); ++t) {
      auto r = f.row(hoods[i][t]);
      for (std::size_t c = 0; c < o.size(); ++c) o[c] = use_max ? std::max(o[c], r[c]) : o[c] + r[c];
    }
    if (!use_max) {
      const double inv = 1.0 / static_cast<double>(hoods[i].size());
      for (double& v : o) v *= inv;
    }
  }
  return out;
}

/// Binary symmetric adjacency with self loops, normalized as D^{-1/2} A D^{-1/2}.
class PairwiseGraph {
 public:
  PairwiseGraph() = default;

  /// `edges` are undirected pairs; self loops are always added.
  PairwiseGraph(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges)
      : adj_(n) {
    for (std::size_t i = 0; i < n; ++i) adj_[i].push_back(i);
    for (auto [a, b] : edges) {
      if (a >= n || b >= n) throw DomainError("pairwise graph: vertex out of range");
      if (a == b) continue;
      adj_[a].push_back(b);
      adj_[b].push_back(a);
    }
    inv_sqrt_deg_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::sort(adj_[i].begin(), adj_[i].end());
      adj_[i].erase(std::unique(adj_[i].begin(), adj_[i].end()), adj_[i].end());
      inv_sqrt_deg_[i] = 1.0 / std::sqrt(static_cast<double>(adj_[i].size()));
    }
  }

  static PairwiseGraph from_knn(const Matrix& f, std::size_t k) {
    const auto hoods = knn_neighborhoods(f, k);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < hoods.size(); ++i)
      for (std::size_t t = 1; t < hoods[i].size(); ++t) edges.emplace_back(i, hoods[i][t]);
    return PairwiseGraph(f.rows(), edges);
  }

  std::size_t n_vertices() const noexcept { return adj_.size(); }

  Matrix dense() const {
    Matrix a(adj_.size(), adj_.size());
    for (std::size_t i = 0; i < adj_.size(); ++i)
      for (auto j : adj_[i]) a(i, j) = inv_sqrt_deg_[i] * inv_sqrt_deg_[j];
    return a;
  }

  Matrix apply(const Matrix& x) const {
    if (x.rows() != adj_.size()) throw ShapeError("pairwise graph: row mismatch");
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < adj_.size(); ++i) {
      auto o = out.row(i);
      for (auto j : adj_[i]) {
        const double s = inv_sqrt_deg_[i] * inv_sqrt_deg_[j];
        auto xj = x.row(j);
        for (std::size_t c = 0; c < o.size(); ++c) o[c] += s * xj[c];
      }
    }
    return out;
  }

 private:
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<double> inv_sqrt_deg_;
};

/// Runs one ablation kernel over fused features; output keeps the input shape
/// so it drops into the same ψ/α fusion slot as the hypergraph adapter.
/// `theta` defaults to the identity for the parametric kernels.
inline Matrix baseline_adapt(KernelKind kind, const Matrix& f, std::size_t knn_k,
                             const std::optional<Matrix>& theta = std::nullopt,
                             Activation activation = Activation::relu) {
  if (theta && (theta->rows() != f.cols() || theta->cols() != f.cols())) {
    throw ShapeError("baseline_adapt: theta must be " + std::to_string(f.cols()) + "x" +
                     std::to_string(f.cols()));
  }
  switch (kind) {
    case KernelKind::avg_pool:
      return neighborhood_pool(f, knn_k, false);
    case KernelKind::max_pool:
      return neighborhood_pool(f, knn_k, true);
    case KernelKind::pairwise_graph: {
      const Matrix propagated = PairwiseGraph::from_knn(f, knn_k).apply(f);
      return theta ? matmul(propagated, *theta) : propagated;
    }
    case KernelKind::hypergraph: {
      if (knn_k == 0) throw DomainError("hypergraph kernel needs knn_k >= 1");
      const ConvLayer layer{theta ? *theta : Matrix::identity(f.cols()), activation};
      return conv_forward(knn_hyperedges(f, knn_k), {layer}, f);
    }
  }
  throw DomainError("baseline_adapt: unknown kernel");
}

}  // namespace oshg
