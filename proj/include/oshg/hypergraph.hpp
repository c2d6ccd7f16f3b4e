#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "oshg/error.hpp"
#include "oshg/log.hpp"
#include "oshg/matrix.hpp"

namespace oshg {

/// Provenance of a hyperedge block: the original feature graph or the graph
/// built from synonym slot `slot` (1-based, as in H_sys^1 .. H_sys^l).
struct BlockTag {
  enum class Kind { original, synonym };
  Kind kind = Kind::original;
  std::size_t slot = 0;

  static BlockTag original() { return {}; }
  static BlockTag synonym(std::size_t slot) { return {Kind::synonym, slot}; }

  std::string str() const {
    return kind == Kind::original ? "original" : "synonym:" + std::to_string(slot);
  }
  static BlockTag parse(const std::string& s) {
    if (s == "original") return original();
    if (s.rfind("synonym:", 0) == 0) {
      try {
        return synonym(std::stoul(s.substr(8)));
      } catch (const std::exception&) {
      }
    }
    throw ParseError("unknown hyperedge tag '" + s + "'");
  }
  bool operator==(const BlockTag&) const = default;
};

/// Sparse hypergraph: each edge is a sorted set of vertex ids. Degrees are
/// unweighted incidence counts and are kept in sync with the edge list.
class Hypergraph {
 public:
  Hypergraph() = default;

  Hypergraph(std::size_t n_vertices, std::vector<std::vector<std::size_t>> edges,
             std::vector<double> weights = {}, std::vector<BlockTag> tags = {})
      : n_vertices_(n_vertices), edges_(std::move(edges)) {
    for (auto& e : edges_) {
      std::sort(e.begin(), e.end());
      e.erase(std::unique(e.begin(), e.end()), e.end());
      if (!e.empty() && e.back() >= n_vertices_) {
        throw DomainError("hyperedge references vertex " + std::to_string(e.back()) +
                          " >= n_vertices=" + std::to_string(n_vertices_));
      }
    }
    weights_ = weights.empty() ? std::vector<double>(edges_.size(), 1.0) : std::move(weights);
    tags_ = tags.empty() ? std::vector<BlockTag>(edges_.size(), BlockTag::original())
                         : std::move(tags);
    if (weights_.size() != edges_.size() || tags_.size() != edges_.size()) {
      throw ShapeError("hypergraph: weights/tags length must equal edge count");
    }
    recompute_degrees();
  }

  std::size_t n_vertices() const noexcept { return n_vertices_; }
  std::size_t n_edges() const noexcept { return edges_.size(); }
  const std::vector<std::vector<std::size_t>>& edges() const noexcept { return edges_; }
  const std::vector<std::size_t>& edge(std::size_t j) const { return edges_.at(j); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<BlockTag>& tags() const noexcept { return tags_; }
  const std::vector<double>& vertex_degrees() const noexcept { return d_v_; }
  const std::vector<double>& edge_degrees() const noexcept { return d_e_; }

  void set_weights(std::vector<double> w) {
    if (w.size() != edges_.size()) throw ShapeError("set_weights: length mismatch");
    weights_ = std::move(w);
  }
  std::vector<double>& mutable_weights() noexcept { return weights_; }

  void set_tag(BlockTag tag) { std::fill(tags_.begin(), tags_.end(), tag); }

  /// Dense |V| x |E| incidence matrix H.
  Matrix incidence() const {
    Matrix h(n_vertices_, edges_.size());
    for (std::size_t j = 0; j < edges_.size(); ++j)
      for (auto v : edges_[j]) h(v, j) = 1.0;
    return h;
  }

  bool operator==(const Hypergraph&) const = default;

 private:
  void recompute_degrees() {
    d_v_.assign(n_vertices_, 0.0);
    d_e_.assign(edges_.size(), 0.0);
    for (std::size_t j = 0; j < edges_.size(); ++j) {
      d_e_[j] = static_cast<double>(edges_[j].size());
      for (auto v : edges_[j]) d_v_[v] += 1.0;
    }
  }

  std::size_t n_vertices_ = 0;
  std::vector<std::vector<std::size_t>> edges_;
  std::vector<double> weights_;
  std::vector<BlockTag> tags_;
  std::vector<double> d_v_;
  std::vector<double> d_e_;
};

/// d_v[i] = Σ_j H_ij and d_e[j] = Σ_i H_ij.
inline std::pair<std::vector<double>, std::vector<double>> degrees(const Hypergraph& hg) {
  return {hg.vertex_degrees(), hg.edge_degrees()};
}

/// Neighbourhood size k = max(b, c), clamped to n-1 when the corpus is too small.
inline std::size_t auto_k(std::size_t b, std::size_t c, std::size_t n_vertices) {
  if (n_vertices < 2) throw DomainError("auto_k: need at least 2 vertices");
  const std::size_t k = std::max(b, c);
  if (k > n_vertices - 1) {
    log_info("auto_k: max(b, c)=" + std::to_string(k) + " clamped to n-1=" +
             std::to_string(n_vertices - 1));
    return n_vertices - 1;
  }
  return k;
}

/// Indices of the k most cosine-similar rows to `query_row` (excluding itself),
/// best first; ties go to the lower index.
inline std::vector<std::size_t> top_k_neighbors(const Matrix& unit_rows, std::size_t query_row,
                                                std::size_t k) {
  const std::size_t n = unit_rows.rows();
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(n - 1);
  const auto q = unit_rows.row(query_row);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == query_row) continue;
    scored.emplace_back(dot(q, unit_rows.row(j)), j);
  }
  auto better = [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                    better);
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = scored[i].second;
  return out;
}

/// One hyperedge per vertex: e_i = {i} ∪ top-k cosine neighbours of i.
inline Hypergraph knn_hyperedges(const Matrix& features, std::size_t k,
                                 BlockTag tag = BlockTag::original()) {
  const std::size_t n = features.rows();
  if (k < 1 || n < 2 || k > n - 1) {
    throw DomainError("knn_hyperedges: k=" + std::to_string(k) + " outside [1, n-1] for n=" +
                      std::to_string(n));
  }
  const Matrix unit = normalize_rows(features);
  std::vector<std::vector<std::size_t>> edges(n);
  for (std::size_t i = 0; i < n; ++i) {
    edges[i] = top_k_neighbors(unit, i, k);
    edges[i].push_back(i);
  }
  return Hypergraph(n, std::move(edges), {}, std::vector<BlockTag>(n, tag));
}

/// H = H_0 || H_1 || ... with weights and tags carried along in order.
inline Hypergraph concat_incidence(const std::vector<Hypergraph>& parts) {
  if (parts.empty()) throw DomainError("concat_incidence: no parts");
  const std::size_t n = parts.front().n_vertices();
  std::vector<std::vector<std::size_t>> edges;
  std::vector<double> weights;
  std::vector<BlockTag> tags;
  for (const auto& p : parts) {
    if (p.n_vertices() != n) {
      throw ShapeError("concat_incidence: vertex count " + std::to_string(p.n_vertices()) +
                       " != " + std::to_string(n));
    }
    edges.insert(edges.end(), p.edges().begin(), p.edges().end());
    weights.insert(weights.end(), p.weights().begin(), p.weights().end());
    tags.insert(tags.end(), p.tags().begin(), p.tags().end());
  }
  return Hypergraph(n, std::move(edges), std::move(weights), std::move(tags));
}

/// Text-side graph: KNN over the fused features followed by one KNN block per
/// synonym slot.
inline Hypergraph build_text_hypergraph(const Matrix& fused, const std::vector<Matrix>& synonym_slots,
                                        std::size_t k) {
  std::vector<Hypergraph> parts;
  parts.push_back(knn_hyperedges(fused, k, BlockTag::original()));
  for (std::size_t s = 0; s < synonym_slots.size(); ++s) {
    parts.push_back(knn_hyperedges(synonym_slots[s], k, BlockTag::synonym(s + 1)));
  }
  return concat_incidence(parts);
}

inline nlohmann::json hypergraph_to_json(const Hypergraph& hg) {
  nlohmann::json tags = nlohmann::json::array();
  for (const auto& t : hg.tags()) tags.push_back(t.str());
  return nlohmann::json{{"n_vertices", hg.n_vertices()},
                        {"edges", hg.edges()},
                        {"weights", hg.weights()},
                        {"tags", tags}};
}

inline Hypergraph hypergraph_from_json(const nlohmann::json& j) {
  try {
    std::vector<BlockTag> tags;
    for (const auto& t : j.at("tags")) tags.push_back(BlockTag::parse(t.get<std::string>()));
    return Hypergraph(j.at("n_vertices").get<std::size_t>(),
                      j.at("edges").get<std::vector<std::vector<std::size_t>>>(),
                      j.at("weights").get<std::vector<double>>(), std::move(tags));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("hypergraph JSON: ") + e.what());
  }
}

}  // namespace oshg
