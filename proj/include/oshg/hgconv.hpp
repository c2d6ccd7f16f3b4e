#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "oshg/error.hpp"
#include "oshg/hypergraph.hpp"
#include "oshg/matrix.hpp"
#include "oshg/rng.hpp"

namespace oshg {

enum class Activation { relu, identity };

inline std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

inline Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "identity") return Activation::identity;
  throw DomainError("unknown activation '" + s + "'");
}

struct ConvLayer {
  Matrix theta;  // d_in x d_out
  Activation activation = Activation::relu;
};

/// Θ = I + glorot(gain): a square layer that starts close to the identity map.
inline ConvLayer near_identity_layer(Rng& rng, std::size_t dim, double gain = 0.1,
                                     Activation act = Activation::relu) {
  return {Matrix::identity(dim) + glorot_init(rng, dim, dim, gain), act};
}

inline void apply_activation(Matrix& m, Activation act) {
  if (act == Activation::relu)
    for (double& v : m.data()) v = v > 0.0 ? v : 0.0;
}

// Above this many vertices the dense n x n operator is never formed.
inline constexpr std::size_t kDensePropagationLimit = 4096;

enum class PropagationMode { automatic, dense, sparse };

/// Δ = D_v^{-1/2} H W D_e^{-1} Hᵀ D_v^{-1/2}, factored per edge as
/// Δ = Σ_e (w_e / δ_e) a_e a_eᵀ with a_e = D_v^{-1/2} h_e. Zero degrees
/// contribute zero (x^{-1} = x^{-1/2} = 0 at x = 0).
class Propagator {
 public:
  explicit Propagator(const Hypergraph& hg) : hg_(&hg) {
    const auto& dv = hg.vertex_degrees();
    const auto& de = hg.edge_degrees();
    inv_sqrt_dv_.resize(dv.size());
    for (std::size_t i = 0; i < dv.size(); ++i)
      inv_sqrt_dv_[i] = dv[i] > 0.0 ? 1.0 / std::sqrt(dv[i]) : 0.0;
    inv_de_.resize(de.size());
    for (std::size_t j = 0; j < de.size(); ++j) inv_de_[j] = de[j] > 0.0 ? 1.0 / de[j] : 0.0;
  }

  const Hypergraph& graph() const noexcept { return *hg_; }
  const std::vector<double>& inv_sqrt_dv() const noexcept { return inv_sqrt_dv_; }
  const std::vector<double>& inv_de() const noexcept { return inv_de_; }

  /// Rows a_eᵀ X for every edge e (n_edges x X.cols).
  Matrix edge_projections(const Matrix& x) const {
    check_rows(x);
    const auto& edges = hg_->edges();
    Matrix q(edges.size(), x.cols());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      auto qe = q.row(e);
      for (auto v : edges[e]) {
        const double s = inv_sqrt_dv_[v];
        if (s == 0.0) continue;
        auto xv = x.row(v);
        for (std::size_t c = 0; c < x.cols(); ++c) qe[c] += s * xv[c];
      }
    }
    return q;
  }

  /// Σ_e (w_e/δ_e) a_e q_eᵀ: the scatter half of Δ·X given q = edge_projections(X).
  Matrix scatter(const Matrix& q) const {
    const auto& edges = hg_->edges();
    const auto& w = hg_->weights();
    Matrix out(hg_->n_vertices(), q.cols());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const double coef = w[e] * inv_de_[e];
      if (coef == 0.0) continue;
      auto qe = q.row(e);
      for (auto v : edges[e]) {
        const double s = coef * inv_sqrt_dv_[v];
        auto ov = out.row(v);
        for (std::size_t c = 0; c < q.cols(); ++c) ov[c] += s * qe[c];
      }
    }
    return out;
  }

  Matrix apply_sparse(const Matrix& x) const { return scatter(edge_projections(x)); }

  Matrix dense() const {
    const std::size_t n = hg_->n_vertices();
    const auto& edges = hg_->edges();
    const auto& w = hg_->weights();
    Matrix delta(n, n);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const double coef = w[e] * inv_de_[e];
      if (coef == 0.0) continue;
      for (auto i : edges[e]) {
        const double si = coef * inv_sqrt_dv_[i];
        for (auto j : edges[e]) delta(i, j) += si * inv_sqrt_dv_[j];
      }
    }
    return delta;
  }

  Matrix apply(const Matrix& x, PropagationMode mode = PropagationMode::automatic) const {
    if (mode == PropagationMode::automatic) {
      mode = hg_->n_vertices() > kDensePropagationLimit ? PropagationMode::sparse
                                                        : PropagationMode::dense;
    }
    if (mode == PropagationMode::dense) {
      if (hg_->n_vertices() > kDensePropagationLimit) {
        throw DomainError("dense propagation requested for n > " +
                          std::to_string(kDensePropagationLimit));
      }
      check_rows(x);
      return matmul(dense(), x);
    }
    return apply_sparse(x);
  }

 private:
  void check_rows(const Matrix& x) const {
    if (x.rows() != hg_->n_vertices()) {
      throw ShapeError("propagation: input has " + std::to_string(x.rows()) + " rows for " +
                       std::to_string(hg_->n_vertices()) + " vertices");
    }
  }

  const Hypergraph* hg_;
  std::vector<double> inv_sqrt_dv_;
  std::vector<double> inv_de_;
};

inline Matrix propagation_matrix(const Hypergraph& hg) { return Propagator(hg).dense(); }

/// Intermediates of a forward pass kept for backpropagation.
struct ConvTrace {
  std::vector<Matrix> inputs;     // F^(k)
  std::vector<Matrix> projected;  // P^(k) = F^(k) Θ^(k)
  std::vector<Matrix> pre;        // Z^(k) = Δ P^(k)
  Matrix output;                  // F^(K)
};

inline void check_layer_chain(const std::vector<ConvLayer>& layers, std::size_t d0) {
  std::size_t d = d0;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (layers[k].theta.rows() != d) {
      throw ShapeError("conv layer " + std::to_string(k) + " expects input dim " +
                       std::to_string(layers[k].theta.rows()) + ", got " + std::to_string(d));
    }
    d = layers[k].theta.cols();
  }
}

inline ConvTrace conv_forward_trace(const Hypergraph& hg, const std::vector<ConvLayer>& layers,
                                    const Matrix& f0,
                                    PropagationMode mode = PropagationMode::automatic) {
  if (f0.rows() != hg.n_vertices()) {
    throw ShapeError("conv_forward: features have " + std::to_string(f0.rows()) + " rows for " +
                     std::to_string(hg.n_vertices()) + " vertices");
  }
  check_layer_chain(layers, f0.cols());
  const Propagator prop(hg);
  ConvTrace trace;
  Matrix f = f0;
  for (const auto& layer : layers) {
    Matrix p = matmul(f, layer.theta);
    Matrix z = prop.apply(p, mode);
    trace.inputs.push_back(std::move(f));
    f = z;
    apply_activation(f, layer.activation);
    trace.projected.push_back(std::move(p));
    trace.pre.push_back(std::move(z));
  }
  trace.output = std::move(f);
  return trace;
}

/// F^(k+1) = σ(Δ F^(k) Θ^(k)) for k = 0..K-1.
inline Matrix conv_forward(const Hypergraph& hg, const std::vector<ConvLayer>& layers,
                           const Matrix& f0, PropagationMode mode = PropagationMode::automatic) {
  return conv_forward_trace(hg, layers, f0, mode).output;
}

struct ConvGrads {
  std::vector<Matrix> theta;    // one per layer
  std::vector<double> weights;  // one per hyperedge
  Matrix input;                 // ∂L/∂F^(0)
};

/// Reverse pass through conv_forward_trace. ReLU uses derivative 0 at 0.
inline ConvGrads conv_backward(const Hypergraph& hg, const std::vector<ConvLayer>& layers,
                               const ConvTrace& trace, const Matrix& d_output) {
  const Propagator prop(hg);
  ConvGrads grads;
  grads.theta.resize(layers.size());
  grads.weights.assign(hg.n_edges(), 0.0);
  Matrix d_f = d_output;
  for (std::size_t k = layers.size(); k-- > 0;) {
    Matrix d_z = std::move(d_f);
    if (layers[k].activation == Activation::relu) {
      const auto z = trace.pre[k].data();
      auto dz = d_z.data();
      for (std::size_t i = 0; i < dz.size(); ++i)
        if (!(z[i] > 0.0)) dz[i] = 0.0;
    }
    const Matrix r = prop.edge_projections(d_z);
    const Matrix q = prop.edge_projections(trace.projected[k]);
    for (std::size_t e = 0; e < hg.n_edges(); ++e)
      grads.weights[e] += prop.inv_de()[e] * dot(r.row(e), q.row(e));
    const Matrix d_p = prop.scatter(r);
    grads.theta[k] = matmul_tn(trace.inputs[k], d_p);
    d_f = matmul_nt(d_p, layers[k].theta);
  }
  grads.input = std::move(d_f);
  return grads;
}

}  // namespace oshg
