#include <gtest/gtest.h>

#include <cmath>

#include "oshg/hgconv.hpp"
#include "oshg/rng.hpp"

using namespace oshg;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

Hypergraph random_hypergraph(Rng& rng, std::size_t n, bool allow_isolated = true) {
  std::vector<std::vector<std::size_t>> edges(1 + rng.index(2 * n));
  for (auto& e : edges)
    for (std::size_t s = 0; s < 1 + rng.index(std::min<std::size_t>(n, 6)); ++s) e.push_back(rng.index(n));
  if (!allow_isolated)
    for (std::size_t v = 0; v < n; ++v) edges.push_back({v});
  std::vector<double> w(edges.size());
  for (double& x : w) x = rng.uniform(0.1, 3.0);
  return Hypergraph(n, edges, w);
}

// Δ from the explicit matrix product Dv^{-1/2} H W De^{-1} Hᵀ Dv^{-1/2}.
Matrix delta_oracle(const Hypergraph& hg) {
  const Matrix h = hg.incidence();
  const std::size_t n = h.rows(), m = h.cols();
  Matrix dv(n, n), w(m, m), de(m, m);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0;
    for (std::size_t j = 0; j < m; ++j) deg += h(i, j);
    dv(i, i) = deg > 0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  for (std::size_t j = 0; j < m; ++j) {
    double deg = 0;
    for (std::size_t i = 0; i < n; ++i) deg += h(i, j);
    de(j, j) = deg > 0 ? 1.0 / deg : 0.0;
    w(j, j) = hg.weights()[j];
  }
  return matmul(matmul(matmul(matmul(matmul(dv, h), w), de), transpose(h)), dv);
}

}  // namespace

TEST(Propagation, SingletonEdgesGiveIdentity) {
  const std::size_t n = 9;
  std::vector<std::vector<std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i) edges.push_back({i});
  const Hypergraph hg(n, edges);
  const Matrix delta = propagation_matrix(hg);
  EXPECT_LE(max_abs_diff(delta, Matrix::identity(n)), 1e-12);
  Rng rng(1);
  const Matrix f = random_matrix(rng, n, 4);
  const Matrix out = conv_forward(hg, {{Matrix::identity(4), Activation::identity}}, f);
  EXPECT_LE(max_abs_diff(out, f), 1e-12);
}

TEST(Propagation, MatchesExplicitProductOracle) {
  Rng rng(2);
  for (int t = 0; t < 30; ++t) {
    const Hypergraph hg = random_hypergraph(rng, 2 + rng.index(20));
    EXPECT_LE(max_abs_diff(propagation_matrix(hg), delta_oracle(hg)), 1e-12);
  }
}

TEST(Propagation, SymmetricOnRandomHypergraphs) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const Hypergraph hg = random_hypergraph(rng, 1 + rng.index(64));
    const Matrix d = propagation_matrix(hg);
    EXPECT_LE(max_abs_diff(d, transpose(d)), 1e-12);
  }
}

TEST(Propagation, SparseMatchesDense) {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const Hypergraph hg = random_hypergraph(rng, 2 + rng.index(40));
    const Matrix x = random_matrix(rng, hg.n_vertices(), 3);
    const Propagator p(hg);
    EXPECT_LE(max_abs_diff(p.apply(x, PropagationMode::sparse), p.apply(x, PropagationMode::dense)), 1e-12);
  }
}

TEST(Propagation, IsolatedVertexPropagatesToZero) {
  const Hypergraph hg(3, {{0, 1}});
  const Matrix d = propagation_matrix(hg);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(d(2, j), 0.0);
    EXPECT_EQ(d(j, 2), 0.0);
  }
  EXPECT_DOUBLE_EQ(d(0, 1), 0.5);
}

TEST(Propagation, DenseRefusedAboveLimit) {
  const Hypergraph hg(kDensePropagationLimit + 1, {});
  const Propagator p(hg);
  EXPECT_THROW(p.apply(Matrix(kDensePropagationLimit + 1, 1), PropagationMode::dense), DomainError);
}

TEST(Conv, LayerChainShapesChecked) {
  const Hypergraph hg(2, {{0, 1}});
  EXPECT_THROW(conv_forward(hg, {{Matrix(3, 3), Activation::relu}}, Matrix(2, 2)), ShapeError);
  EXPECT_THROW(conv_forward(hg, {{Matrix(2, 2), Activation::relu}}, Matrix(3, 2)), ShapeError);
}

TEST(Conv, ReluClampsNegatives) {
  const Hypergraph hg(2, {{0}, {1}});
  const Matrix out = conv_forward(hg, {{Matrix::identity(2), Activation::relu}}, Matrix{{-1, 2}, {3, -4}});
  EXPECT_EQ(out, (Matrix{{0, 2}, {3, 0}}));
}

TEST(Conv, NearIdentityInit) {
  Rng rng(5);
  const ConvLayer layer = near_identity_layer(rng, 16, 0.1);
  EXPECT_LE(max_abs_diff(layer.theta, Matrix::identity(16)), 0.1 * std::sqrt(6.0 / 32.0));
}

// Central differences of L = Σ G ⊙ conv(F) against conv_backward, two layers.
TEST(Conv, BackwardMatchesFiniteDifferences) {
  Rng rng(6);
  Hypergraph hg = random_hypergraph(rng, 7, false);
  std::vector<ConvLayer> layers{{random_matrix(rng, 3, 4), Activation::relu},
                                {random_matrix(rng, 4, 2), Activation::identity}};
  const Matrix f = random_matrix(rng, 7, 3);
  const Matrix g = random_matrix(rng, 7, 2);
  auto loss = [&] {
    const Matrix out = conv_forward(hg, layers, f, PropagationMode::sparse);
    double acc = 0;
    for (std::size_t i = 0; i < out.size(); ++i) acc += g.data()[i] * out.data()[i];
    return acc;
  };
  const ConvGrads grads = conv_backward(hg, layers, conv_forward_trace(hg, layers, f), g);
  const double h = 1e-6;
  auto check = [&](double& x, double analytic) {
    const double x0 = x;
    x = x0 + h;
    const double lp = loss();
    x = x0 - h;
    const double lm = loss();
    x = x0;
    const double numeric = (lp - lm) / (2 * h);
    EXPECT_NEAR(analytic, numeric, 1e-6 * std::max(1.0, std::abs(numeric)));
  };
  for (std::size_t k = 0; k < layers.size(); ++k)
    for (std::size_t i = 0; i < layers[k].theta.size(); ++i)
      check(layers[k].theta.data()[i], grads.theta[k].data()[i]);
  for (std::size_t e = 0; e < hg.n_edges(); ++e) check(hg.mutable_weights()[e], grads.weights[e]);
}
