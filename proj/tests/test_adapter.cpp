#include <gtest/gtest.h>

#include <filesystem>

#include "oshg/adapter.hpp"
#include "oshg/rng.hpp"

using namespace oshg;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

TextAdapter make_text_adapter(Rng& rng, const Matrix& fused, std::size_t b, std::size_t c) {
  TextAdapter a;
  a.hg = knn_hyperedges(fused, 3);
  a.layers = {near_identity_layer(rng, b + c, 0.1)};
  a.b = b;
  a.c = c;
  return a;
}

}  // namespace

TEST(TextFusion, PsiOfExtendedRecoversOriginal) {
  Rng rng(1);
  const Matrix t = random_matrix(rng, 6, 4);
  const Matrix fused = extend_matrix(t, {random_matrix(rng, 6, 3), random_matrix(rng, 6, 3)});
  EXPECT_EQ(project_psi(fused, 4), t);
  EXPECT_THROW(project_psi(t, 5), ShapeError);
}

TEST(TextFusion, AlphaOneReturnsDatasetEmbedding) {
  Rng rng(2);
  const Matrix t = random_matrix(rng, 10, 4);
  const Matrix fused = extend_matrix(t, {random_matrix(rng, 10, 4)});
  const TextAdapter a = make_text_adapter(rng, fused, 4, 4);
  EXPECT_EQ(fuse_text(a, t, fused, 1.0), t);
  EXPECT_EQ(fuse_text(a, t, fused, 0.0), project_psi(conv_forward(a.hg, a.layers, fused), 4));
  EXPECT_THROW(fuse_text(a, t, fused, 1.5), DomainError);
}

// F(α) - T = (1-α)(ψ - T), so differences for two α values are parallel.
TEST(TextFusion, BlendIsLinearInAlpha) {
  Rng rng(3);
  const Matrix t = random_matrix(rng, 8, 3);
  const Matrix fused = extend_matrix(t, {random_matrix(rng, 8, 3)});
  const TextAdapter a = make_text_adapter(rng, fused, 3, 3);
  const Matrix f0 = fuse_text(a, t, fused, 0.0);
  for (double alpha : {0.1, 0.37, 0.9}) {
    const Matrix fa = fuse_text(a, t, fused, alpha);
    for (std::size_t i = 0; i < t.size(); ++i) {
      EXPECT_NEAR(fa.data()[i] - t.data()[i], (1 - alpha) * (f0.data()[i] - t.data()[i]), 1e-12);
    }
  }
}

TEST(VisionFusion, BetaZeroIsIdentity) {
  Rng rng(4);
  const Matrix v = random_matrix(rng, 9, 5);
  VisionAdapter a{knn_hyperedges(v, 4), {near_identity_layer(rng, 5), near_identity_layer(rng, 5)}, 0.0};
  EXPECT_EQ(fuse_vision(a, v), v);
}

TEST(VisionFusion, SingleStepMatchesRecurrence) {
  Rng rng(5);
  const Matrix v = random_matrix(rng, 7, 3);
  const double beta = 0.3;
  VisionAdapter a{knn_hyperedges(v, 2), {near_identity_layer(rng, 3)}, beta};
  const Matrix msg = conv_forward(a.hg, a.layers, v);
  const Matrix out = fuse_vision(a, v);
  for (std::size_t i = 0; i < v.size(); ++i)
    EXPECT_NEAR(out.data()[i], beta * msg.data()[i] + (1 - beta) * v.data()[i], 1e-14);
  EXPECT_THROW(validate(VisionAdapter{a.hg, {near_identity_layer(rng, 4)}, beta}, 3), ShapeError);
}

TEST(VisionFusion, RegionAdaptationCommutesWithPooling) {
  Rng rng(6);
  std::vector<Matrix> regions;
  for (int i = 0; i < 12; ++i) regions.push_back(random_matrix(rng, 1 + rng.index(4), 6));
  for (PoolMode mode : {PoolMode::max, PoolMode::mean}) {
    const Matrix pooled = pool_regions(regions, mode);
    for (double beta : {0.0, 0.25, 1.0}) {
      VisionAdapter a{knn_hyperedges(pooled, 5), {near_identity_layer(rng, 6), near_identity_layer(rng, 6)}, beta};
      const VisionTrace trace = vision_forward_trace(a, pooled);
      const Matrix lhs = pool_regions(adapt_regions(a, trace, regions), mode);
      EXPECT_LE(max_abs_diff(lhs, fuse_vision(a, pooled)), 1e-12);
    }
  }
}

TEST(Pooling, MaxAndMeanHandValues) {
  const std::vector<Matrix> regions{Matrix{{1, -2}, {3, -4}}};
  EXPECT_EQ(pool_regions(regions, PoolMode::max), (Matrix{{3, -2}}));
  EXPECT_EQ(pool_regions(regions, PoolMode::mean), (Matrix{{2, -3}}));
  EXPECT_THROW(pool_regions({Matrix(0, 2)}), ShapeError);
}

TEST(Checkpoint, RoundTrip) {
  Rng rng(7);
  Checkpoint ck;
  ck.b = 4;
  ck.c = 4;
  ck.l = 2;
  ck.alpha_mode = AlphaMode::fixed;
  ck.alpha = 0.125;
  ck.beta = 0.3;
  ck.seed = 99;
  ck.activation = Activation::identity;
  ck.knn_k = 3;
  ck.vision_knn_k = 2;
  ck.text_theta = {random_matrix(rng, 8, 8)};
  ck.vision_theta = {random_matrix(rng, 4, 4), random_matrix(rng, 4, 4)};
  ck.text_weights = {1.0, 0.5, 2.25};
  ck.vision_weights = {1e-6, 3.0};
  const auto dir = std::filesystem::temp_directory_path() / "oshg_ckpt_roundtrip";
  std::filesystem::remove_all(dir);
  save_checkpoint(ck, dir);
  const Checkpoint back = load_checkpoint(dir);
  EXPECT_EQ(back.b, ck.b);
  EXPECT_EQ(back.l, ck.l);
  EXPECT_EQ(back.alpha_mode, ck.alpha_mode);
  EXPECT_EQ(back.alpha, ck.alpha);
  EXPECT_EQ(back.beta, ck.beta);
  EXPECT_EQ(back.seed, ck.seed);
  EXPECT_EQ(back.activation, ck.activation);
  EXPECT_EQ(back.knn_k, 3u);
  EXPECT_EQ(back.vision_knn_k, 2u);
  EXPECT_EQ(back.text_theta, ck.text_theta);
  EXPECT_EQ(back.vision_theta, ck.vision_theta);
  EXPECT_EQ(back.text_weights, ck.text_weights);
  EXPECT_EQ(back.vision_weights, ck.vision_weights);
  std::filesystem::remove(dir / "manifest.json");
  EXPECT_THROW(load_checkpoint(dir), std::exception);
}
