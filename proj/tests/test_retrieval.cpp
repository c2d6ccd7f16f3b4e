#include <gtest/gtest.h>

#include <cmath>

#include "oshg/retrieval.hpp"
#include "oshg/rng.hpp"

using namespace oshg;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

}  // namespace

TEST(HardAssignment, OneHotAtLowestMaxIndex) {
  const auto a = hard_assign(std::vector<double>{0.1, 0.9, 0.9, 0.2});
  EXPECT_EQ(a.argmax_idx, 1u);
  EXPECT_EQ(a.weights, (Vector{0, 1, 0, 0}));
  EXPECT_THROW(hard_assign(std::vector<double>{}), ShapeError);
}

TEST(HardAssignment, ReconstructionEqualsMaxCosine) {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const ImageCodebook cb{"im", random_matrix(rng, 1 + rng.index(6), 5)};
    const Matrix wm = random_matrix(rng, 1, 5);
    const Vector w(wm.data().begin(), wm.data().end());
    EXPECT_NEAR(word_similarity(w, cb), word_similarity_weighted(w, cb), 1e-12);
  }
  // Duplicate regions tie exactly.
  const ImageCodebook dup{"im", Matrix{{1, 0}, {1, 0}, {0, 1}}};
  EXPECT_EQ(word_similarity(Vector{2, 0}, dup), word_similarity_weighted(Vector{2, 0}, dup));
  EXPECT_THROW(word_similarity(Vector{1, 2, 3}, dup), ShapeError);
}

TEST(SentenceSimilarity, Aggregations) {
  const ImageCodebook cb{"im", Matrix{{1, 0}, {0, 1}}};
  const Matrix words{{1, 0}, {1, 1}};
  const double s1 = 1.0, s2 = std::sqrt(0.5);
  EXPECT_NEAR(sentence_similarity(words, cb), (s1 + s2) / 2, 1e-12);
  EXPECT_NEAR(sentence_similarity(words, cb, SentenceAggregation::sum), s1 + s2, 1e-12);
  EXPECT_NEAR(sentence_similarity(words, cb, SentenceAggregation::max), s1, 1e-12);
  EXPECT_NEAR(sentence_similarity(words, cb, SentenceAggregation::logsumexp),
              std::log(std::exp(s1) + std::exp(s2)), 1e-12);
  EXPECT_THROW(parse_aggregation("median"), DomainError);
}

TEST(Recall, ThreeByThreeHandExample) {
  // Image-major scores; caption c belongs to image c.
  const Matrix s{{0.9, 0.1, 0.8},
                 {0.2, 0.3, 0.4},
                 {0.7, 0.6, 0.5}};
  const std::vector<std::size_t> gt{0, 1, 2};
  const auto r = evaluate_scores(s, gt);
  // i→t ranks: im0 → cap0 first; im1 → cap1 second; im2 → cap2 third.
  EXPECT_NEAR(r.i2t_r1, 100.0 / 3, 1e-9);
  EXPECT_NEAR(r.i2t_r5, 100.0, 1e-9);
  // t→i: cap0 → im0 first; cap1 → im1 second; cap2 → im2 second.
  EXPECT_NEAR(r.t2i_r1, 100.0 / 3, 1e-9);
  EXPECT_NEAR(r.t2i_r10, 100.0, 1e-9);
  EXPECT_NEAR(r.rsum, 100.0 / 3 + 100 + 100 + 100.0 / 3 + 100 + 100, 1e-9);
}

TEST(Recall, TwoOfThreeHits) {
  const Matrix s{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 2.0, 1.0}};
  const auto r = evaluate_scores(s, std::vector<std::size_t>{0, 1, 2});
  EXPECT_NEAR(r.t2i_r1, 200.0 / 3, 1e-9);
}

TEST(Recall, TiesBreakTowardLowerKey) {
  const Matrix s{{0.5, 0.5}, {0.5, 0.5}};
  const std::vector<std::size_t> gt{0, 1};
  const auto r = evaluate_scores(s, gt);
  EXPECT_EQ(r.t2i_r1, 50.0);
  EXPECT_EQ(r.i2t_r1, 50.0);
  RankKeys keys{{"b", "a"}, {"y", "x"}};
  const auto rk = evaluate_scores(s, gt, &keys);
  EXPECT_EQ(rk.t2i_r1, 50.0);
}

TEST(Recall, AnyGroundTruthCaptionCounts) {
  const Matrix s{{0.1, 0.95, 0.9}, {0.8, 0.3, 0.1}};
  const std::vector<std::size_t> gt{0, 0, 1};
  const auto r = evaluate_scores(s, gt);
  EXPECT_EQ(r.i2t_r1, 50.0);
  EXPECT_THROW(evaluate_scores(s, std::vector<std::size_t>{0, 0}), ShapeError);
  EXPECT_THROW(evaluate_scores(s, std::vector<std::size_t>{0, 0, 5}), DomainError);
}

TEST(Recall, CodebookScoresAreMaxCosine) {
  Rng rng(2);
  std::vector<Matrix> regions{random_matrix(rng, 3, 4), random_matrix(rng, 2, 4)};
  const Matrix caps = random_matrix(rng, 5, 4);
  const Matrix s = codebook_scores(regions, caps);
  for (std::size_t i = 0; i < regions.size(); ++i)
    for (std::size_t c = 0; c < caps.rows(); ++c)
      EXPECT_NEAR(s(i, c), word_similarity(caps.row(c), ImageCodebook{"", regions[i]}), 1e-12);
}

TEST(Recall, TableHasHeaderAndRows) {
  const std::string t = format_table({{"base", EvalReport{}}, {"ours", EvalReport{}}});
  EXPECT_NE(t.find("RSUM"), std::string::npos);
  EXPECT_NE(t.find("ours"), std::string::npos);
}
