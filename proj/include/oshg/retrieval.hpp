#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oshg/error.hpp"
#include "oshg/matrix.hpp"

namespace oshg {

/// Region features of one image, used as a visual codebook.
struct ImageCodebook {
  std::string image_id;
  Matrix regions;  // K_regions x d
};

struct HardAssignment {
  Vector weights;  // one-hot ω
  std::size_t argmax_idx = 0;
};

/// ω_j = 1 at the most similar codeword (lowest index on ties), 0 elsewhere.
inline HardAssignment hard_assign(std::span<const double> sim_row) {
  if (sim_row.empty()) throw ShapeError("hard_assign: empty similarity row");
  std::size_t best = 0;
  for (std::size_t j = 1; j < sim_row.size(); ++j)
    if (sim_row[j] > sim_row[best]) best = j;
  HardAssignment out{Vector(sim_row.size(), 0.0), best};
  out.weights[best] = 1.0;
  return out;
}

inline void check_word_dims(std::span<const double> t, const ImageCodebook& codebook) {
  if (codebook.regions.rows() == 0) throw ShapeError("codebook has no regions");
  if (t.size() != codebook.regions.cols()) {
    throw ShapeError("word dim " + std::to_string(t.size()) + " != codebook dim " +
                     std::to_string(codebook.regions.cols()));
  }
}

/// s(t, V) = max_j cos(t, ν_j).
inline double word_similarity(std::span<const double> t, const ImageCodebook& codebook) {
  check_word_dims(t, codebook);
  double best = cosine(t, codebook.regions.row(0));
  for (std::size_t j = 1; j < codebook.regions.rows(); ++j)
    best = std::max(best, cosine(t, codebook.regions.row(j)));
  return best;
}

/// The same similarity through the codebook reconstruction t̂ = Σ_j ω_j ν_j
/// with hard weights ω, then cos(t, t̂).
inline double word_similarity_weighted(std::span<const double> t, const ImageCodebook& codebook) {
  check_word_dims(t, codebook);
  const Matrix& v = codebook.regions;
  Vector sims(v.rows());
  for (std::size_t j = 0; j < v.rows(); ++j) sims[j] = cosine(t, v.row(j));
  const auto omega = hard_assign(sims).weights;
  Vector t_hat(v.cols(), 0.0);
  for (std::size_t j = 0; j < v.rows(); ++j)
    for (std::size_t c = 0; c < v.cols(); ++c) t_hat[c] += omega[j] * v(j, c);
  return cosine(t, t_hat);
}

enum class SentenceAggregation { mean, sum, max, logsumexp };

inline SentenceAggregation parse_aggregation(const std::string& s) {
  if (s == "mean") return SentenceAggregation::mean;
  if (s == "sum") return SentenceAggregation::sum;
  if (s == "max") return SentenceAggregation::max;
  if (s == "logsumexp") return SentenceAggregation::logsumexp;
  throw DomainError("unknown sentence aggregation '" + s + "'");
}

/// Aggregates per-word similarities over the L word rows (mean by default).
inline double sentence_similarity(const Matrix& words, const ImageCodebook& codebook,
                                  SentenceAggregation agg = SentenceAggregation::mean) {
  if (words.rows() == 0) throw ShapeError("sentence_similarity: no words");
  Vector s(words.rows());
  for (std::size_t i = 0; i < words.rows(); ++i) s[i] = word_similarity(words.row(i), codebook);
  switch (agg) {
    case SentenceAggregation::sum: {
      double acc = 0.0;
      for (double v : s) acc += v;
      return acc;
    }
    case SentenceAggregation::max:
      return *std::max_element(s.begin(), s.end());
    case SentenceAggregation::logsumexp: {
      const double m = *std::max_element(s.begin(), s.end());
      double acc = 0.0;
      for (double v : s) acc += std::exp(v - m);
      return m + std::log(acc);
    }
    case SentenceAggregation::mean:
    default: {
      double acc = 0.0;
      for (double v : s) acc += v;
      return acc / static_cast<double>(s.size());
    }
  }
}

/// Image x caption score matrix where each caption is a single joint-space
/// vector and each image a region codebook: S[i][c] = max_j cos(t_c, ν_ij).
inline Matrix codebook_scores(const std::vector<Matrix>& regions, const Matrix& captions) {
  const Matrix unit_caps = normalize_rows(captions);
  Matrix s(regions.size(), captions.rows(), 0.0);
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].cols() != captions.cols()) {
      throw ShapeError("codebook_scores: region dim " + std::to_string(regions[i].cols()) +
                       " != caption dim " + std::to_string(captions.cols()));
    }
    const Matrix cos = matmul_nt(normalize_rows(regions[i]), unit_caps);
    auto out = s.row(i);
    for (std::size_t c = 0; c < captions.rows(); ++c) {
      double best = cos(0, c);
      for (std::size_t j = 1; j < cos.rows(); ++j) best = std::max(best, cos(j, c));
      out[c] = best;
    }
  }
  return s;
}

struct EvalReport {
  double i2t_r1 = 0, i2t_r5 = 0, i2t_r10 = 0;
  double t2i_r1 = 0, t2i_r5 = 0, t2i_r10 = 0;
  double rsum = 0;

  bool operator==(const EvalReport&) const = default;
};

/// Ranking keys used for tie-breaking: lower key wins among equal scores.
struct RankKeys {
  std::vector<std::string> images;
  std::vector<std::string> captions;
};

namespace detail {

// 0-based rank of `target` among candidates by descending score, ties to the lower key.
template <typename ScoreFn, typename LessKey>
std::size_t rank_of(std::size_t target, std::size_t n, ScoreFn score, LessKey key_less) {
  const double st = score(target);
  std::size_t rank = 0;
  for (std::size_t c = 0; c < n; ++c) {
    if (c == target) continue;
    const double sc = score(c);
    if (sc > st || (sc == st && key_less(c, target))) ++rank;
  }
  return rank;
}

}  // namespace detail

/// R@{1,5,10} both directions from an image x caption score matrix.
/// i→t counts a hit when any ground-truth caption lands in the top k;
/// t→i when the caption's image does.
inline EvalReport evaluate_scores(const Matrix& scores, std::span<const std::size_t> caption_to_image,
                                  const RankKeys* keys = nullptr) {
  const std::size_t n_img = scores.rows();
  const std::size_t n_cap = scores.cols();
  if (caption_to_image.size() != n_cap) {
    throw ShapeError("evaluate: caption_to_image has " + std::to_string(caption_to_image.size()) +
                     " entries for " + std::to_string(n_cap) + " captions");
  }
  if (n_img == 0 || n_cap == 0) throw DomainError("evaluate: empty score matrix");
  std::vector<std::vector<std::size_t>> gt(n_img);
  for (std::size_t c = 0; c < n_cap; ++c) {
    if (caption_to_image[c] >= n_img) {
      throw DomainError("evaluate: caption " + std::to_string(c) + " maps to missing image " +
                        std::to_string(caption_to_image[c]));
    }
    gt[caption_to_image[c]].push_back(c);
  }
  auto cap_less = [&](std::size_t a, std::size_t b) {
    return keys ? keys->captions[a] < keys->captions[b] : a < b;
  };
  auto img_less = [&](std::size_t a, std::size_t b) {
    return keys ? keys->images[a] < keys->images[b] : a < b;
  };

  std::size_t i2t[3] = {0, 0, 0};
  std::size_t n_i2t = 0;
  for (std::size_t i = 0; i < n_img; ++i) {
    if (gt[i].empty()) continue;
    ++n_i2t;
    std::size_t best = n_cap;
    for (auto c : gt[i]) {
      best = std::min(best, detail::rank_of(
                                c, n_cap, [&](std::size_t x) { return scores(i, x); }, cap_less));
    }
    i2t[0] += best < 1;
    i2t[1] += best < 5;
    i2t[2] += best < 10;
  }

  std::size_t t2i[3] = {0, 0, 0};
  for (std::size_t c = 0; c < n_cap; ++c) {
    const std::size_t r = detail::rank_of(
        caption_to_image[c], n_img, [&](std::size_t x) { return scores(x, c); }, img_less);
    t2i[0] += r < 1;
    t2i[1] += r < 5;
    t2i[2] += r < 10;
  }

  auto pct = [](std::size_t hits, std::size_t total) {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(total);
  };
  EvalReport rep;
  rep.i2t_r1 = pct(i2t[0], n_i2t);
  rep.i2t_r5 = pct(i2t[1], n_i2t);
  rep.i2t_r10 = pct(i2t[2], n_i2t);
  rep.t2i_r1 = pct(t2i[0], n_cap);
  rep.t2i_r5 = pct(t2i[1], n_cap);
  rep.t2i_r10 = pct(t2i[2], n_cap);
  rep.rsum = rep.i2t_r1 + rep.i2t_r5 + rep.i2t_r10 + rep.t2i_r1 + rep.t2i_r5 + rep.t2i_r10;
  return rep;
}

inline EvalReport evaluate(const std::vector<ImageCodebook>& images, const Matrix& captions,
                           std::span<const std::size_t> caption_to_image) {
  std::vector<Matrix> regions;
  regions.reserve(images.size());
  for (const auto& im : images) regions.push_back(im.regions);
  return evaluate_scores(codebook_scores(regions, captions), caption_to_image);
}

/// Pooled form: one vector per image, scores are plain cosines.
inline EvalReport evaluate(const Matrix& pooled_images, const Matrix& captions,
                           std::span<const std::size_t> caption_to_image) {
  return evaluate_scores(cosine_similarity_matrix(pooled_images, captions), caption_to_image);
}

inline nlohmann::json to_json(const EvalReport& r) {
  return nlohmann::json{{"i2t_r1", r.i2t_r1}, {"i2t_r5", r.i2t_r5}, {"i2t_r10", r.i2t_r10},
                        {"t2i_r1", r.t2i_r1}, {"t2i_r5", r.t2i_r5}, {"t2i_r10", r.t2i_r10},
                        {"rsum", r.rsum}};
}

/// Aligned table in the column order I→T R@1/5/10, T→I R@1/5/10, RSUM.
inline std::string format_table(const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s %7s %7s %7s %7s %7s %7s %8s\n", "", "I->T", "", "", "T->I",
                "", "", "");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-22s %7s %7s %7s %7s %7s %7s %8s\n", "model", "R@1", "R@5",
                "R@10", "R@1", "R@5", "R@10", "RSUM");
  out += buf;
  for (const auto& [name, r] : rows) {
    std::snprintf(buf, sizeof buf, "%-22s %7.2f %7.2f %7.2f %7.2f %7.2f %7.2f %8.2f\n",
                  name.c_str(), r.i2t_r1, r.i2t_r5, r.i2t_r10, r.t2i_r1, r.t2i_r5, r.t2i_r10,
                  r.rsum);
    out += buf;
  }
  return out;
}

}  // namespace oshg
