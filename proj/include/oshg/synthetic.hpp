#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oshg/dataio.hpp"
#include "oshg/error.hpp"
#include "oshg/matrix.hpp"
#include "oshg/retrieval.hpp"
#include "oshg/rng.hpp"
#include "oshg/training.hpp"

namespace oshg {

// Synthetic image-text corpus. Each image has a latent z ≥ 0; its regions are
// noisy copies of z, its captions noisy images of P·z where P = I + γG/√d is a
// fixed distortion standing in for the modality gap. Synonyms of a caption
// share part of that caption's noise, like paraphrases share wording.
struct SyntheticConfig {
  std::size_t n_images = 200;
  std::size_t d = 32;
  std::size_t regions = 4;
  std::size_t captions_per_image = 5;
  std::size_t l = 4;
  double region_noise = 0.6;
  double caption_noise = 0.8;
  double synonym_noise = 0.5;
  double shared_noise = 0.5;     // fraction of caption noise inherited by synonyms
  double gap = 1.0;              // γ
  double missing_rate = 0.1;     // captions that get fewer than l synonyms
  std::uint64_t seed = 1;
};

inline Corpus make_synthetic_corpus(const SyntheticConfig& cfg) {
  if (cfg.n_images < 2 || cfg.d < 1 || cfg.regions < 1 || cfg.captions_per_image < 1 || cfg.l < 1) {
    throw DomainError("synthetic corpus: sizes must be positive (and >= 2 images)");
  }
  Rng rng(cfg.seed);
  const std::size_t d = cfg.d;
  Matrix p = Matrix::identity(d);
  const double scale = cfg.gap / std::sqrt(static_cast<double>(d));
  for (double& v : p.data()) v += scale * rng.normal();

  Corpus corpus;
  const std::size_t n_cap = cfg.n_images * cfg.captions_per_image;
  corpus.caption_emb = Matrix(n_cap, d);
  corpus.synonym_slots.assign(cfg.l, Matrix(n_cap, d));
  Vector z(d), pz(d), noise(d);
  std::size_t cap = 0;
  for (std::size_t i = 0; i < cfg.n_images; ++i) {
    const std::string image_id = "img" + std::to_string(i);
    corpus.image_ids.push_back(image_id);
    for (auto& v : z) v = std::max(0.0, rng.normal());
    Matrix reg(cfg.regions, d);
    for (std::size_t r = 0; r < cfg.regions; ++r)
      for (std::size_t k = 0; k < d; ++k) reg(r, k) = std::max(0.0, z[k] + cfg.region_noise * rng.normal());
    corpus.regions.push_back(std::move(reg));
    for (std::size_t k = 0; k < d; ++k) {
      pz[k] = 0.0;
      for (std::size_t j = 0; j < d; ++j) pz[k] += p(k, j) * z[j];
    }
    for (std::size_t c = 0; c < cfg.captions_per_image; ++c, ++cap) {
      for (std::size_t k = 0; k < d; ++k) {
        noise[k] = cfg.caption_noise * rng.normal();
        corpus.caption_emb(cap, k) = pz[k] + noise[k];
      }
      std::size_t n_syn = cfg.l;
      if (rng.uniform() < cfg.missing_rate) n_syn = rng.index(cfg.l);
      CaptionRecord rec;
      rec.caption_id = image_id + "_c" + std::to_string(c);
      rec.image_id = image_id;
      rec.text = "synthetic caption " + std::to_string(c) + " of image " + std::to_string(i);
      for (std::size_t s = 0; s < n_syn; ++s) {
        auto row = corpus.synonym_slots[s].row(cap);
        for (std::size_t k = 0; k < d; ++k)
          row[k] = pz[k] + cfg.shared_noise * noise[k] + cfg.synonym_noise * rng.normal();
        rec.synonyms.push_back("paraphrase " + std::to_string(s) + " of " + rec.caption_id);
      }
      corpus.captions.push_back(std::move(rec));
      corpus.caption_to_image.push_back(i);
    }
  }
  return corpus;
}

// Small model used by the gradient check: 32 images, d = b = c = 8, l = 4,
// both adapters active, one batch of 8 images.
struct GradCheckSetup {
  double h = 1e-6;
  double tol = 1e-4;
  std::size_t per_block = 20;
  std::size_t batch_images = 8;
  double corrupt = 1.0;  // scales the analytic gradient; 2.0 must fail
};

inline GradCheckReport default_gradcheck(std::uint64_t seed, const GradCheckSetup& setup = {}) {
  SyntheticConfig data;
  data.n_images = 32;
  data.d = 8;
  data.regions = 3;
  data.captions_per_image = 3;
  data.seed = mix64(seed);
  const Corpus corpus = make_synthetic_corpus(data);
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.alpha_mode = AlphaMode::fixed;
  cfg.alpha = 0.3;
  cfg.beta = 0.4;
  cfg.epochs = 1;
  cfg.batch = setup.batch_images;
  Model model = Model::build(corpus, cfg);
  Rng rng(seed);
  std::vector<std::size_t> order(model.n_images());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  order.resize(std::min(order.size(), setup.batch_images));
  return finite_diff_check(model, order, cfg.margin, setup.h, setup.tol, setup.per_block, seed,
                           setup.corrupt);
}

// ---------------------------------------------------------------------------
// Benchmark: adapter on vs off, and ∇_dev with β=α vs β=0
// ---------------------------------------------------------------------------

struct BenchConfig {
  SyntheticConfig data;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  bool compare_beta_zero = true;
};

inline BenchConfig default_bench_config() {
  BenchConfig cfg;
  cfg.train.epochs = 50;
  cfg.train.batch = 50;
  cfg.train.lr = 0.03;
  cfg.train.alpha_mode = AlphaMode::nmi;
  cfg.train.l = 4;
  cfg.train.eval_every = 0;
  return cfg;
}

struct BenchSeedResult {
  std::uint64_t seed = 0;
  EvalReport off;
  EvalReport on;
  double alpha = 0.0;             // final-epoch α
  double grad_dev_tied = 0.0;     // final-epoch mean ∇_dev, β=α
  double grad_dev_zero = 0.0;     // final-epoch mean ∇_dev, β=0
  double seconds = 0.0;
};

struct BenchResult {
  std::vector<BenchSeedResult> seeds;
  double mean_rsum_off = 0.0;
  double mean_rsum_on = 0.0;
  double mean_delta = 0.0;
  double mean_grad_dev_tied = 0.0;
  double mean_grad_dev_zero = 0.0;
  double seconds = 0.0;
};

inline BenchResult run_bench(const BenchConfig& cfg) {
  if (cfg.seeds.empty()) throw DomainError("bench: no seeds");
  using clock = std::chrono::steady_clock;
  const auto t_all = clock::now();
  BenchResult out;
  for (auto seed : cfg.seeds) {
    const auto t0 = clock::now();
    SyntheticConfig data = cfg.data;
    data.seed = mix64(seed);
    const Corpus corpus = make_synthetic_corpus(data);

    BenchSeedResult r;
    r.seed = seed;
    TrainConfig off = cfg.train;
    off.adapter = false;
    r.off = Model::build(corpus, off).evaluate();

    TrainConfig tied = cfg.train;
    tied.seed = seed;
    tied.beta.reset();
    const TrainResult on = train(tied, corpus);
    r.on = on.final_report;
    r.alpha = on.epochs.back().alpha;
    r.grad_dev_tied = on.epochs.back().grad_dev;

    if (cfg.compare_beta_zero) {
      TrainConfig zero = tied;
      zero.beta = 0.0;
      zero.eval_every = 0;
      r.grad_dev_zero = train(zero, corpus).epochs.back().grad_dev;
    }
    r.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    out.seeds.push_back(r);
  }
  const double n = static_cast<double>(out.seeds.size());
  for (const auto& r : out.seeds) {
    out.mean_rsum_off += r.off.rsum / n;
    out.mean_rsum_on += r.on.rsum / n;
    out.mean_grad_dev_tied += r.grad_dev_tied / n;
    out.mean_grad_dev_zero += r.grad_dev_zero / n;
  }
  out.mean_delta = out.mean_rsum_on - out.mean_rsum_off;
  out.seconds = std::chrono::duration<double>(clock::now() - t_all).count();
  return out;
}

inline nlohmann::json to_json(const BenchResult& b) {
  auto seeds = nlohmann::json::array();
  for (const auto& r : b.seeds)
    seeds.push_back({{"seed", r.seed},
                     {"off", to_json(r.off)},
                     {"on", to_json(r.on)},
                     {"alpha", r.alpha},
                     {"grad_dev_tied", r.grad_dev_tied},
                     {"grad_dev_zero", r.grad_dev_zero}});
  return nlohmann::json{{"seeds", seeds},
                        {"mean_rsum_off", b.mean_rsum_off},
                        {"mean_rsum_on", b.mean_rsum_on},
                        {"mean_delta", b.mean_delta},
                        {"mean_grad_dev_tied", b.mean_grad_dev_tied},
                        {"mean_grad_dev_zero", b.mean_grad_dev_zero}};
}

}  // namespace oshg
