#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oshg/ablation.hpp"
#include "oshg/adapter.hpp"
#include "oshg/dataio.hpp"
#include "oshg/error.hpp"
#include "oshg/hgconv.hpp"
#include "oshg/hypergraph.hpp"
#include "oshg/infotheory.hpp"
#include "oshg/log.hpp"
#include "oshg/matrix.hpp"
#include "oshg/retrieval.hpp"
#include "oshg/rng.hpp"

namespace oshg {

// ---------------------------------------------------------------------------
// Bidirectional triplet loss with in-batch hardest negatives
// ---------------------------------------------------------------------------

struct TripletResult {
  double loss = 0.0;
  Matrix d_sim;                                 // ∂L/∂S
  std::vector<std::size_t> hardest_caption;     // per caption: hardest negative caption of its image
  std::vector<std::size_t> hardest_image;       // per caption: hardest negative image
  std::vector<std::uint8_t> active;             // per caption: bit0 caption hinge, bit1 image hinge
};

/// Σ_c [m - s(i,c) + max_{c'∉i} s(i,c')]₊ + [m - s(i,c) + max_{i'≠i} s(i',c)]₊
/// over positive pairs (i = positives[c]). Ties pick the lowest index; a hinge
/// exactly at zero is treated as inactive.
inline TripletResult triplet_loss_grad(const Matrix& sim, std::span<const std::size_t> positives,
                                       double margin) {
  const std::size_t n_img = sim.rows();
  const std::size_t n_cap = sim.cols();
  if (n_img < 2 || n_cap < 2) throw DomainError("triplet_loss: need at least 2 images and 2 captions");
  if (positives.size() != n_cap) throw ShapeError("triplet_loss: positives length != caption count");
  std::vector<std::size_t> n_pos(n_img, 0);
  for (auto i : positives) {
    if (i >= n_img) throw DomainError("triplet_loss: positive image out of range");
    ++n_pos[i];
  }
  for (std::size_t i = 0; i < n_img; ++i) {
    if (n_pos[i] == 0) throw DomainError("triplet_loss: image " + std::to_string(i) +
                                         " has no positive caption");
    if (n_pos[i] == n_cap) throw DomainError("triplet_loss: batch without negative captions");
  }

  // Hardest negative caption per image row.
  std::vector<std::size_t> row_hardest(n_img, n_cap);
  for (std::size_t i = 0; i < n_img; ++i) {
    for (std::size_t c = 0; c < n_cap; ++c) {
      if (positives[c] == i) continue;
      if (row_hardest[i] == n_cap || sim(i, c) > sim(i, row_hardest[i])) row_hardest[i] = c;
    }
  }

  TripletResult out;
  out.d_sim = Matrix(n_img, n_cap);
  out.hardest_caption.resize(n_cap);
  out.hardest_image.resize(n_cap);
  out.active.assign(n_cap, 0);
  for (std::size_t c = 0; c < n_cap; ++c) {
    const std::size_t i = positives[c];
    const double s_pos = sim(i, c);
    const std::size_t neg_c = row_hardest[i];
    std::size_t neg_i = n_img;
    for (std::size_t r = 0; r < n_img; ++r) {
      if (r == i) continue;
      if (neg_i == n_img || sim(r, c) > sim(neg_i, c)) neg_i = r;
    }
    out.hardest_caption[c] = neg_c;
    out.hardest_image[c] = neg_i;
    const double h1 = margin - s_pos + sim(i, neg_c);
    const double h2 = margin - s_pos + sim(neg_i, c);
    if (h1 > 0.0) {
      out.loss += h1;
      out.d_sim(i, c) -= 1.0;
      out.d_sim(i, neg_c) += 1.0;
      out.active[c] |= 1;
    }
    if (h2 > 0.0) {
      out.loss += h2;
      out.d_sim(i, c) -= 1.0;
      out.d_sim(neg_i, c) += 1.0;
      out.active[c] |= 2;
    }
  }
  for (double v : sim.data())
    if (!std::isfinite(v)) out.loss = std::numeric_limits<double>::quiet_NaN();
  return out;
}

inline double triplet_loss(const Matrix& sim, std::span<const std::size_t> positives, double margin) {
  return triplet_loss_grad(sim, positives, margin).loss;
}

/// ‖∂L/∂V - ∂L/∂T‖_F over the shared joint space.
inline double grad_deviation(const Matrix& d_v, const Matrix& d_t) {
  if (d_v.rows() != d_t.rows() || d_v.cols() != d_t.cols()) {
    throw ShapeError("grad_deviation: " + d_v.shape_string() + " vs " + d_t.shape_string());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < d_v.size(); ++i) {
    const double diff = d_v.data()[i] - d_t.data()[i];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct TrainConfig {
  double margin = 0.2;
  double lr = 0.05;
  std::size_t epochs = 10;
  std::size_t batch = 32;  // images per batch
  std::uint64_t seed = 0;
  AlphaMode alpha_mode = AlphaMode::nmi;
  double alpha = 0.2;              // used when alpha_mode == fixed
  std::optional<double> beta;      // unset: β follows α
  std::size_t l = 4;
  std::size_t knn_k = 0;           // 0: auto (max(b, c), clamped)
  std::size_t vision_knn_k = 0;    // 0: min(d, n_images - 1)
  KernelKind kernel = KernelKind::hypergraph;
  Activation activation = Activation::relu;
  std::size_t text_layers = 1;
  std::size_t vision_layers = 1;
  double init_gain = 0.1;
  std::size_t bins = kDefaultBins;
  PoolMode pool = PoolMode::max;
  bool adapter = true;
  std::size_t eval_every = 1;  // 0: evaluate after the last epoch only
};

inline void validate(const TrainConfig& cfg) {
  if (!(cfg.margin > 0.0)) throw DomainError("margin must be > 0");
  if (!(cfg.lr > 0.0)) throw DomainError("lr must be > 0");
  if (cfg.epochs < 1) throw DomainError("epochs must be >= 1");
  if (cfg.batch < 2) throw DomainError("batch must hold at least 2 images");
  if (cfg.l < 1) throw DomainError("l must be >= 1");
  if (cfg.alpha_mode == AlphaMode::fixed) require_unit_interval(cfg.alpha, "alpha");
  if (cfg.beta) require_unit_interval(*cfg.beta, "beta");
  if (cfg.text_layers < 1 || cfg.vision_layers < 1) throw DomainError("layer counts must be >= 1");
}

/// Truncates or zero-pads the synonym slots to exactly l.
inline std::vector<Matrix> resize_slots(std::vector<Matrix> slots, std::size_t l, std::size_t n,
                                        std::size_t c) {
  slots.resize(l, Matrix(n, c));
  return slots;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct ModelGrads {
  std::vector<Matrix> text_theta;
  std::vector<double> text_weights;
  std::vector<Matrix> vision_theta;
  std::vector<double> vision_weights;
};

struct BatchResult {
  double loss = 0.0;
  double grad_dev = 0.0;
  ModelGrads grads;
  Matrix d_text_final;    // batch captions x b
  Matrix d_vision_final;  // batch images x d (summed over regions)
};

struct Forward {
  ConvTrace text_trace;  // hypergraph kernel only
  Matrix kernel_out;     // n_captions x (b + c), pre-ψ
  Matrix text_final;     // n_captions x b
  VisionTrace vision_trace;
  std::vector<Matrix> regions_final;
};

inline constexpr double kMinEdgeWeight = 1e-6;

/// Text and vision adapters wired to one corpus, with manual reverse mode.
class Model {
 public:
  static Model build(const Corpus& corpus, const TrainConfig& cfg) {
    validate(cfg);
    if (corpus.n_captions() < 2 || corpus.n_images() < 2) {
      throw DomainError("model: need at least 2 images and 2 captions");
    }
    if (corpus.b() != corpus.d()) {
      throw ShapeError("caption dim b=" + std::to_string(corpus.b()) +
                       " must equal region dim d=" + std::to_string(corpus.d()));
    }
    Model m;
    m.kernel_ = cfg.kernel;
    m.adapter_on_ = cfg.adapter;
    m.activation_ = cfg.activation;
    m.b_ = corpus.b();
    m.c_ = corpus.c();
    m.l_ = cfg.l;
    m.t_dataset_ = corpus.caption_emb;
    m.regions_ = corpus.regions;
    m.caption_to_image_ = corpus.caption_to_image;
    m.image_captions_.assign(corpus.n_images(), {});
    for (std::size_t c = 0; c < m.caption_to_image_.size(); ++c)
      m.image_captions_[m.caption_to_image_[c]].push_back(c);

    const auto slots = resize_slots(corpus.synonym_slots, cfg.l, corpus.n_captions(), corpus.c());
    m.fused_ = extend_matrix(m.t_dataset_, slots);
    const std::size_t n_cap = corpus.n_captions();
    m.knn_k_ = cfg.knn_k ? std::min(cfg.knn_k, n_cap - 1) : auto_k(m.b_, m.c_, n_cap);

    Rng rng(cfg.seed);
    const std::size_t dim = m.b_ + m.c_;
    switch (cfg.kernel) {
      case KernelKind::hypergraph:
        m.text_hg_ = build_text_hypergraph(m.fused_, slots, m.knn_k_);
        for (std::size_t k = 0; k < cfg.text_layers; ++k)
          m.text_layers_.push_back(near_identity_layer(rng, dim, cfg.init_gain, cfg.activation));
        break;
      case KernelKind::pairwise_graph:
        m.pair_propagated_ = PairwiseGraph::from_knn(m.fused_, m.knn_k_).apply(m.fused_);
        m.text_layers_.push_back(
            {Matrix::identity(dim) + glorot_init(rng, dim, dim, cfg.init_gain), Activation::identity});
        break;
      case KernelKind::avg_pool:
      case KernelKind::max_pool:
        m.pooled_kernel_out_ = baseline_adapt(cfg.kernel, m.fused_, m.knn_k_);
        break;
    }

    m.pooled_ = pool_regions(m.regions_, cfg.pool);
    const std::size_t n_img = corpus.n_images();
    const std::size_t d = corpus.d();
    const std::size_t vk = cfg.vision_knn_k ? std::min(cfg.vision_knn_k, n_img - 1)
                                            : std::min(d, n_img - 1);
    m.vision_knn_k_ = vk;
    m.vision_hg_ = knn_hyperedges(m.pooled_, vk);
    for (std::size_t k = 0; k < cfg.vision_layers; ++k)
      m.vision_layers_.push_back(near_identity_layer(rng, d, cfg.init_gain, cfg.activation));

    m.alpha_ = cfg.alpha_mode == AlphaMode::fixed ? cfg.alpha : 0.0;
    m.beta_ = cfg.beta.value_or(m.alpha_);
    if (cfg.alpha_mode == AlphaMode::nmi) m.refresh_alpha(cfg);
    return m;
  }

  // --- accessors --------------------------------------------------------
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  void set_alpha(double a) { require_unit_interval(a, "alpha"); alpha_ = a; }
  void set_beta(double b) { require_unit_interval(b, "beta"); beta_ = b; }
  bool adapter_on() const noexcept { return adapter_on_; }
  KernelKind kernel() const noexcept { return kernel_; }
  std::size_t knn_k() const noexcept { return knn_k_; }
  std::size_t n_images() const noexcept { return regions_.size(); }
  std::size_t n_captions() const noexcept { return t_dataset_.rows(); }
  const Matrix& t_dataset() const noexcept { return t_dataset_; }
  const Matrix& fused() const noexcept { return fused_; }
  const Hypergraph& text_graph() const noexcept { return text_hg_; }
  const Hypergraph& vision_graph() const noexcept { return vision_hg_; }
  std::vector<ConvLayer>& text_layers() noexcept { return text_layers_; }
  std::vector<ConvLayer>& vision_layers() noexcept { return vision_layers_; }
  const std::vector<ConvLayer>& text_layers() const noexcept { return text_layers_; }
  const std::vector<ConvLayer>& vision_layers() const noexcept { return vision_layers_; }
  std::vector<double>& text_weights() noexcept { return text_hg_.mutable_weights(); }
  std::vector<double>& vision_weights() noexcept { return vision_hg_.mutable_weights(); }
  const std::vector<std::vector<std::size_t>>& image_captions() const noexcept {
    return image_captions_;
  }

  TextAdapter text_adapter() const {
    return {text_hg_, text_layers_, b_, c_, AlphaMode::fixed, alpha_};
  }
  VisionAdapter vision_adapter() const { return {vision_hg_, vision_layers_, beta_}; }

  /// α = NMI(T_Dataset, ψ(kernel output)); β follows α unless pinned.
  void refresh_alpha(const TrainConfig& cfg) {
    if (cfg.alpha_mode != AlphaMode::nmi) return;
    const Matrix psi = project_psi(kernel_output(), b_);
    alpha_ = nmi_alpha(t_dataset_, psi, cfg.bins);
    if (!cfg.beta) beta_ = alpha_;
  }

  // --- forward ------------------------------------------------------------
  Matrix kernel_output() const {
    switch (kernel_) {
      case KernelKind::hypergraph:
        return conv_forward(text_hg_, text_layers_, fused_, PropagationMode::sparse);
      case KernelKind::pairwise_graph:
        return matmul(pair_propagated_, text_layers_.front().theta);
      default:
        return pooled_kernel_out_;
    }
  }

  Forward forward() const {
    Forward fw;
    if (!adapter_on_) {
      fw.text_final = t_dataset_;
      fw.regions_final = regions_;
      return fw;
    }
    if (alpha_ < 1.0) {
      if (kernel_ == KernelKind::hypergraph) {
        fw.text_trace = conv_forward_trace(text_hg_, text_layers_, fused_, PropagationMode::sparse);
        fw.kernel_out = fw.text_trace.output;
      } else {
        fw.kernel_out = kernel_output();
      }
      fw.text_final = blend_text(fw.kernel_out, t_dataset_, alpha_);
    } else {
      fw.text_final = t_dataset_;
    }
    fw.vision_trace = vision_forward_trace(vision_adapter(), pooled_);
    fw.regions_final = adapt_regions(vision_adapter(), fw.vision_trace, regions_);
    return fw;
  }

  Matrix scores() const {
    const Forward fw = forward();
    return codebook_scores(fw.regions_final, fw.text_final);
  }

  EvalReport evaluate() const { return evaluate_scores(scores(), caption_to_image_); }

  // --- loss and gradients -------------------------------------------------

  /// Captions of the batch images, grouped by image, plus their local positives.
  void batch_captions(std::span<const std::size_t> images, std::vector<std::size_t>& caps,
                      std::vector<std::size_t>& positives) const {
    caps.clear();
    positives.clear();
    for (std::size_t li = 0; li < images.size(); ++li) {
      for (auto c : image_captions_.at(images[li])) {
        caps.push_back(c);
        positives.push_back(li);
      }
    }
  }

  BatchResult loss_and_grads(std::span<const std::size_t> images, double margin,
                             bool with_grads = true) const {
    const Forward fw = forward();
    std::vector<std::size_t> caps, positives;
    batch_captions(images, caps, positives);
    const std::size_t n_b = images.size();
    const std::size_t n_c = caps.size();

    Matrix sim(n_b, n_c);
    std::vector<std::size_t> best_region(n_b * n_c, 0);
    similarity_forward(fw, images, caps, sim, best_region);
    const TripletResult tr = triplet_loss_grad(sim, positives, margin);

    BatchResult res;
    res.loss = tr.loss;
    if (!with_grads) return res;

    const std::size_t d = b_;
    res.d_text_final = Matrix(n_c, d);
    std::vector<Matrix> d_regions(n_b, Matrix(regions_.front().rows(), d));
    for (std::size_t i = 0; i < n_b; ++i) {
      const Matrix& reg = fw.regions_final[images[i]];
      for (std::size_t c = 0; c < n_c; ++c) {
        const double g = tr.d_sim(i, c);
        if (g == 0.0) continue;
        const std::size_t j = best_region[i * n_c + c];
        cosine_backward(fw.text_final.row(caps[c]), reg.row(j), g, res.d_text_final.row(c),
                        d_regions[i].row(j));
      }
    }

    // ∇_dev on per-image aggregates of the two joint-space gradients.
    res.d_vision_final = Matrix(n_b, d);
    Matrix d_text_per_image(n_b, d);
    for (std::size_t i = 0; i < n_b; ++i)
      for (std::size_t r = 0; r < d_regions[i].rows(); ++r)
        for (std::size_t k = 0; k < d; ++k) res.d_vision_final(i, k) += d_regions[i](r, k);
    for (std::size_t c = 0; c < n_c; ++c)
      for (std::size_t k = 0; k < d; ++k) d_text_per_image(positives[c], k) += res.d_text_final(c, k);
    res.grad_dev = grad_deviation(res.d_vision_final, d_text_per_image);

    res.grads = zero_grads();
    if (!adapter_on_) return res;
    text_backward(fw, caps, res.d_text_final, res.grads);
    vision_backward(fw, images, res.d_vision_final, res.grads);
    return res;
  }

  /// Discrete branch choices of the forward pass (ReLU masks, region argmaxes,
  /// hardest negatives, active hinges). Equal signatures on both sides of a
  /// perturbation mean no kink was crossed.
  std::vector<std::uint32_t> branch_signature(std::span<const std::size_t> images,
                                              double margin) const {
    const Forward fw = forward();
    std::vector<std::uint32_t> sig;
    auto push_mask = [&](const Matrix& z) {
      for (double v : z.data()) sig.push_back(v > 0.0);
    };
    for (const auto& z : fw.text_trace.pre) push_mask(z);
    for (const auto& msg : fw.vision_trace.messages)
      for (const auto& z : msg.pre) push_mask(z);
    std::vector<std::size_t> caps, positives;
    batch_captions(images, caps, positives);
    Matrix sim(images.size(), caps.size());
    std::vector<std::size_t> best_region(images.size() * caps.size(), 0);
    similarity_forward(fw, images, caps, sim, best_region);
    for (auto j : best_region) sig.push_back(static_cast<std::uint32_t>(j));
    const TripletResult tr = triplet_loss_grad(sim, positives, margin);
    for (std::size_t c = 0; c < caps.size(); ++c) {
      sig.push_back(static_cast<std::uint32_t>(tr.hardest_caption[c]));
      sig.push_back(static_cast<std::uint32_t>(tr.hardest_image[c]));
      sig.push_back(tr.active[c]);
    }
    return sig;
  }

  ModelGrads zero_grads() const {
    ModelGrads g;
    for (const auto& l : text_layers_) g.text_theta.emplace_back(l.theta.rows(), l.theta.cols());
    g.text_weights.assign(text_hg_.n_edges(), 0.0);
    for (const auto& l : vision_layers_) g.vision_theta.emplace_back(l.theta.rows(), l.theta.cols());
    g.vision_weights.assign(vision_hg_.n_edges(), 0.0);
    return g;
  }

  /// Plain SGD step; hyperedge weights are kept ≥ 1e-6.
  void apply_sgd(const ModelGrads& g, double lr) {
    for (std::size_t k = 0; k < text_layers_.size() && k < g.text_theta.size(); ++k)
      text_layers_[k].theta -= g.text_theta[k] * lr;
    for (std::size_t k = 0; k < vision_layers_.size() && k < g.vision_theta.size(); ++k)
      vision_layers_[k].theta -= g.vision_theta[k] * lr;
    auto step = [lr](std::vector<double>& w, const std::vector<double>& dw) {
      for (std::size_t e = 0; e < w.size() && e < dw.size(); ++e)
        w[e] = std::max(kMinEdgeWeight, w[e] - lr * dw[e]);
    };
    step(text_hg_.mutable_weights(), g.text_weights);
    step(vision_hg_.mutable_weights(), g.vision_weights);
  }

  Checkpoint checkpoint(const TrainConfig& cfg) const {
    Checkpoint ck;
    ck.b = b_;
    ck.c = c_;
    ck.l = l_;
    ck.kernel = to_string(kernel_);
    ck.alpha_mode = cfg.alpha_mode;
    ck.alpha = alpha_;
    ck.beta = beta_;
    ck.seed = cfg.seed;
    ck.activation = activation_;
    ck.knn_k = knn_k_;
    ck.vision_knn_k = vision_knn_k_;
    for (const auto& l : text_layers_) ck.text_theta.push_back(l.theta);
    for (const auto& l : vision_layers_) ck.vision_theta.push_back(l.theta);
    ck.text_weights = text_hg_.weights();
    ck.vision_weights = vision_hg_.weights();
    return ck;
  }

  /// Rebuilds graphs from the corpus and installs saved parameters.
  static Model from_checkpoint(const Corpus& corpus, const Checkpoint& ck, TrainConfig cfg = {}) {
    cfg.kernel = parse_kernel(ck.kernel);
    cfg.activation = ck.activation;
    cfg.l = ck.l;
    cfg.knn_k = ck.knn_k;
    cfg.vision_knn_k = ck.vision_knn_k;
    cfg.alpha_mode = AlphaMode::fixed;
    cfg.alpha = ck.alpha;
    cfg.beta = ck.beta;
    cfg.text_layers = std::max<std::size_t>(1, ck.text_theta.size());
    cfg.vision_layers = std::max<std::size_t>(1, ck.vision_theta.size());
    Model m = build(corpus, cfg);
    if (ck.b != m.b_ || ck.c != m.c_) throw ShapeError("checkpoint dims do not match corpus");
    for (std::size_t k = 0; k < ck.text_theta.size() && k < m.text_layers_.size(); ++k) {
      if (ck.text_theta[k].rows() != m.text_layers_[k].theta.rows() ||
          ck.text_theta[k].cols() != m.text_layers_[k].theta.cols())
        throw ShapeError("checkpoint text theta shape mismatch");
      m.text_layers_[k].theta = ck.text_theta[k];
    }
    for (std::size_t k = 0; k < ck.vision_theta.size() && k < m.vision_layers_.size(); ++k) {
      if (ck.vision_theta[k].rows() != m.vision_layers_[k].theta.rows() ||
          ck.vision_theta[k].cols() != m.vision_layers_[k].theta.cols())
        throw ShapeError("checkpoint vision theta shape mismatch");
      m.vision_layers_[k].theta = ck.vision_theta[k];
    }
    if (!ck.text_weights.empty() || m.text_hg_.n_edges() != 0) {
      if (ck.text_weights.size() != m.text_hg_.n_edges())
        throw ShapeError("checkpoint text weight count mismatch");
      m.text_hg_.set_weights(ck.text_weights);
    }
    if (ck.vision_weights.size() != m.vision_hg_.n_edges())
      throw ShapeError("checkpoint vision weight count mismatch");
    m.vision_hg_.set_weights(ck.vision_weights);
    return m;
  }


 private:
  void similarity_forward(const Forward& fw, std::span<const std::size_t> images,
                          std::span<const std::size_t> caps, Matrix& sim,
                          std::vector<std::size_t>& best_region) const {
    for (std::size_t i = 0; i < images.size(); ++i) {
      const Matrix& reg = fw.regions_final[images[i]];
      for (std::size_t c = 0; c < caps.size(); ++c) {
        const auto t = fw.text_final.row(caps[c]);
        std::size_t best = 0;
        double s = cosine(t, reg.row(0));
        for (std::size_t j = 1; j < reg.rows(); ++j) {
          const double sj = cosine(t, reg.row(j));
          if (sj > s) {
            s = sj;
            best = j;
          }
        }
        sim(i, c) = s;
        best_region[i * caps.size() + c] = best;
      }
    }
  }

  // Accumulates g·∂cos(t, r)/∂t and g·∂cos(t, r)/∂r; zero vectors get no gradient.
  static void cosine_backward(std::span<const double> t, std::span<const double> r, double g,
                              std::span<double> dt, std::span<double> dr) {
    const double nt = norm2(t);
    const double nr = norm2(r);
    if (nt == 0.0 || nr == 0.0) return;
    const double cos = dot(t, r) / (nt * nr);
    for (std::size_t k = 0; k < t.size(); ++k) {
      dt[k] += g * (r[k] / (nt * nr) - cos * t[k] / (nt * nt));
      dr[k] += g * (t[k] / (nt * nr) - cos * r[k] / (nr * nr));
    }
  }

  void text_backward(const Forward& fw, std::span<const std::size_t> caps, const Matrix& d_final,
                     ModelGrads& g) const {
    if (alpha_ >= 1.0 || kernel_ == KernelKind::avg_pool || kernel_ == KernelKind::max_pool) return;
    Matrix d_kernel(n_captions(), b_ + c_);
    for (std::size_t c = 0; c < caps.size(); ++c) {
      auto dst = d_kernel.row(caps[c]);
      auto src = d_final.row(c);
      for (std::size_t k = 0; k < b_; ++k) dst[k] += (1.0 - alpha_) * src[k];
    }
    if (kernel_ == KernelKind::pairwise_graph) {
      g.text_theta[0] = matmul_tn(pair_propagated_, d_kernel);
      return;
    }
    ConvGrads cg = conv_backward(text_hg_, text_layers_, fw.text_trace, d_kernel);
    g.text_theta = std::move(cg.theta);
    g.text_weights = std::move(cg.weights);
  }

  // Reverse pass of the region-level vision recurrence
  //   R^(T) = (1-β)^T R + Σ_t β (1-β)^(T-1-t) m^(t),
  //   V^(t+1) = β m^(t) + (1-β) V^(t),  m^(t) = σ(Δ V^(t) Θ^(t)).
  void vision_backward(const Forward& fw, std::span<const std::size_t> images,
                       const Matrix& d_region_sum, ModelGrads& g) const {
    if (beta_ == 0.0) return;
    const std::size_t steps = vision_layers_.size();
    const std::size_t d = pooled_.cols();
    Matrix region_grad(n_images(), d);
    for (std::size_t i = 0; i < images.size(); ++i)
      for (std::size_t k = 0; k < d; ++k) region_grad(images[i], k) += d_region_sum(i, k);

    Matrix d_state(n_images(), d);  // ∂L/∂V^(t+1) through later messages
    for (std::size_t t = steps; t-- > 0;) {
      const double direct = beta_ * std::pow(1.0 - beta_, static_cast<double>(steps - 1 - t));
      Matrix d_msg = region_grad * direct;
      if (t + 1 < steps) d_msg += d_state * beta_;
      ConvGrads cg = conv_backward(vision_hg_, {vision_layers_[t]}, fw.vision_trace.messages[t], d_msg);
      g.vision_theta[t] = std::move(cg.theta[0]);
      for (std::size_t e = 0; e < cg.weights.size(); ++e) g.vision_weights[e] += cg.weights[e];
      d_state = d_state * (1.0 - beta_) + cg.input;
    }
  }

  KernelKind kernel_ = KernelKind::hypergraph;
  bool adapter_on_ = true;
  Activation activation_ = Activation::relu;
  std::size_t b_ = 0, c_ = 0, l_ = 0, knn_k_ = 0, vision_knn_k_ = 0;
  double alpha_ = 0.2, beta_ = 0.2;
  Matrix t_dataset_, fused_;
  std::vector<Matrix> regions_;
  Matrix pooled_;
  std::vector<std::size_t> caption_to_image_;
  std::vector<std::vector<std::size_t>> image_captions_;
  Hypergraph text_hg_;
  std::vector<ConvLayer> text_layers_;
  Matrix pair_propagated_;
  Matrix pooled_kernel_out_;
  Hypergraph vision_hg_;
  std::vector<ConvLayer> vision_layers_;
};

// ---------------------------------------------------------------------------
// Finite-difference gradient verification
// ---------------------------------------------------------------------------

struct ParamBlock {
  std::string name;
  std::span<double> values;
  std::span<const double> analytic;
};

struct BlockCheck {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t nonzero = 0;  // checked coordinates with a nonzero gradient on either side
  std::size_t excluded = 0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<BlockCheck> blocks;
  double h = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  return std::abs(analytic - numeric) / scale;
}

/// Central differences on randomly sampled coordinates of each block. A
/// coordinate is kink-adjacent when `signature` differs between θ-10h and
/// θ+10h; such coordinates are skipped and counted. Sampling continues until
/// `per_block` clean coordinates with a nonzero gradient are checked or the
/// block is exhausted; coordinates where both sides are exactly zero still count
/// as checked.
inline GradCheckReport finite_diff_check(
    const std::vector<ParamBlock>& blocks, const std::function<double()>& loss,
    const std::function<std::vector<std::uint32_t>()>& signature, double h, double tol,
    std::size_t per_block, Rng& rng) {
  if (!(h >= 1e-8 && h <= 1e-4)) throw DomainError("finite_diff_check: h must lie in [1e-8, 1e-4]");
  GradCheckReport report;
  report.h = h;
  report.tolerance = tol;
  for (const auto& block : blocks) {
    if (block.values.size() != block.analytic.size()) {
      throw ShapeError("finite_diff_check: block '" + block.name + "' gradient length mismatch");
    }
    BlockCheck bc;
    bc.name = block.name;
    std::vector<std::size_t> order(block.values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(std::span<std::size_t>(order));
    for (auto idx : order) {
      if (bc.nonzero >= per_block) break;
      double& x = block.values[idx];
      const double x0 = x;
      if (signature) {
        x = x0 - 10.0 * h;
        const auto lo = signature();
        x = x0 + 10.0 * h;
        const auto hi = signature();
        x = x0;
        if (lo != hi) {
          ++bc.excluded;
          continue;
        }
      }
      x = x0 + h;
      const double lp = loss();
      x = x0 - h;
      const double lm = loss();
      x = x0;
      const double numeric = (lp - lm) / (2.0 * h);
      bc.max_rel_error = std::max(bc.max_rel_error, relative_error(block.analytic[idx], numeric));
      ++bc.checked;
      if (block.analytic[idx] != 0.0 || numeric != 0.0) ++bc.nonzero;
    }
    bc.pass = bc.max_rel_error <= tol;
    report.pass = report.pass && bc.pass;
    report.blocks.push_back(std::move(bc));
  }
  return report;
}

/// Checks Θ (text, vision) and hyperedge weights (text, vision) of a model on one batch.
inline GradCheckReport finite_diff_check(Model& model, std::span<const std::size_t> images,
                                         double margin, double h, double tol,
                                         std::size_t per_block, std::uint64_t seed,
                                         double corrupt_scale = 1.0) {
  const BatchResult base = model.loss_and_grads(images, margin);
  ModelGrads g = base.grads;
  auto scale = [corrupt_scale](std::span<double> v) {
    for (double& x : v) x *= corrupt_scale;
  };
  std::vector<ParamBlock> blocks;
  for (std::size_t k = 0; k < model.text_layers().size() && k < g.text_theta.size(); ++k) {
    scale(g.text_theta[k].data());
    blocks.push_back({"text_theta_" + std::to_string(k), model.text_layers()[k].theta.data(),
                      g.text_theta[k].data()});
  }
  for (std::size_t k = 0; k < model.vision_layers().size(); ++k) {
    scale(g.vision_theta[k].data());
    blocks.push_back({"vision_theta_" + std::to_string(k), model.vision_layers()[k].theta.data(),
                      g.vision_theta[k].data()});
  }
  if (!model.text_weights().empty()) {
    scale(g.text_weights);
    blocks.push_back({"text_weights", model.text_weights(), g.text_weights});
  }
  scale(g.vision_weights);
  blocks.push_back({"vision_weights", model.vision_weights(), g.vision_weights});

  Rng rng(seed);
  return finite_diff_check(
      blocks, [&] { return model.loss_and_grads(images, margin, false).loss; },
      [&] { return model.branch_signature(images, margin); }, h, tol, per_block, rng);
}

inline nlohmann::json to_json(const GradCheckReport& r) {
  auto blocks = nlohmann::json::array();
  for (const auto& b : r.blocks)
    blocks.push_back({{"name", b.name},
                      {"max_rel_error", b.max_rel_error},
                      {"checked", b.checked},
                      {"nonzero", b.nonzero},
                      {"excluded", b.excluded},
                      {"pass", b.pass}});
  return nlohmann::json{{"h", r.h}, {"tolerance", r.tolerance}, {"pass", r.pass}, {"blocks", blocks}};
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double rsum = 0.0;
  double grad_dev = 0.0;  // mean over the epoch's batches
  double alpha = 0.0;
  double beta = 0.0;
  EvalReport report;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> epochs;
  std::vector<double> deviation_trace;
  EvalReport initial_report;
  EvalReport final_report;
};

/// Shuffled image batches; a trailing singleton is merged into the previous batch.
inline std::vector<std::vector<std::size_t>> make_batches(std::size_t n_images, std::size_t batch,
                                                          Rng& rng) {
  std::vector<std::size_t> order(n_images);
  for (std::size_t i = 0; i < n_images; ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n_images; i += batch)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n_images, i + batch)));
  if (out.size() > 1 && out.back().size() < 2) {
    auto tail = out.back();
    out.pop_back();
    out.back().insert(out.back().end(), tail.begin(), tail.end());
  }
  return out;
}

inline TrainResult train(const TrainConfig& cfg, const Corpus& corpus,
                         const std::function<void(const EpochLog&)>& on_epoch = {}) {
  validate(cfg);
  Model model = Model::build(corpus, cfg);
  TrainResult result;
  result.initial_report = model.evaluate();
  Rng rng(mix64(cfg.seed ^ 0x5EEDBA7C4E5ULL));
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (epoch > 1) model.refresh_alpha(cfg);
    EpochLog log;
    log.epoch = epoch;
    log.alpha = model.alpha();
    log.beta = model.beta();
    const auto batches = make_batches(model.n_images(), cfg.batch, rng);
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const BatchResult br = model.loss_and_grads(batches[bi], cfg.margin);
      if (!std::isfinite(br.loss)) {
        throw RuntimeFailure("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(bi) + ": loss is not finite");
      }
      log.loss += br.loss;
      log.grad_dev += br.grad_dev;
      if (cfg.adapter) model.apply_sgd(br.grads, cfg.lr);
    }
    log.grad_dev /= static_cast<double>(batches.size());
    const bool eval_now = epoch == cfg.epochs || (cfg.eval_every && epoch % cfg.eval_every == 0);
    log.report = eval_now ? model.evaluate()
                          : (result.epochs.empty() ? result.initial_report : result.epochs.back().report);
    log.rsum = log.report.rsum;
    result.deviation_trace.push_back(log.grad_dev);
    if (on_epoch) on_epoch(log);
    result.epochs.push_back(log);
  }
  result.final_report = result.epochs.back().report;
  result.checkpoint = model.checkpoint(cfg);
  return result;
}

inline std::string format_epoch_csv(const std::vector<EpochLog>& epochs) {
  std::string out = "epoch,loss,rsum,grad_dev,alpha\n";
  for (const auto& e : epochs) {
    out += std::to_string(e.epoch) + "," + format_double(e.loss) + "," + format_double(e.rsum) +
           "," + format_double(e.grad_dev) + "," + format_double(e.alpha) + "\n";
  }
  return out;
}

}  // namespace oshg
