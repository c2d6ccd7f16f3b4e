#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oshg/dataio.hpp"
#include "oshg/error.hpp"
#include "oshg/hgconv.hpp"
#include "oshg/hypergraph.hpp"
#include "oshg/matrix.hpp"

namespace oshg {

enum class AlphaMode { fixed, nmi };

inline std::string to_string(AlphaMode m) { return m == AlphaMode::fixed ? "fixed" : "nmi"; }

inline AlphaMode parse_alpha_mode(const std::string& s) {
  if (s == "fixed") return AlphaMode::fixed;
  if (s == "nmi") return AlphaMode::nmi;
  throw DomainError("unknown alpha mode '" + s + "' (expected fixed or nmi)");
}

inline void require_unit_interval(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw DomainError(std::string(name) + "=" + std::to_string(v) + " outside [0, 1]");
  }
}

/// ψ(F) = F·A with A = [I_b 0]ᵀ, i.e. the first b columns, copied exactly.
inline Matrix project_psi(const Matrix& f, std::size_t b) {
  if (f.cols() < b) {
    throw ShapeError("project_psi: " + std::to_string(f.cols()) + " columns < b=" +
                     std::to_string(b));
  }
  return select_cols(f, 0, b);
}

struct TextAdapter {
  Hypergraph hg;                 // caption vertices
  std::vector<ConvLayer> layers; // chain starts at b + c
  std::size_t b = 0;
  std::size_t c = 0;
  AlphaMode alpha_mode = AlphaMode::fixed;
  double alpha = 0.2;
};

inline void validate(const TextAdapter& a) {
  check_layer_chain(a.layers, a.b + a.c);
  const std::size_t out = a.layers.empty() ? a.b + a.c : a.layers.back().theta.cols();
  if (out < a.b) throw ShapeError("text adapter output dim smaller than b");
}

/// (1-α)·ψ(kernel output) + α·T_Dataset, for any kernel output with ≥ b columns.
inline Matrix blend_text(const Matrix& kernel_out, const Matrix& t_dataset, double alpha) {
  require_unit_interval(alpha, "alpha");
  Matrix psi = project_psi(kernel_out, t_dataset.cols());
  if (psi.rows() != t_dataset.rows()) {
    throw ShapeError("fuse_text: " + psi.shape_string() + " vs T " + t_dataset.shape_string());
  }
  if (alpha == 1.0) return t_dataset;
  if (alpha == 0.0) return psi;
  for (std::size_t i = 0; i < psi.size(); ++i)
    psi.data()[i] = (1.0 - alpha) * psi.data()[i] + alpha * t_dataset.data()[i];
  return psi;
}

/// F_final = (1-α)·ψ(conv(F)) + α·T_Dataset.
inline Matrix fuse_text(const TextAdapter& adapter, const Matrix& t_dataset, const Matrix& f_fused,
                        double alpha) {
  require_unit_interval(alpha, "alpha");
  if (t_dataset.cols() != adapter.b || f_fused.cols() != adapter.b + adapter.c) {
    throw ShapeError("fuse_text: T " + t_dataset.shape_string() + ", F " + f_fused.shape_string() +
                     " for b=" + std::to_string(adapter.b) + ", c=" + std::to_string(adapter.c));
  }
  if (alpha == 1.0) {
    if (t_dataset.rows() != f_fused.rows()) throw ShapeError("fuse_text: row mismatch");
    return t_dataset;
  }
  return blend_text(conv_forward(adapter.hg, adapter.layers, f_fused), t_dataset, alpha);
}

struct VisionAdapter {
  Hypergraph hg;                  // image vertices
  std::vector<ConvLayer> layers;  // square Θ
  double beta = 0.2;
};

inline void validate(const VisionAdapter& a, std::size_t d) {
  require_unit_interval(a.beta, "beta");
  for (const auto& layer : a.layers) {
    if (layer.theta.rows() != d || layer.theta.cols() != d) {
      throw ShapeError("vision adapter layers must be " + std::to_string(d) + "x" +
                       std::to_string(d));
    }
  }
}

/// Per-step hypergraph messages m^(t) = σ(Δ V^(t) Θ^(t)) and states V^(t).
struct VisionTrace {
  std::vector<Matrix> states;        // V^(0..T)
  std::vector<ConvTrace> messages;   // one single-layer trace per step
};

inline VisionTrace vision_forward_trace(const VisionAdapter& adapter, const Matrix& v) {
  validate(adapter, v.cols());
  VisionTrace trace;
  trace.states.push_back(v);
  for (const auto& layer : adapter.layers) {
    const Matrix& cur = trace.states.back();
    if (adapter.beta == 0.0) {
      trace.messages.push_back({});
      trace.states.push_back(cur);
      continue;
    }
    ConvTrace msg = conv_forward_trace(adapter.hg, {layer}, cur);
    Matrix next = cur;
    for (std::size_t i = 0; i < next.size(); ++i)
      next.data()[i] = adapter.beta * msg.output.data()[i] + (1.0 - adapter.beta) * cur.data()[i];
    trace.messages.push_back(std::move(msg));
    trace.states.push_back(std::move(next));
  }
  return trace;
}

/// V^(t+1) = β·σ(Δ V^(t) Θ^(t)) + (1-β)·V^(t), one step per layer.
inline Matrix fuse_vision(const VisionAdapter& adapter, const Matrix& v) {
  return vision_forward_trace(adapter, v).states.back();
}

enum class PoolMode { max, mean };

/// One vertex vector per image: element-wise max (or mean) over its regions.
inline Matrix pool_regions(const std::vector<Matrix>& regions, PoolMode mode = PoolMode::max) {
  if (regions.empty()) return {};
  Matrix out(regions.size(), regions.front().cols());
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const Matrix& r = regions[i];
    if (r.rows() == 0 || r.cols() != out.cols()) throw ShapeError("pool_regions: bad region block");
    auto o = out.row(i);
    for (std::size_t c = 0; c < r.cols(); ++c) {
      double acc = r(0, c);
      for (std::size_t j = 1; j < r.rows(); ++j)
        acc = mode == PoolMode::max ? std::max(acc, r(j, c)) : acc + r(j, c);
      o[c] = mode == PoolMode::max ? acc : acc / static_cast<double>(r.rows());
    }
  }
  return out;
}

/// Applies the vision adapter at region level: each region of image i moves by
/// the same per-step message as the pooled vertex, so pooling the adapted
/// regions reproduces fuse_vision on the pooled vectors.
inline std::vector<Matrix> adapt_regions(const VisionAdapter& adapter, const VisionTrace& trace,
                                         const std::vector<Matrix>& regions) {
  std::vector<Matrix> out = regions;
  const double beta = adapter.beta;
  for (const auto& msg : trace.messages) {
    if (beta == 0.0) continue;
    for (std::size_t i = 0; i < out.size(); ++i) {
      auto m = msg.output.row(i);
      for (std::size_t r = 0; r < out[i].rows(); ++r) {
        auto row = out[i].row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] = beta * m[c] + (1.0 - beta) * row[c];
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints: manifest.json plus one EMB blob per Θ and per weight vector.
// ---------------------------------------------------------------------------

struct Checkpoint {
  std::size_t b = 0;
  std::size_t c = 0;
  std::size_t l = 0;
  std::string kernel = "hypergraph";
  AlphaMode alpha_mode = AlphaMode::nmi;
  double alpha = 0.2;
  double beta = 0.2;
  std::uint64_t seed = 0;
  Activation activation = Activation::relu;
  std::size_t knn_k = 0;
  std::size_t vision_knn_k = 0;
  std::vector<Matrix> text_theta;
  std::vector<Matrix> vision_theta;
  std::vector<double> text_weights;
  std::vector<double> vision_weights;
};

inline Matrix weights_as_matrix(const std::vector<double>& w) { return Matrix(w.size(), 1, w); }

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto dims = [](const std::vector<Matrix>& thetas) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& t : thetas) out.push_back({t.rows(), t.cols()});
    return out;
  };
  nlohmann::json manifest{{"b", ck.b},
                          {"c", ck.c},
                          {"l", ck.l},
                          {"kernel", ck.kernel},
                          {"alpha_mode", to_string(ck.alpha_mode)},
                          {"alpha", ck.alpha},
                          {"beta", ck.beta},
                          {"seed", ck.seed},
                          {"activation", to_string(ck.activation)},
                          {"knn_k", ck.knn_k},
                          {"vision_knn_k", ck.vision_knn_k},
                          {"text_layers", dims(ck.text_theta)},
                          {"vision_layers", dims(ck.vision_theta)},
                          {"text_weights", "text_weights.emb"},
                          {"vision_weights", "vision_weights.emb"}};
  for (std::size_t k = 0; k < ck.text_theta.size(); ++k)
    write_emb_file(dir / ("text_theta_" + std::to_string(k) + ".emb"), ck.text_theta[k]);
  for (std::size_t k = 0; k < ck.vision_theta.size(); ++k)
    write_emb_file(dir / ("vision_theta_" + std::to_string(k) + ".emb"), ck.vision_theta[k]);
  write_emb_file(dir / "text_weights.emb", weights_as_matrix(ck.text_weights));
  write_emb_file(dir / "vision_weights.emb", weights_as_matrix(ck.vision_weights));
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  Checkpoint ck;
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_file(dir / "manifest.json"));
    ck.b = m.at("b").get<std::size_t>();
    ck.c = m.at("c").get<std::size_t>();
    ck.l = m.at("l").get<std::size_t>();
    ck.kernel = m.at("kernel").get<std::string>();
    ck.alpha_mode = parse_alpha_mode(m.at("alpha_mode").get<std::string>());
    ck.alpha = m.at("alpha").get<double>();
    ck.beta = m.at("beta").get<double>();
    ck.seed = m.at("seed").get<std::uint64_t>();
    ck.activation = parse_activation(m.at("activation").get<std::string>());
    ck.knn_k = m.value("knn_k", std::size_t{0});
    ck.vision_knn_k = m.value("vision_knn_k", std::size_t{0});
    const auto n_text = m.at("text_layers").size();
    const auto n_vision = m.at("vision_layers").size();
    for (std::size_t k = 0; k < n_text; ++k)
      ck.text_theta.push_back(parse_emb_file(dir / ("text_theta_" + std::to_string(k) + ".emb")));
    for (std::size_t k = 0; k < n_vision; ++k)
      ck.vision_theta.push_back(
          parse_emb_file(dir / ("vision_theta_" + std::to_string(k) + ".emb")));
    auto read_weights = [&](const char* key) {
      const Matrix w = parse_emb_file(dir / m.at(key).get<std::string>());
      return std::vector<double>(w.data().begin(), w.data().end());
    };
    ck.text_weights = read_weights("text_weights");
    ck.vision_weights = read_weights("vision_weights");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError((dir / "manifest.json").string() + ": " + e.what());
  }
  return ck;
}

}  // namespace oshg
