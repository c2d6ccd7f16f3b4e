#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oshg/dataio.hpp"
#include "oshg/error.hpp"
#include "oshg/matrix.hpp"

namespace oshg {

inline constexpr std::size_t kDefaultBins = 64;

/// Equal-width binning over [lo, hi]; the top edge falls into the last bin and
/// a degenerate range puts everything into bin 0.
class EqualWidthBins {
 public:
  EqualWidthBins(std::span<const double> samples, std::size_t bins) : bins_(bins) {
    if (samples.empty()) throw DomainError("histogram: no samples");
    if (bins < 2) throw DomainError("histogram: bins must be >= 2");
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    lo_ = *mn;
    hi_ = *mx;
    if (!std::isfinite(lo_) || !std::isfinite(hi_)) throw DomainError("histogram: non-finite sample");
  }

  std::size_t operator()(double v) const noexcept {
    if (!(hi_ > lo_)) return 0;
    const double u = (v - lo_) / (hi_ - lo_) * static_cast<double>(bins_);
    if (!(u > 0.0)) return 0;
    const auto idx = static_cast<std::size_t>(u);
    return std::min(idx, bins_ - 1);
  }

  std::size_t bins() const noexcept { return bins_; }

 private:
  std::size_t bins_;
  double lo_ = 0.0;
  double hi_ = 0.0;
};

/// Shannon entropy in bits of a count vector: log2 N - (1/N) Σ c log2 c.
template <typename Counts>
double entropy_bits_from_counts(const Counts& counts) {
  double total = 0.0;
  double acc = 0.0;
  for (const auto& c : counts) {
    const double x = static_cast<double>(c);
    if (x <= 0.0) continue;
    total += x;
    acc += x * std::log2(x);
  }
  if (total <= 0.0) return 0.0;
  return std::max(0.0, std::log2(total) - acc / total);
}

/// Plug-in entropy (bits) of the equal-width histogram over the sample range.
inline double hist_entropy(std::span<const double> samples, std::size_t bins = kDefaultBins) {
  const EqualWidthBins binning(samples, bins);
  std::vector<std::size_t> counts(bins, 0);
  for (double s : samples) ++counts[binning(s)];
  return entropy_bits_from_counts(counts);
}

struct MiEstimate {
  double mi_bits = 0.0;
  double hx_bits = 0.0;
  double hy_bits = 0.0;
  double alpha = 0.0;
  std::size_t bins = 0;
  std::size_t sample_count = 0;
};

inline double nmi_from(double mi, double hx, double hy) {
  const double denom = hx + hy;
  if (denom <= 0.0) return 1.0;
  return std::clamp(2.0 * mi / denom, 0.0, 1.0);
}

/// I(X;Y) = H(X̂) + H(Ŷ) - H(X̂,Ŷ) over coordinate-wise pairs (x[i][j], y[i][j]).
inline MiEstimate joint_mi(const Matrix& x, const Matrix& y, std::size_t bins = kDefaultBins) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw ShapeError("joint_mi: " + x.shape_string() + " vs " + y.shape_string());
  }
  const EqualWidthBins bx(x.data(), bins);
  const EqualWidthBins by(y.data(), bins);
  std::vector<std::size_t> cx(bins, 0), cy(bins, 0), cxy(bins * bins, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto ix = bx(x.data()[i]);
    const auto iy = by(y.data()[i]);
    ++cx[ix];
    ++cy[iy];
    ++cxy[ix * bins + iy];
  }
  MiEstimate est;
  est.bins = bins;
  est.sample_count = x.size();
  est.hx_bits = entropy_bits_from_counts(cx);
  est.hy_bits = entropy_bits_from_counts(cy);
  const double hxy = entropy_bits_from_counts(cxy);
  est.mi_bits = std::clamp(est.hx_bits + est.hy_bits - hxy, 0.0,
                           std::min(est.hx_bits, est.hy_bits));
  est.alpha = nmi_from(est.mi_bits, est.hx_bits, est.hy_bits);
  return est;
}

/// α = 2·I / (H(X̂) + H(Ŷ)) in [0, 1]; constant inputs on both sides give 1.
inline double nmi_alpha(const Matrix& x, const Matrix& y, std::size_t bins = kDefaultBins) {
  return joint_mi(x, y, bins).alpha;
}

// ---------------------------------------------------------------------------
// Modality entropy report
// ---------------------------------------------------------------------------

/// Information content of a token sequence: unigram entropy times token count.
inline double token_information_bits(const std::vector<std::string>& tokens) {
  std::map<std::string, std::size_t> counts;
  for (const auto& t : tokens) ++counts[t];
  std::vector<std::size_t> c;
  c.reserve(counts.size());
  for (const auto& [_, n] : counts) c.push_back(n);
  return entropy_bits_from_counts(c) * static_cast<double>(tokens.size());
}

inline double caption_bits(const CaptionRecord& rec) { return token_information_bits(tokenize(rec.text)); }

inline double augmented_caption_bits(const CaptionRecord& rec) {
  auto tokens = tokenize(rec.text);
  for (const auto& s : rec.synonyms) {
    auto extra = tokenize(s);
    tokens.insert(tokens.end(), extra.begin(), extra.end());
  }
  return token_information_bits(tokens);
}

struct EntropyItem {
  std::string caption_id;
  double text_bits = 0.0;
  double augmented_text_bits = 0.0;
};

struct EntropyReport {
  double text_bits = 0.0;
  double augmented_text_bits = 0.0;
  double image_bits = 0.0;
  std::optional<double> alpha;
  std::size_t bins = kDefaultBins;
  std::vector<EntropyItem> items;
};

/// Mean caption information, mean caption+synonym information, and mean
/// per-row histogram entropy of the image features.
inline EntropyReport modality_entropy_report(const std::vector<CaptionRecord>& captions,
                                             const Matrix& image_feats,
                                             std::size_t bins = kDefaultBins) {
  if (captions.empty()) throw DomainError("modality_entropy_report: empty caption corpus");
  EntropyReport report;
  report.bins = bins;
  for (const auto& rec : captions) {
    EntropyItem item{rec.caption_id, caption_bits(rec), augmented_caption_bits(rec)};
    report.text_bits += item.text_bits;
    report.augmented_text_bits += item.augmented_text_bits;
    report.items.push_back(std::move(item));
  }
  report.text_bits /= static_cast<double>(captions.size());
  report.augmented_text_bits /= static_cast<double>(captions.size());
  if (image_feats.rows() > 0) {
    for (std::size_t i = 0; i < image_feats.rows(); ++i)
      report.image_bits += hist_entropy(image_feats.row(i), bins);
    report.image_bits /= static_cast<double>(image_feats.rows());
  }
  return report;
}

inline nlohmann::json to_json(const EntropyReport& r, bool with_items = false) {
  nlohmann::json j{{"text_bits", r.text_bits},
                   {"augmented_text_bits", r.augmented_text_bits},
                   {"image_bits", r.image_bits},
                   {"alpha", r.alpha ? nlohmann::json(*r.alpha) : nlohmann::json(nullptr)},
                   {"bins", r.bins}};
  if (with_items) {
    auto items = nlohmann::json::array();
    for (const auto& it : r.items)
      items.push_back({{"caption_id", it.caption_id},
                       {"text_bits", it.text_bits},
                       {"augmented_text_bits", it.augmented_text_bits}});
    j["items"] = std::move(items);
  }
  return j;
}

}  // namespace oshg
