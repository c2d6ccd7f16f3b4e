#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "oshg/error.hpp"
#include "oshg/matrix.hpp"
#include "oshg/rng.hpp"

namespace oshg {

// ---------------------------------------------------------------------------
// EMB matrix files
//
// Text form:   "<rows> <cols>\n" followed by exactly `rows` lines of `cols`
//              space-separated decimal floats.
// Binary form: "EMB1\n<rows> <cols>\n" followed by rows*cols binary64 values,
//              little-endian, row-major.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string_view chomp(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline bool parse_count(std::string_view tok, std::size_t& out) {
  if (tok.empty()) return false;
  for (char ch : tok)
    if (ch < '0' || ch > '9') return false;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

inline void parse_header(std::string_view line, std::size_t line_no, std::size_t& rows,
                         std::size_t& cols) {
  line = chomp(line);
  const auto sp = line.find(' ');
  if (sp == std::string_view::npos || !parse_count(line.substr(0, sp), rows) ||
      !parse_count(line.substr(sp + 1), cols)) {
    throw ParseError("malformed EMB header '" + std::string(line) + "', expected '<rows> <cols>'",
                     line_no);
  }
}

inline bool is_little_endian() {
  const std::uint16_t probe = 1;
  unsigned char first = 0;
  std::memcpy(&first, &probe, 1);
  return first == 1;
}

}  // namespace detail

inline constexpr std::string_view kEmbBinaryMagic = "EMB1";

inline Matrix parse_emb(std::string_view content) {
  if (content.substr(0, kEmbBinaryMagic.size()) == kEmbBinaryMagic) {
    std::size_t pos = kEmbBinaryMagic.size();
    if (pos >= content.size() || content[pos] != '\n') {
      throw ParseError("binary EMB: expected newline after magic", 1);
    }
    ++pos;
    const auto eol = content.find('\n', pos);
    if (eol == std::string_view::npos) throw ParseError("binary EMB: missing header line", 2);
    std::size_t rows = 0, cols = 0;
    detail::parse_header(content.substr(pos, eol - pos), 2, rows, cols);
    const auto payload = content.substr(eol + 1);
    if (payload.size() != rows * cols * sizeof(double)) {
      throw ParseError("binary EMB: payload has " + std::to_string(payload.size()) +
                       " bytes, expected " + std::to_string(rows * cols * sizeof(double)));
    }
    Matrix m(rows, cols);
    const bool le = detail::is_little_endian();
    for (std::size_t i = 0; i < rows * cols; ++i) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, payload.data() + i * sizeof(double), sizeof(double));
      if (!le) std::reverse(std::begin(bytes), std::end(bytes));
      double v = 0.0;
      std::memcpy(&v, bytes, sizeof(double));
      if (!std::isfinite(v)) throw ParseError("binary EMB: non-finite value at index " +
                                              std::to_string(i));
      m.data()[i] = v;
    }
    return m;
  }

  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= content.size()) return false;
    auto eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    line = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    return true;
  };

  std::string_view line;
  if (!next_line(line)) throw ParseError("empty EMB file", 1);
  std::size_t rows = 0, cols = 0;
  detail::parse_header(line, line_no, rows, cols);

  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!next_line(line)) {
      throw ParseError("unexpected end of file: expected " + std::to_string(rows) +
                           " rows, found " + std::to_string(r),
                       line_no + 1);
    }
    const auto toks = detail::split_spaces(detail::chomp(line));
    if (toks.size() != cols) {
      throw ParseError("expected " + std::to_string(cols) + " values, found " +
                           std::to_string(toks.size()),
                       line_no);
    }
    for (std::size_t c = 0; c < cols; ++c) {
      double v = 0.0;
      const auto tok = toks[c];
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError("non-numeric token '" + std::string(tok) + "'", line_no);
      }
      if (!std::isfinite(v)) {
        throw ParseError("non-finite value '" + std::string(tok) + "'", line_no);
      }
      m(r, c) = v;
    }
  }
  while (next_line(line)) {
    if (!detail::chomp(line).empty()) {
      throw ParseError("trailing data after " + std::to_string(rows) + " rows", line_no);
    }
  }
  return m;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw RuntimeFailure("short write to '" + path.string() + "'");
}

inline Matrix parse_emb_file(const std::filesystem::path& path) {
  try {
    return parse_emb(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// Shortest decimal that round-trips to the same binary64.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

inline std::string format_emb(const Matrix& m) {
  std::string out = std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ' ';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline std::string format_emb_binary(const Matrix& m) {
  std::string out(kEmbBinaryMagic);
  out += '\n';
  out += std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  const bool le = detail::is_little_endian();
  for (double v : m.data()) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    if (!le) std::reverse(std::begin(bytes), std::end(bytes));
    out.append(reinterpret_cast<const char*>(bytes), sizeof(double));
  }
  return out;
}

inline void write_emb_file(const std::filesystem::path& path, const Matrix& m, bool binary = false) {
  write_file(path, binary ? format_emb_binary(m) : format_emb(m));
}

// ---------------------------------------------------------------------------
// Synonym bundles
// ---------------------------------------------------------------------------

/// Right-pads each raw synonym vector to `c` dims and fills missing slots with
/// zero vectors (the "[sep]" token), giving exactly `l` vectors.
inline std::vector<Vector> pad_synonyms(const std::vector<Vector>& raw, std::size_t l,
                                        std::size_t c) {
  if (raw.size() > l) {
    throw DomainError("pad_synonyms: " + std::to_string(raw.size()) + " synonyms exceed l=" +
                      std::to_string(l));
  }
  std::vector<Vector> out(l, Vector(c, 0.0));
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].size() > c) {
      throw ShapeError("pad_synonyms: synonym " + std::to_string(i) + " has dim " +
                       std::to_string(raw[i].size()) + " > c=" + std::to_string(c));
    }
    std::copy(raw[i].begin(), raw[i].end(), out[i].begin());
  }
  return out;
}

/// F = extend(base, syn): base followed by the element-wise mean of the l
/// (already padded) synonym vectors.
inline Vector extend_features(std::span<const double> base, const std::vector<Vector>& syn) {
  if (syn.empty()) throw ShapeError("extend_features: need at least one synonym slot");
  const std::size_t c = syn.front().size();
  Vector fused(base.begin(), base.end());
  fused.resize(base.size() + c, 0.0);
  for (const auto& s : syn) {
    if (s.size() != c) throw ShapeError("extend_features: synonym slots differ in dimension");
    for (std::size_t j = 0; j < c; ++j) fused[base.size() + j] += s[j];
  }
  const double inv = 1.0 / static_cast<double>(syn.size());
  for (std::size_t j = 0; j < c; ++j) fused[base.size() + j] *= inv;
  return fused;
}

struct SynonymBundle {
  Vector base;              // T_Dataset row, dim b
  std::vector<Vector> syn;  // l padded synonym rows, dim c
  Vector fused;             // dim b + c
};

inline SynonymBundle make_bundle(Vector base, const std::vector<Vector>& raw_syn, std::size_t l,
                                 std::size_t c) {
  SynonymBundle bundle;
  bundle.syn = pad_synonyms(raw_syn, l, c);
  bundle.fused = extend_features(base, bundle.syn);
  bundle.base = std::move(base);
  return bundle;
}

/// Row-wise extend over a whole corpus: [T | mean_s(S_s)].
inline Matrix extend_matrix(const Matrix& base, const std::vector<Matrix>& slots) {
  if (slots.empty()) throw ShapeError("extend_matrix: need at least one synonym slot");
  Matrix mean(base.rows(), slots.front().cols());
  for (const auto& s : slots) {
    if (s.rows() != base.rows() || s.cols() != mean.cols()) {
      throw ShapeError("extend_matrix: synonym slot shape " + s.shape_string());
    }
    mean += s;
  }
  mean *= 1.0 / static_cast<double>(slots.size());
  return concat_cols(base, mean);
}

// ---------------------------------------------------------------------------
// Tokenizer and hash embedder
// ---------------------------------------------------------------------------

namespace detail {

// Decodes one UTF-8 code point starting at s[i]; invalid bytes decode as themselves.
inline char32_t decode_utf8(std::string_view s, std::size_t i, std::size_t& len) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) {
    return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  auto byte = [&](std::size_t k) { return static_cast<char32_t>(s[i + k] & 0x3F); };
  if (b0 < 0x80) {
    len = 1;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    len = 2;
    return (static_cast<char32_t>(b0 & 0x1F) << 6) | byte(1);
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    len = 3;
    return (static_cast<char32_t>(b0 & 0x0F) << 12) | (byte(1) << 6) | byte(2);
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    len = 4;
    return (static_cast<char32_t>(b0 & 0x07) << 18) | (byte(1) << 12) | (byte(2) << 6) | byte(3);
  }
  len = 1;
  return b0;
}

inline bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

inline bool is_ascii_punct(char ch) {
  return (ch >= 0x21 && ch <= 0x2F) || (ch >= 0x3A && ch <= 0x40) || (ch >= 0x5B && ch <= 0x60) ||
         (ch >= 0x7B && ch <= 0x7E);
}

}  // namespace detail

/// Lowercases ASCII, splits on Unicode whitespace and drops ASCII punctuation.
/// Non-ASCII bytes pass through untouched.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = 1;
    const char32_t cp = detail::decode_utf8(text, i, len);
    if (detail::is_unicode_space(cp)) {
      flush();
    } else if (len == 1) {
      char ch = text[i];
      if (!detail::is_ascii_punct(ch)) {
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
        current += ch;
      }
    } else {
      current.append(text.substr(i, len));
    }
    i += len;
  }
  flush();
  return tokens;
}

inline std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Signed feature hashing of the token bag, L2-normalized. Empty text gives a
/// zero vector.
inline Vector hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw DomainError("hash_embed: dim must be >= 1");
  Vector v(dim, 0.0);
  const std::uint64_t salt = mix64(seed);
  for (const auto& tok : tokenize(text)) {
    const std::uint64_t h = mix64(fnv1a64(tok) ^ salt);
    const std::size_t bucket = static_cast<std::size_t>(h % dim);
    v[bucket] += (h >> 63) ? -1.0 : 1.0;
  }
  const double n = norm2(v);
  if (n > 0.0)
    for (double& x : v) x /= n;
  return v;
}

// ---------------------------------------------------------------------------
// Caption records (JSONL)
// ---------------------------------------------------------------------------

struct CaptionRecord {
  std::string caption_id;
  std::string image_id;
  std::string text;
  std::vector<std::string> synonyms;

  bool operator==(const CaptionRecord&) const = default;
};

inline CaptionRecord caption_from_json(const nlohmann::json& j, std::size_t line_no) {
  if (!j.is_object()) throw ParseError("expected a JSON object", line_no);
  auto get_string = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'", line_no);
    if (!it->is_string()) throw ParseError(std::string("field '") + key + "' must be a string",
                                           line_no);
    return it->get<std::string>();
  };
  CaptionRecord rec;
  rec.caption_id = get_string("caption_id");
  rec.image_id = get_string("image_id");
  rec.text = get_string("text");
  if (auto it = j.find("synonyms"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError("field 'synonyms' must be an array", line_no);
    for (const auto& s : *it) {
      if (!s.is_string()) throw ParseError("synonyms must be strings", line_no);
      rec.synonyms.push_back(s.get<std::string>());
    }
  }
  return rec;
}

inline nlohmann::json caption_to_json(const CaptionRecord& rec) {
  return nlohmann::json{{"caption_id", rec.caption_id},
                        {"image_id", rec.image_id},
                        {"text", rec.text},
                        {"synonyms", rec.synonyms}};
}

inline std::vector<CaptionRecord> parse_captions_jsonl(std::string_view content) {
  std::vector<CaptionRecord> out;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    const auto line = detail::chomp(content.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    auto rec = caption_from_json(j, line_no);
    if (!seen.insert(rec.caption_id).second) {
      throw ParseError("duplicate caption_id '" + rec.caption_id + "'", line_no);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<CaptionRecord> load_captions_jsonl(const std::filesystem::path& path) {
  try {
    return parse_captions_jsonl(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline std::string format_captions_jsonl(const std::vector<CaptionRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    out += caption_to_json(rec).dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus directory
//
//   corpus.json   {"l", "regions_per_image", "image_ids", "images", "captions",
//                  "caption_embeddings", "synonym_embeddings"}
//   images.emb    (n_images * regions_per_image) x d, regions grouped per image
//   captions.emb  n_captions x b, same order as captions.jsonl
//   synonyms.emb  (n_captions * l) x c, row i*l+s is slot s of caption i
// ---------------------------------------------------------------------------

struct Corpus {
  std::vector<CaptionRecord> captions;
  std::vector<std::string> image_ids;
  std::vector<Matrix> regions;          // per image, regions_per_image x d
  Matrix caption_emb;                   // n_captions x b
  std::vector<Matrix> synonym_slots;    // l matrices, each n_captions x c
  std::vector<std::size_t> caption_to_image;

  std::size_t n_images() const { return image_ids.size(); }
  std::size_t n_captions() const { return caption_emb.rows(); }
  std::size_t l() const { return synonym_slots.size(); }
  std::size_t b() const { return caption_emb.cols(); }
  std::size_t c() const { return synonym_slots.empty() ? 0 : synonym_slots.front().cols(); }
  std::size_t d() const { return regions.empty() ? 0 : regions.front().cols(); }
};

/// Splits a stacked region matrix into per-image blocks.
inline std::vector<Matrix> split_regions(const Matrix& stacked, std::size_t per_image) {
  if (per_image == 0 || stacked.rows() % per_image != 0) {
    throw ParseError("region matrix with " + std::to_string(stacked.rows()) +
                     " rows is not a multiple of regions_per_image=" + std::to_string(per_image));
  }
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < stacked.rows(); i += per_image) {
    Matrix block(per_image, stacked.cols());
    for (std::size_t r = 0; r < per_image; ++r)
      std::copy(stacked.row(i + r).begin(), stacked.row(i + r).end(), block.row(r).begin());
    out.push_back(std::move(block));
  }
  return out;
}

inline Matrix stack_regions(const std::vector<Matrix>& regions) {
  if (regions.empty()) return {};
  const std::size_t per = regions.front().rows();
  Matrix out(regions.size() * per, regions.front().cols());
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].rows() != per || regions[i].cols() != out.cols()) {
      throw ShapeError("stack_regions: ragged region blocks");
    }
    for (std::size_t r = 0; r < per; ++r)
      std::copy(regions[i].row(r).begin(), regions[i].row(r).end(), out.row(i * per + r).begin());
  }
  return out;
}

inline std::vector<Matrix> split_synonym_slots(const Matrix& stacked, std::size_t n, std::size_t l) {
  if (l == 0 || stacked.rows() != n * l) {
    throw ParseError("synonym matrix has " + std::to_string(stacked.rows()) + " rows, expected " +
                     std::to_string(n) + "*" + std::to_string(l));
  }
  std::vector<Matrix> slots(l, Matrix(n, stacked.cols()));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < l; ++s)
      std::copy(stacked.row(i * l + s).begin(), stacked.row(i * l + s).end(),
                slots[s].row(i).begin());
  return slots;
}

inline Matrix stack_synonym_slots(const std::vector<Matrix>& slots) {
  if (slots.empty()) return {};
  const std::size_t n = slots.front().rows();
  const std::size_t l = slots.size();
  Matrix out(n * l, slots.front().cols());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < l; ++s)
      std::copy(slots[s].row(i).begin(), slots[s].row(i).end(), out.row(i * l + s).begin());
  return out;
}

/// Maps each caption to the index of its image; dangling references are data errors.
inline std::vector<std::size_t> map_captions_to_images(const std::vector<CaptionRecord>& captions,
                                                       const std::vector<std::string>& image_ids) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < image_ids.size(); ++i) {
    if (!index.emplace(image_ids[i], i).second) {
      throw ParseError("duplicate image_id '" + image_ids[i] + "'");
    }
  }
  std::vector<std::size_t> out;
  out.reserve(captions.size());
  for (const auto& rec : captions) {
    auto it = index.find(rec.image_id);
    if (it == index.end()) {
      throw ParseError("caption '" + rec.caption_id + "' references unknown image '" +
                       rec.image_id + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

inline void validate_corpus(const Corpus& corpus) {
  if (corpus.caption_emb.rows() != corpus.captions.size()) {
    throw ParseError("caption embeddings have " + std::to_string(corpus.caption_emb.rows()) +
                     " rows for " + std::to_string(corpus.captions.size()) + " captions");
  }
  if (corpus.regions.size() != corpus.image_ids.size()) {
    throw ParseError("region blocks do not match image_ids");
  }
  for (const auto& slot : corpus.synonym_slots) {
    if (slot.rows() != corpus.captions.size()) throw ParseError("synonym slot row mismatch");
  }
}

inline Corpus load_corpus(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "corpus.json";
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }
  auto field = [&](const char* key) -> const nlohmann::json& {
    if (!manifest.contains(key)) {
      throw ParseError(manifest_path.string() + ": missing field '" + key + "'");
    }
    return manifest.at(key);
  };
  Corpus corpus;
  try {
    const auto l = field("l").get<std::size_t>();
    const auto per_image = field("regions_per_image").get<std::size_t>();
    corpus.image_ids = field("image_ids").get<std::vector<std::string>>();
    corpus.captions = load_captions_jsonl(dir / field("captions").get<std::string>());
    corpus.regions = split_regions(parse_emb_file(dir / field("images").get<std::string>()),
                                   per_image);
    corpus.caption_emb = parse_emb_file(dir / field("caption_embeddings").get<std::string>());
    corpus.synonym_slots = split_synonym_slots(
        parse_emb_file(dir / field("synonym_embeddings").get<std::string>()),
        corpus.captions.size(), l);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }
  corpus.caption_to_image = map_captions_to_images(corpus.captions, corpus.image_ids);
  validate_corpus(corpus);
  return corpus;
}

inline void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  validate_corpus(corpus);
  std::filesystem::create_directories(dir);
  nlohmann::json manifest{{"l", corpus.l()},
                          {"regions_per_image", corpus.regions.empty() ? 0 : corpus.regions[0].rows()},
                          {"image_ids", corpus.image_ids},
                          {"images", "images.emb"},
                          {"captions", "captions.jsonl"},
                          {"caption_embeddings", "captions.emb"},
                          {"synonym_embeddings", "synonyms.emb"}};
  write_file(dir / "corpus.json", manifest.dump(2) + "\n");
  write_file(dir / "captions.jsonl", format_captions_jsonl(corpus.captions));
  write_emb_file(dir / "images.emb", stack_regions(corpus.regions));
  write_emb_file(dir / "captions.emb", corpus.caption_emb);
  write_emb_file(dir / "synonyms.emb", stack_synonym_slots(corpus.synonym_slots));
}

}  // namespace oshg
