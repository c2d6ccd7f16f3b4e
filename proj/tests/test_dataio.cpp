#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>

#include "oshg/dataio.hpp"
#include "oshg/rng.hpp"

using namespace oshg;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("oshg_dataio_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::size_t parse_error_line(std::string_view content) {
  try {
    parse_emb(content);
  } catch (const ParseError& e) {
    return e.line();
  }
  return static_cast<std::size_t>(-1);
}

}  // namespace

TEST(Emb, TextRoundTripIsBitExact) {
  Rng rng(2);
  Matrix m(5, 7);
  for (double& v : m.data()) v = rng.normal() * std::pow(10.0, rng.uniform(-20, 20));
  m(0, 0) = 0.1;
  m(0, 1) = -0.0;
  m(0, 2) = std::numeric_limits<double>::denorm_min();
  m(0, 3) = std::numeric_limits<double>::max();
  const Matrix back = parse_emb(format_emb(m));
  ASSERT_EQ(back.rows(), 5u);
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back.data()[i]), std::bit_cast<std::uint64_t>(m.data()[i]));
  }
}

TEST(Emb, BinaryRoundTripIsBitExact) {
  Rng rng(3);
  Matrix m(4, 3);
  for (double& v : m.data()) v = rng.normal();
  const std::string blob = format_emb_binary(m);
  EXPECT_EQ(blob.substr(0, 5), "EMB1\n");
  EXPECT_EQ(parse_emb(blob), m);
}

TEST(Emb, HeaderAndShapeErrorsCarryLineNumbers) {
  EXPECT_EQ(parse_error_line(""), 1u);
  EXPECT_EQ(parse_error_line("2 x\n1 2\n"), 1u);
  EXPECT_EQ(parse_error_line("2 2\n1 2\n3\n"), 3u);
  EXPECT_EQ(parse_error_line("2 2\n1 2\n"), 3u);
  EXPECT_EQ(parse_error_line("1 2\n1 abc\n"), 2u);
  EXPECT_EQ(parse_error_line("1 2\n1 nan\n"), 2u);
  EXPECT_EQ(parse_error_line("1 2\n1 inf\n"), 2u);
  EXPECT_EQ(parse_error_line("1 1\n1\n2\n"), 3u);
}

TEST(Emb, ToleratesCrlfAndTrailingBlankLines) {
  const Matrix m = parse_emb("2 2\r\n1 2\r\n3 4\r\n\n");
  EXPECT_EQ(m, (Matrix{{1, 2}, {3, 4}}));
}

TEST(Emb, TruncatedBinaryPayload) {
  std::string blob = format_emb_binary(Matrix{{1, 2}});
  blob.pop_back();
  EXPECT_THROW(parse_emb(blob), ParseError);
}

TEST(Synonyms, PaddingFillsZeroSlots) {
  const auto padded = pad_synonyms({{1, 2}, {3}}, 4, 3);
  ASSERT_EQ(padded.size(), 4u);
  EXPECT_EQ(padded[0], (Vector{1, 2, 0}));
  EXPECT_EQ(padded[1], (Vector{3, 0, 0}));
  EXPECT_EQ(padded[3], (Vector{0, 0, 0}));
  EXPECT_THROW(pad_synonyms({{1}, {2}, {3}}, 2, 1), DomainError);
  EXPECT_THROW(pad_synonyms({{1, 2, 3, 4}}, 2, 3), ShapeError);
}

TEST(Synonyms, ZeroSynonymsGiveZeroTail) {
  const auto bundle = make_bundle({0.5, -1.0}, {}, 4, 3);
  EXPECT_EQ(bundle.fused, (Vector{0.5, -1.0, 0, 0, 0}));
}

TEST(Synonyms, ExtendUsesSlotMean) {
  const auto bundle = make_bundle({1.0}, {{2.0, 4.0}, {4.0, 0.0}}, 2, 2);
  EXPECT_EQ(bundle.fused, (Vector{1.0, 3.0, 2.0}));
  const Matrix fused = extend_matrix(Matrix{{1.0}}, {Matrix{{2.0, 4.0}}, Matrix{{4.0, 0.0}}});
  EXPECT_EQ(fused, (Matrix{{1.0, 3.0, 2.0}}));
}

TEST(Tokenize, LowercasesAndDropsPunctuation) {
  EXPECT_EQ(tokenize("A Black-cat, sits!"), (std::vector<std::string>{"a", "blackcat", "sits"}));
  EXPECT_TRUE(tokenize("  ,.;  ").empty());
}

TEST(Tokenize, UnicodeWhitespaceAndBytesPreserved) {
  // U+3000 ideographic space separates; é survives untouched.
  const auto toks = tokenize("Caf\xC3\xA9\xE3\x80\x80noir");
  ASSERT_EQ(toks.size(), 2u);
  EXPECT_EQ(toks[0], "caf\xC3\xA9");
  EXPECT_EQ(toks[1], "noir");
}

TEST(HashEmbed, DeterministicUnitNorm) {
  const Vector a = hash_embed("a dog on the beach", 64, 1);
  const Vector b = hash_embed("a dog on the beach", 64, 1);
  EXPECT_EQ(a, b);
  EXPECT_NEAR(norm2(a), 1.0, 1e-12);
  EXPECT_EQ(hash_embed("!!", 8, 1), Vector(8, 0.0));
  EXPECT_THROW(hash_embed("x", 0, 1), DomainError);
}

TEST(HashEmbed, SeedChangesTheProjection) {
  const std::string text = "two dogs running through a quiet park at noon";
  const Vector a = hash_embed(text, 256, 1);
  const Vector b = hash_embed(text, 256, 2);
  EXPECT_LT(std::abs(cosine(a, b)), 0.5);
}

TEST(HashEmbed, CaseAndPunctuationInsensitive) {
  EXPECT_EQ(hash_embed("A Dog.", 32, 4), hash_embed("a dog", 32, 4));
}

TEST(Captions, JsonlRoundTrip) {
  std::vector<CaptionRecord> recs{{"c1", "i1", "A cat, \"quoted\"", {"a kitten"}},
                                  {"c2", "i1", "caf\xC3\xA9", {}}};
  const auto back = parse_captions_jsonl(format_captions_jsonl(recs));
  EXPECT_EQ(back, recs);
}

TEST(Captions, ErrorsReportLine) {
  const std::string dup =
      "{\"caption_id\":\"a\",\"image_id\":\"i\",\"text\":\"x\"}\n\n"
      "{\"caption_id\":\"a\",\"image_id\":\"i\",\"text\":\"y\"}\n";
  try {
    parse_captions_jsonl(dup);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    parse_captions_jsonl("{\"caption_id\":\"a\",\"text\":\"x\"}\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  EXPECT_THROW(parse_captions_jsonl("{not json}\n"), ParseError);
}

TEST(Corpus, SaveLoadRoundTrip) {
  Corpus c;
  c.image_ids = {"i0", "i1"};
  c.captions = {{"a", "i0", "one", {"uno"}}, {"b", "i1", "two", {}}, {"c", "i1", "three", {}}};
  c.regions = {Matrix{{1, 2}, {3, 4}}, Matrix{{5, 6}, {7, 8}}};
  c.caption_emb = Matrix{{1, 0}, {0, 1}, {1, 1}};
  c.synonym_slots = {Matrix{{1, 1, 1}, {0, 0, 0}, {0, 0, 0}}, Matrix(3, 3)};
  c.caption_to_image = {0, 1, 1};
  const auto dir = scratch_dir("roundtrip");
  save_corpus(c, dir);
  const Corpus back = load_corpus(dir);
  EXPECT_EQ(back.captions, c.captions);
  EXPECT_EQ(back.regions, c.regions);
  EXPECT_EQ(back.caption_emb, c.caption_emb);
  EXPECT_EQ(back.synonym_slots, c.synonym_slots);
  EXPECT_EQ(back.caption_to_image, c.caption_to_image);
  EXPECT_EQ(stack_synonym_slots(split_synonym_slots(stack_synonym_slots(c.synonym_slots), 3, 2)),
            stack_synonym_slots(c.synonym_slots));
}

TEST(Corpus, DanglingImageReference) {
  EXPECT_THROW(map_captions_to_images({{"a", "missing", "x", {}}}, {"i0"}), ParseError);
  EXPECT_THROW(split_regions(Matrix(5, 2), 2), ParseError);
  EXPECT_THROW(load_corpus(scratch_dir("empty")), ParseError);
}
