#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "oshg/cli.hpp"

using namespace oshg;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "oshg");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("oshg_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const std::string kData = OSHG_DATA_DIR;

// Builds a corpus directory from the bundled sample once per test binary.
const fs::path& sample_corpus() {
  static const fs::path dir = [] {
    const auto d = scratch("corpus");
    const CliRun r = run({"embed", "--captions", kData + "/sample_captions.jsonl", "--images",
                       kData + "/sample_images.emb", "--regions-per-image", "4", "--out", d.string()});
    if (r.code != 0) throw std::runtime_error("embed failed: " + r.err);
    return d;
  }();
  return dir;
}

}  // namespace

TEST(Cli, EvalWithoutDataIsUsageError) {
  const CliRun r = run({"eval"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--data"), std::string::npos);
}

TEST(Cli, UnknownFlagIsUsageError) {
  EXPECT_EQ(run({"train", "--bogus", "1"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, GradcheckDefaultsPass) {
  const CliRun r = run({"gradcheck", "--json"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_EQ(j["blocks"].size(), 4u);
  EXPECT_EQ(run({"gradcheck", "--seed", "7", "--corrupt", "2"}).code, 3);
}

TEST(Cli, EntropyPrintsJson) {
  const CliRun r = run({"entropy", "--captions", kData + "/sample_captions.jsonl", "--images",
                     kData + "/sample_images.emb"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_GT(j["augmented_text_bits"].get<double>(), j["text_bits"].get<double>());
  EXPECT_TRUE(j["alpha"].is_null());
}

TEST(Cli, MissingFileIsDataError) {
  EXPECT_EQ(run({"entropy", "--captions", "/nonexistent/caps.jsonl"}).code, 2);
  EXPECT_EQ(run({"eval", "--data", "/nonexistent/corpus"}).code, 2);
}

TEST(Cli, ConfigRejectsUnknownKeysAndFlagsWin) {
  const auto dir = scratch("config");
  write_file(dir / "bad.json", R"({"epochs": 1, "learning_rate": 0.1})");
  EXPECT_EQ(run({"train", "--config", (dir / "bad.json").string(), "--data", sample_corpus().string(),
                 "--out", (dir / "ck").string()}).code, 1);

  write_file(dir / "good.json", R"({"epochs": 3, "batch": 5, "alpha_mode": "fixed", "alpha": 0.3})");
  const CliRun r = run({"train", "--json", "--config", (dir / "good.json").string(), "--epochs", "2",
                     "--data", sample_corpus().string(), "--out", (dir / "ck").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["epochs"].size(), 2u);
  EXPECT_DOUBLE_EQ(j["epochs"][0]["alpha"].get<double>(), 0.3);
}

TEST(Cli, PipelineEmbedBuildTrainEval) {
  const auto dir = scratch("pipeline");
  const CliRun hg = run({"build-hg", "--json", "--data", sample_corpus().string(), "--out", (dir / "hg.json").string()});
  ASSERT_EQ(hg.code, 0) << hg.err;
  const auto summary = nlohmann::json::parse(hg.out);
  EXPECT_EQ(summary["text"]["edges"].get<std::size_t>(), 100u * 5);
  EXPECT_EQ(summary["vision"]["vertices"].get<std::size_t>(), 20u);
  EXPECT_TRUE(fs::exists(dir / "hg.json"));

  const CliRun tr = run({"train", "--data", sample_corpus().string(), "--out", (dir / "ck").string(),
                      "--epochs", "2", "--batch", "5", "--seed", "3"});
  ASSERT_EQ(tr.code, 0) << tr.err;
  EXPECT_TRUE(fs::exists(dir / "ck" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "ck" / "train_log.csv"));

  const CliRun ev = run({"eval", "--json", "--data", sample_corpus().string(), "--checkpoint", (dir / "ck").string()});
  ASSERT_EQ(ev.code, 0) << ev.err;
  const auto rep = nlohmann::json::parse(ev.out);
  EXPECT_GE(rep["rsum"].get<double>(), 0.0);
  EXPECT_LE(rep["rsum"].get<double>(), 600.0);
  EXPECT_EQ(run({"eval", "--data", sample_corpus().string()}).code, 0);
}

TEST(Cli, TrainIsByteDeterministic) {
  const auto dir = scratch("determinism");
  for (const char* name : {"a", "b"}) {
    const CliRun r = run({"train", "--data", sample_corpus().string(), "--out", (dir / name).string(),
                       "--epochs", "2", "--batch", "6", "--seed", "7"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const auto other = dir / "b" / entry.path().filename();
    ASSERT_TRUE(fs::exists(other)) << other;
    EXPECT_EQ(read_file(entry.path()), read_file(other)) << entry.path().filename();
  }
}

TEST(Cli, AugmentOffline) {
  const auto dir = scratch("augment");
  write_file(dir / "caps.jsonl", R"({"caption_id":"s00_0","image_id":"im00","text":"plain"})" "\n");
  const CliRun r = run({"augment", "--captions", (dir / "caps.jsonl").string(), "--out", (dir / "out.jsonl").string(),
                     "--offline", kData + "/sample_captions.jsonl", "--l", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto recs = load_captions_jsonl(dir / "out.jsonl");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].text, "plain");
  EXPECT_EQ(recs[0].synonyms.size(), 2u);
}

TEST(Cli, SeedListParsing) {
  EXPECT_EQ(cli::detail::parse_seed_list("1,2,3"), (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_THROW(cli::detail::parse_seed_list("1,,x"), std::exception);
}
