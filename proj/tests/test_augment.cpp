#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include "oshg/augment.hpp"

using namespace oshg;
namespace fs = std::filesystem;

namespace {

// Local completion server; `handler` decides each response.
class MockServer {
 public:
  explicit MockServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/complete", [this, handler](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      last_auth = req.get_header_value("Authorization");
      last_body = req.body;
      handler(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/complete"; }

  std::atomic<int> hits{0};
  std::string last_auth;
  std::string last_body;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

AugmentConfig http_config(const std::string& url) {
  AugmentConfig cfg;
  cfg.mode = AugmentMode::http;
  cfg.endpoint_url = url;
  cfg.timeout_ms = 2000;
  cfg.retries = 2;
  return cfg;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("oshg_augment_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Prompt, AppendsInstruction) {
  EXPECT_EQ(build_prompt("A dog runs"), "A dog runs, Generate synonymous sentences");
  EXPECT_THROW(build_prompt(""), DomainError);
}

TEST(Url, SplitsOriginAndPath) {
  const auto u = split_url("http://localhost:8080/v1/x?y=1");
  EXPECT_EQ(u.origin, "http://localhost:8080");
  EXPECT_EQ(u.path, "/v1/x?y=1");
  EXPECT_EQ(split_url("https://h").path, "/");
  EXPECT_THROW(split_url("localhost/x"), DomainError);
  EXPECT_THROW(split_url("ftp://h/x"), DomainError);
}

TEST(Completions, ParseAndTruncate) {
  EXPECT_EQ(parse_completions(R"({"completions":["a","b","c"]})", 2), (std::vector<std::string>{"a", "b"}));
  EXPECT_THROW(parse_completions("nope", 2), ParseError);
  EXPECT_THROW(parse_completions(R"({"choices":[]})", 2), ParseError);
  EXPECT_THROW(parse_completions(R"({"completions":[1]})", 2), ParseError);
}

TEST(Http, FewerCompletionsThanRequested) {
  MockServer srv([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"completions":["a puppy runs","a dog is running"]})", "application/json");
  });
  ::setenv("OSHG_TEST_TOKEN", "s3cret", 1);
  AugmentConfig cfg = http_config(srv.url());
  cfg.auth_token_env = "OSHG_TEST_TOKEN";
  const auto out = generate_synonyms(cfg, {"c1", "i1", "A dog runs", {}});
  EXPECT_EQ(out.size(), 2u);
  EXPECT_EQ(srv.last_auth, "Bearer s3cret");
  const auto body = nlohmann::json::parse(srv.last_body);
  EXPECT_EQ(body["prompt"], "A dog runs, Generate synonymous sentences");
  EXPECT_EQ(body["n"], 4);
}

TEST(Http, RetriesAfterServerError) {
  std::atomic<int> calls{0};
  MockServer srv([&](const httplib::Request&, httplib::Response& res) {
    if (calls++ == 0) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"completions":["x"]})", "application/json");
  });
  EXPECT_EQ(request_completions(http_config(srv.url()), "p"), (std::vector<std::string>{"x"}));
  EXPECT_EQ(srv.hits.load(), 2);
}

TEST(Http, MalformedResponseIsParseError) {
  MockServer srv([](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"completions\": ", "application/json");
  });
  EXPECT_THROW(request_completions(http_config(srv.url()), "p"), ParseError);
}

TEST(Http, UnreachableEndpointFailsAfterRetries) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  AugmentConfig cfg = http_config("http://127.0.0.1:" + std::to_string(port) + "/x");
  cfg.retries = 1;
  cfg.timeout_ms = 500;
  EXPECT_THROW(request_completions(cfg, "p"), RuntimeFailure);
}

TEST(Http, CacheAvoidsRepeatRequests) {
  MockServer srv([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"completions":["s1","s2"]})", "application/json");
  });
  AugmentConfig cfg = http_config(srv.url());
  cfg.cache_dir = scratch("cache");
  std::vector<CaptionRecord> recs{{"a", "i", "one", {}}, {"b", "i", "two", {}}, {"c", "i", "three", {}}};
  const auto first = augment_captions(cfg, recs);
  EXPECT_EQ(srv.hits.load(), 3);
  const auto second = augment_captions(cfg, recs);
  EXPECT_EQ(srv.hits.load(), 3);
  EXPECT_EQ(first, second);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(first[i].text, recs[i].text);
    EXPECT_EQ(first[i].synonyms.size(), 2u);
  }
}

TEST(Offline, HitMissAndTruncation) {
  const auto dir = scratch("offline");
  std::vector<CaptionRecord> table{{"a", "i", "x", {"1", "2", "3", "4", "5"}}};
  write_file(dir / "syn.jsonl", format_captions_jsonl(table));
  AugmentConfig cfg;
  cfg.offline_path = dir / "syn.jsonl";
  cfg.l = 3;
  const auto out = augment_captions(cfg, {{"a", "i", "Caf\xC3\xA9 text", {}}, {"zz", "i", "miss", {}}});
  EXPECT_EQ(out[0].synonyms, (std::vector<std::string>{"1", "2", "3"}));
  EXPECT_EQ(out[0].text, "Caf\xC3\xA9 text");
  EXPECT_TRUE(out[1].synonyms.empty());
  cfg.offline_path.clear();
  EXPECT_THROW(augment_captions(cfg, {}), DomainError);
}

TEST(Config, HttpNeedsEndpoint) {
  AugmentConfig cfg;
  cfg.mode = AugmentMode::http;
  ::unsetenv("OSHG_LLM_ENDPOINT");
  EXPECT_THROW(validate(resolve_env(cfg)), DomainError);
  ::setenv("OSHG_LLM_ENDPOINT", "http://h/x", 1);
  EXPECT_EQ(resolve_env(cfg).endpoint_url, "http://h/x");
  ::unsetenv("OSHG_LLM_ENDPOINT");
  EXPECT_THROW(parse_augment_mode("grpc"), DomainError);
}
