#pragma once

#if defined(OSHG_WITH_OPENSSL) && !defined(CPPHTTPLIB_OPENSSL_SUPPORT)
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif

#include <chrono>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "oshg/dataio.hpp"
#include "oshg/error.hpp"
#include "oshg/log.hpp"

namespace oshg {

enum class AugmentMode { offline, http };

inline std::string to_string(AugmentMode m) { return m == AugmentMode::http ? "http" : "offline"; }

inline AugmentMode parse_augment_mode(const std::string& s) {
  if (s == "offline") return AugmentMode::offline;
  if (s == "http") return AugmentMode::http;
  throw DomainError("unknown augment mode '" + s + "' (expected offline or http)");
}

struct AugmentConfig {
  AugmentMode mode = AugmentMode::offline;
  std::string endpoint_url;                      // falls back to $OSHG_LLM_ENDPOINT
  std::string auth_token_env = "OSHG_LLM_TOKEN";
  std::size_t l = 4;
  std::size_t timeout_ms = 30000;
  std::size_t retries = 2;
  std::size_t max_in_flight = 4;
  std::filesystem::path offline_path;            // augmented captions JSONL
  std::filesystem::path cache_dir;               // empty: no cache
};

inline std::string env_or(const char* name, const std::string& fallback = {}) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

inline AugmentConfig resolve_env(AugmentConfig cfg) {
  if (cfg.endpoint_url.empty()) cfg.endpoint_url = env_or("OSHG_LLM_ENDPOINT");
  return cfg;
}

inline void validate(const AugmentConfig& cfg) {
  if (cfg.l < 1) throw DomainError("augment: l must be >= 1");
  if (cfg.mode == AugmentMode::http && cfg.endpoint_url.empty()) {
    throw DomainError("augment: http mode needs an endpoint (flag or OSHG_LLM_ENDPOINT)");
  }
  if (cfg.max_in_flight < 1) throw DomainError("augment: max_in_flight must be >= 1");
}

/// "<caption>, Generate synonymous sentences"; the caption bytes pass through untouched.
inline std::string build_prompt(const std::string& caption) {
  if (caption.empty()) throw DomainError("build_prompt: empty caption");
  return caption + ", Generate synonymous sentences";
}

struct EndpointUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/'
};

inline EndpointUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw DomainError("endpoint url lacks a scheme: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw DomainError("unsupported url scheme: " + scheme);
  const auto path_start = url.find('/', scheme_end + 3);
  EndpointUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (out.origin.size() <= scheme_end + 3) throw DomainError("endpoint url lacks a host: " + url);
  return out;
}

/// Parses {"completions": [string, ...]} and keeps at most l entries.
inline std::vector<std::string> parse_completions(const std::string& body, std::size_t l) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("completion response is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("completions") || !j["completions"].is_array()) {
    throw ParseError("completion response lacks a \"completions\" array");
  }
  std::vector<std::string> out;
  for (const auto& item : j["completions"]) {
    if (!item.is_string()) throw ParseError("completion entries must be strings");
    if (out.size() < l) out.push_back(item.get<std::string>());
  }
  return out;
}

/// POST {"prompt", "n"} with retries on transport failure or non-2xx status.
inline std::vector<std::string> request_completions(const AugmentConfig& cfg, const std::string& prompt) {
  const EndpointUrl url = split_url(cfg.endpoint_url);
  httplib::Client client(url.origin);
  if (!client.is_valid()) {
    throw RuntimeFailure("cannot create http client for " + url.origin +
                         " (https needs a build with OpenSSL)");
  }
  const auto timeout = std::chrono::milliseconds(cfg.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  const std::string token = env_or(cfg.auth_token_env.c_str());
  if (!token.empty()) client.set_bearer_token_auth(token);

  const std::string body = nlohmann::json{{"prompt", prompt}, {"n", cfg.l}}.dump();
  std::string last_error;
  for (std::size_t attempt = 0; attempt <= cfg.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
    auto res = client.Post(url.path, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP status " + std::to_string(res->status);
      continue;
    }
    return parse_completions(res->body, cfg.l);
  }
  throw RuntimeFailure("completion request failed after " + std::to_string(cfg.retries + 1) +
                       " attempts: " + last_error);
}

/// On-disk response cache, one JSON file per (caption_id, l).
class SynonymCache {
 public:
  explicit SynonymCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  bool enabled() const noexcept { return !dir_.empty(); }

  std::filesystem::path path_for(const std::string& caption_id, std::size_t l) const {
    char name[48];
    std::snprintf(name, sizeof name, "%016llx_l%zu.json",
                  static_cast<unsigned long long>(fnv1a64(caption_id)), l);
    return dir_ / name;
  }

  std::optional<std::vector<std::string>> get(const std::string& caption_id, std::size_t l) const {
    if (!enabled()) return std::nullopt;
    const auto p = path_for(caption_id, l);
    if (!std::filesystem::exists(p)) return std::nullopt;
    try {
      const auto j = nlohmann::json::parse(read_file(p));
      if (j.at("caption_id").get<std::string>() != caption_id) return std::nullopt;
      return j.at("synonyms").get<std::vector<std::string>>();
    } catch (const std::exception& e) {
      log_warning("ignoring unreadable cache entry " + p.string() + ": " + e.what());
      return std::nullopt;
    }
  }

  void put(const std::string& caption_id, std::size_t l, const std::vector<std::string>& syn) {
    if (!enabled()) return;
    std::lock_guard lock(mu_);
    std::filesystem::create_directories(dir_);
    const auto p = path_for(caption_id, l);
    const auto tmp = p.string() + ".tmp";
    write_file(tmp, nlohmann::json{{"caption_id", caption_id}, {"l", l}, {"synonyms", syn}}.dump() + "\n");
    std::filesystem::rename(tmp, p);
  }

 private:
  std::filesystem::path dir_;
  std::mutex mu_;
};

/// caption_id -> synonyms, from an augmented captions JSONL.
using OfflineTable = std::unordered_map<std::string, std::vector<std::string>>;

inline OfflineTable load_offline_table(const std::filesystem::path& path) {
  OfflineTable table;
  for (auto& rec : load_captions_jsonl(path)) table.emplace(rec.caption_id, std::move(rec.synonyms));
  return table;
}

/// Up to l synonyms for one caption. Offline misses degrade to an empty list.
inline std::vector<std::string> generate_synonyms(const AugmentConfig& cfg, const CaptionRecord& caption,
                                                  const OfflineTable* offline = nullptr) {
  validate(cfg);
  if (cfg.mode == AugmentMode::offline) {
    if (!offline) throw DomainError("augment: offline mode needs a synonym table");
    auto it = offline->find(caption.caption_id);
    if (it == offline->end()) {
      log_warning("no offline synonyms for caption '" + caption.caption_id + "'");
      return {};
    }
    std::vector<std::string> out = it->second;
    if (out.size() > cfg.l) out.resize(cfg.l);
    return out;
  }
  return request_completions(cfg, build_prompt(caption.text));
}

/// Fills `synonyms` for every record (text is never touched). HTTP requests run
/// concurrently up to max_in_flight; results land in input order.
inline std::vector<CaptionRecord> augment_captions(const AugmentConfig& raw_cfg,
                                                   std::vector<CaptionRecord> records) {
  const AugmentConfig cfg = resolve_env(raw_cfg);
  validate(cfg);
  OfflineTable offline;
  if (cfg.mode == AugmentMode::offline) {
    if (cfg.offline_path.empty()) throw DomainError("augment: offline mode needs --offline <jsonl>");
    offline = load_offline_table(cfg.offline_path);
  }
  SynonymCache cache(cfg.mode == AugmentMode::http ? cfg.cache_dir : std::filesystem::path{});

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (auto hit = cache.get(records[i].caption_id, cfg.l)) {
      records[i].synonyms = std::move(*hit);
    } else {
      pending.push_back(i);
    }
  }
  const std::size_t cap = cfg.mode == AugmentMode::http ? cfg.max_in_flight : 1;
  for (std::size_t start = 0; start < pending.size(); start += cap) {
    const std::size_t end = std::min(pending.size(), start + cap);
    std::vector<std::future<std::vector<std::string>>> jobs;
    for (std::size_t p = start; p < end; ++p) {
      const CaptionRecord& rec = records[pending[p]];
      jobs.push_back(std::async(cap > 1 ? std::launch::async : std::launch::deferred,
                                [&cfg, &rec, &offline] { return generate_synonyms(cfg, rec, &offline); }));
    }
    for (std::size_t p = start; p < end; ++p) {
      auto syn = jobs[p - start].get();
      auto& rec = records[pending[p]];
      cache.put(rec.caption_id, cfg.l, syn);
      rec.synonyms = std::move(syn);
    }
  }
  return records;
}

}  // namespace oshg
