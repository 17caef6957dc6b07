#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <httplib.h>

#include "arbiter/digest.hpp"
#include "arbiter/domain.hpp"

namespace arbiter::gateway {

// ---------------------------------------------------------------------------
// Wire types
// ---------------------------------------------------------------------------

enum class Role { System, User, Assistant };

NLOHMANN_JSON_SERIALIZE_ENUM(Role, {{Role::System, "system"},
                                    {Role::User, "user"},
                                    {Role::Assistant, "assistant"}})

struct Message {
  Role role = Role::User;
  std::string content;
};

inline void to_json(json& j, const Message& m) {
  j = json{{"role", m.role}, {"content", m.content}};
}

inline void from_json(const json& j, Message& m) {
  j.at("role").get_to(m.role);
  j.at("content").get_to(m.content);
}

struct UpstreamRequest {
  std::string endpoint_id;
  std::string model;
  std::vector<Message> messages;
  SamplingParams params;
  std::optional<int> seed;
};

struct Usage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct UpstreamReply {
  std::string request_digest;
  std::string text;
  Usage usage;
  long latency_ms = 0;
  bool cached = false;
  int attempts = 0;  // network attempts; 0 on cache hit
};

/// Digest of the canonical request serialization (sorted keys, compact).
/// endpoint_id is excluded so mirrored endpoints share cache entries.
inline std::string request_digest(const UpstreamRequest& req) {
  json canon{{"model", req.model},
             {"messages", req.messages},
             {"params", req.params},
             {"seed", req.seed ? json(*req.seed) : json(nullptr)}};
  return sha256_hex(canon.dump());
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct UpstreamError : std::runtime_error {
  int status;
  std::string body;
  UpstreamError(int status_, std::string body_)
      : std::runtime_error("upstream error: HTTP " + std::to_string(status_) +
                           " " + body_),
        status(status_),
        body(std::move(body_)) {}
};

struct TimeoutError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CacheCorruptionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Response cache: append-only record log plus a digest->offset sidecar index
// ---------------------------------------------------------------------------

class ResponseCache {
 public:
  struct Entry {
    std::string text;
    Usage usage;
  };

  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    if (!load_index() && std::filesystem::exists(log_path())) rebuild_index();
  }

  std::optional<Entry> lookup(const std::string& digest) const {
    std::shared_lock lock(mutex_);
    auto it = index_.find(digest);
    if (it == index_.end()) return std::nullopt;
    return read_at(digest, it->second);
  }

  void store(const std::string& digest, const Entry& entry) {
    std::unique_lock lock(mutex_);
    if (index_.count(digest)) return;  // first write wins
    json payload{{"text", entry.text},
                 {"prompt_tokens", entry.usage.prompt_tokens},
                 {"completion_tokens", entry.usage.completion_tokens}};
    std::string body = payload.dump();

    std::ofstream log(log_path(), std::ios::binary | std::ios::app);
    if (!log) throw std::runtime_error("cache: cannot append to log");
    log.seekp(0, std::ios::end);
    auto offset = static_cast<long long>(log.tellp());
    log << digest << '\t' << body.size() << '\n' << body << '\n';
    log.flush();
    if (!log) throw std::runtime_error("cache: log write failed");

    std::ofstream idx(index_path(), std::ios::app);
    idx << digest << '\t' << offset << '\n';
    index_.emplace(digest, offset);
  }

  size_t size() const {
    std::shared_lock lock(mutex_);
    return index_.size();
  }

 private:
  std::filesystem::path log_path() const { return dir_ / "log.bin"; }
  std::filesystem::path index_path() const { return dir_ / "index.tsv"; }

  bool load_index() {
    std::ifstream idx(index_path());
    if (!idx) return false;
    std::string line;
    while (std::getline(idx, line)) {
      auto tab = line.find('\t');
      if (tab == std::string::npos) continue;
      index_.emplace(line.substr(0, tab),
                     std::stoll(line.substr(tab + 1)));
    }
    return true;
  }

  // The index is disposable; the log alone is authoritative.
  void rebuild_index() {
    std::ifstream log(log_path(), std::ios::binary);
    std::ofstream idx(index_path(), std::ios::trunc);
    std::string header;
    long long offset = 0;
    while (true) {
      log.seekg(offset);
      if (!std::getline(log, header)) break;
      auto tab = header.find('\t');
      if (tab == std::string::npos) break;
      size_t size = std::stoull(header.substr(tab + 1));
      std::string digest = header.substr(0, tab);
      idx << digest << '\t' << offset << '\n';
      index_.emplace(digest, offset);
      offset += static_cast<long long>(header.size()) + 1 +
                static_cast<long long>(size) + 1;
    }
  }

  Entry read_at(const std::string& digest, long long offset) const {
    std::ifstream log(log_path(), std::ios::binary);
    if (!log) throw CacheCorruptionError("cache: log vanished");
    log.seekg(offset);
    std::string header;
    if (!std::getline(log, header))
      throw CacheCorruptionError("cache: truncated record header");
    auto tab = header.find('\t');
    if (tab == std::string::npos || header.substr(0, tab) != digest)
      throw CacheCorruptionError("cache: digest mismatch on read-back");
    size_t size = 0;
    try {
      size = std::stoull(header.substr(tab + 1));
    } catch (const std::exception&) {
      throw CacheCorruptionError("cache: malformed record header");
    }
    std::string body(size, '\0');
    log.read(body.data(), static_cast<std::streamsize>(size));
    if (static_cast<size_t>(log.gcount()) != size)
      throw CacheCorruptionError("cache: truncated record body");
    try {
      json payload = json::parse(body);
      Entry e;
      e.text = payload.at("text").get<std::string>();
      e.usage.prompt_tokens = payload.value("prompt_tokens", 0L);
      e.usage.completion_tokens = payload.value("completion_tokens", 0L);
      return e;
    } catch (const json::exception&) {
      throw CacheCorruptionError("cache: unreadable record payload");
    }
  }

  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, long long> index_;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct EndpointConfig {
  std::string id;
  std::string base_url;
  std::string model;
  std::string credential_env_var;
  std::string thinking_key;  // body key for the thinking flag; empty = omit
  int connect_timeout_ms = 10'000;
  int read_timeout_ms = 300'000;
};

struct RetryPolicy {
  int initial_backoff_ms = 500;
  double factor = 2.0;
  double jitter = 0.2;  // +-20%
  int max_attempts = 5;
};

struct GatewayConfig {
  std::map<std::string, EndpointConfig> endpoints;
  std::string cache_dir;  // empty = response caching disabled
  int max_in_flight = 8;
  RetryPolicy retry;
  std::string rubric_endpoint;  // default endpoint ids for the judge pipeline
  std::string judge_endpoint;
};

/// Plain-text config: global `key = value` lines and `[endpoint <id>]`
/// sections. `#` starts a comment.
inline GatewayConfig load_gateway_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  GatewayConfig cfg;
  EndpointConfig* current = nullptr;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                             ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail("unterminated section header");
      auto inner = trim(s.substr(1, s.size() - 2));
      if (!starts_with_ci(inner, "endpoint ")) fail("unknown section: " + inner);
      std::string id = trim(inner.substr(9));
      if (id.empty()) fail("endpoint section without id");
      auto [it, fresh] = cfg.endpoints.try_emplace(id);
      if (!fresh) fail("duplicate endpoint: " + id);
      it->second.id = id;
      current = &it->second;
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (current) {
      if (key == "base_url") current->base_url = value;
      else if (key == "model") current->model = value;
      else if (key == "credential_env_var") current->credential_env_var = value;
      else if (key == "thinking_key") current->thinking_key = value;
      else if (key == "connect_timeout_ms") current->connect_timeout_ms = std::stoi(value);
      else if (key == "read_timeout_ms") current->read_timeout_ms = std::stoi(value);
      else fail("unknown endpoint key: " + key);
    } else {
      if (key == "cache_dir") cfg.cache_dir = value;
      else if (key == "max_in_flight") cfg.max_in_flight = std::stoi(value);
      else if (key == "rubric_endpoint") cfg.rubric_endpoint = value;
      else if (key == "judge_endpoint") cfg.judge_endpoint = value;
      else if (key == "retry_initial_backoff_ms") cfg.retry.initial_backoff_ms = std::stoi(value);
      else if (key == "retry_factor") cfg.retry.factor = std::stod(value);
      else if (key == "retry_jitter") cfg.retry.jitter = std::stod(value);
      else if (key == "retry_max_attempts") cfg.retry.max_attempts = std::stoi(value);
      else fail("unknown key: " + key);
    }
  }
  for (const auto& [id, ep] : cfg.endpoints) {
    if (ep.base_url.empty()) throw std::runtime_error("endpoint " + id + " missing base_url");
    if (ep.model.empty()) throw std::runtime_error("endpoint " + id + " missing model");
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

struct BatchError {
  std::string kind;  // upstream | timeout | cache | error
  int status = 0;
  std::string message;
};

struct BatchItem {
  std::optional<UpstreamReply> reply;
  std::optional<BatchError> error;
  bool ok() const { return reply.has_value(); }
};

namespace detail {

struct ParsedUrl {
  std::string host_port;  // scheme://host:port for httplib::Client
  std::string path_prefix;
};

inline ParsedUrl parse_base_url(const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos)
    throw std::runtime_error("base_url missing scheme: " + base_url);
  auto path_start = base_url.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.host_port = base_url;
  } else {
    out.host_port = base_url.substr(0, path_start);
    out.path_prefix = base_url.substr(path_start);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/')
      out.path_prefix.pop_back();
  }
  return out;
}

inline bool retryable_status(int status) {
  return status == 408 || status == 429 || status >= 500;
}

}  // namespace detail

class Gateway {
 public:
  explicit Gateway(GatewayConfig cfg) : cfg_(std::move(cfg)) {
    if (!cfg_.cache_dir.empty()) cache_.emplace(cfg_.cache_dir);
  }

  const GatewayConfig& config() const { return cfg_; }
  ResponseCache* cache() { return cache_ ? &*cache_ : nullptr; }

  const EndpointConfig& endpoint(const std::string& id) const {
    auto it = cfg_.endpoints.find(id);
    if (it == cfg_.endpoints.end())
      throw std::invalid_argument("unknown endpoint: " + id);
    return it->second;
  }

  /// Fill in the endpoint's model when the request leaves it blank.
  UpstreamRequest with_endpoint_model(UpstreamRequest req) const {
    if (req.model.empty()) req.model = endpoint(req.endpoint_id).model;
    return req;
  }

  UpstreamReply complete(const UpstreamRequest& request) {
    UpstreamRequest req = with_endpoint_model(request);
    const std::string digest = request_digest(req);

    // Deterministic requests cache unconditionally; sampled ones only when a
    // seed pins them, so repeated voting calls stay independent draws.
    const bool cacheable =
        cache_ && (req.params.temperature == 0.0 || req.seed.has_value());

    if (cacheable) {
      auto start = std::chrono::steady_clock::now();
      if (auto hit = cache_->lookup(digest)) {
        UpstreamReply reply;
        reply.request_digest = digest;
        reply.text = hit->text;
        reply.usage = hit->usage;
        reply.cached = true;
        reply.latency_ms = elapsed_ms(start);
        return reply;
      }
    }

    auto start = std::chrono::steady_clock::now();
    const EndpointConfig& ep = endpoint(req.endpoint_id);
    const auto url = detail::parse_base_url(ep.base_url);
    const std::string body = wire_body(req, ep).dump();
    const std::string path = url.path_prefix + "/chat/completions";

    httplib::Headers headers;
    if (!ep.credential_env_var.empty()) {
      if (const char* secret = std::getenv(ep.credential_env_var.c_str());
          secret && *secret) {
        headers.emplace("Authorization", std::string("Bearer ") + secret);
      }
    }

    int attempts = 0;
    int last_status = 0;
    std::string last_error;
    bool last_was_timeout = false;
    for (; attempts < cfg_.retry.max_attempts;) {
      ++attempts;
      httplib::Client client(url.host_port);
      client.set_connection_timeout(ep.connect_timeout_ms / 1000,
                                    (ep.connect_timeout_ms % 1000) * 1000);
      client.set_read_timeout(ep.read_timeout_ms / 1000,
                              (ep.read_timeout_ms % 1000) * 1000);
      auto res = client.Post(path, headers, body, "application/json");
      if (res && res->status == 200) {
        UpstreamReply reply = parse_completion(res->body, digest);
        reply.attempts = attempts;
        reply.latency_ms = elapsed_ms(start);
        if (cacheable) cache_->store(digest, {reply.text, reply.usage});
        return reply;
      }
      if (res && !detail::retryable_status(res->status)) {
        throw UpstreamError(res->status, res->body);
      }
      if (res) {
        last_status = res->status;
        last_error = res->body;
        last_was_timeout = false;
      } else {
        last_status = 0;
        last_error = httplib::to_string(res.error());
        last_was_timeout = res.error() == httplib::Error::ConnectionTimeout ||
                           res.error() == httplib::Error::Read ||
                           res.error() == httplib::Error::Write;
      }
      if (attempts < cfg_.retry.max_attempts) backoff(attempts);
    }
    if (last_was_timeout)
      throw TimeoutError("upstream timed out after " +
                         std::to_string(attempts) + " attempts: " + last_error);
    throw UpstreamError(last_status, "retry budget exhausted after " +
                                         std::to_string(attempts) +
                                         " attempts: " + last_error);
  }

  /// Index-aligned replies; per-item failures are captured in-slot and never
  /// abort the batch. At most max_in_flight requests are outstanding.
  std::vector<BatchItem> run_batch(const std::vector<UpstreamRequest>& reqs,
                                   int max_in_flight) {
    if (max_in_flight < 1)
      throw std::invalid_argument("max_in_flight must be >= 1");
    std::vector<BatchItem> items(reqs.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
      while (true) {
        size_t i = next.fetch_add(1);
        if (i >= reqs.size()) return;
        try {
          items[i].reply = complete(reqs[i]);
        } catch (const UpstreamError& e) {
          items[i].error = BatchError{"upstream", e.status, e.what()};
        } catch (const TimeoutError& e) {
          items[i].error = BatchError{"timeout", 0, e.what()};
        } catch (const CacheCorruptionError& e) {
          items[i].error = BatchError{"cache", 0, e.what()};
        } catch (const std::exception& e) {
          items[i].error = BatchError{"error", 0, e.what()};
        }
      }
    };
    size_t workers = std::min<size_t>(static_cast<size_t>(max_in_flight),
                                      std::max<size_t>(reqs.size(), 1));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return items;
  }

 private:
  static long elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start)
        .count();
  }

  json wire_body(const UpstreamRequest& req, const EndpointConfig& ep) const {
    json body{{"model", req.model},
              {"messages", req.messages},
              {"max_tokens", req.params.max_tokens},
              {"temperature", req.params.temperature}};
    if (req.params.top_p) body["top_p"] = *req.params.top_p;
    if (req.params.top_k) body["top_k"] = *req.params.top_k;
    if (req.seed) body["seed"] = *req.seed;
    if (!ep.thinking_key.empty())
      body[ep.thinking_key] = req.params.thinking_enabled;
    return body;
  }

  UpstreamReply parse_completion(const std::string& body,
                                 const std::string& digest) const {
    try {
      json j = json::parse(body);
      UpstreamReply reply;
      reply.request_digest = digest;
      reply.text = j.at("choices").at(0).at("message").at("content")
                       .get<std::string>();
      if (j.contains("usage")) {
        reply.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
        reply.usage.completion_tokens =
            j["usage"].value("completion_tokens", 0L);
      }
      return reply;
    } catch (const json::exception& e) {
      throw UpstreamError(200, std::string("malformed completion body: ") +
                                   e.what());
    }
  }

  void backoff(int attempt) {
    double base = cfg_.retry.initial_backoff_ms;
    for (int i = 1; i < attempt; ++i) base *= cfg_.retry.factor;
    double lo = 1.0 - cfg_.retry.jitter, hi = 1.0 + cfg_.retry.jitter;
    double scale;
    {
      std::lock_guard lock(rng_mutex_);
      scale = std::uniform_real_distribution<double>(lo, hi)(rng_);
    }
    std::this_thread::sleep_for(
        std::chrono::milliseconds(static_cast<long>(base * scale)));
  }

  GatewayConfig cfg_;
  std::optional<ResponseCache> cache_;
  std::mutex rng_mutex_;
  std::mt19937 rng_{std::random_device{}()};
};

}  // namespace arbiter::gateway
