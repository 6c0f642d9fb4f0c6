#pragma once

// Access to chat-completion models through an OpenAI-compatible protocol,
// fronted by a content-addressed replay cache.
//
// Endpoints select the backend by scheme:
//   http:// or https://   live requests to POST .../v1/chat/completions
//   replay:               cache only; a miss is an error
//   mock:<script.json>    scripted responses, first matching rule wins

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stancebench/error.hpp"

namespace stancebench {

struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

using Conversation = std::vector<ChatMessage>;

struct ModelSpec {
  std::string name;
  std::string endpoint;
  std::string api_key_env;
  double temperature = 0.0;
  int max_tokens = 1024;
  double request_timeout = 60.0;  // seconds
  int max_retries = 3;
  int max_concurrency = 4;

  /// Throws InvalidConfig on a negative temperature or max_concurrency < 1.
  void validate() const;
};

struct Exchange {
  std::string model;
  Conversation conversation;
  std::string raw_response;
  double latency_ms = 0.0;
  bool cache_hit = false;
  int attempt_count = 0;
};

std::string sha256_hex(std::string_view data);

/// SHA-256 (hex) over model name, temperature, max_tokens and the full
/// conversation.
std::string cache_key(const ModelSpec& model, const Conversation& conversation);

/// Append-only JSONL store of {key, model, temperature, max_tokens,
/// conversation, response, timestamp}. Reads are concurrent, appends are
/// serialized and written as one complete line; incomplete or corrupt lines
/// are ignored on load.
class ReplayCache {
 public:
  /// In-memory only.
  ReplayCache() = default;
  explicit ReplayCache(std::filesystem::path path);
  ReplayCache(const ReplayCache&) = delete;
  ReplayCache& operator=(const ReplayCache&) = delete;

  std::optional<std::string> lookup(const std::string& key) const;
  void store(const std::string& key, const ModelSpec& model, const Conversation& conversation,
             const std::string& response);

  std::size_t size() const;
  std::size_t skipped_lines() const { return skipped_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
  std::size_t skipped_ = 0;
  bool torn_tail_ = false;
};

/// A transport that turns a conversation into the raw assistant text.
/// Implementations throw GatewayError.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string send(const ModelSpec& model, const Conversation& conversation) = 0;
};

struct MockRule {
  /// Every substring must occur in the conversation text (all message
  /// contents joined by newlines).
  std::vector<std::string> match;
  std::string response;
  /// Non-zero: fail with this HTTP status instead of responding.
  int error_status = 0;
  int delay_ms = 0;
};

class MockBackend : public Backend {
 public:
  explicit MockBackend(std::vector<MockRule> rules) : rules_(std::move(rules)) {}

  /// JSON list of {match: substring | [substrings], response, error?, delay_ms?}.
  static std::vector<MockRule> parse_script(std::string_view json_text);
  static std::unique_ptr<MockBackend> from_file(const std::filesystem::path& path);

  std::string send(const ModelSpec& model, const Conversation& conversation) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  std::vector<MockRule> rules_;
  std::atomic<std::size_t> calls_{0};
};

class HttpBackend : public Backend {
 public:
  std::string send(const ModelSpec& model, const Conversation& conversation) override;

  /// OpenAI-style request body.
  static std::string request_body(const ModelSpec& model, const Conversation& conversation);
  /// choices[0].message.content, or HttpError on a malformed body.
  static std::string response_content(std::string_view body, int status);
};

/// Backend for `replay:` endpoints; every call is a cache miss.
class ReplayOnlyBackend : public Backend {
 public:
  std::string send(const ModelSpec& model, const Conversation& conversation) override;
};

std::unique_ptr<Backend> make_backend(std::string_view endpoint);

struct GatewayOptions {
  std::filesystem::path cache_path;  // empty: in-memory cache
  bool offline = false;              // replay-only for every model
  std::chrono::milliseconds backoff_base{500};
};

struct GatewayStats {
  std::size_t cache_hits = 0;
  std::size_t backend_calls = 0;
  std::size_t failures = 0;
};

/// One entry of a batch: exactly one of `exchange` / `error` is set.
struct BatchOutcome {
  std::optional<Exchange> exchange;
  std::optional<GatewayError> error;

  bool ok() const { return exchange.has_value(); }
};

class Gateway {
 public:
  explicit Gateway(GatewayOptions options = {});
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// Overrides the endpoint-derived backend for one model name.
  void set_backend(const std::string& model_name, std::shared_ptr<Backend> backend);

  /// Creates the model's backend now, so a bad endpoint fails before any
  /// batch starts instead of once per request.
  void connect(const ModelSpec& model) { backend_for(model); }

  Exchange complete(const ModelSpec& model, const Conversation& conversation);

  /// Results are in input order; per-item failures do not abort the batch.
  /// At most model.max_concurrency requests are in flight per model.
  std::vector<BatchOutcome> complete_batch(const ModelSpec& model,
                                           std::span<const Conversation> conversations);

  GatewayStats stats() const;
  ReplayCache& cache() { return *cache_; }

 private:
  class Limiter;

  std::shared_ptr<Backend> backend_for(const ModelSpec& model);
  Limiter& limiter_for(const ModelSpec& model);

  GatewayOptions options_;
  std::unique_ptr<ReplayCache> cache_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Backend>> backends_;
  std::map<std::string, std::unique_ptr<Limiter>> limiters_;
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> backend_calls_{0};
  std::atomic<std::size_t> failures_{0};
};

}  // namespace stancebench
