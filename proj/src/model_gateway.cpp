#include "stancebench/model_gateway.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <ctime>
#include <thread>

#include "json.hpp"
#include "text_util.hpp"

namespace stancebench {

using nlohmann::json;

void ModelSpec::validate() const {
  if (name.empty()) throw Error(ErrorCode::InvalidConfig, "model name is empty");
  if (!(temperature >= 0.0)) throw Error(ErrorCode::InvalidConfig, name + ": temperature must be >= 0");
  if (max_concurrency < 1) throw Error(ErrorCode::InvalidConfig, name + ": max_concurrency must be >= 1");
  if (max_retries < 0) throw Error(ErrorCode::InvalidConfig, name + ": max_retries must be >= 0");
  if (max_tokens < 1) throw Error(ErrorCode::InvalidConfig, name + ": max_tokens must be >= 1");
}

namespace {

json conversation_json(const Conversation& conversation) {
  json messages = json::array();
  for (const auto& m : conversation) messages.push_back({{"role", m.role}, {"content", m.content}});
  return messages;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

namespace {

std::string key_material(std::string_view model, double temperature, int max_tokens,
                         const json& conversation) {
  // Array form keeps the field order fixed independent of key sorting.
  return json::array({model, temperature, max_tokens, conversation}).dump();
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string joined_text(const Conversation& conversation) {
  std::string text;
  for (const auto& m : conversation) {
    if (!text.empty()) text += '\n';
    text += m.content;
  }
  return text;
}

bool is_transient(const GatewayError& e) {
  switch (e.code()) {
    case ErrorCode::Timeout:
    case ErrorCode::RateLimited:
      return true;
    case ErrorCode::HttpError:
      return e.status() == 0 || e.status() >= 500;
    default:
      return false;
  }
}

}  // namespace

std::string cache_key(const ModelSpec& model, const Conversation& conversation) {
  return sha256_hex(
      key_material(model.name, model.temperature, model.max_tokens, conversation_json(conversation)));
}

// --- ReplayCache -----------------------------------------------------------

ReplayCache::ReplayCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  const std::string text = detail::read_file(path_);
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string::npos) {
      // Unterminated tail: an interrupted append.
      ++skipped_;
      torn_tail_ = true;
      break;
    }
    const std::string_view line(text.data() + start, end - start);
    start = end + 1;
    if (detail::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("key") || !j.contains("response") ||
        !j["key"].is_string() || !j["response"].is_string()) {
      ++skipped_;
      continue;
    }
    if (j.contains("model") && j.contains("conversation") && j.contains("temperature") &&
        j.contains("max_tokens")) {
      const std::string expected =
          sha256_hex(key_material(j["model"].get<std::string>(), j["temperature"].get<double>(),
                                  j["max_tokens"].get<int>(), j["conversation"]));
      if (expected != j["key"].get<std::string>()) {
        ++skipped_;
        continue;
      }
    }
    entries_.insert_or_assign(j["key"].get<std::string>(), j["response"].get<std::string>());
  }
}

std::optional<std::string> ReplayCache::lookup(const std::string& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ReplayCache::store(const std::string& key, const ModelSpec& model,
                        const Conversation& conversation, const std::string& response) {
  std::unique_lock lock(mutex_);
  if (entries_.count(key)) return;
  if (!path_.empty()) {
    json entry{{"key", key},
               {"model", model.name},
               {"temperature", model.temperature},
               {"max_tokens", model.max_tokens},
               {"conversation", conversation_json(conversation)},
               {"response", response},
               {"timestamp", utc_timestamp()}};
    std::string line = entry.dump() + "\n";
    if (torn_tail_) line.insert(line.begin(), '\n');
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    const int fd = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) throw Error(ErrorCode::Io, "cannot open cache " + path_.string() + ": " + std::strerror(errno));
    std::size_t written = 0;
    while (written < line.size()) {
      const ssize_t n = ::write(fd, line.data() + written, line.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        ::close(fd);
        throw Error(ErrorCode::Io, "cache append failed: " + std::string(std::strerror(errno)));
      }
      written += static_cast<std::size_t>(n);
    }
    ::close(fd);
    torn_tail_ = false;
  }
  entries_.emplace(key, response);
}

std::size_t ReplayCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

// --- MockBackend -----------------------------------------------------------

std::vector<MockRule> MockBackend::parse_script(std::string_view json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_array())
    throw Error(ErrorCode::MalformedJson, "mock script must be a JSON list of rules");
  std::vector<MockRule> rules;
  for (const json& r : doc) {
    if (!r.is_object() || !r.contains("match"))
      throw Error(ErrorCode::MalformedJson, "mock rule without 'match'");
    MockRule rule;
    const json& m = r["match"];
    if (m.is_string()) {
      rule.match.push_back(m.get<std::string>());
    } else if (m.is_array()) {
      for (const json& s : m) rule.match.push_back(s.get<std::string>());
    } else {
      throw Error(ErrorCode::MalformedJson, "mock 'match' must be a string or list of strings");
    }
    rule.response = r.value("response", std::string{});
    rule.error_status = r.value("error", 0);
    rule.delay_ms = r.value("delay_ms", 0);
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::unique_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& path) {
  return std::make_unique<MockBackend>(parse_script(detail::read_file(path)));
}

std::string MockBackend::send(const ModelSpec& model, const Conversation& conversation) {
  ++calls_;
  const std::string text = joined_text(conversation);
  for (const MockRule& rule : rules_) {
    const bool hit = std::all_of(rule.match.begin(), rule.match.end(), [&](const std::string& s) {
      return text.find(s) != std::string::npos;
    });
    if (!hit) continue;
    if (rule.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(rule.delay_ms));
    if (rule.error_status == 429) throw GatewayError(ErrorCode::RateLimited, "mock rate limit", 429);
    if (rule.error_status != 0)
      throw GatewayError(ErrorCode::HttpError, "mock status " + std::to_string(rule.error_status),
                         rule.error_status);
    return rule.response;
  }
  throw GatewayError(ErrorCode::HttpError, "no mock rule matches request for " + model.name, 404);
}

std::string ReplayOnlyBackend::send(const ModelSpec& model, const Conversation&) {
  throw GatewayError(ErrorCode::CacheMissInReplayOnlyMode, "no cached response for " + model.name);
}

std::unique_ptr<Backend> make_backend(std::string_view endpoint) {
  if (endpoint.rfind("http://", 0) == 0 || endpoint.rfind("https://", 0) == 0)
    return std::make_unique<HttpBackend>();
  if (endpoint.rfind("replay:", 0) == 0) return std::make_unique<ReplayOnlyBackend>();
  if (endpoint.rfind("mock:", 0) == 0) return MockBackend::from_file(std::string(endpoint.substr(5)));
  throw Error(ErrorCode::InvalidConfig, "unsupported endpoint scheme: '" + std::string(endpoint) + "'");
}

// --- Gateway ---------------------------------------------------------------

class Gateway::Limiter {
 public:
  explicit Limiter(int slots) : free_(slots) {}

  void acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return free_ > 0; });
    --free_;
  }
  void release() {
    {
      std::lock_guard lock(mutex_);
      ++free_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int free_;
};

Gateway::Gateway(GatewayOptions options) : options_(std::move(options)) {
  cache_ = options_.cache_path.empty() ? std::make_unique<ReplayCache>()
                                       : std::make_unique<ReplayCache>(options_.cache_path);
}

Gateway::~Gateway() = default;

void Gateway::set_backend(const std::string& model_name, std::shared_ptr<Backend> backend) {
  std::lock_guard lock(mutex_);
  backends_[model_name] = std::move(backend);
}

std::shared_ptr<Backend> Gateway::backend_for(const ModelSpec& model) {
  std::lock_guard lock(mutex_);
  auto& slot = backends_[model.name];
  if (!slot) slot = make_backend(model.endpoint);
  return slot;
}

Gateway::Limiter& Gateway::limiter_for(const ModelSpec& model) {
  std::lock_guard lock(mutex_);
  auto& slot = limiters_[model.name];
  if (!slot) slot = std::make_unique<Limiter>(model.max_concurrency);
  return *slot;
}

Exchange Gateway::complete(const ModelSpec& model, const Conversation& conversation) {
  Exchange ex;
  ex.model = model.name;
  ex.conversation = conversation;

  const std::string key = cache_key(model, conversation);
  if (auto cached = cache_->lookup(key)) {
    ++cache_hits_;
    ex.raw_response = std::move(*cached);
    ex.cache_hit = true;
    return ex;
  }
  if (options_.offline) {
    ++failures_;
    throw GatewayError(ErrorCode::CacheMissInReplayOnlyMode,
                       "offline and no cached response for " + model.name);
  }

  auto backend = backend_for(model);
  Limiter& limiter = limiter_for(model);
  const auto started = std::chrono::steady_clock::now();
  for (int attempt = 0;; ++attempt) {
    ex.attempt_count = attempt + 1;
    try {
      limiter.acquire();
      ++backend_calls_;
      std::string response;
      try {
        response = backend->send(model, conversation);
      } catch (...) {
        limiter.release();
        throw;
      }
      limiter.release();
      ex.raw_response = std::move(response);
      break;
    } catch (const GatewayError& e) {
      if (!is_transient(e) || attempt >= model.max_retries) {
        ++failures_;
        throw;
      }
      const auto delay = options_.backoff_base * (1LL << std::min(attempt, 16));
      std::this_thread::sleep_for(delay);
    }
  }
  ex.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  cache_->store(key, model, conversation, ex.raw_response);
  return ex;
}

std::vector<BatchOutcome> Gateway::complete_batch(const ModelSpec& model,
                                                  std::span<const Conversation> conversations) {
  std::vector<BatchOutcome> out(conversations.size());
  if (conversations.empty()) return out;

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= conversations.size()) return;
      try {
        out[i].exchange = complete(model, conversations[i]);
      } catch (const GatewayError& e) {
        out[i].error = e;
      } catch (const Error& e) {
        out[i].error = GatewayError(ErrorCode::HttpError, e.what());
      }
    }
  };

  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, model.max_concurrency)), conversations.size());
  if (n_workers == 1) {
    worker();
    return out;
  }
  {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  return out;
}

GatewayStats Gateway::stats() const {
  return GatewayStats{cache_hits_.load(), backend_calls_.load(), failures_.load()};
}

}  // namespace stancebench
